#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "guardcache/trace.hpp"

namespace guardcache {

enum class PredictionKind { kNone, kNrt, kBinary, kFitf };

std::string_view to_string(PredictionKind kind);

/// Sorted request times per page, for "next request after t" lookups.
class PagePositions {
 public:
  explicit PagePositions(const Trace& trace);

  /// First request of `page` strictly after `now`, or n+1.
  Time next_after(PageId page, Time now) const;
  /// Last request of `page` at or before `now`, or 0.
  Time last_at_or_before(PageId page, Time now) const;

 private:
  std::unordered_map<PageId, std::vector<Time>> positions_;
  Time sentinel_;
};

/// Noisy furthest-in-the-future oracle standing in for a learned imitation
/// model. Answers correctly with probability 1-epsilon, otherwise names a
/// uniformly random other candidate. Each query consumes exactly one draw.
class FitfOracle {
 public:
  FitfOracle(const Trace& trace, double epsilon, std::uint64_t seed);

  PageId choose(std::span<const PageId> candidates, Time now);
  PageId true_fitf(std::span<const PageId> candidates, Time now) const;

  double epsilon() const noexcept { return epsilon_; }
  std::size_t queries() const noexcept { return queries_; }
  std::size_t wrong() const noexcept { return wrong_; }

 private:
  std::shared_ptr<const PagePositions> positions_;
  double epsilon_;
  std::mt19937_64 rng_;
  std::size_t queries_ = 0;
  std::size_t wrong_ = 0;
};

/// Per-run predictions. Holds exactly one payload matching kind(). NRT and
/// label bundles are immutable; a FITF bundle carries RNG state, so copy it
/// per run.
class PredictionBundle {
 public:
  PredictionBundle() = default;

  static PredictionBundle from_nrt(std::vector<double> nrt);
  static PredictionBundle from_labels(std::vector<std::uint8_t> labels);
  static PredictionBundle from_fitf(FitfOracle oracle);

  PredictionKind kind() const noexcept;
  std::size_t size() const noexcept;

  // 1-based request index.
  double nrt(Time t) const { return nrt_values()[t - 1]; }
  bool label(Time t) const { return label_values()[t - 1] != 0; }

  std::span<const double> nrt_values() const;
  std::span<const std::uint8_t> label_values() const;
  FitfOracle& fitf();
  const FitfOracle& fitf() const;

 private:
  std::variant<std::monostate, std::vector<double>, std::vector<std::uint8_t>, FitfOracle>
      payload_;
};

struct PredictionError {
  double eta_t = 0.0;        // sum |predicted - true| next request time
  std::size_t eta_b = 0;     // wrong binary labels
  std::size_t eta_f = 0;     // wrong FitF answers so far
};

/// Log-normal noise on the forward gap: t + (T - t) * exp(sigma * Z), rounded,
/// never below t+1. sigma = 0 reproduces the true next request times.
PredictionBundle synthetic_nrt(const Trace& trace, double sigma, std::uint64_t seed);

/// Adversarial predictions max(t+1, n+1-T): soon-needed pages look far away
/// and vice versa.
PredictionBundle inverted_nrt(const Trace& trace);

/// True Belady labels, each flipped independently with probability p_flip.
PredictionBundle flip_labels(const Trace& trace, std::size_t k, double p_flip,
                             std::uint64_t seed);

struct PlecoParams {
  double alpha = 1.8;
  double offset = 10.0;
  /// Only accesses at most this far back count; 0 keeps the whole history.
  std::size_t horizon = 0;
};

/// Power-law recency model: a past access s contributes (t-s+offset)^-alpha.
PredictionBundle pleco(const Trace& trace, const PlecoParams& params = {});

/// Frequency model: p = share of requests 1..t that hit the page.
PredictionBundle popu(const Trace& trace);

PredictionBundle noisy_fitf(const Trace& trace, double epsilon, std::uint64_t seed);

/// 90th percentile of Belady's eviction forward gaps over the first tenth of
/// the trace. Falls back to all evictions, then to n.
double default_belady_boundary(const Trace& trace, std::size_t k);

/// Threshold classifier on predicted gaps: label 1 iff nrt - t > boundary.
PredictionBundle binary_from_nrt(const PredictionBundle& nrt, const Trace& trace,
                                 double boundary);

PredictionError measure_error(const PredictionBundle& bundle, const Trace& trace,
                              std::size_t k);

/// `index,predicted_nrt` or `index,label`. FITF bundles are not exportable.
void write_bundle_csv(std::ostream& out, const PredictionBundle& bundle);
PredictionBundle read_bundle_csv(std::istream& in);

}  // namespace guardcache
