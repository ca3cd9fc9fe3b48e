#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_set>

#include "guardcache/phase_stats.hpp"
#include "guardcache/predict.hpp"
#include "guardcache/trace.hpp"

namespace guardcache {

/// Read-only view of a simulated cache, keyed by resident page.
class CacheView {
 public:
  /// Time of the page's most recent request.
  virtual Time last_access(PageId page) const = 0;
  /// Prediction attached at the page's most recent request, if any.
  virtual std::optional<double> attached_nrt(PageId page) const = 0;
  virtual std::optional<bool> attached_label(PageId page) const = 0;
  /// True next request time. Offline information; only Belady reads it.
  virtual Time next_request(PageId page) const = 0;

 protected:
  ~CacheView() = default;
};

struct EvictionContext {
  Time now = 0;
  PageId requested;
  std::span<const PageId> cached;
  /// Pages the policy may evict; a subset of `cached`, never empty.
  std::span<const PageId> candidates;
  const CacheView* view = nullptr;
  PredictionBundle* predictions = nullptr;

  EvictionContext restricted_to(std::span<const PageId> subset) const {
    EvictionContext ctx = *this;
    ctx.candidates = subset;
    return ctx;
  }
};

/// Everything a policy may need to set itself up for one run.
struct RunEnvironment {
  const Trace* trace = nullptr;
  std::size_t k = 0;
  PredictionBundle* predictions = nullptr;
  std::uint64_t seed = 0;
  bool check_invariants = false;
};

/// Online eviction policy. A run calls reset() once, then per request
/// before_request(), choose_victim() on a miss with a full cache followed by
/// on_evict(), and finally on_access(). finish() closes the run.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  virtual PredictionKind required_prediction() const { return PredictionKind::kNone; }

  virtual void reset(const RunEnvironment& /*env*/) {}
  virtual void before_request(Time /*now*/, PageId /*page*/) {}
  virtual PageId choose_victim(const EvictionContext& ctx) = 0;
  virtual void on_evict(Time /*now*/, PageId /*victim*/) {}
  virtual void on_access(Time /*now*/, PageId /*page*/, bool /*hit*/) {}
  virtual void finish() {}

  virtual const GuardTelemetry* guard_telemetry() const { return nullptr; }
};

/// Deterministic child seed for a sub-component of a run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

class LruPolicy final : public Policy {
 public:
  std::string name() const override { return "lru"; }
  PageId choose_victim(const EvictionContext& ctx) override;
};

/// Randomized marking algorithm.
class MarkerPolicy final : public Policy {
 public:
  std::string name() const override { return "marker"; }
  void reset(const RunEnvironment& env) override;
  PageId choose_victim(const EvictionContext& ctx) override;
  void on_evict(Time now, PageId victim) override;
  void on_access(Time now, PageId page, bool hit) override;

  bool marked(PageId page) const { return marked_.contains(page); }

 private:
  std::unordered_set<PageId> marked_;
  std::mt19937_64 rng_;
};

/// Offline Belady over the candidate set, reading true next requests.
class BeladyPolicy final : public Policy {
 public:
  std::string name() const override { return "belady"; }
  PageId choose_victim(const EvictionContext& ctx) override;
};

/// Evicts the candidate with the furthest predicted next request.
class BlindOraclePolicy final : public Policy {
 public:
  std::string name() const override { return "blind_oracle"; }
  PredictionKind required_prediction() const override { return PredictionKind::kNrt; }
  PageId choose_victim(const EvictionContext& ctx) override;
};

/// Uniform over candidates predicted to be 1-pages, else uniform over all.
class LrbFollowerPolicy final : public Policy {
 public:
  std::string name() const override { return "lrb"; }
  PredictionKind required_prediction() const override { return PredictionKind::kBinary; }
  void reset(const RunEnvironment& env) override;
  PageId choose_victim(const EvictionContext& ctx) override;

 private:
  std::mt19937_64 rng_;
  std::vector<PageId> scratch_;
};

/// Evicts whatever the FitF predictor names.
class FitfFollowerPolicy final : public Policy {
 public:
  std::string name() const override { return "fitf"; }
  PredictionKind required_prediction() const override { return PredictionKind::kFitf; }
  PageId choose_victim(const EvictionContext& ctx) override;
};

/// Least recently used member of ctx.candidates.
PageId lru_candidate(const EvictionContext& ctx);

}  // namespace guardcache
