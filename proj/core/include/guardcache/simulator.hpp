#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "guardcache/phase_stats.hpp"
#include "guardcache/policy.hpp"
#include "guardcache/predict.hpp"
#include "guardcache/trace.hpp"

namespace guardcache {

/// Drives one policy over one trace with a cache of k pages. Also used by
/// the switching combiners to run their sub-policies on virtual caches.
class CacheSimulator final : public CacheView {
 public:
  CacheSimulator(const Trace& trace, std::size_t k, PredictionBundle& predictions,
                 Policy& policy, std::uint64_t seed, bool check_invariants = false);

  /// Serves request t (1-based, in order). Returns true on a hit.
  bool step(Time t);
  void run();

  std::size_t misses() const noexcept { return misses_; }
  std::size_t capacity() const noexcept { return k_; }
  /// Page evicted while serving the most recent request, if any.
  std::optional<PageId> last_victim() const noexcept { return last_victim_; }
  std::span<const PageId> cached() const noexcept { return slots_; }
  bool contains(PageId page) const { return entries_.contains(page); }

  Time last_access(PageId page) const override;
  std::optional<double> attached_nrt(PageId page) const override;
  std::optional<bool> attached_label(PageId page) const override;
  Time next_request(PageId page) const override;

 private:
  struct Entry {
    std::size_t slot = 0;
    Time last = 0;
    double nrt = 0.0;
    bool label = false;
  };

  const Trace& trace_;
  std::size_t k_;
  PredictionBundle& predictions_;
  Policy& policy_;
  PredictionKind kind_;
  std::vector<PageId> slots_;
  std::unordered_map<PageId, Entry> entries_;
  std::size_t misses_ = 0;
  Time served_ = 0;
  std::optional<PageId> last_victim_;
};

struct RunResult {
  std::string policy;
  std::size_t misses = 0;
  std::size_t opt_misses = 0;
  double ratio = 1.0;
  PredictionError eta;
  std::optional<GuardTelemetry> guard;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
};

struct SimulationOptions {
  bool check_invariants = false;
  /// Skip the Belady pass when the caller already knows OPT.
  std::optional<std::size_t> opt_misses;
  bool measure_error = true;
};

/// Throws std::invalid_argument when the bundle kind does not match what
/// the policy needs (policies needing none accept anything).
RunResult simulate(Policy& policy, const Trace& trace, std::size_t k,
                   PredictionBundle& predictions, std::uint64_t seed,
                   const SimulationOptions& options = {});

}  // namespace guardcache
