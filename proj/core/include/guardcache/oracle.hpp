#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "guardcache/trace.hpp"

namespace guardcache {

struct EvictionEvent {
  Time at = 0;
  PageId page;
};

struct BeladyOutcome {
  std::size_t misses = 0;
  std::vector<EvictionEvent> evictions;
  /// labels[i-1] is y_i: 1 iff the page of request i is evicted after i and
  /// before its next request.
  std::vector<std::uint8_t> labels;
};

/// A cached page together with the time of its most recent request.
struct ResidentPage {
  PageId page;
  Time last_access = 0;
};

/// Victim order shared by Belady, FitF and BlindOracle: furthest next request
/// first, then least recently used, then larger PageId. True when `a` goes
/// before `b`. `Next` may be an exact time or a predicted one.
template <typename Next>
constexpr bool evict_before(Next next_a, Time last_a, PageId a,
                            Next next_b, Time last_b, PageId b) {
  if (next_a != next_b) return next_a > next_b;
  if (last_a != last_b) return last_a < last_b;
  return a > b;
}

/// Offline optimum (Belady / MIN) with the tie-break above.
BeladyOutcome belady_simulate(const Trace& trace, std::size_t k);
std::size_t opt_cost(const Trace& trace, std::size_t k);
std::vector<std::uint8_t> belady_labels(const Trace& trace, std::size_t k);

struct SuffixOutcome {
  std::size_t misses = 0;
  std::vector<EvictionEvent> evictions;
  /// Initial residents evicted before they were requested again.
  std::vector<PageId> evicted_residents;
};

/// Belady over requests start..n, starting from `residents`. Each resident's
/// `last_access` must be its true most recent request before `start`.
SuffixOutcome belady_from(const Trace& trace, std::size_t k, Time start,
                          std::span<const ResidentPage> residents);

/// The cache's current 1-pages after serving request `after`: residents that
/// Belady, re-run from this state over the remaining suffix, evicts before
/// their next request. Quadratic overall; meant for small instances.
std::vector<PageId> current_one_pages(const Trace& trace, std::size_t k, Time after,
                                      std::span<const ResidentPage> residents);

struct FitfKey {
  Time next = 0;
  Time last_access = 0;
};

/// Furthest-in-the-future member of `cached`. Throws std::invalid_argument
/// when `cached` is empty.
PageId fitf_page(std::span<const PageId> cached,
                 const std::function<FitfKey(PageId)>& key_of);

/// Exhaustive optimum. Throws std::invalid_argument unless n <= 16 and the
/// universe has at most 6 pages.
std::size_t brute_force_opt(const Trace& trace, std::size_t k);

using ResidentObserver = std::function<void(Time, std::span<const ResidentPage>)>;

/// Relaxed-Belady witness: on every eviction picks uniformly among the
/// current 1-pages. Its cost always equals the optimum. `observer`, when
/// set, sees the cache after every request.
std::size_t rb_random_policy_cost(const Trace& trace, std::size_t k, std::uint64_t seed,
                                  const ResidentObserver& observer = {});

}  // namespace guardcache
