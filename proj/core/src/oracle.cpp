#include "guardcache/oracle.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace guardcache {
namespace {

struct Slot {
  Time next;
  Time last;
  PageId page;
};

struct VictimFirst {
  bool operator()(const Slot& a, const Slot& b) const {
    return evict_before(a.next, a.last, a.page, b.next, b.last, b.page);
  }
};

// Belady over requests [start, n] with an ordered victim queue; O(log k) per
// request.
class BeladyEngine {
 public:
  BeladyEngine(const Trace& trace, std::size_t k) : trace_(trace), k_(k) {
    if (k == 0) throw std::invalid_argument("cache size must be at least 1");
    resident_.reserve(2 * k);
  }

  void seed(PageId page, Time last, Time next) {
    Slot s{next, last, page};
    resident_.emplace(page, s);
    order_.insert(s);
  }

  // Serves request t; returns true on a hit. on_evict(t, slot) runs before
  // the victim is dropped.
  template <typename OnEvict>
  bool serve(Time t, OnEvict&& on_evict) {
    const PageId page = trace_.page(t);
    auto it = resident_.find(page);
    if (it != resident_.end()) {
      order_.erase(it->second);
      it->second.last = t;
      it->second.next = trace_.next(t);
      order_.insert(it->second);
      return true;
    }
    if (resident_.size() >= k_) {
      auto victim = order_.begin();
      on_evict(t, *victim);
      resident_.erase(victim->page);
      order_.erase(victim);
    }
    Slot s{trace_.next(t), t, page};
    resident_.emplace(page, s);
    order_.insert(s);
    return false;
  }

 private:
  const Trace& trace_;
  std::size_t k_;
  std::unordered_map<PageId, Slot> resident_;
  std::set<Slot, VictimFirst> order_;
};

}  // namespace

BeladyOutcome belady_simulate(const Trace& trace, std::size_t k) {
  BeladyOutcome out;
  out.labels.assign(trace.size(), 0);
  BeladyEngine engine(trace, k);
  for (Time t = 1; t <= trace.size(); ++t) {
    bool hit = engine.serve(t, [&](Time now, const Slot& victim) {
      out.evictions.push_back(EvictionEvent{now, victim.page});
      out.labels[victim.last - 1] = 1;
    });
    if (!hit) ++out.misses;
  }
  return out;
}

std::size_t opt_cost(const Trace& trace, std::size_t k) {
  return belady_simulate(trace, k).misses;
}

std::vector<std::uint8_t> belady_labels(const Trace& trace, std::size_t k) {
  return belady_simulate(trace, k).labels;
}

SuffixOutcome belady_from(const Trace& trace, std::size_t k, Time start,
                          std::span<const ResidentPage> residents) {
  if (residents.size() > k) throw std::invalid_argument("more residents than cache slots");
  BeladyEngine engine(trace, k);
  std::unordered_set<PageId> untouched;
  for (const auto& r : residents) {
    const Time next = r.last_access == 0 ? trace.sentinel() : trace.next(r.last_access);
    if (next < start) throw std::invalid_argument("resident last_access is stale");
    engine.seed(r.page, r.last_access, next);
    untouched.insert(r.page);
  }
  SuffixOutcome out;
  for (Time t = start; t <= trace.size(); ++t) {
    untouched.erase(trace.page(t));
    bool hit = engine.serve(t, [&](Time now, const Slot& victim) {
      out.evictions.push_back(EvictionEvent{now, victim.page});
      if (untouched.erase(victim.page) != 0) out.evicted_residents.push_back(victim.page);
    });
    if (!hit) ++out.misses;
  }
  return out;
}

std::vector<PageId> current_one_pages(const Trace& trace, std::size_t k, Time after,
                                      std::span<const ResidentPage> residents) {
  return belady_from(trace, k, after + 1, residents).evicted_residents;
}

PageId fitf_page(std::span<const PageId> cached,
                 const std::function<FitfKey(PageId)>& key_of) {
  if (cached.empty()) throw std::invalid_argument("fitf_page: empty candidate set");
  PageId best = cached.front();
  FitfKey best_key = key_of(best);
  for (std::size_t i = 1; i < cached.size(); ++i) {
    FitfKey key = key_of(cached[i]);
    if (evict_before(key.next, key.last_access, cached[i], best_key.next,
                     best_key.last_access, best)) {
      best = cached[i];
      best_key = key;
    }
  }
  return best;
}

std::size_t brute_force_opt(const Trace& trace, std::size_t k) {
  constexpr std::size_t kMaxRequests = 16;
  constexpr std::size_t kMaxUniverse = 6;
  if (trace.size() > kMaxRequests || trace.universe_size() > kMaxUniverse) {
    throw std::invalid_argument("brute_force_opt: instance too large");
  }
  if (k == 0) throw std::invalid_argument("cache size must be at least 1");

  std::unordered_map<PageId, unsigned> dense;
  std::vector<unsigned> seq;
  for (const auto& r : trace.requests()) {
    auto [it, _] = dense.try_emplace(r.page, static_cast<unsigned>(dense.size()));
    seq.push_back(it->second);
  }
  const std::size_t n = seq.size();
  const std::size_t masks = std::size_t{1} << kMaxUniverse;
  constexpr std::size_t kUnknown = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> memo((n + 1) * masks, kUnknown);

  // Minimum misses serving seq[pos..] from cache content `mask`.
  std::function<std::size_t(std::size_t, unsigned)> solve = [&](std::size_t pos,
                                                                unsigned mask) {
    if (pos == n) return std::size_t{0};
    std::size_t& slot = memo[pos * masks + mask];
    if (slot != kUnknown) return slot;
    const unsigned bit = 1u << seq[pos];
    std::size_t best;
    if (mask & bit) {
      best = solve(pos + 1, mask);
    } else if (static_cast<std::size_t>(std::popcount(mask)) < k) {
      best = 1 + solve(pos + 1, mask | bit);
    } else {
      best = kUnknown;
      for (unsigned rest = mask; rest != 0; rest &= rest - 1) {
        const unsigned victim = rest & (~rest + 1);
        best = std::min(best, 1 + solve(pos + 1, (mask & ~victim) | bit));
      }
    }
    slot = best;
    return best;
  };
  return solve(0, 0);
}

std::size_t rb_random_policy_cost(const Trace& trace, std::size_t k, std::uint64_t seed,
                                  const ResidentObserver& observer) {
  if (k == 0) throw std::invalid_argument("cache size must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<ResidentPage> cache;
  std::size_t misses = 0;
  for (Time t = 1; t <= trace.size(); ++t) {
    const PageId page = trace.page(t);
    auto it = std::find_if(cache.begin(), cache.end(),
                           [&](const ResidentPage& r) { return r.page == page; });
    if (it != cache.end()) {
      it->last_access = t;
    } else {
      ++misses;
      if (cache.size() >= k) {
        auto ones = belady_from(trace, k, t, cache).evicted_residents;
        std::sort(ones.begin(), ones.end());
        std::uniform_int_distribution<std::size_t> pick(0, ones.size() - 1);
        const PageId victim = ones[pick(rng)];
        std::erase_if(cache, [&](const ResidentPage& r) { return r.page == victim; });
      }
      cache.push_back(ResidentPage{page, t});
    }
    if (observer) observer(t, cache);
  }
  return misses;
}

}  // namespace guardcache
