#include "guardcache/policy.hpp"

#include <algorithm>
#include <stdexcept>

#include "guardcache/oracle.hpp"

namespace guardcache {
namespace {

template <typename Rng>
PageId uniform_pick(std::span<const PageId> pages, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pages.size() - 1);
  return pages[pick(rng)];
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PageId lru_candidate(const EvictionContext& ctx) {
  PageId best = ctx.candidates.front();
  Time best_time = ctx.view->last_access(best);
  for (PageId p : ctx.candidates.subspan(1)) {
    const Time t = ctx.view->last_access(p);
    if (t < best_time) {
      best = p;
      best_time = t;
    }
  }
  return best;
}

PageId LruPolicy::choose_victim(const EvictionContext& ctx) { return lru_candidate(ctx); }

void MarkerPolicy::reset(const RunEnvironment& env) {
  marked_.clear();
  rng_.seed(env.seed);
}

PageId MarkerPolicy::choose_victim(const EvictionContext& ctx) {
  // Marks only ever sit on resident pages, so a full count means every
  // cached page is marked.
  if (marked_.size() >= ctx.cached.size()) marked_.clear();

  std::vector<PageId> unmarked;
  unmarked.reserve(ctx.candidates.size());
  for (PageId p : ctx.candidates) {
    if (!marked_.contains(p)) unmarked.push_back(p);
  }
  if (unmarked.empty()) return uniform_pick(ctx.candidates, rng_);
  return uniform_pick(std::span<const PageId>(unmarked), rng_);
}

void MarkerPolicy::on_evict(Time, PageId victim) { marked_.erase(victim); }

void MarkerPolicy::on_access(Time, PageId page, bool) { marked_.insert(page); }

PageId BeladyPolicy::choose_victim(const EvictionContext& ctx) {
  return fitf_page(ctx.candidates, [&](PageId p) {
    return FitfKey{ctx.view->next_request(p), ctx.view->last_access(p)};
  });
}

PageId BlindOraclePolicy::choose_victim(const EvictionContext& ctx) {
  auto predicted = [&](PageId p) {
    auto v = ctx.view->attached_nrt(p);
    if (!v) throw std::logic_error("blind_oracle: no prediction attached to a cached page");
    return *v;
  };
  PageId best = ctx.candidates.front();
  double best_nrt = predicted(best);
  Time best_last = ctx.view->last_access(best);
  for (PageId p : ctx.candidates.subspan(1)) {
    const double nrt = predicted(p);
    const Time last = ctx.view->last_access(p);
    if (evict_before(nrt, last, p, best_nrt, best_last, best)) {
      best = p;
      best_nrt = nrt;
      best_last = last;
    }
  }
  return best;
}

void LrbFollowerPolicy::reset(const RunEnvironment& env) { rng_.seed(env.seed); }

PageId LrbFollowerPolicy::choose_victim(const EvictionContext& ctx) {
  scratch_.clear();
  for (PageId p : ctx.candidates) {
    auto label = ctx.view->attached_label(p);
    if (!label) throw std::logic_error("lrb: no label attached to a cached page");
    if (*label) scratch_.push_back(p);
  }
  if (scratch_.empty()) return uniform_pick(ctx.candidates, rng_);
  return uniform_pick(std::span<const PageId>(scratch_), rng_);
}

PageId FitfFollowerPolicy::choose_victim(const EvictionContext& ctx) {
  if (ctx.candidates.empty()) throw std::invalid_argument("fitf: empty candidate set");
  if (ctx.predictions == nullptr || ctx.predictions->kind() != PredictionKind::kFitf) {
    throw std::logic_error("fitf: run has no FitF predictor");
  }
  return ctx.predictions->fitf().choose(ctx.candidates, ctx.now);
}

}  // namespace guardcache
