#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <set>
#include <vector>

#include "guardcache/guard.hpp"
#include "guardcache/oracle.hpp"
#include "guardcache/policy.hpp"
#include "guardcache/simulator.hpp"
#include "guardcache/switching.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/reference.hpp"

namespace guardcache {
namespace {

using testing::letters;

std::size_t misses_of(Policy& policy, const Trace& trace, std::size_t k,
                      PredictionBundle bundle = {}, std::uint64_t seed = 0) {
  return simulate(policy, trace, k, bundle, seed).misses;
}

/// Fake cache view for calling choose_victim directly.
class FakeView final : public CacheView {
 public:
  std::map<PageId, Time> last;
  std::map<PageId, double> nrt;
  std::map<PageId, bool> label;

  Time last_access(PageId p) const override { return last.at(p); }
  std::optional<double> attached_nrt(PageId p) const override {
    auto it = nrt.find(p);
    return it == nrt.end() ? std::nullopt : std::optional<double>(it->second);
  }
  std::optional<bool> attached_label(PageId p) const override {
    auto it = label.find(p);
    return it == label.end() ? std::nullopt : std::optional<bool>(it->second);
  }
  Time next_request(PageId) const override { return 0; }
};

const PageId kA{0}, kB{1}, kC{2};

TEST(Lru, ChoosesLeastRecentlyUsed) {
  FakeView view;
  view.last = {{kA, 3}, {kB, 5}};
  const std::vector<PageId> ab{kA, kB};
  LruPolicy lru;
  EXPECT_EQ(lru.choose_victim(EvictionContext{6, kC, ab, ab, &view, nullptr}), kA);
  const std::vector<PageId> b{kB};
  EXPECT_EQ(lru.choose_victim(EvictionContext{6, kC, ab, b, &view, nullptr}), kB);
}

TEST(Lru, HandSimulatedRuns) {
  LruPolicy lru;
  EXPECT_EQ(misses_of(lru, letters("abcabc"), 2), 6u);
  EXPECT_EQ(misses_of(lru, letters("abcba"), 2), 4u);
}

TEST(Lru, MatchesReference) {
  std::mt19937_64 rng(41);
  LruPolicy lru;
  for (int iter = 0; iter < 300; ++iter) {
    const std::size_t k = 1 + rng() % 8;
    const Trace t = testing::mixed_trace(rng, 1 + rng() % 400, 1 + rng() % 20);
    ASSERT_EQ(misses_of(lru, t, k), testing::reference_lru(t, k)) << "iteration " << iter;
  }
}

TEST(AnyPolicy, UniverseWithinCacheCostsDistinctPages) {
  std::mt19937_64 rng(43);
  const Trace t = testing::uniform_trace(rng, 300, 5);
  LruPolicy lru;
  MarkerPolicy marker;
  BeladyPolicy belady;
  for (Policy* p : std::initializer_list<Policy*>{&lru, &marker, &belady}) {
    PredictionBundle none;
    const auto r = simulate(*p, t, 5, none, 1);
    EXPECT_EQ(r.misses, 5u) << p->name();
    EXPECT_EQ(r.ratio, 1.0);
  }
}

TEST(Marker, VictimIsUnmarkedWhenPossible) {
  FakeView view;
  view.last = {{kA, 1}, {kB, 2}};
  const std::vector<PageId> ab{kA, kB};
  MarkerPolicy marker;
  marker.reset(RunEnvironment{nullptr, 2, nullptr, 5, false});
  marker.on_access(1, kA, false);
  // a is marked, b is not: b is the only unmarked candidate.
  EXPECT_EQ(marker.choose_victim(EvictionContext{3, kC, ab, ab, &view, nullptr}), kB);
}

TEST(Marker, FreshPhaseIsUniform) {
  FakeView view;
  view.last = {{kA, 1}, {kB, 2}};
  const std::vector<PageId> ab{kA, kB};
  MarkerPolicy marker;
  int picked_a = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    marker.reset(RunEnvironment{nullptr, 2, nullptr, seed, false});
    picked_a += marker.choose_victim(EvictionContext{3, kC, ab, ab, &view, nullptr}) == kA;
  }
  EXPECT_NEAR(picked_a / 2000.0, 0.5, 0.05);
}

TEST(Marker, AllMarkedCandidatesFallBackToUniform) {
  FakeView view;
  view.last = {{kA, 1}, {kB, 2}, {kC, 3}};
  const std::vector<PageId> abc{kA, kB, kC};
  const std::vector<PageId> ab{kA, kB};
  MarkerPolicy marker;
  std::set<PageId> chosen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    marker.reset(RunEnvironment{nullptr, 3, nullptr, seed, false});
    marker.on_access(1, kA, false);
    marker.on_access(2, kB, false);
    // c is the only unmarked page but it is not a candidate.
    const PageId v = marker.choose_victim(EvictionContext{4, PageId{9}, abc, ab, &view, nullptr});
    ASSERT_NE(v, kC);
    chosen.insert(v);
  }
  EXPECT_EQ(chosen.size(), 2u);
}

TEST(Marker, CyclicTraceStaysWithinMarkingBound) {
  const std::size_t k = 3;
  std::vector<PageId> pages;
  for (std::size_t i = 0; i < 400; ++i) pages.push_back(PageId{i % (k + 1)});
  const Trace t(std::move(pages));
  const std::size_t opt = opt_cost(t, k);
  double mean = 0.0;
  MarkerPolicy marker;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    mean += static_cast<double>(misses_of(marker, t, k, {}, seed)) / opt / 200.0;
  }
  EXPECT_LE(mean, 2.0 * harmonic(k) - 1.0 + 0.2);
  EXPECT_GE(mean, 1.0);
}

TEST(Belady, PolicyMatchesOptimum) {
  std::mt19937_64 rng(47);
  BeladyPolicy belady;
  for (int iter = 0; iter < 300; ++iter) {
    const std::size_t k = 1 + rng() % 6;
    const Trace t = testing::mixed_trace(rng, 1 + rng() % 300, 1 + rng() % 15);
    ASSERT_EQ(misses_of(belady, t, k), opt_cost(t, k)) << "iteration " << iter;
  }
}

TEST(BlindOracle, FollowsPredictedTimes) {
  FakeView view;
  view.last = {{kA, 1}, {kB, 2}};
  view.nrt = {{kA, 100}, {kB, 7}};
  const std::vector<PageId> ab{kA, kB};
  BlindOraclePolicy bo;
  EXPECT_EQ(bo.choose_victim(EvictionContext{3, kC, ab, ab, &view, nullptr}), kA);
  view.nrt = {{kA, 7}, {kB, 7}};  // tie goes to the less recently used page
  EXPECT_EQ(bo.choose_victim(EvictionContext{3, kC, ab, ab, &view, nullptr}), kA);
  view.nrt.erase(kB);
  EXPECT_THROW(bo.choose_victim(EvictionContext{3, kC, ab, ab, &view, nullptr}),
               std::logic_error);
}

TEST(Lrb, PrefersPredictedOnePages) {
  FakeView view;
  view.last = {{kA, 1}, {kB, 2}, {kC, 3}};
  view.label = {{kA, true}, {kB, false}, {kC, false}};
  const std::vector<PageId> abc{kA, kB, kC};
  LrbFollowerPolicy lrb;
  std::map<PageId, int> counts;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    lrb.reset(RunEnvironment{nullptr, 3, nullptr, seed, false});
    EXPECT_EQ(lrb.choose_victim(EvictionContext{4, PageId{9}, abc, abc, &view, nullptr}), kA);
  }
  view.label[kA] = false;
  for (std::uint64_t seed = 0; seed < 3000; ++seed) {
    lrb.reset(RunEnvironment{nullptr, 3, nullptr, seed, false});
    ++counts[lrb.choose_victim(EvictionContext{4, PageId{9}, abc, abc, &view, nullptr})];
  }
  for (PageId p : abc) EXPECT_NEAR(counts[p] / 3000.0, 1.0 / 3.0, 0.04);
}

TEST(FitfFollower, SingleCandidateAndEmptySet) {
  const Trace t = letters("abcab");
  auto bundle = noisy_fitf(t, 1.0, 3);
  FakeView view;
  view.last = {{kA, 1}, {kB, 2}};
  const std::vector<PageId> ab{kA, kB};
  const std::vector<PageId> b{kB};
  FitfFollowerPolicy fitf;
  EXPECT_EQ(fitf.choose_victim(EvictionContext{3, kC, ab, b, &view, &bundle}), kB);
  EXPECT_THROW(fitf.choose_victim(EvictionContext{3, kC, ab, {}, &view, &bundle}),
               std::invalid_argument);
}

// Perfect predictions make every follower optimal.
TEST(Followers, PerfectPredictionsAreOptimal) {
  std::mt19937_64 rng(53);
  BlindOraclePolicy bo;
  LrbFollowerPolicy lrb;
  FitfFollowerPolicy fitf;
  for (int iter = 0; iter < 500; ++iter) {
    const std::size_t k = 1 + rng() % 5;
    const Trace t = testing::mixed_trace(rng, 1 + rng() % 200, 1 + rng() % 12);
    const std::size_t opt = opt_cost(t, k);
    const std::uint64_t seed = rng();
    ASSERT_EQ(misses_of(bo, t, k, synthetic_nrt(t, 0.0, seed), seed), opt) << iter;
    ASSERT_EQ(misses_of(lrb, t, k, flip_labels(t, k, 0.0, seed), seed), opt) << iter;
    ASSERT_EQ(misses_of(fitf, t, k, noisy_fitf(t, 0.0, seed), seed), opt) << iter;
  }
}

/// Wraps a policy and checks each victim is a current 1-page.
class OnePageChecker final : public Policy {
 public:
  OnePageChecker(std::unique_ptr<Policy> inner, const Trace& trace, std::size_t k)
      : inner_(std::move(inner)), trace_(trace), k_(k) {}
  std::string name() const override { return inner_->name(); }
  PredictionKind required_prediction() const override { return inner_->required_prediction(); }
  void reset(const RunEnvironment& env) override { inner_->reset(env); }
  PageId choose_victim(const EvictionContext& ctx) override {
    const PageId victim = inner_->choose_victim(ctx);
    std::vector<ResidentPage> residents;
    for (PageId p : ctx.cached) residents.push_back({p, ctx.view->last_access(p)});
    const auto ones = current_one_pages(trace_, k_, ctx.now - 1, residents);
    if (std::find(ones.begin(), ones.end(), victim) == ones.end()) ++bad;
    ++checked;
    return victim;
  }
  std::size_t bad = 0;
  std::size_t checked = 0;

 private:
  std::unique_ptr<Policy> inner_;
  const Trace& trace_;
  std::size_t k_;
};

TEST(BlindOracle, PerfectPredictionsEvictOnlyOnePages) {
  std::mt19937_64 rng(59);
  std::size_t checked = 0;
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t k = 2 + rng() % 3;
    const Trace t = testing::uniform_trace(rng, 2 + rng() % 40, 2 + rng() % 7);
    OnePageChecker checker(std::make_unique<BlindOraclePolicy>(), t, k);
    misses_of(checker, t, k, synthetic_nrt(t, 0.0, 0));
    ASSERT_EQ(checker.bad, 0u) << "iteration " << iter;
    checked += checker.checked;
  }
  EXPECT_GT(checked, 500u);
}

TEST(BlindOracle, InvertedPredictionsAreUnbounded) {
  double previous = 0.0;
  for (std::size_t n : {30u, 300u, 3000u}) {
    const Trace t = testing::adversarial_trace(2, n);
    EXPECT_EQ(opt_cost(t, 2), 4u);
    BlindOraclePolicy bo;
    const auto bundle = inverted_nrt(t);
    const double ratio = static_cast<double>(misses_of(bo, t, 2, bundle)) / 4.0;
    EXPECT_GE(ratio, 2.0);
    EXPECT_GT(ratio, previous);
    previous = ratio;
  }
}

TEST(FitfFollower, AlwaysWrongIsUnboundedButGuardIsNot) {
  const std::size_t k = 3;
  double previous = 0.0;
  for (std::size_t n : {100u, 1000u}) {
    const Trace t = testing::adversarial_trace(k, n);
    const std::size_t opt = opt_cost(t, k);
    FitfFollowerPolicy raw;
    const double raw_ratio =
        static_cast<double>(misses_of(raw, t, k, noisy_fitf(t, 1.0, 1))) / opt;
    EXPECT_GT(raw_ratio, previous);
    previous = raw_ratio;
    double guarded = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto g = guard_wrap(std::make_unique<FitfFollowerPolicy>());
      guarded += static_cast<double>(misses_of(*g, t, k, noisy_fitf(t, 1.0, seed), seed)) /
                 opt / 50.0;
    }
    EXPECT_LE(guarded, robustness_bound(k));
  }
}

TEST(Simulate, RejectsMismatchedPredictions) {
  const Trace t = letters("abcab");
  BlindOraclePolicy bo;
  PredictionBundle labels = flip_labels(t, 2, 0.0, 0);
  EXPECT_THROW(simulate(bo, t, 2, labels, 0), std::invalid_argument);
  PredictionBundle none;
  EXPECT_THROW(simulate(bo, t, 2, none, 0), std::invalid_argument);
  LruPolicy lru;
  EXPECT_NO_THROW(simulate(lru, t, 2, labels, 0));
  EXPECT_THROW(simulate(lru, t, 0, none, 0), std::invalid_argument);
}

/// Returns a page that is not cached.
class OutsideVictim final : public Policy {
 public:
  std::string name() const override { return "outside"; }
  PageId choose_victim(const EvictionContext&) override { return PageId{12345}; }
};

TEST(Simulate, VictimOutsideCacheIsAnInvariantViolation) {
  OutsideVictim bad;
  PredictionBundle none;
  EXPECT_THROW(simulate(bad, letters("abc"), 2, none, 0), InvariantViolation);
}

TEST(Determinism, SameSeedSameResult) {
  std::mt19937_64 rng(61);
  const Trace t = testing::uniform_trace(rng, 2000, 30);
  MarkerPolicy m1, m2;
  EXPECT_EQ(misses_of(m1, t, 5, {}, 9), misses_of(m2, t, 5, {}, 9));
  LrbFollowerPolicy l1, l2;
  EXPECT_EQ(misses_of(l1, t, 5, flip_labels(t, 5, 0.3, 2), 9),
            misses_of(l2, t, 5, flip_labels(t, 5, 0.3, 2), 9));
  auto s1 = std::make_unique<SwitchRandomized>(std::make_unique<BlindOraclePolicy>(),
                                               std::make_unique<MarkerPolicy>(), 0.9);
  auto s2 = std::make_unique<SwitchRandomized>(std::make_unique<BlindOraclePolicy>(),
                                               std::make_unique<MarkerPolicy>(), 0.9);
  EXPECT_EQ(misses_of(*s1, t, 5, synthetic_nrt(t, 1.0, 4), 3),
            misses_of(*s2, t, 5, synthetic_nrt(t, 1.0, 4), 3));
}

TEST(Switching, IdenticalSubPoliciesBehaveLikeEither) {
  std::mt19937_64 rng(67);
  for (int iter = 0; iter < 50; ++iter) {
    const std::size_t k = 1 + rng() % 6;
    const Trace t = testing::mixed_trace(rng, 1 + rng() % 500, 1 + rng() % 20);
    LruPolicy lru;
    SwitchDeterministic det(std::make_unique<LruPolicy>(), std::make_unique<LruPolicy>(), 1.0);
    SwitchRandomized rnd(std::make_unique<LruPolicy>(), std::make_unique<LruPolicy>(), 0.5);
    SwitchDeterministic opt(std::make_unique<BeladyPolicy>(), std::make_unique<BeladyPolicy>(),
                            1.0);
    const std::size_t want = misses_of(lru, t, k);
    ASSERT_EQ(misses_of(det, t, k), want);
    ASSERT_EQ(misses_of(rnd, t, k, {}, rng()), want);
    ASSERT_EQ(misses_of(opt, t, k), opt_cost(t, k));
  }
}

TEST(Switching, ParameterValidation) {
  auto mk = [] { return std::make_unique<LruPolicy>(); };
  EXPECT_THROW(SwitchDeterministic(mk(), mk(), 0.5), std::invalid_argument);
  EXPECT_THROW(SwitchRandomized(mk(), mk(), 0.0), std::invalid_argument);
  EXPECT_THROW(SwitchRandomized(mk(), mk(), 1.0), std::invalid_argument);
  EXPECT_THROW(SwitchDeterministic(std::make_unique<BlindOraclePolicy>(),
                                   std::make_unique<LrbFollowerPolicy>(), 1.0),
               std::invalid_argument);
  EXPECT_EQ(SwitchDeterministic(std::make_unique<BlindOraclePolicy>(), mk(), 1.0).name(),
            "switch_det(blind_oracle,lru,1)");
  EXPECT_EQ(SwitchRandomized(mk(), std::make_unique<MarkerPolicy>(), 0.99).name(),
            "switch_rand(lru,marker,0.99)");
}

TEST(Switching, DeterministicFollowsTheLeader) {
  std::mt19937_64 rng(71);
  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t k = 2 + rng() % 5;
    const Trace t = testing::mixed_trace(rng, 50 + rng() % 1000, 5 + rng() % 30);
    SwitchDeterministic det(std::make_unique<BlindOraclePolicy>(),
                            std::make_unique<LruPolicy>(), 1.0);
    const std::size_t misses = misses_of(det, t, k, synthetic_nrt(t, 0.0, 0));
    ASSERT_LE(misses, 2 * opt_cost(t, k)) << "iteration " << iter;
    // The optimal side never trails, so the combiner never leaves it.
    ASSERT_EQ(det.switches(), 0u);
    ASSERT_EQ(det.virtual_misses(0), opt_cost(t, k));
  }
}

TEST(Switching, DeterministicSwitchesAwayFromTheLoser) {
  // Cyclic over k+1 pages: LRU misses every request, Belady far less.
  std::vector<PageId> pages;
  for (std::size_t i = 0; i < 200; ++i) pages.push_back(PageId{i % 4});
  const Trace t(std::move(pages));
  SwitchDeterministic det(std::make_unique<LruPolicy>(), std::make_unique<BeladyPolicy>(), 1.0);
  const std::size_t misses = misses_of(det, t, 3);
  EXPECT_EQ(det.active(), 1u);
  EXPECT_GE(det.switches(), 1u);
  EXPECT_LE(misses, 2 * opt_cost(t, 3));
}

TEST(Switching, RandomizedWeightsFollowVirtualMisses) {
  std::vector<PageId> pages;
  for (std::size_t i = 0; i < 300; ++i) pages.push_back(PageId{i % 4});
  const Trace t(std::move(pages));
  for (double beta : {0.5, 0.9, 0.99}) {
    SwitchRandomized rnd(std::make_unique<BeladyPolicy>(), std::make_unique<LruPolicy>(), beta);
    misses_of(rnd, t, 3, {}, 5);
    const double lead = static_cast<double>(rnd.virtual_misses(1)) -
                        static_cast<double>(rnd.virtual_misses(0));
    EXPECT_GT(lead, 100.0);
    EXPECT_NEAR(rnd.weight_share(), 1.0 / (1.0 + std::pow(beta, lead)), 1e-9) << beta;
  }
  // Near beta = 1 the weights barely move and the draw stays fair.
  SwitchRandomized flat(std::make_unique<BeladyPolicy>(), std::make_unique<LruPolicy>(),
                        1.0 - 1e-9);
  misses_of(flat, t, 3, {}, 5);
  EXPECT_NEAR(flat.weight_share(), 0.5, 1e-6);
}

TEST(Switching, RandomizedSitsBetweenOptimumAndLru) {
  const auto users = ingest_brightkite(testing::read_fixture("brightkite_sample.tsv"));
  ASSERT_FALSE(users.empty());
  const std::size_t k = 10;
  for (const auto& u : users) {
    const Trace& t = u.trace;
    const double opt = static_cast<double>(opt_cost(t, k));
    LruPolicy lru;
    const double lru_ratio = misses_of(lru, t, k) / opt;
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      SwitchRandomized rnd(std::make_unique<BlindOraclePolicy>(), std::make_unique<LruPolicy>(),
                           0.99);
      mean += misses_of(rnd, t, k, synthetic_nrt(t, 0.0, seed), seed) / opt / 50.0;
    }
    EXPECT_GE(mean, 1.0) << u.user;
    EXPECT_LE(mean, lru_ratio) << u.user;
  }
}

}  // namespace
}  // namespace guardcache
