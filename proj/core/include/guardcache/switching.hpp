#pragma once

#include <array>
#include <memory>
#include <random>

#include "guardcache/policy.hpp"
#include "guardcache/simulator.hpp"

namespace guardcache {

/// Runs two policies side by side on virtual caches and lets one of them
/// drive the real cache. On a real eviction the active policy's victim for
/// this request is evicted if it is a candidate; otherwise the least
/// recently used candidate goes.
class SwitchingPolicy : public Policy {
 public:
  SwitchingPolicy(std::unique_ptr<Policy> a, std::unique_ptr<Policy> b);

  PredictionKind required_prediction() const override { return kind_; }
  void reset(const RunEnvironment& env) override;
  void before_request(Time now, PageId page) override;
  PageId choose_victim(const EvictionContext& ctx) override;

  /// 0 for the first sub-policy, 1 for the second.
  std::size_t active() const noexcept { return active_; }
  std::size_t virtual_misses(std::size_t which) const;
  std::size_t switches() const noexcept { return switches_; }

 protected:
  /// Called after both virtual caches served the current request.
  virtual void after_virtual_step(std::array<bool, 2> missed) = 0;
  /// Called right before the real cache needs a victim.
  virtual void before_real_eviction() {}
  void activate(std::size_t which);

  std::array<std::unique_ptr<Policy>, 2> subs_;
  std::array<std::unique_ptr<CacheSimulator>, 2> sims_;
  std::uint64_t seed_ = 0;

 private:
  PredictionKind kind_ = PredictionKind::kNone;
  std::size_t active_ = 0;
  std::size_t switches_ = 0;
};

/// Switches whenever the active policy's misses exceed bound times the
/// passive policy's misses.
class SwitchDeterministic final : public SwitchingPolicy {
 public:
  SwitchDeterministic(std::unique_ptr<Policy> a, std::unique_ptr<Policy> b, double bound);
  std::string name() const override;

 protected:
  void after_virtual_step(std::array<bool, 2> missed) override;

 private:
  double bound_;
};

/// Multiplicative weights: each virtual miss scales that policy's weight by
/// beta; the active policy is re-drawn proportionally to weight whenever the
/// real cache must evict.
class SwitchRandomized final : public SwitchingPolicy {
 public:
  SwitchRandomized(std::unique_ptr<Policy> a, std::unique_ptr<Policy> b, double beta);
  std::string name() const override;
  void reset(const RunEnvironment& env) override;

  /// Probability of drawing the first sub-policy.
  double weight_share() const noexcept { return weights_[0] / (weights_[0] + weights_[1]); }

 protected:
  void after_virtual_step(std::array<bool, 2> missed) override;
  void before_real_eviction() override;

 private:
  double beta_;
  std::array<double, 2> weights_{1.0, 1.0};
  std::mt19937_64 rng_;
};

}  // namespace guardcache
