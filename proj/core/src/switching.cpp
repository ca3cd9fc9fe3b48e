#include "guardcache/switching.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace guardcache {
namespace {

PredictionKind combined_kind(const Policy& a, const Policy& b) {
  const auto ka = a.required_prediction();
  const auto kb = b.required_prediction();
  if (ka == PredictionKind::kNone) return kb;
  if (kb == PredictionKind::kNone || kb == ka) return ka;
  throw std::invalid_argument("cannot combine " + a.name() + " and " + b.name() +
                              ": they need different prediction kinds");
}

std::string format_param(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

SwitchingPolicy::SwitchingPolicy(std::unique_ptr<Policy> a, std::unique_ptr<Policy> b)
    : subs_{std::move(a), std::move(b)} {
  if (!subs_[0] || !subs_[1]) throw std::invalid_argument("switching needs two policies");
  kind_ = combined_kind(*subs_[0], *subs_[1]);
}

void SwitchingPolicy::reset(const RunEnvironment& env) {
  seed_ = env.seed;
  for (std::size_t i = 0; i < 2; ++i) {
    sims_[i] = std::make_unique<CacheSimulator>(*env.trace, env.k, *env.predictions,
                                                *subs_[i], derive_seed(env.seed, i + 1),
                                                env.check_invariants);
  }
  active_ = 0;
  switches_ = 0;
}

void SwitchingPolicy::before_request(Time now, PageId) {
  std::array<bool, 2> missed{};
  for (std::size_t i = 0; i < 2; ++i) missed[i] = !sims_[i]->step(now);
  after_virtual_step(missed);
}

PageId SwitchingPolicy::choose_victim(const EvictionContext& ctx) {
  before_real_eviction();
  if (auto victim = sims_[active_]->last_victim()) {
    if (std::find(ctx.candidates.begin(), ctx.candidates.end(), *victim) !=
        ctx.candidates.end()) {
      return *victim;
    }
  }
  return lru_candidate(ctx);
}

std::size_t SwitchingPolicy::virtual_misses(std::size_t which) const {
  return sims_.at(which) ? sims_[which]->misses() : 0;
}

void SwitchingPolicy::activate(std::size_t which) {
  if (which != active_) {
    active_ = which;
    ++switches_;
  }
}

SwitchDeterministic::SwitchDeterministic(std::unique_ptr<Policy> a, std::unique_ptr<Policy> b,
                                         double bound)
    : SwitchingPolicy(std::move(a), std::move(b)), bound_(bound) {
  if (!(bound >= 1.0)) throw std::invalid_argument("switching bound must be at least 1");
}

std::string SwitchDeterministic::name() const {
  return "switch_det(" + subs_[0]->name() + "," + subs_[1]->name() + "," +
         format_param(bound_) + ")";
}

void SwitchDeterministic::after_virtual_step(std::array<bool, 2>) {
  const std::size_t current = active();
  const std::size_t other = 1 - current;
  if (static_cast<double>(sims_[current]->misses()) >
      bound_ * static_cast<double>(sims_[other]->misses())) {
    activate(other);
  }
}

SwitchRandomized::SwitchRandomized(std::unique_ptr<Policy> a, std::unique_ptr<Policy> b,
                                   double beta)
    : SwitchingPolicy(std::move(a), std::move(b)), beta_(beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
}

std::string SwitchRandomized::name() const {
  return "switch_rand(" + subs_[0]->name() + "," + subs_[1]->name() + "," +
         format_param(beta_) + ")";
}

void SwitchRandomized::reset(const RunEnvironment& env) {
  SwitchingPolicy::reset(env);
  weights_ = {1.0, 1.0};
  rng_.seed(derive_seed(env.seed, 3));
}

void SwitchRandomized::after_virtual_step(std::array<bool, 2> missed) {
  for (std::size_t i = 0; i < 2; ++i) {
    if (missed[i]) weights_[i] *= beta_;
  }
  // Keep the larger weight at 1 so long runs do not underflow both.
  const double top = std::max(weights_[0], weights_[1]);
  weights_[0] /= top;
  weights_[1] /= top;
}

void SwitchRandomized::before_real_eviction() {
  std::bernoulli_distribution first(weight_share());
  activate(first(rng_) ? 0 : 1);
}

}  // namespace guardcache
