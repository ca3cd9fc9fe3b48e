#include <chrono>
#include <stdexcept>

#include "guardcache/oracle.hpp"
#include "guardcache/simulator.hpp"

namespace guardcache {

CacheSimulator::CacheSimulator(const Trace& trace, std::size_t k,
                               PredictionBundle& predictions, Policy& policy,
                               std::uint64_t seed, bool check_invariants)
    : trace_(trace),
      k_(k),
      predictions_(predictions),
      policy_(policy),
      kind_(predictions.kind()) {
  if (k == 0) throw std::invalid_argument("cache size must be at least 1");
  if ((kind_ == PredictionKind::kNrt || kind_ == PredictionKind::kBinary) &&
      predictions.size() != trace.size()) {
    throw std::invalid_argument("prediction bundle length differs from the trace");
  }
  slots_.reserve(k);
  entries_.reserve(2 * k);
  policy_.reset(RunEnvironment{&trace_, k_, &predictions_, seed, check_invariants});
}

bool CacheSimulator::step(Time t) {
  if (t != served_ + 1) throw std::logic_error("requests must be served in order");
  served_ = t;
  const PageId page = trace_.page(t);
  last_victim_.reset();
  policy_.before_request(t, page);

  auto it = entries_.find(page);
  const bool hit = it != entries_.end();
  if (!hit) {
    ++misses_;
    if (slots_.size() >= k_) {
      const EvictionContext ctx{t, page, slots_, slots_, this, &predictions_};
      const PageId victim = policy_.choose_victim(ctx);
      auto v = entries_.find(victim);
      if (v == entries_.end()) {
        throw InvariantViolation(policy_.name() + " chose a victim outside the cache at t=" +
                                 std::to_string(t));
      }
      const std::size_t slot = v->second.slot;
      if (slot + 1 != slots_.size()) {
        slots_[slot] = slots_.back();
        entries_.find(slots_[slot])->second.slot = slot;
      }
      slots_.pop_back();
      entries_.erase(v);
      last_victim_ = victim;
      policy_.on_evict(t, victim);
    }
    it = entries_.emplace(page, Entry{slots_.size(), t, 0.0, false}).first;
    slots_.push_back(page);
  }

  Entry& e = it->second;
  e.last = t;
  if (kind_ == PredictionKind::kNrt) {
    e.nrt = predictions_.nrt(t);
  } else if (kind_ == PredictionKind::kBinary) {
    e.label = predictions_.label(t);
  }
  policy_.on_access(t, page, hit);
  return hit;
}

void CacheSimulator::run() {
  for (Time t = served_ + 1; t <= trace_.size(); ++t) step(t);
}

Time CacheSimulator::last_access(PageId page) const {
  auto it = entries_.find(page);
  return it == entries_.end() ? 0 : it->second.last;
}

std::optional<double> CacheSimulator::attached_nrt(PageId page) const {
  if (kind_ != PredictionKind::kNrt) return std::nullopt;
  auto it = entries_.find(page);
  if (it == entries_.end()) return std::nullopt;
  return it->second.nrt;
}

std::optional<bool> CacheSimulator::attached_label(PageId page) const {
  if (kind_ != PredictionKind::kBinary) return std::nullopt;
  auto it = entries_.find(page);
  if (it == entries_.end()) return std::nullopt;
  return it->second.label;
}

Time CacheSimulator::next_request(PageId page) const {
  auto it = entries_.find(page);
  return it == entries_.end() ? trace_.sentinel() : trace_.next(it->second.last);
}

RunResult simulate(Policy& policy, const Trace& trace, std::size_t k,
                   PredictionBundle& predictions, std::uint64_t seed,
                   const SimulationOptions& options) {
  const PredictionKind needed = policy.required_prediction();
  if (needed != PredictionKind::kNone && needed != predictions.kind()) {
    throw std::invalid_argument(policy.name() + " needs " + std::string(to_string(needed)) +
                                " predictions, got " +
                                std::string(to_string(predictions.kind())));
  }

  RunResult result;
  result.policy = policy.name();
  result.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  CacheSimulator sim(trace, k, predictions, policy, seed, options.check_invariants);
  sim.run();
  policy.finish();
  const auto stop = std::chrono::steady_clock::now();
  result.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();

  result.misses = sim.misses();
  result.opt_misses = options.opt_misses ? *options.opt_misses : opt_cost(trace, k);
  result.ratio = result.opt_misses == 0
                     ? 1.0
                     : static_cast<double>(result.misses) / static_cast<double>(result.opt_misses);
  if (options.measure_error) result.eta = measure_error(predictions, trace, k);
  if (const auto* telemetry = policy.guard_telemetry()) result.guard = *telemetry;
  return result;
}

}  // namespace guardcache
