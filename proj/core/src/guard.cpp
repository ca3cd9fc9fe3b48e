#include "guardcache/guard.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace guardcache {
namespace detail {

void SampledSet::insert(PageId p) {
  if (index_.try_emplace(p, items_.size()).second) items_.push_back(p);
}

bool SampledSet::erase(PageId p) {
  auto it = index_.find(p);
  if (it == index_.end()) return false;
  const std::size_t slot = it->second;
  index_.erase(it);
  if (slot + 1 != items_.size()) {
    items_[slot] = items_.back();
    index_[items_[slot]] = slot;
  }
  items_.pop_back();
  return true;
}

void SampledSet::clear() {
  items_.clear();
  index_.clear();
}

void EpochSet::insert(PageId p) {
  auto& stamp = stamp_[p];
  if (stamp != epoch_) {
    stamp = epoch_;
    ++size_;
  }
}

void EpochSet::erase(PageId p) {
  auto it = stamp_.find(p);
  if (it != stamp_.end() && it->second == epoch_) {
    it->second = 0;
    --size_;
  }
}

}  // namespace detail

GuardPolicy::GuardPolicy(std::unique_ptr<Policy> base) : base_(std::move(base)) {
  if (!base_) throw std::invalid_argument("guard needs a base policy");
}

void GuardPolicy::reset(const RunEnvironment& env) {
  RunEnvironment inner = env;
  inner.seed = derive_seed(env.seed, 7);
  base_->reset(inner);
  rng_.seed(env.seed);
  checks_ = env.check_invariants;

  phase_ = 0;
  unrequested_.clear();
  guarded_.clear();
  evicted_.clear();
  old_.clear();
  seen_.clear();
  loads_.clear();
  current_ = PhaseStats{};
  telemetry_ = GuardTelemetry{};
  pending_new_ = false;
  took_guard_branch_ = false;
  now_ = 0;
}

void GuardPolicy::before_request(Time now, PageId page) {
  now_ = now;
  base_->before_request(now, page);
}

void GuardPolicy::start_phase(std::span<const PageId> cached) {
  telemetry_.phases.push_back(current_);
  ++phase_;
  guarded_.clear();
  evicted_.clear();
  old_.clear();
  seen_.clear();
  unrequested_.clear();
  for (PageId p : cached) {
    unrequested_.insert(p);
    old_.insert(p);
  }
  current_ = PhaseStats{};
  current_.q = phase_;
}

PageId GuardPolicy::choose_victim(const EvictionContext& ctx) {
  if (unrequested_.empty()) start_phase(ctx.cached);

  const PageId page = ctx.requested;
  pending_new_ = !old_.contains(page);

  if (checks_) {
    for (PageId u : unrequested_.items()) {
      if (guarded_.contains(u)) fail("a guarded page is still an unrequested old page");
      if (ctx.view != nullptr && ctx.view->last_access(u) == 0) {
        fail("an unrequested old page is no longer cached");
      }
    }
  }

  PageId victim;
  if (evicted_.contains(page)) {
    // Re-request of a page evicted this phase: the base policy erred.
    took_guard_branch_ = true;
    if (unrequested_.empty()) fail("guard branch reached with no unrequested old page");
    victim = unrequested_.sample(rng_);
    if (unrequested_.contains(page)) fail("requested page is already an unrequested old page");
    guarded_.insert(page);
    ++telemetry_.guard_events;
    telemetry_.max_guarded = std::max(telemetry_.max_guarded, guarded_.size());
  } else {
    took_guard_branch_ = false;
    if (checks_ && !pending_new_) fail("old-page miss did not take the guard branch");
    std::span<const PageId> allowed = ctx.candidates;
    if (guarded_.size() > 0) {
      scratch_.clear();
      for (PageId p : ctx.candidates) {
        if (!guarded_.contains(p)) scratch_.push_back(p);
      }
      allowed = scratch_;
    }
    if (allowed.empty()) fail("every eviction candidate is guarded");
    victim = base_->choose_victim(ctx.restricted_to(allowed));
  }
  if (guarded_.contains(victim)) fail("a guarded page was chosen for eviction");

  if (pending_new_) {
    ++current_.n;
    if (old_.contains(victim)) {
      ++current_.n_old;
    } else {
      ++current_.n_new;
    }
  } else {
    ++current_.o;
  }
  return victim;
}

void GuardPolicy::on_evict(Time now, PageId victim) {
  unrequested_.erase(victim);
  evicted_.insert(victim);
  base_->on_evict(now, victim);
}

void GuardPolicy::on_access(Time now, PageId page, bool hit) {
  unrequested_.erase(page);
  if (!hit) {
    // A reloaded page is guarded for the rest of the phase, so it can never
    // be evicted again before the next reset.
    evicted_.erase(page);
    if (checks_ && !old_.contains(page)) {
      auto& [phase, loads] = loads_[page];
      if (phase != phase_) {
        phase = phase_;
        loads = 0;
      }
      if (++loads > 2) fail("a new page was loaded more than twice in one phase");
    }
  }
  if (!seen_.contains(page)) {
    seen_.insert(page);
    if (!old_.contains(page)) ++current_.c;
  }
  base_->on_access(now, page, hit);
}

void GuardPolicy::finish() {
  telemetry_.phases.push_back(current_);
  base_->finish();
}

void GuardPolicy::fail(const std::string& what) const {
  throw InvariantViolation("guard (phase " + std::to_string(phase_) + ", t=" +
                           std::to_string(now_) + "): " + what);
}

std::unique_ptr<Policy> guard_wrap(std::unique_ptr<Policy> base) {
  return std::make_unique<GuardPolicy>(std::move(base));
}

double harmonic(std::size_t k) {
  if (k < 1) throw std::invalid_argument("harmonic number needs k >= 1");
  double h = 0.0;
  for (std::size_t i = k; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

double robustness_bound(std::size_t k) { return 2.0 * harmonic(k) + 2.0; }

PhaseReport phase_report(const GuardTelemetry& telemetry, std::size_t opt_misses) {
  PhaseReport report;
  report.phases = telemetry.phases;
  report.opt = opt_misses;
  for (const auto& s : telemetry.phases) {
    report.sum_c += s.c;
    report.sum_n_old += s.n_old;
    const std::string tag = "phase " + std::to_string(s.q) + ": ";
    if (s.n != s.n_new + s.n_old) {
      report.per_phase_ok = false;
      report.violations.push_back(tag + "n_q != n_q_new + n_q_old");
    }
    if (s.n > 2 * s.c) {
      report.per_phase_ok = false;
      report.violations.push_back(tag + "n_q=" + std::to_string(s.n) + " > 2*c_q=" +
                                  std::to_string(2 * s.c));
    }
    if (s.n_old > s.c) {
      report.per_phase_ok = false;
      report.violations.push_back(tag + "n_q_old=" + std::to_string(s.n_old) +
                                  " > c_q=" + std::to_string(s.c));
    }
  }
  if (report.sum_c > 2 * opt_misses) {
    report.lower_bound_ok = false;
    report.violations.push_back("sum c_q / 2 = " + std::to_string(report.sum_c / 2.0) +
                                " exceeds OPT = " + std::to_string(opt_misses));
  }
  const bool has_resets = telemetry.phases.size() >= 2;
  if (has_resets && opt_misses > report.sum_n_old) {
    report.upper_bound_ok = false;
    report.upper_bound_detail = "OPT = " + std::to_string(opt_misses) +
                                " exceeds sum n_q_old = " + std::to_string(report.sum_n_old);
  }
  return report;
}

void write_phase_csv(std::ostream& out, std::span<const PhaseStats> phases) {
  out << "phase,c_q,n_q,o_q,n_q_new,n_q_old\n";
  for (const auto& s : phases) {
    out << s.q << ',' << s.c << ',' << s.n << ',' << s.o << ',' << s.n_new << ',' << s.n_old
        << '\n';
  }
}

}  // namespace guardcache
