#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "guardcache/phase_stats.hpp"
#include "guardcache/policy.hpp"

namespace guardcache {

namespace detail {

/// Set with O(1) insert, erase, membership and uniform sampling.
class SampledSet {
 public:
  bool contains(PageId p) const { return index_.contains(p); }
  bool empty() const noexcept { return items_.empty(); }
  std::size_t size() const noexcept { return items_.size(); }
  std::span<const PageId> items() const noexcept { return items_; }

  void insert(PageId p);
  bool erase(PageId p);
  void clear();

  template <typename Rng>
  PageId sample(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    return items_[pick(rng)];
  }

 private:
  std::vector<PageId> items_;
  std::unordered_map<PageId, std::size_t> index_;
};

/// Set whose clear() is O(1): members are stamped with the epoch they were
/// inserted in and bumping the epoch forgets all of them.
class EpochSet {
 public:
  bool contains(PageId p) const {
    auto it = stamp_.find(p);
    return it != stamp_.end() && it->second == epoch_;
  }
  std::size_t size() const noexcept { return size_; }
  void insert(PageId p);
  void erase(PageId p);
  void clear() noexcept {
    ++epoch_;
    size_ = 0;
  }

 private:
  std::unordered_map<PageId, std::uint64_t> stamp_;
  std::uint64_t epoch_ = 1;
  std::size_t size_ = 0;
};

}  // namespace detail

/// Phase-based robustification wrapper around a prediction-following policy.
///
/// Old pages are the cache contents at the start of a phase; U holds the old
/// pages not yet requested or evicted. When a miss with a full cache finds U
/// empty, all guards are lifted and a new phase starts with U refilled. A
/// miss on a page already evicted in the current phase evicts a uniformly
/// random member of U and guards the requested page for the rest of the
/// phase. Any other eviction is delegated to the base policy restricted to
/// unguarded pages. Under perfect predictions nothing is ever guarded and
/// the wrapper is invisible.
class GuardPolicy final : public Policy {
 public:
  explicit GuardPolicy(std::unique_ptr<Policy> base);

  std::string name() const override { return "guard:" + base_->name(); }
  PredictionKind required_prediction() const override { return base_->required_prediction(); }

  void reset(const RunEnvironment& env) override;
  void before_request(Time now, PageId page) override;
  PageId choose_victim(const EvictionContext& ctx) override;
  void on_evict(Time now, PageId victim) override;
  void on_access(Time now, PageId page, bool hit) override;
  void finish() override;

  const GuardTelemetry* guard_telemetry() const override { return &telemetry_; }

  std::size_t phase() const noexcept { return phase_; }
  bool guarded(PageId p) const { return guarded_.contains(p); }
  std::span<const PageId> unrequested_old() const noexcept { return unrequested_.items(); }
  const Policy& base() const noexcept { return *base_; }

 private:
  void start_phase(std::span<const PageId> cached);
  [[noreturn]] void fail(const std::string& what) const;

  std::unique_ptr<Policy> base_;
  std::mt19937_64 rng_;
  bool checks_ = false;

  std::size_t phase_ = 0;
  detail::SampledSet unrequested_;  // U
  detail::SampledSet guarded_;      // at most k pages, kept small for the filter scan
  detail::EpochSet evicted_;        // evicted in the current phase
  detail::EpochSet old_;            // snapshot at phase start
  detail::EpochSet seen_;           // requested in the current phase
  std::unordered_map<PageId, std::pair<std::size_t, std::size_t>> loads_;  // page -> (phase, loads)

  PhaseStats current_;
  GuardTelemetry telemetry_;
  std::vector<PageId> scratch_;
  bool pending_new_ = false;
  bool took_guard_branch_ = false;
  Time now_ = 0;
};

std::unique_ptr<Policy> guard_wrap(std::unique_ptr<Policy> base);

/// H_k = 1 + 1/2 + ... + 1/k. Throws std::invalid_argument for k < 1.
double harmonic(std::size_t k);

/// 2 H_k + 2.
double robustness_bound(std::size_t k);

struct PhaseReport {
  std::vector<PhaseStats> phases;
  std::size_t opt = 0;
  std::size_t sum_c = 0;
  std::size_t sum_n_old = 0;
  bool per_phase_ok = true;    // n_q <= 2 c_q, n_q_old <= c_q, n_q = n_new + n_old
  bool lower_bound_ok = true;  // sum c_q / 2 <= OPT
  bool upper_bound_ok = true;  // OPT <= sum n_q_old, checked when Q >= 1
  /// Failed per-phase or lower-bound checks.
  std::vector<std::string> violations;
  /// Set when the upper bound fails. Kept apart from `violations` because
  /// that bound does not hold in general.
  std::string upper_bound_detail;

  bool ok() const { return violations.empty(); }
};

PhaseReport phase_report(const GuardTelemetry& telemetry, std::size_t opt_misses);

/// `phase,c_q,n_q,o_q,n_q_new,n_q_old`
void write_phase_csv(std::ostream& out, std::span<const PhaseStats> phases);

}  // namespace guardcache
