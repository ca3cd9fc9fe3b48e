#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace guardcache {

/// Per-phase counters kept by the Guard wrapper. A phase starts whenever the
/// set of unrequested old pages is refilled; phase 0 runs until the first
/// refill.
struct PhaseStats {
  std::size_t q = 0;
  std::size_t c = 0;      // distinct new pages requested
  std::size_t n = 0;      // eviction-causing misses on new pages
  std::size_t o = 0;      // eviction-causing misses on old pages
  std::size_t n_new = 0;  // ... of n, those that evicted a new page
  std::size_t n_old = 0;  // ... of n, those that evicted an old page

  friend bool operator==(const PhaseStats&, const PhaseStats&) = default;
};

struct GuardTelemetry {
  std::vector<PhaseStats> phases;
  std::size_t guard_events = 0;  // misses that took the re-request branch
  std::size_t max_guarded = 0;   // peak guarded-set size
};

/// A structural invariant that should hold by construction did not.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace guardcache
