#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "guardcache/trace.hpp"

namespace guardcache::testing {

/// Trace over single-character page names, e.g. "abcba".
inline Trace letters(std::string_view s) {
  std::vector<PageId> pages;
  for (char c : s) pages.push_back(PageId{static_cast<std::uint64_t>(c - 'a')});
  return Trace(std::move(pages));
}

/// Uniform requests over `universe` pages.
inline Trace uniform_trace(std::mt19937_64& rng, std::size_t n, std::size_t universe) {
  std::uniform_int_distribution<std::uint64_t> pick(0, universe - 1);
  std::vector<PageId> pages(n);
  for (auto& p : pages) p = PageId{pick(rng)};
  return Trace(std::move(pages));
}

/// Zipf-like popularity with exponent s.
inline Trace zipf_trace(std::mt19937_64& rng, std::size_t n, std::size_t universe, double s) {
  std::vector<double> weights(universe);
  for (std::size_t i = 0; i < universe; ++i) weights[i] = std::pow(static_cast<double>(i + 1), -s);
  std::discrete_distribution<std::uint64_t> pick(weights.begin(), weights.end());
  std::vector<PageId> pages(n);
  for (auto& p : pages) p = PageId{pick(rng)};
  return Trace(std::move(pages));
}

/// Working-set drift: mostly requests from a sliding window of pages, with
/// occasional jumps. Produces long phases and many re-requests.
inline Trace drifting_trace(std::mt19937_64& rng, std::size_t n, std::size_t universe,
                            std::size_t window) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::uint64_t> any(0, universe - 1);
  std::uniform_int_distribution<std::uint64_t> near(0, window - 1);
  std::uint64_t origin = 0;
  std::vector<PageId> pages(n);
  for (auto& p : pages) {
    if (coin(rng) < 0.01) origin = any(rng);
    p = coin(rng) < 0.9 ? PageId{(origin + near(rng)) % universe} : PageId{any(rng)};
  }
  return Trace(std::move(pages));
}

/// Random instance of mixed shape for property tests.
inline Trace mixed_trace(std::mt19937_64& rng, std::size_t n, std::size_t universe) {
  switch (rng() % 3) {
    case 0: return uniform_trace(rng, n, universe);
    case 1: return zipf_trace(rng, n, universe, 0.8 + static_cast<double>(rng() % 8) / 10.0);
    default: return drifting_trace(rng, n, universe, std::max<std::size_t>(2, universe / 3));
  }
}

/// k+1 distinct pages, then the first k pages in a cycle. Predictions that
/// invert next-request times make a blind follower keep the useless page
/// k+1 and miss on almost every later request, while OPT pays k+2.
inline Trace adversarial_trace(std::size_t k, std::size_t n) {
  std::vector<PageId> pages;
  pages.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    pages.push_back(PageId{i <= k ? i : (i - k - 1) % k});
  }
  return Trace(std::move(pages));
}

}  // namespace guardcache::testing
