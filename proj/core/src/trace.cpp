#include "guardcache/trace.hpp"

#include <bit>
#include <unordered_map>
#include <unordered_set>

namespace guardcache {

ParseError::ParseError(const std::string& what, std::size_t line)
    : std::runtime_error(line == 0 ? what
                                   : "line " + std::to_string(line) + ": " + what),
      line_(line) {}

std::vector<Time> compute_next_occurrence(std::span<const Request> requests) {
  const std::size_t n = requests.size();
  std::vector<Time> next(n, n + 1);
  std::unordered_map<PageId, Time> upcoming;
  upcoming.reserve(n);
  for (std::size_t i = n; i-- > 0;) {
    auto [it, inserted] = upcoming.try_emplace(requests[i].page, i + 1);
    if (!inserted) {
      next[i] = it->second;
      it->second = i + 1;
    }
  }
  return next;
}

Trace::Trace(std::vector<PageId> pages) {
  requests_.reserve(pages.size());
  for (std::size_t i = 0; i < pages.size(); ++i) {
    requests_.push_back(Request{i + 1, pages[i]});
  }
  next_ = compute_next_occurrence(requests_);
  std::unordered_set<PageId> distinct(pages.begin(), pages.end());
  universe_size_ = distinct.size();
}

std::vector<PageId> Trace::pages() const {
  std::vector<PageId> out;
  out.reserve(requests_.size());
  for (const auto& r : requests_) out.push_back(r.page);
  return out;
}

void SetAssociativeConfig::validate() const {
  if (!std::has_single_bit(capacity_bytes) || !std::has_single_bit(line_bytes)) {
    throw std::invalid_argument("capacity and line size must be powers of two");
  }
  if (line_bytes > capacity_bytes) {
    throw std::invalid_argument("line size exceeds capacity");
  }
  if (ways == 0 || lines() % ways != 0) {
    throw std::invalid_argument("associativity must divide the line count");
  }
}

std::uint64_t trace_fingerprint(const Trace& trace) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& r : trace.requests()) {
    std::uint64_t v = r.page.value;
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace guardcache
