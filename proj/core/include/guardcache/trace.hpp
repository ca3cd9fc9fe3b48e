#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace guardcache {

/// Request time. Requests are numbered 1..n and time equals the index.
using Time = std::size_t;

struct PageId {
  std::uint64_t value = 0;

  friend constexpr auto operator<=>(const PageId&, const PageId&) = default;
};

struct Request {
  Time index = 0;
  PageId page;
};

/// Raised by the dataset adapters. `line()` is 1-based, 0 when the error is
/// not tied to a particular line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// For every request i (1-based), the index of the next request to the same
/// page, or n+1 when the page never recurs. Entry i-1 of the result belongs
/// to request i.
std::vector<Time> compute_next_occurrence(std::span<const Request> requests);

/// Immutable request sequence with precomputed next occurrences.
class Trace {
 public:
  Trace() = default;
  explicit Trace(std::vector<PageId> pages);

  std::size_t size() const noexcept { return requests_.size(); }
  bool empty() const noexcept { return requests_.empty(); }
  std::size_t universe_size() const noexcept { return universe_size_; }

  /// n+1; the "never requested again" marker.
  Time sentinel() const noexcept { return requests_.size() + 1; }

  std::span<const Request> requests() const noexcept { return requests_; }
  std::span<const Time> next_occurrence() const noexcept { return next_; }

  // 1-based accessors.
  const Request& at(Time t) const { return requests_[t - 1]; }
  PageId page(Time t) const { return requests_[t - 1].page; }
  Time next(Time t) const { return next_[t - 1]; }

  std::vector<PageId> pages() const;

  friend bool operator==(const Trace& a, const Trace& b) {
    return a.pages() == b.pages();
  }

 private:
  std::vector<Request> requests_;
  std::vector<Time> next_;
  std::size_t universe_size_ = 0;
};

/// Cache geometry for memory-address traces.
struct SetAssociativeConfig {
  std::uint64_t capacity_bytes = 2u << 20;
  std::uint64_t line_bytes = 64;
  std::uint64_t ways = 16;

  /// Throws std::invalid_argument unless sizes are powers of two and the
  /// associativity divides the line count.
  void validate() const;
  std::uint64_t lines() const { return capacity_bytes / line_bytes; }
  std::uint64_t sets() const { return lines() / ways; }
};

struct UserTrace {
  std::string user;
  Trace trace;
};

struct BrightKiteOptions {
  /// Users with fewer distinct locations than this are dropped.
  std::size_t min_distinct = 20;
};

struct CitiOptions {
  std::string station_column = "start station id";
};

/// One token per line; blank lines and lines starting with '#' are skipped.
/// Tokens get PageIds 0,1,2,... in first-appearance order.
Trace parse_plain_trace(std::string_view text);

/// Check-in records `user<TAB>time<TAB>lat<TAB>lon<TAB>location`. Each
/// user's check-ins are ordered by time (ISO-8601 strings sort
/// chronologically); locations are interned per user.
std::vector<UserTrace> ingest_brightkite(std::string_view text,
                                         const BrightKiteOptions& opts = {});

/// Ride CSV with a header row. The configured station column becomes the
/// request stream in file order.
Trace ingest_citibike(std::string_view text, const CitiOptions& opts = {});

/// One address per line, `0x` selects hex. Returns one trace per cache set,
/// keyed by set index, whose pages are line addresses.
std::map<std::uint64_t, Trace> ingest_address_trace(
    std::string_view text, const SetAssociativeConfig& config);

/// 64-bit FNV-1a over the page sequence; keys on-disk OPT caches.
std::uint64_t trace_fingerprint(const Trace& trace);

}  // namespace guardcache

template <>
struct std::hash<guardcache::PageId> {
  std::size_t operator()(guardcache::PageId p) const noexcept {
    // splitmix64 finalizer; dense ids otherwise cluster in low buckets.
    std::uint64_t z = p.value + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return static_cast<std::size_t>(z ^ (z >> 31));
  }
};
