// Dataset adapters: plain token traces, BrightKite check-ins, Citi Bike rides
// and memory-address traces.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <unordered_map>

#include "guardcache/trace.hpp"

namespace guardcache {
namespace {

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Calls fn(line_number, line) for every line, 1-based.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto pos = text.find('\n');
    std::string_view line = text.substr(0, pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line_no, line);
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// RFC-4180-ish: quoted fields may contain separators and doubled quotes.
// Returns false on an unterminated quote.
bool split_csv(std::string_view line, std::vector<std::string>& out) {
  out.clear();
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) return false;
  out.push_back(std::move(field));
  return true;
}

std::string lower(std::string_view s) {
  std::string out(trim(s));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

class Interner {
 public:
  PageId intern(std::string_view token) {
    auto [it, inserted] = ids_.try_emplace(std::string(token), ids_.size());
    return PageId{it->second};
  }

 private:
  std::unordered_map<std::string, std::uint64_t> ids_;
};

}  // namespace

Trace parse_plain_trace(std::string_view text) {
  Interner interner;
  std::vector<PageId> pages;
  for_each_line(text, [&](std::size_t, std::string_view line) {
    line = trim(line);
    if (line.empty() || line.front() == '#') return;
    pages.push_back(interner.intern(line));
  });
  if (pages.empty()) throw ParseError("empty trace", 0);
  return Trace(std::move(pages));
}

std::vector<UserTrace> ingest_brightkite(std::string_view text,
                                         const BrightKiteOptions& opts) {
  struct Checkin {
    std::string time;
    std::string location;
  };
  std::vector<std::string> user_order;
  std::unordered_map<std::string, std::vector<Checkin>> by_user;

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty()) return;
    auto fields = split(line, '\t');
    if (fields.size() != 5) {
      throw ParseError("expected 5 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    auto user = trim(fields[0]);
    auto time = trim(fields[1]);
    auto location = trim(fields[4]);
    if (user.empty()) throw ParseError("missing user id", line_no);
    if (time.empty()) throw ParseError("missing check-in time", line_no);
    if (location.empty()) throw ParseError("missing location id", line_no);
    auto [it, inserted] = by_user.try_emplace(std::string(user));
    if (inserted) user_order.push_back(it->first);
    it->second.push_back(Checkin{std::string(time), std::string(location)});
  });

  std::vector<UserTrace> out;
  for (const auto& user : user_order) {
    auto& checkins = by_user[user];
    std::stable_sort(checkins.begin(), checkins.end(),
                     [](const Checkin& a, const Checkin& b) { return a.time < b.time; });
    Interner interner;
    std::vector<PageId> pages;
    pages.reserve(checkins.size());
    for (const auto& c : checkins) pages.push_back(interner.intern(c.location));
    Trace trace(std::move(pages));
    if (trace.universe_size() >= opts.min_distinct) {
      out.push_back(UserTrace{user, std::move(trace)});
    }
  }
  return out;
}

Trace ingest_citibike(std::string_view text, const CitiOptions& opts) {
  const std::string wanted = lower(opts.station_column);
  std::vector<std::string> fields;
  std::size_t column = 0;
  std::size_t width = 0;
  bool have_header = false;
  Interner named;  // non-numeric station ids
  std::vector<PageId> pages;

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty()) return;
    if (!split_csv(line, fields)) throw ParseError("unterminated quote", line_no);
    if (!have_header) {
      auto it = std::find_if(fields.begin(), fields.end(),
                             [&](const std::string& f) { return lower(f) == wanted; });
      if (it == fields.end()) {
        throw ParseError("header has no column '" + opts.station_column + "'", line_no);
      }
      column = static_cast<std::size_t>(it - fields.begin());
      width = fields.size();
      have_header = true;
      return;
    }
    if (fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    auto station = trim(fields[column]);
    if (station.empty()) throw ParseError("missing station id", line_no);
    std::uint64_t id = 0;
    auto [end, ec] = std::from_chars(station.data(), station.data() + station.size(), id);
    if (ec == std::errc() && end == station.data() + station.size() &&
        id < (std::uint64_t{1} << 63)) {
      pages.push_back(PageId{id});
    } else {
      pages.push_back(PageId{named.intern(station).value | (std::uint64_t{1} << 63)});
    }
  });
  if (pages.empty()) throw ParseError("empty trace", 0);
  return Trace(std::move(pages));
}

std::map<std::uint64_t, Trace> ingest_address_trace(std::string_view text,
                                                     const SetAssociativeConfig& config) {
  config.validate();
  const std::uint64_t sets = config.sets();
  std::map<std::uint64_t, std::vector<PageId>> by_set;

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    line = trim(line);
    if (line.empty() || line.front() == '#') return;
    int base = 10;
    if (line.size() > 2 && line[0] == '0' && (line[1] == 'x' || line[1] == 'X')) {
      base = 16;
      line.remove_prefix(2);
    }
    std::uint64_t address = 0;
    auto [end, ec] = std::from_chars(line.data(), line.data() + line.size(), address, base);
    if (ec != std::errc() || end != line.data() + line.size()) {
      throw ParseError("unparsable address '" + std::string(line) + "'", line_no);
    }
    const std::uint64_t line_address = address / config.line_bytes;
    by_set[line_address % sets].push_back(PageId{line_address});
  });
  if (by_set.empty()) throw ParseError("empty trace", 0);

  std::map<std::uint64_t, Trace> out;
  for (auto& [set, pages] : by_set) out.emplace(set, Trace(std::move(pages)));
  return out;
}

}  // namespace guardcache
