#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "guardcache/trace.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

namespace guardcache {
namespace {

using testing::letters;
using testing::read_fixture;

// Quadratic forward scan; the reference for next occurrences.
std::vector<Time> scan_next(const std::vector<PageId>& pages) {
  const std::size_t n = pages.size();
  std::vector<Time> next(n, n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (pages[j] == pages[i]) {
        next[i] = j + 1;
        break;
      }
    }
  }
  return next;
}

std::vector<Time> next_of(const Trace& t) {
  return {t.next_occurrence().begin(), t.next_occurrence().end()};
}

// Maps tokens to 0,1,2,... in first-appearance order.
std::vector<PageId> intern(const std::vector<std::string>& tokens) {
  std::unordered_map<std::string, std::uint64_t> ids;
  std::vector<PageId> out;
  for (const auto& tok : tokens) {
    out.push_back(PageId{ids.try_emplace(tok, ids.size()).first->second});
  }
  return out;
}

TEST(NextOccurrence, SpecExamples) {
  EXPECT_EQ(next_of(parse_plain_trace("a\nb\na")), (std::vector<Time>{3, 4, 4}));
  EXPECT_EQ(next_of(parse_plain_trace("a\na")), (std::vector<Time>{2, 3}));

  const Trace abcba = parse_plain_trace("a\nb\nc\nb\na\n");
  EXPECT_EQ(abcba.universe_size(), 3u);
  EXPECT_EQ(next_of(abcba), scan_next(abcba.pages()));
  EXPECT_EQ(next_of(abcba), (std::vector<Time>{5, 4, 6, 6, 6}));
}

TEST(NextOccurrence, EmptyAndSingle) {
  EXPECT_TRUE(compute_next_occurrence({}).empty());
  const std::vector<Request> one{{1, PageId{7}}};
  EXPECT_EQ(compute_next_occurrence(one), (std::vector<Time>{2}));
}

TEST(NextOccurrence, MatchesForwardScanOnRandomTraces) {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t n = 1 + rng() % 200;
    const std::size_t universe = 1 + rng() % 20;
    const Trace t = testing::uniform_trace(rng, n, universe);
    const auto pages = t.pages();
    ASSERT_EQ(next_of(t), scan_next(pages)) << "iteration " << iter;
    for (Time i = 1; i <= n; ++i) {
      ASSERT_GT(t.next(i), i);
      if (t.next(i) <= n) {
        ASSERT_EQ(t.page(t.next(i)), t.page(i));
        for (Time j = i + 1; j < t.next(i); ++j) ASSERT_NE(t.page(j), t.page(i));
      }
    }
  }
}

TEST(Trace, RequestIndexIsPosition) {
  const Trace t = letters("abca");
  for (Time i = 1; i <= t.size(); ++i) EXPECT_EQ(t.at(i).index, i);
  EXPECT_EQ(t.sentinel(), 5u);
}

TEST(PlainTrace, SkipsCommentsAndBlankLines) {
  const Trace t = parse_plain_trace("# header\n\nx\n  y  \n# mid\nx\r\n\n");
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.pages(), (std::vector<PageId>{PageId{0}, PageId{1}, PageId{0}}));
}

TEST(PlainTrace, EmptyInputIsAnError) {
  EXPECT_THROW(parse_plain_trace(""), ParseError);
  EXPECT_THROW(parse_plain_trace("# only a comment\n\n"), ParseError);
  try {
    parse_plain_trace("\n");
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("empty trace"), std::string::npos);
  }
}

TEST(PlainTrace, FixtureFile) {
  const Trace t = parse_plain_trace(read_fixture("plain_small.txt"));
  EXPECT_EQ(t.size(), 20u);
  EXPECT_EQ(t.universe_size(), 6u);
}

TEST(Fingerprint, EqualTracesAgreeAndEditsChangeIt) {
  EXPECT_EQ(trace_fingerprint(letters("abcab")), trace_fingerprint(letters("abcab")));
  EXPECT_NE(trace_fingerprint(letters("abcab")), trace_fingerprint(letters("abcba")));
  EXPECT_NE(trace_fingerprint(letters("ab")), trace_fingerprint(letters("aba")));
}

TEST(SetAssociative, DefaultGeometry) {
  const SetAssociativeConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.sets(), (std::uint64_t{1} << 21) >> 6 >> 4);
  EXPECT_EQ(cfg.sets(), 2048u);
}

TEST(SetAssociative, RejectsBadGeometry) {
  EXPECT_THROW((SetAssociativeConfig{3000, 64, 16}.validate()), std::invalid_argument);
  EXPECT_THROW((SetAssociativeConfig{4096, 48, 4}.validate()), std::invalid_argument);
  EXPECT_THROW((SetAssociativeConfig{4096, 64, 3}.validate()), std::invalid_argument);
  EXPECT_THROW((SetAssociativeConfig{4096, 64, 128}.validate()), std::invalid_argument);
}

TEST(AddressTrace, LineAddresses) {
  const auto sets = ingest_address_trace("0\n64\n", SetAssociativeConfig{});
  ASSERT_EQ(sets.size(), 2u);
  EXPECT_EQ(sets.at(0).page(1), PageId{0});
  EXPECT_EQ(sets.at(1).page(1), PageId{1});
}

TEST(AddressTrace, SameSetDifferentPages) {
  const auto sets = ingest_address_trace("0\n0x20000\n", SetAssociativeConfig{});
  ASSERT_EQ(sets.size(), 1u);
  const Trace& t = sets.at(0);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_NE(t.page(1), t.page(2));
  EXPECT_EQ(t.page(2), PageId{131072 / 64});
}

TEST(AddressTrace, BadAddressReportsLine) {
  try {
    ingest_address_trace("0x10\n12\nzz\n", SetAssociativeConfig{});
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(AddressTrace, FixtureMatchesMappingFormula) {
  const std::string text = read_fixture("addr_sample.txt");
  const SetAssociativeConfig cfg{1 << 16, 64, 8};  // 128 sets
  const auto sets = ingest_address_trace(text, cfg);

  std::map<std::uint64_t, std::vector<PageId>> expected;
  std::istringstream in(text);
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::uint64_t addr = std::stoull(line, nullptr, line.rfind("0x", 0) == 0 ? 16 : 10);
    const std::uint64_t line_addr = addr / 64;
    expected[line_addr % 128].push_back(PageId{line_addr});
    ++count;
  }
  std::size_t total = 0;
  ASSERT_EQ(sets.size(), expected.size());
  for (const auto& [set, pages] : expected) {
    ASSERT_TRUE(sets.contains(set));
    EXPECT_EQ(sets.at(set).pages(), pages) << "set " << set;
    total += sets.at(set).size();
  }
  EXPECT_EQ(total, count);
  EXPECT_EQ(ingest_address_trace(text, cfg), sets);
}

TEST(BrightKite, SmallUsersAreDropped) {
  const std::string text =
      "1\t2009-01-01T00:00:00Z\t0\t0\tA\n1\t2009-01-02T00:00:00Z\t0\t0\tB\n"
      "1\t2009-01-03T00:00:00Z\t0\t0\tC\n2\t2009-01-01T00:00:00Z\t0\t0\tA\n"
      "2\t2009-01-02T00:00:00Z\t0\t0\tA\n2\t2009-01-03T00:00:00Z\t0\t0\tD\n";
  EXPECT_TRUE(ingest_brightkite(text).empty());
}

TEST(BrightKite, UserWithEnoughDistinctLocations) {
  std::string text;
  for (int i = 0; i < 25; ++i) {
    text += "9\t2009-02-" + std::string(i < 9 ? "0" : "") + std::to_string(i + 1) +
            "T00:00:00Z\t1.0\t2.0\tloc" + std::to_string(i) + "\n";
  }
  const auto users = ingest_brightkite(text);
  ASSERT_EQ(users.size(), 1u);
  EXPECT_EQ(users[0].user, "9");
  EXPECT_EQ(users[0].trace.universe_size(), 25u);
}

TEST(BrightKite, OrdersCheckinsByTime) {
  const std::string text =
      "5\t2009-01-03T00:00:00Z\t0\t0\tC\n5\t2009-01-01T00:00:00Z\t0\t0\tA\n"
      "5\t2009-01-02T00:00:00Z\t0\t0\tB\n5\t2009-01-04T00:00:00Z\t0\t0\tA\n";
  const auto users = ingest_brightkite(text, BrightKiteOptions{1});
  ASSERT_EQ(users.size(), 1u);
  EXPECT_EQ(users[0].trace.pages(), intern({"A", "B", "C", "A"}));
}

TEST(BrightKite, MalformedLines) {
  try {
    ingest_brightkite("1\t2009\t0\t0\tA\n1\t2009\t0\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(ingest_brightkite("1\t2009-01-01T00:00:00Z\t0\t0\t\n"), ParseError);
}

TEST(BrightKite, FixtureMatchesGolden) {
  const auto users = ingest_brightkite(read_fixture("brightkite_sample.tsv"));
  std::istringstream golden(read_fixture("brightkite_golden.txt"));
  std::map<std::string, std::vector<std::string>> expected;
  std::string line;
  while (std::getline(golden, line)) {
    const auto tab = line.find('\t');
    std::istringstream words(line.substr(tab + 1));
    std::vector<std::string> seq;
    for (std::string w; words >> w;) seq.push_back(w);
    if (std::set<std::string>(seq.begin(), seq.end()).size() >= 20) {
      expected[line.substr(0, tab)] = seq;
    }
  }
  ASSERT_EQ(users.size(), expected.size());
  for (const auto& u : users) {
    ASSERT_TRUE(expected.contains(u.user)) << u.user;
    EXPECT_EQ(u.trace.pages(), intern(expected[u.user])) << "user " << u.user;
  }
  EXPECT_EQ(ingest_brightkite(read_fixture("brightkite_sample.tsv")).size(), users.size());
}

TEST(Citi, StartStationsInFileOrder) {
  const Trace t = ingest_citibike(
      "tripduration,start station id,end station id\n10,7,3\n11,7,4\n12,9,7\n");
  EXPECT_EQ(t.pages(), (std::vector<PageId>{PageId{7}, PageId{7}, PageId{9}}));
}

TEST(Citi, EmptyFileIsAnError) {
  EXPECT_THROW(ingest_citibike(""), ParseError);
  EXPECT_THROW(ingest_citibike("start station id\n"), ParseError);
}

TEST(Citi, MalformedRowReportsRow) {
  try {
    ingest_citibike("a,start station id\n1,2\n1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(ingest_citibike("a,b\n1,2\n"), ParseError);  // no station column
}

TEST(Citi, GoldenHundredRows) {
  const Trace t = ingest_citibike(read_fixture("citi_golden100.csv"));
  std::istringstream expected(read_fixture("citi_golden100_expected.txt"));
  std::vector<PageId> pages;
  for (std::uint64_t id; expected >> id;) pages.push_back(PageId{id});
  ASSERT_EQ(pages.size(), 100u);
  EXPECT_EQ(t.pages(), pages);
}

}  // namespace
}  // namespace guardcache
