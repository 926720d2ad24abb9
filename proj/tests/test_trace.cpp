#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "song/trace.hpp"

using namespace song;

namespace {

EventTrace make(std::vector<std::pair<std::int64_t, std::string>> ev, Horizon h) {
  std::vector<WriteEvent> out;
  std::uint64_t id = 0;
  for (auto& [t, u] : ev) out.push_back({t, u, id++});
  return EventTrace::from_unsorted(std::move(out), h);
}

/// Trace where user "u<i>" writes counts[i] times.
EventTrace with_counts(const std::vector<std::pair<std::string, int>>& counts) {
  std::vector<std::pair<std::int64_t, std::string>> ev;
  std::int64_t t = 0;
  for (const auto& [u, c] : counts) {
    for (int i = 0; i < c; ++i) ev.emplace_back(t++, u);
  }
  return make(ev, {0, t});
}

}  // namespace

TEST(Trace, LoadSortsRecords) {
  const auto tr = parse_trace("5,a,1\n1,b,2\n3,c,3\n");
  ASSERT_EQ(tr.size(), 3u);
  EXPECT_EQ(tr.events()[0].timestamp_ms, 1);
  EXPECT_EQ(tr.events()[1].timestamp_ms, 3);
  EXPECT_EQ(tr.events()[2].timestamp_ms, 5);
  EXPECT_EQ(tr.horizon(), (Horizon{1, 6}));
}

TEST(Trace, TiesOrderedByEventId) {
  const auto tr = parse_trace("7,a,9\n7,b,2\n7,c,5\n");
  EXPECT_EQ(tr.events()[0].event_id, 2u);
  EXPECT_EQ(tr.events()[1].event_id, 5u);
  EXPECT_EQ(tr.events()[2].event_id, 9u);
}

TEST(Trace, EmptyFile) {
  EXPECT_THROW(parse_trace(""), Error);
  const auto tr = parse_trace("", Horizon{0, 10});
  EXPECT_EQ(tr.size(), 0u);
  const auto with_header = parse_trace("#song-trace v1 start=0 end=100\n");
  EXPECT_TRUE(with_header.empty());
  EXPECT_EQ(with_header.horizon(), (Horizon{0, 100}));
}

TEST(Trace, DuplicateIdNamed) {
  try {
    parse_trace("1,a,17\n2,b,17\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("17"), std::string::npos);
  }
}

TEST(Trace, MalformedLineReportsLineNumber) {
  try {
    parse_trace("#song-trace v1 start=0 end=10\n1,a,1\nbad line\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_trace("x,a,1\n"), Error);
  EXPECT_THROW(parse_trace("99999999999999999999999,a,1\n"), Error);
  EXPECT_THROW(parse_trace("-5,a,1\n"), Error);
}

TEST(Trace, EventOutsideHeaderHorizonRejected) {
  EXPECT_THROW(parse_trace("#song-trace v1 start=0 end=10\n10,a,1\n"), Error);
}

TEST(Bin, SingleBin) {
  const auto tr = make({{0, "a"}, {1000, "a"}, {299000, "b"}}, {0, 300000});
  const auto s = bin(tr, 300000);
  EXPECT_EQ(s.counts, (std::vector<std::uint64_t>{3}));
}

TEST(Bin, BoundaryGoesToNextBin) {
  const auto tr = make({{0, "a"}, {300000, "b"}}, {0, 600000});
  EXPECT_EQ(bin(tr, 300000).counts, (std::vector<std::uint64_t>{1, 1}));
}

TEST(Bin, ConservationOnUniformEvents) {
  std::mt19937_64 g(1);
  std::uniform_int_distribution<std::int64_t> t(0, 3'600'000 - 1);
  std::vector<WriteEvent> ev;
  std::vector<std::uint64_t> expect(60, 0);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    ev.push_back({t(g), "u" + std::to_string(i % 37), i});
    ++expect[ev.back().timestamp_ms / 60000];
  }
  const auto tr = EventTrace::from_unsorted(ev, {0, 3'600'000});
  const auto s = bin(tr, 60000);
  EXPECT_EQ(s.size(), 60u);
  EXPECT_EQ(s.counts, expect);
  EXPECT_EQ(s.total(), 10000u);
  std::uint64_t per_user = 0;
  for (const auto& [u, c] : per_user_counts(tr)) per_user += c;
  EXPECT_EQ(per_user, 10000u);
}

TEST(Bin, RejectsNonPositiveWidth) {
  EXPECT_THROW(bin(make({{0, "a"}}, {0, 1}), 0), Error);
}

TEST(PerUser, Counts) {
  const auto tr = make({{0, "u1"}, {1, "u1"}, {2, "u2"}, {3, "u1"}}, {0, 4});
  const auto c = per_user_counts(tr);
  EXPECT_EQ(c.at("u1"), 3u);
  EXPECT_EQ(c.at("u2"), 1u);
}

TEST(Graph, Invariants) {
  SocialGraph g;
  EXPECT_TRUE(g.add_edge("a", "b"));
  EXPECT_FALSE(g.add_edge("a", "b"));
  EXPECT_THROW(g.add_edge("c", "c"), Error);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.follower_count("b"), 1u);
  EXPECT_EQ(g.follower_count("nobody"), 0u);
  EXPECT_TRUE(g.has_edge("a", "b"));
  EXPECT_FALSE(g.has_edge("b", "a"));
  EXPECT_THROW(parse_graph("#song-graph v1\na,b\na,b\n"), Error);
}

TEST(Spam, PaperExample) {
  // max writes 1000, median followers 8. spam: 900 writes, 2 followers.
  // broadcaster: 900 writes, 500 followers. once: 1 write.
  std::vector<std::pair<std::string, int>> counts{{"top", 1000}, {"spam", 900}, {"bcast", 900}, {"once", 1}};
  for (int i = 0; i < 7; ++i) counts.emplace_back("n" + std::to_string(i), 5);
  const auto tr = with_counts(counts);
  SocialGraph g;
  auto give = [&](const std::string& u, int n) {
    for (int i = 0; i < n; ++i) g.add_edge(u + "_f" + std::to_string(i), u);
  };
  give("top", 8);
  give("spam", 2);
  give("bcast", 500);
  give("once", 100);
  for (int i = 0; i < 7; ++i) give("n" + std::to_string(i), 8);
  const auto r = filter_spammers(tr, g);
  EXPECT_DOUBLE_EQ(r.thresholds.min_writes, 800.0);
  EXPECT_DOUBLE_EQ(r.thresholds.max_followers, 8.0);
  EXPECT_TRUE(r.removed.contains("spam"));
  EXPECT_TRUE(r.removed.contains("once"));
  EXPECT_FALSE(r.removed.contains("bcast"));
  EXPECT_FALSE(r.removed.contains("top"));
  for (const auto& [u, c] : per_user_counts(r.trace)) EXPECT_GT(c, 1u) << u;
}

TEST(Spam, IdempotentWithFrozenThresholds) {
  std::vector<std::pair<std::string, int>> counts{{"a", 100}, {"b", 95}, {"c", 3}, {"d", 1}, {"e", 2}};
  const auto tr = with_counts(counts);
  SocialGraph g;
  g.add_edge("x", "a");
  g.add_edge("y", "a");
  g.add_edge("x", "c");
  const auto first = filter_spammers(tr, g);
  const auto second = apply_spam_filter(first.trace, g, first.thresholds);
  EXPECT_TRUE(second.removed.empty());
  EXPECT_EQ(second.trace, first.trace);
}

TEST(Spam, MissingGraphUsersHaveZeroFollowers) {
  // a and b are absent from the graph; follower counts {0, 0, 2, 2, 2}
  // give a median of 2; a and b exceed 0.8 * 10 writes.
  const auto tr = with_counts({{"a", 10}, {"b", 10}, {"c", 2}, {"d", 2}, {"e", 2}});
  SocialGraph g;
  for (const char* u : {"c", "d", "e"}) {
    g.add_edge("x", u);
    g.add_edge("y", u);
  }
  const auto r = filter_spammers(tr, g);
  EXPECT_TRUE(r.removed.contains("a"));
  EXPECT_TRUE(r.removed.contains("b"));
  EXPECT_THROW(filter_spammers(EventTrace({}, {0, 1}), g), Error);
}

TEST(SaveLoad, RoundTrip) {
  const auto tr = make({{5, "alice"}, {9, "bob"}, {9, "carol"}}, {0, 20});
  EXPECT_EQ(parse_trace(format_trace(tr)), tr);
  const EventTrace empty({}, {100, 200});
  const auto text = format_trace(empty);
  EXPECT_EQ(text, "#song-trace v1 start=100 end=200\n");
  EXPECT_EQ(parse_trace(text), empty);
}

TEST(SaveLoad, MillionEventFixpoint) {
  std::mt19937_64 g(9);
  std::uniform_int_distribution<std::int64_t> t(0, 604'800'000 - 1);
  std::vector<WriteEvent> ev(1'000'000);
  for (std::uint64_t i = 0; i < ev.size(); ++i) ev[i] = {t(g), std::to_string(g() % 100000), i};
  const auto tr = EventTrace::from_unsorted(std::move(ev), {0, 604'800'000});
  const auto once = format_trace(tr);
  const auto back = parse_trace(once);
  EXPECT_EQ(back, tr);
  EXPECT_EQ(format_trace(back), once);
}

TEST(SaveLoad, GraphRoundTrip) {
  std::vector<oracle::Edge> edges{{"a", "b"}, {"c", "b"}, {"b", "a"}, {"d", "c"}};
  const auto g = oracle::graph_of(edges);
  const auto back = parse_graph(format_graph(g));
  EXPECT_EQ(back.edge_count(), 4u);
  for (const auto& [a, b] : edges) EXPECT_TRUE(back.has_edge(a, b));
}
