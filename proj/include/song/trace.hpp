#pragma once

// Write traces, follower graphs, binned count series and the trace
// cleaning rules.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "song/core.hpp"
#include "song/kvfile.hpp"
#include "song/stats.hpp"

namespace song {

using UserId = std::string;

struct WriteEvent {
  std::int64_t timestamp_ms = 0;
  UserId user;
  std::uint64_t event_id = 0;

  friend bool operator==(const WriteEvent&, const WriteEvent&) = default;
};

/// Half-open time window [start_ms, end_ms).
struct Horizon {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;

  [[nodiscard]] std::int64_t duration_ms() const { return end_ms - start_ms; }
  [[nodiscard]] bool contains(std::int64_t t) const { return t >= start_ms && t < end_ms; }
  friend bool operator==(const Horizon&, const Horizon&) = default;
};

/// An ordered, immutable list of write events.
///
/// Invariants: events sorted by timestamp (ties by event id), all inside
/// the horizon, event ids unique.
class EventTrace {
 public:
  EventTrace() = default;

  /// Validates the invariants; throws song::Error on violation.
  EventTrace(std::vector<WriteEvent> events, Horizon horizon)
      : events_(std::move(events)), horizon_(horizon) {
    if (horizon_.end_ms < horizon_.start_ms) throw Error("trace horizon ends before it starts");
    std::unordered_set<std::uint64_t> ids;
    ids.reserve(events_.size());
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const auto& e = events_[i];
      if (e.timestamp_ms < 0) throw Error("negative timestamp for event " + std::to_string(e.event_id));
      if (!horizon_.contains(e.timestamp_ms)) {
        throw Error("event " + std::to_string(e.event_id) + " at " + std::to_string(e.timestamp_ms) +
                    " ms lies outside the trace horizon");
      }
      if (i > 0 && e.timestamp_ms < events_[i - 1].timestamp_ms) throw Error("trace events are not sorted");
      if (!ids.insert(e.event_id).second) throw Error("duplicate event id " + std::to_string(e.event_id));
    }
  }

  /// Sorts by (timestamp, event id) before validating.
  static EventTrace from_unsorted(std::vector<WriteEvent> events, Horizon horizon) {
    std::sort(events.begin(), events.end(), [](const WriteEvent& a, const WriteEvent& b) {
      return a.timestamp_ms != b.timestamp_ms ? a.timestamp_ms < b.timestamp_ms : a.event_id < b.event_id;
    });
    return EventTrace(std::move(events), horizon);
  }

  [[nodiscard]] std::span<const WriteEvent> events() const { return events_; }
  [[nodiscard]] const Horizon& horizon() const { return horizon_; }
  [[nodiscard]] std::size_t size() const { return events_.size(); }
  [[nodiscard]] bool empty() const { return events_.empty(); }

  friend bool operator==(const EventTrace&, const EventTrace&) = default;

 private:
  std::vector<WriteEvent> events_;
  Horizon horizon_;
};

/// Directed follower graph. An edge (follower, followee) means `follower`
/// receives the updates of `followee`.
class SocialGraph {
 public:
  /// Returns false if the edge already exists. Self-loops throw.
  bool add_edge(const UserId& follower, const UserId& followee) {
    if (follower == followee) throw Error("self-loop on user '" + follower + "'");
    const auto a = add_node(follower);
    const auto b = add_node(followee);
    if (!edges_.insert(pack(a, b)).second) return false;
    followees_[a].push_back(b);
    followers_[b].push_back(a);
    return true;
  }

  std::uint32_t add_node(const UserId& u) {
    const auto [it, inserted] = index_.try_emplace(u, static_cast<std::uint32_t>(names_.size()));
    if (inserted) {
      names_.push_back(u);
      followers_.emplace_back();
      followees_.emplace_back();
    }
    return it->second;
  }

  [[nodiscard]] std::optional<std::uint32_t> index_of(const UserId& u) const {
    const auto it = index_.find(u);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] const UserId& name(std::uint32_t idx) const { return names_.at(idx); }
  [[nodiscard]] std::size_t node_count() const { return names_.size(); }
  [[nodiscard]] std::size_t edge_count() const { return edges_.size(); }

  [[nodiscard]] std::span<const std::uint32_t> followers(std::uint32_t idx) const { return followers_.at(idx); }
  [[nodiscard]] std::span<const std::uint32_t> followees(std::uint32_t idx) const { return followees_.at(idx); }

  /// Users absent from the graph have no followers.
  [[nodiscard]] std::size_t follower_count(const UserId& u) const {
    const auto idx = index_of(u);
    return idx ? followers_[*idx].size() : 0;
  }

  [[nodiscard]] bool has_edge(const UserId& follower, const UserId& followee) const {
    const auto a = index_of(follower);
    const auto b = index_of(followee);
    return a && b && edges_.contains(pack(*a, *b));
  }

 private:
  static std::uint64_t pack(std::uint32_t a, std::uint32_t b) { return (std::uint64_t{a} << 32) | b; }

  std::unordered_map<UserId, std::uint32_t> index_;
  std::vector<UserId> names_;
  std::vector<std::vector<std::uint32_t>> followers_;
  std::vector<std::vector<std::uint32_t>> followees_;
  std::unordered_set<std::uint64_t> edges_;
};

/// Event counts in consecutive bins [origin + k*w, origin + (k+1)*w).
struct BinnedSeries {
  std::int64_t bin_width_ms = 0;
  std::int64_t origin_ms = 0;
  std::vector<std::uint64_t> counts;

  [[nodiscard]] std::size_t size() const { return counts.size(); }
  [[nodiscard]] double bin_width_s() const { return static_cast<double>(bin_width_ms) / 1000.0; }
  [[nodiscard]] std::int64_t bin_start_ms(std::size_t k) const {
    return origin_ms + static_cast<std::int64_t>(k) * bin_width_ms;
  }
  [[nodiscard]] std::uint64_t total() const {
    std::uint64_t s = 0;
    for (const auto c : counts) s += c;
    return s;
  }
  [[nodiscard]] std::vector<double> values() const { return {counts.begin(), counts.end()}; }

  friend bool operator==(const BinnedSeries&, const BinnedSeries&) = default;
};

/// Bins cover the trace horizon; the last bin may extend past its end.
inline BinnedSeries bin(const EventTrace& trace, std::int64_t bin_width_ms) {
  if (bin_width_ms <= 0) throw Error("bin width must be positive");
  const auto& h = trace.horizon();
  const auto n = static_cast<std::size_t>((h.duration_ms() + bin_width_ms - 1) / bin_width_ms);
  BinnedSeries out{bin_width_ms, h.start_ms, std::vector<std::uint64_t>(n, 0)};
  for (const auto& e : trace.events()) {
    ++out.counts[static_cast<std::size_t>((e.timestamp_ms - h.start_ms) / bin_width_ms)];
  }
  return out;
}

/// Write count per user; ordered by user id.
inline std::map<UserId, std::uint64_t> per_user_counts(const EventTrace& trace) {
  std::unordered_map<UserId, std::uint64_t> counts;
  for (const auto& e : trace.events()) ++counts[e.user];
  return {counts.begin(), counts.end()};
}

// ---------------------------------------------------------------------------
// Cleaning

struct SpamThresholds {
  /// Users with strictly more writes than this ...
  double min_writes = 0.0;
  /// ... and strictly fewer followers than this are spammers.
  double max_followers = 0.0;
};

/// Thresholds over the users present in the trace: max_frac of the largest
/// per-user write count, and the follower_quantile quantile of their
/// follower counts.
inline SpamThresholds compute_spam_thresholds(const EventTrace& trace, const SocialGraph& graph,
                                              double max_frac = 0.8, double follower_quantile = 0.5) {
  if (!(max_frac > 0.0 && max_frac <= 1.0)) throw Error("max_frac must lie in (0, 1]");
  if (!(follower_quantile > 0.0 && follower_quantile < 1.0)) throw Error("follower_quantile must lie in (0, 1)");
  if (trace.empty()) throw Error("cannot filter an empty trace");
  const auto counts = per_user_counts(trace);
  std::uint64_t max_count = 0;
  std::vector<double> followers;
  followers.reserve(counts.size());
  for (const auto& [user, c] : counts) {
    max_count = std::max(max_count, c);
    followers.push_back(static_cast<double>(graph.follower_count(user)));
  }
  return {max_frac * static_cast<double>(max_count), stats::quantile(std::move(followers), follower_quantile)};
}

struct FilterResult {
  EventTrace trace;
  std::set<UserId> removed;
  SpamThresholds thresholds;
};

/// Removes spammers (high write count, few followers) and users that
/// write exactly once. Thresholds are applied as given.
inline FilterResult apply_spam_filter(const EventTrace& trace, const SocialGraph& graph,
                                      const SpamThresholds& th) {
  std::set<UserId> removed;
  for (const auto& [user, c] : per_user_counts(trace)) {
    const auto followers = static_cast<double>(graph.follower_count(user));
    const bool spammer = static_cast<double>(c) > th.min_writes && followers < th.max_followers;
    if (spammer || c == 1) removed.insert(user);
  }
  std::vector<WriteEvent> kept;
  kept.reserve(trace.size());
  for (const auto& e : trace.events()) {
    if (!removed.contains(e.user)) kept.push_back(e);
  }
  return {EventTrace(std::move(kept), trace.horizon()), std::move(removed), th};
}

inline FilterResult filter_spammers(const EventTrace& trace, const SocialGraph& graph, double max_frac = 0.8,
                                    double follower_quantile = 0.5) {
  return apply_spam_filter(trace, graph, compute_spam_thresholds(trace, graph, max_frac, follower_quantile));
}

// ---------------------------------------------------------------------------
// File formats

namespace detail {

inline std::int64_t header_field(std::string_view header, std::string_view key) {
  const std::string tag = std::string(key) + "=";
  const auto pos = header.find(tag);
  if (pos == std::string_view::npos) throw Error("trace header lacks '" + std::string(key) + "'");
  auto rest = header.substr(pos + tag.size());
  rest = rest.substr(0, rest.find(' '));
  return kv::parse_int<std::int64_t>(rest, key);
}

inline void check_user_id(const UserId& u) {
  if (u.empty() || u.find_first_of(",\n\r") != UserId::npos) {
    throw Error("user id '" + u + "' is empty or contains a delimiter");
  }
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line_no, line);
  }
}

}  // namespace detail

/// Parses `#song-trace v1 start=<ms> end=<ms>` followed by
/// `timestamp_ms,user_id,event_id` records. Without a header the horizon
/// is taken from `horizon`, or inferred as [min, max + 1) of the records.
inline EventTrace parse_trace(std::string_view text, std::optional<Horizon> horizon = std::nullopt) {
  std::vector<WriteEvent> events;
  std::optional<Horizon> header_horizon;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    if (line.front() == '#') {
      if (line_no == 1 && line.starts_with("#song-trace")) {
        if (!line.starts_with("#song-trace v1")) throw Error("unsupported trace version: " + std::string(line));
        header_horizon = Horizon{detail::header_field(line, "start"), detail::header_field(line, "end")};
      }
      return;
    }
    const auto fields = kv::split(line, ',');
    if (fields.size() != 3 || fields[1].empty()) {
      throw Error("line " + std::to_string(line_no) + ": malformed record '" + std::string(line) + "'");
    }
    try {
      events.push_back(WriteEvent{kv::parse_int<std::int64_t>(fields[0], "timestamp_ms"), std::string(fields[1]),
                                  kv::parse_int<std::uint64_t>(fields[2], "event_id")});
    } catch (const Error& e) {
      throw Error("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (events.back().timestamp_ms < 0) throw Error("line " + std::to_string(line_no) + ": negative timestamp");
  });
  if (!horizon) horizon = header_horizon;
  if (!horizon) {
    if (events.empty()) throw Error("empty trace without a horizon");
    const auto [lo, hi] = std::minmax_element(events.begin(), events.end(), [](const auto& a, const auto& b) {
      return a.timestamp_ms < b.timestamp_ms;
    });
    horizon = Horizon{lo->timestamp_ms, hi->timestamp_ms + 1};
  }
  return EventTrace::from_unsorted(std::move(events), *horizon);
}

inline EventTrace load_trace(const std::string& path, std::optional<Horizon> horizon = std::nullopt) {
  try {
    return parse_trace(kv::read_file(path), horizon);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline std::string format_trace(const EventTrace& trace) {
  std::string out = "#song-trace v1 start=" + std::to_string(trace.horizon().start_ms) +
                    " end=" + std::to_string(trace.horizon().end_ms) + "\n";
  out.reserve(out.size() + trace.size() * 32);
  char buf[24];
  for (const auto& e : trace.events()) {
    detail::check_user_id(e.user);
    out.append(buf, std::to_chars(buf, buf + sizeof buf, e.timestamp_ms).ptr);
    out.push_back(',');
    out.append(e.user);
    out.push_back(',');
    out.append(buf, std::to_chars(buf, buf + sizeof buf, e.event_id).ptr);
    out.push_back('\n');
  }
  return out;
}

inline void save_trace(const EventTrace& trace, const std::string& path) { kv::write_file(path, format_trace(trace)); }

/// `#song-graph v1` followed by `follower_id,followee_id` lines.
inline SocialGraph parse_graph(std::string_view text) {
  SocialGraph g;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.empty() || line.front() == '#') return;
    const auto fields = kv::split(line, ',');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw Error("line " + std::to_string(line_no) + ": malformed edge '" + std::string(line) + "'");
    }
    try {
      if (!g.add_edge(std::string(fields[0]), std::string(fields[1]))) {
        throw Error("duplicate edge " + std::string(line));
      }
    } catch (const Error& e) {
      throw Error("line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return g;
}

inline SocialGraph load_graph(const std::string& path) {
  try {
    return parse_graph(kv::read_file(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline std::string format_graph(const SocialGraph& g) {
  std::string out = "#song-graph v1\n";
  for (std::uint32_t followee = 0; followee < g.node_count(); ++followee) {
    for (const auto follower : g.followers(followee)) {
      out += g.name(follower);
      out += ',';
      out += g.name(followee);
      out += '\n';
    }
  }
  return out;
}

inline void save_graph(const SocialGraph& g, const std::string& path) { kv::write_file(path, format_graph(g)); }

}  // namespace song
