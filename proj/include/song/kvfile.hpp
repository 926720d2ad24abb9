#pragma once

// Sectioned key-value text documents.
//
//   #song-model v1
//   [section]
//   key = value
//   key = repeated value
//
// Lines starting with '#' after the first line are comments. Keys may
// repeat; order is preserved.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "song/core.hpp"

namespace song::kv {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Shortest decimal representation that round-trips.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw Error("invalid number for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

template <typename Int>
Int parse_int(std::string_view s, std::string_view what) {
  s = trim(s);
  Int v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec == std::errc::result_out_of_range) {
    throw Error("value out of range for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw Error("invalid integer for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

/// Split on a delimiter without trimming.
inline std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = s.find(delim, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

struct Section {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;

  void set(std::string key, std::string value) { entries.emplace_back(std::move(key), std::move(value)); }

  [[nodiscard]] std::optional<std::string> get(std::string_view key) const {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
      if (it->first == key) return it->second;
    }
    return std::nullopt;
  }

  [[nodiscard]] std::vector<std::string> get_all(std::string_view key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries) {
      if (k == key) out.push_back(v);
    }
    return out;
  }
};

class Document {
 public:
  explicit Document(std::string header = {}) : header_(std::move(header)) {}

  [[nodiscard]] const std::string& header() const { return header_; }

  Section& section(std::string_view name) {
    for (auto& s : sections_) {
      if (s.name == name) return s;
    }
    sections_.push_back(Section{std::string(name), {}});
    return sections_.back();
  }

  [[nodiscard]] const Section* find(std::string_view name) const {
    for (const auto& s : sections_) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  [[nodiscard]] std::optional<std::string> get(std::string_view section, std::string_view key) const {
    const auto* s = find(section);
    return s ? s->get(key) : std::nullopt;
  }

  [[nodiscard]] std::string require(std::string_view section, std::string_view key) const {
    auto v = get(section, key);
    if (!v) throw Error("missing key '" + std::string(key) + "' in section [" + std::string(section) + "]");
    return *v;
  }

  [[nodiscard]] const std::vector<Section>& sections() const { return sections_; }

  [[nodiscard]] std::string str() const {
    std::ostringstream os;
    if (!header_.empty()) os << header_ << '\n';
    for (const auto& s : sections_) {
      os << '[' << s.name << "]\n";
      for (const auto& [k, v] : s.entries) os << k << " = " << v << '\n';
    }
    return os.str();
  }

  static Document parse(std::string_view text) {
    Document doc;
    Section* current = nullptr;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      const auto line = trim(raw);
      if (line_no == 1 && line.starts_with("#song-")) {
        doc.header_ = std::string(line);
        continue;
      }
      if (line.empty() || line.front() == '#') continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw Error("line " + std::to_string(line_no) + ": unterminated section header");
        current = &doc.section(trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw Error("line " + std::to_string(line_no) + ": expected 'key = value'");
      }
      if (current == nullptr) current = &doc.section("");
      current->set(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
    }
    return doc;
  }

 private:
  std::string header_;
  std::vector<Section> sections_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed for '" + path + "'");
}

/// Parse a header like "#song-model v1" and check its kind.
inline void expect_header(const Document& doc, std::string_view kind) {
  const std::string want = "#song-" + std::string(kind) + " v1";
  if (doc.header() != want) {
    throw Error("expected header '" + want + "', found '" + doc.header() + "'");
  }
}

}  // namespace song::kv
