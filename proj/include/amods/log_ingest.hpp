/*
 * Copyright 2026 The AMODS Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
  Common Log Format ingestion.

  A CLF record looks like

    host ident authuser [date] "method target protocol" status bytes ["referer" "agent"]

  The pipeline is parse -> clean -> normalize -> dedupe -> character filter.
  Queries rejected by the character filter are kept on a side channel as
  malicious; they never reach feature extraction.
*/

#ifndef AMODS_LOG_INGEST_HPP
#define AMODS_LOG_INGEST_HPP

#include "amods/common.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace amods {

struct LogEntry {
    std::string source_ip;
    std::string timestamp;
    std::string method;
    std::string request_path;
    std::optional<std::string> query_raw;
    std::string protocol;
    int status = 0;
    long long body_size = 0;
    std::optional<std::string> referer;
    std::optional<std::string> user_agent;
};

struct RawQuery {
    std::string text;
    std::size_t source_line = 0;
    int day = 0;
};

struct NormalizedQuery {
    std::string text;
    std::optional<Label> label;
    std::optional<AttackClass> attack_class;
    int day = 0;

    friend bool operator==(const NormalizedQuery&, const NormalizedQuery&) = default;
};

namespace detail {

inline std::string_view next_token(std::string_view line, std::size_t& pos) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ') ++pos;
    return line.substr(start, pos - start);
}

// Reads a double-quoted field starting at pos (after skipping blanks).
// Backslash-escaped quotes inside the field are kept verbatim.
inline std::optional<std::string> quoted_field(std::string_view line, std::size_t& pos) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos >= line.size() || line[pos] != '"') return std::nullopt;
    std::size_t i = pos + 1;
    std::string out;
    while (i < line.size()) {
        if (line[i] == '\\' && i + 1 < line.size()) {
            out.push_back(line[i]);
            out.push_back(line[i + 1]);
            i += 2;
            continue;
        }
        if (line[i] == '"') {
            pos = i + 1;
            return out;
        }
        out.push_back(line[i++]);
    }
    return std::nullopt;
}

inline bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

inline int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace detail

inline LogEntry parse_clf_line(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);

    LogEntry e;
    std::size_t pos = 0;
    e.source_ip = std::string(detail::next_token(line, pos));
    auto ident = detail::next_token(line, pos);
    auto user = detail::next_token(line, pos);
    if (e.source_ip.empty() || ident.empty() || user.empty())
        throw ParseError("truncated CLF record");

    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos >= line.size() || line[pos] != '[') throw ParseError("missing [timestamp]");
    auto close = line.find(']', pos);
    if (close == std::string_view::npos) throw ParseError("unterminated [timestamp]");
    e.timestamp = std::string(line.substr(pos + 1, close - pos - 1));
    pos = close + 1;

    auto request = detail::quoted_field(line, pos);
    if (!request) throw ParseError("request field is not quoted");

    std::size_t rpos = 0;
    e.method = std::string(detail::next_token(*request, rpos));
    std::string target(detail::next_token(*request, rpos));
    e.protocol = std::string(detail::next_token(*request, rpos));
    if (e.method.empty() || target.empty()) throw ParseError("malformed request line");

    auto q = target.find('?');
    if (q == std::string::npos) {
        e.request_path = target;
    } else {
        e.request_path = target.substr(0, q);
        e.query_raw = target.substr(q + 1);
    }

    auto status = detail::next_token(line, pos);
    if (!detail::all_digits(status) || status.size() > 3) throw ParseError("non-numeric status");
    e.status = std::stoi(std::string(status));
    if (e.status < 100 || e.status > 599) throw ParseError("status out of range");

    auto bytes = detail::next_token(line, pos);
    if (bytes.empty() || bytes == "-") {
        e.body_size = 0;
    } else if (detail::all_digits(bytes)) {
        e.body_size = std::stoll(std::string(bytes));
    } else {
        throw ParseError("non-numeric byte count");
    }

    // Combined format extension.
    if (auto ref = detail::quoted_field(line, pos)) {
        if (*ref != "-") e.referer = std::move(*ref);
        if (auto ua = detail::quoted_field(line, pos); ua && *ua != "-") e.user_agent = std::move(*ua);
    }
    return e;
}

struct CleanOptions {
    std::set<std::string> static_extensions{"html", "htm", "css", "js",  "jpg", "jpeg", "png",
                                            "gif",  "ico", "txt", "wav", "pdf", "zip"};
};

inline std::string path_extension(std::string_view path) {
    auto slash = path.rfind('/');
    auto leaf = slash == std::string_view::npos ? path : path.substr(slash + 1);
    auto dot = leaf.rfind('.');
    if (dot == std::string_view::npos) return {};
    std::string ext(leaf.substr(dot + 1));
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

inline bool keep_entry(const LogEntry& e, const CleanOptions& opts = {}) {
    if (e.method != "GET") return false;
    if (e.status < 200 || e.status >= 300) return false;
    if (!e.query_raw || e.query_raw->empty()) return false;
    return !opts.static_extensions.contains(path_extension(e.request_path));
}

// entries[i] is assumed to come from line i + 1 unless line numbers are supplied.
inline std::vector<RawQuery> clean(const std::vector<LogEntry>& entries, int day = 0,
                                   const CleanOptions& opts = {},
                                   const std::vector<std::size_t>& line_numbers = {}) {
    std::vector<RawQuery> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!keep_entry(entries[i], opts)) continue;
        std::size_t line = line_numbers.empty() ? i + 1 : line_numbers[i];
        out.push_back(RawQuery{*entries[i].query_raw, line, day});
    }
    return out;
}

enum class NormalizeStatus {
    Ok,
    Dropped,   // shorter than four characters after normalization
    Malformed, // stray '%' or an encoding left over after the depth cap
};

struct NormalizeOutcome {
    NormalizeStatus status = NormalizeStatus::Ok;
    NormalizedQuery query;
};

inline constexpr int kMaxDecodeDepth = 3;
inline constexpr std::size_t kMinQueryLength = 4;

// One percent-decoding pass. Sets malformed when a '%' is not followed by two
// hex digits; such a '%' is copied through unchanged.
inline std::string percent_decode_once(std::string_view s, bool& malformed) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%') {
            int hi = i + 1 < s.size() ? detail::hex_value(s[i + 1]) : -1;
            int lo = i + 2 < s.size() ? detail::hex_value(s[i + 2]) : -1;
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                i += 2;
                continue;
            }
            malformed = true;
        }
        out.push_back(s[i]);
    }
    return out;
}

// Removes the backslash in front of any printable ASCII character, once.
inline std::string unescape_once(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            auto next = static_cast<unsigned char>(s[i + 1]);
            if (next >= 32 && next <= 126) {
                out.push_back(s[i + 1]);
                ++i;
                continue;
            }
        }
        out.push_back(s[i]);
    }
    return out;
}

inline bool has_valid_percent_escape(std::string_view s) {
    for (std::size_t i = 0; i + 2 < s.size(); ++i)
        if (s[i] == '%' && detail::hex_value(s[i + 1]) >= 0 && detail::hex_value(s[i + 2]) >= 0) return true;
    return false;
}

inline bool has_printable_escape(std::string_view s) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        auto next = static_cast<unsigned char>(s[i + 1]);
        if (s[i] == '\\' && next >= 32 && next <= 126) return true;
    }
    return false;
}

inline NormalizeOutcome normalize(const RawQuery& q) {
    bool malformed = false;
    std::string text = q.text;
    for (int depth = 0; depth < kMaxDecodeDepth; ++depth) {
        std::string next = percent_decode_once(text, malformed);
        if (next == text) break;
        text = std::move(next);
    }
    text = unescape_once(text);
    for (auto& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    // A second pass would still change the text: the encoding is deeper than
    // the cap allows, so the result is not a stable normal form.
    if (has_valid_percent_escape(text) || has_printable_escape(text)) malformed = true;

    NormalizeOutcome out;
    out.query.text = std::move(text);
    out.query.day = q.day;
    if (out.query.text.size() < kMinQueryLength)
        out.status = NormalizeStatus::Dropped;
    else if (malformed)
        out.status = NormalizeStatus::Malformed;
    return out;
}

// RFC 2616 unsafe characters: controls (0-31, 127-255), space, and " # % < >.
inline constexpr bool is_unsafe_char(unsigned char c) noexcept {
    return c <= 32 || c >= 127 || c == '"' || c == '#' || c == '%' || c == '<' || c == '>';
}

enum class FilterVerdict { Keep, FlagMalicious };

inline FilterVerdict char_filter(std::string_view text) noexcept {
    for (unsigned char c : text)
        if (is_unsafe_char(c)) return FilterVerdict::FlagMalicious;
    return FilterVerdict::Keep;
}

inline FilterVerdict char_filter(const NormalizedQuery& q) noexcept { return char_filter(q.text); }

inline std::vector<NormalizedQuery> dedupe(const std::vector<NormalizedQuery>& qs) {
    std::unordered_set<std::string_view> seen;
    std::vector<NormalizedQuery> out;
    for (const auto& q : qs)
        if (seen.insert(q.text).second) out.push_back(q);
    return out;
}

struct IngestStats {
    std::size_t lines = 0;
    std::size_t parse_errors = 0;
    std::size_t original_requests = 0;
    std::size_t cleaned = 0;
    std::size_t normalized = 0; // after length drop and dedupe
    std::size_t filtered = 0;   // survivors of the character filter
};

struct IngestResult {
    std::vector<NormalizedQuery> queries; // modeled set
    std::vector<NormalizedQuery> flagged; // character-filter side channel, labeled malicious
    IngestStats stats;
};

inline IngestResult ingest(std::istream& in, int day = 0, const CleanOptions& opts = {}) {
    IngestResult r;
    std::vector<LogEntry> entries;
    std::vector<std::size_t> lines;
    std::string line;
    while (std::getline(in, line)) {
        ++r.stats.lines;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            entries.push_back(parse_clf_line(line));
            lines.push_back(r.stats.lines);
        } catch (const ParseError&) {
            ++r.stats.parse_errors;
        }
    }
    r.stats.original_requests = entries.size();
    auto raw = clean(entries, day, opts, lines);
    r.stats.cleaned = raw.size();

    std::vector<NormalizedQuery> normalized;
    std::vector<bool> malformed;
    for (const auto& q : raw) {
        auto o = normalize(q);
        if (o.status == NormalizeStatus::Dropped) continue;
        normalized.push_back(std::move(o.query));
        malformed.push_back(o.status == NormalizeStatus::Malformed);
    }
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < normalized.size(); ++i) {
        auto& q = normalized[i];
        if (!seen.insert(q.text).second) continue;
        ++r.stats.normalized;
        if (malformed[i] || char_filter(q) == FilterVerdict::FlagMalicious) {
            q.label = Label::Malicious;
            r.flagged.push_back(std::move(q));
        } else {
            r.queries.push_back(std::move(q));
        }
    }
    r.stats.filtered = r.queries.size();
    return r;
}

} // namespace amods

#endif
