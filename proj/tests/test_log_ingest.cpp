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
#include "amods/log_ingest.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace amods {
namespace {

TEST(ParseClf, ExtractsQuery) {
    auto e = parse_clf_line(R"(1.2.3.4 - - [01/Jul/2016:00:00:00 +0800] "GET /index.php?postID=123 HTTP/1.1" 200 512)");
    EXPECT_EQ(e.method, "GET");
    EXPECT_EQ(e.request_path, "/index.php");
    ASSERT_TRUE(e.query_raw);
    EXPECT_EQ(*e.query_raw, "postID=123");
    EXPECT_EQ(e.status, 200);
    EXPECT_EQ(e.body_size, 512);
}

TEST(ParseClf, NoQueryString) {
    auto e = parse_clf_line(R"(1.2.3.4 - - [01/Jul/2016:00:00:00 +0800] "GET /a.jpg HTTP/1.1" 200 10)");
    EXPECT_FALSE(e.query_raw);
}

TEST(ParseClf, CombinedFormatFields) {
    auto e = parse_clf_line(
        R"x(5.6.7.8 - bob [01/Jul/2016:10:11:12 +0800] "GET /s?q=x HTTP/1.0" 304 - "http://ref/" "Mozilla/5.0 (X11)")x");
    EXPECT_EQ(e.status, 304);
    EXPECT_EQ(e.body_size, 0);
    EXPECT_EQ(e.referer, "http://ref/");
    EXPECT_EQ(e.user_agent, "Mozilla/5.0 (X11)");
}

TEST(ParseClf, GarbageThrows) {
    EXPECT_THROW(parse_clf_line("garbage line"), ParseError);
    EXPECT_THROW(parse_clf_line(R"(1.2.3.4 - - [x] "GET /a HTTP/1.1" abc 1)"), ParseError);
}

LogEntry entry(std::string method, std::string path, std::optional<std::string> q, int status) {
    LogEntry e;
    e.method = std::move(method);
    e.request_path = std::move(path);
    e.query_raw = std::move(q);
    e.status = status;
    return e;
}

TEST(Clean, KeepsSuccessfulDynamicGets) {
    std::vector<LogEntry> es{entry("GET", "/index.php", "postID=123", 200), entry("GET", "/index.php", "a=1", 404),
                             entry("GET", "/x.html", "a=1", 200), entry("POST", "/index.php", "a=1", 200),
                             entry("GET", "/index.php", std::nullopt, 200), entry("GET", "/A.JPG", "v=2", 200)};
    auto out = clean(es, 3);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].text, "postID=123");
    EXPECT_EQ(out[0].source_line, 1u);
    EXPECT_EQ(out[0].day, 3);
}

NormalizeOutcome norm(const std::string& s) { return normalize(RawQuery{s, 1, 0}); }

TEST(Normalize, DecodesAndLowercases) {
    auto o = norm("PostID=%31%32%33");
    EXPECT_EQ(o.status, NormalizeStatus::Ok);
    EXPECT_EQ(o.query.text, "postid=123");
}

TEST(Normalize, DropsShortQueries) {
    EXPECT_EQ(norm("a=1").status, NormalizeStatus::Dropped);
    // %2531 -> %31 -> 1
    auto o = norm("A=%2531");
    EXPECT_EQ(o.query.text, "a=1");
    EXPECT_EQ(o.status, NormalizeStatus::Dropped);
}

TEST(Normalize, StripsBackslashEscapesOnce) {
    EXPECT_EQ(norm(R"(q=\'or\'1)").query.text, "q='or'1");
}

TEST(Normalize, DeepEncodingIsMalformed) {
    // Four layers of encoding: one more than the decode cap.
    auto o = norm("q=%25252531");
    EXPECT_EQ(o.status, NormalizeStatus::Malformed);
    EXPECT_EQ(norm("q=%zz%41").status, NormalizeStatus::Malformed);
}

TEST(Normalize, IsIdempotentOnAcceptedText) {
    for (std::string s : {"PostID=%31%32%33", "q=%2527union%2527", R"(x=\%41bc)", "Search=Hello+World", "id=%252e%252e%252f"}) {
        auto once = norm(s);
        if (once.status != NormalizeStatus::Ok) continue;
        auto twice = norm(once.query.text);
        EXPECT_EQ(twice.status, NormalizeStatus::Ok) << s;
        EXPECT_EQ(twice.query.text, once.query.text) << s;
    }
}

TEST(CharFilter, Verdicts) {
    EXPECT_EQ(char_filter("postid=123"), FilterVerdict::Keep);
    EXPECT_EQ(char_filter("postid=<script>"), FilterVerdict::FlagMalicious);
    EXPECT_EQ(char_filter(std::string("ab\0cd", 5)), FilterVerdict::FlagMalicious);
    EXPECT_EQ(char_filter("a b=1"), FilterVerdict::FlagMalicious);
    EXPECT_EQ(char_filter("q=\x7f"), FilterVerdict::FlagMalicious);
}

TEST(CharFilter, UnsafeSetMatchesDefinition) {
    for (int c = 0; c < 256; ++c) {
        const bool expected = c < 33 || c > 126 || std::string_view("\"#%<>").find(static_cast<char>(c)) != std::string_view::npos;
        EXPECT_EQ(is_unsafe_char(static_cast<unsigned char>(c)), expected) << c;
    }
}

std::vector<NormalizedQuery> qs(std::initializer_list<const char*> texts) {
    std::vector<NormalizedQuery> v;
    for (auto t : texts) v.push_back({t, std::nullopt, std::nullopt, 0});
    return v;
}

TEST(Dedupe, KeepsFirstOccurrence) {
    EXPECT_EQ(dedupe(qs({"a=bc", "a=bc", "x=yz"})), qs({"a=bc", "x=yz"}));
    EXPECT_TRUE(dedupe({}).empty());
    EXPECT_EQ(dedupe(qs({"c=11", "a=11", "b=11"})), qs({"c=11", "a=11", "b=11"}));
}

TEST(Ingest, EndToEndCounts) {
    std::istringstream log(
        R"(1.1.1.1 - - [01/Jul/2016:00:00:00 +0800] "GET /index.php?postID=123 HTTP/1.1" 200 5
1.1.1.1 - - [01/Jul/2016:00:00:01 +0800] "GET /index.php?postid=%31%32%33 HTTP/1.1" 200 5
not a log line
1.1.1.1 - - [01/Jul/2016:00:00:02 +0800] "GET /index.php?q=%3Cscript%3E HTTP/1.1" 200 5
1.1.1.1 - - [01/Jul/2016:00:00:03 +0800] "GET /style.css?v=1234 HTTP/1.1" 200 5
1.1.1.1 - - [01/Jul/2016:00:00:04 +0800] "GET /index.php?a=1 HTTP/1.1" 200 5
)");
    auto r = ingest(log, 2);
    EXPECT_EQ(r.stats.lines, 6u);
    EXPECT_EQ(r.stats.parse_errors, 1u);
    EXPECT_EQ(r.stats.original_requests, 5u);
    EXPECT_EQ(r.stats.cleaned, 4u);
    EXPECT_EQ(r.stats.normalized, 2u);
    ASSERT_EQ(r.queries.size(), 1u);
    EXPECT_EQ(r.queries[0].text, "postid=123");
    EXPECT_EQ(r.queries[0].day, 2);
    ASSERT_EQ(r.flagged.size(), 1u);
    EXPECT_EQ(r.flagged[0].text, "q=<script>");
    EXPECT_EQ(r.flagged[0].label, Label::Malicious);
}

} // namespace
} // namespace amods
