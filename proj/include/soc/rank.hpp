#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "soc/common.hpp"

// Time-windowed comment counting, score weighting and adjusted-score token
// ranking. A token's weight is its window comment count divided by the
// largest count over all tokens in the store; its adjusted score is the mean
// per-comment score scaled by that weight.

namespace soc {

// Calendar day in UTC.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    static bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

    static int days_in_month(int y, int m) {
        static constexpr int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        if (m == 2 && leap(y)) return 29;
        return lengths[m - 1];
    }

    bool valid() const {
        return month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(year, month);
    }

    // "YYYY-MM-DD"
    static Date parse(const std::string& text) {
        Date d;
        if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
            throw input_error("bad date (expected YYYY-MM-DD): " + text);
        }
        auto field = [&](std::size_t pos, std::size_t len, int& out) {
            auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
            if (ec != std::errc{} || ptr != text.data() + pos + len) {
                throw input_error("bad date (expected YYYY-MM-DD): " + text);
            }
        };
        field(0, 4, d.year);
        field(5, 2, d.month);
        field(8, 2, d.day);
        if (!d.valid()) throw input_error("invalid calendar date: " + text);
        return d;
    }

    std::string to_string() const {
        std::ostringstream out;
        out << std::setfill('0') << std::setw(4) << year << '-' << std::setw(2) << month
            << '-' << std::setw(2) << day;
        return out.str();
    }

    auto operator<=>(const Date&) const = default;
};

struct CommentRecord {
    std::string token;
    Date day;
    std::string text;
    std::optional<double> score;  // in [-1, 1] when present
};

// Inclusive day range.
struct Window {
    Date start;
    Date end;

    Window(Date s, Date e) : start(s), end(e) {
        if (end < start) throw input_error("window end precedes start");
    }

    bool contains(const Date& d) const { return start <= d && d <= end; }
};

struct RankEntry {
    std::string token;
    std::size_t comment_count = 0;  // M_x
    double weight = 0.0;            // W_x in [0, 1]
    double score_orig = 0.0;
    double score_adj = 0.0;
};

// JSON lines, one record each: {"token": ..., "date": "YYYY-MM-DD",
// "text": ..., "score": optional}.
inline std::vector<CommentRecord> load_comment_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read comment store: " + path);
    std::vector<CommentRecord> store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object() || !row.contains("token") ||
            !row.contains("date") || !row.contains("text") ||
            !row["token"].is_string() || !row["date"].is_string() ||
            !row["text"].is_string()) {
            throw format_error(path + " line " + std::to_string(lineno) +
                               ": bad comment record");
        }
        CommentRecord rec;
        rec.token = row["token"].get<std::string>();
        rec.day = Date::parse(row["date"].get<std::string>());
        rec.text = row["text"].get<std::string>();
        if (row.contains("score")) {
            if (!row["score"].is_number()) {
                throw format_error(path + " line " + std::to_string(lineno) +
                                   ": score is not a number");
            }
            const double s = row["score"].get<double>();
            if (!(s >= -1.0 && s <= 1.0)) {
                throw format_error(path + " line " + std::to_string(lineno) +
                                   ": score outside [-1, 1]");
            }
            rec.score = s;
        }
        store.push_back(std::move(rec));
    }
    return store;
}

// M_x per token: number of records inside the window. Every token present
// anywhere in the store appears in the result, with 0 when it has no
// comments in the window.
inline std::map<std::string, std::size_t> window_counts(
    const std::vector<CommentRecord>& store, const Window& window) {
    std::map<std::string, std::size_t> counts;
    for (const auto& rec : store) counts.emplace(rec.token, 0);
    for (const auto& rec : store) {
        if (window.contains(rec.day)) ++counts[rec.token];
    }
    return counts;
}

// W_x = M_x / max_k M_k. All-zero counts degenerate to all-zero weights.
inline std::map<std::string, double> score_weights(
    const std::map<std::string, std::size_t>& counts) {
    if (counts.empty()) throw input_error("score_weights: empty count map");
    std::size_t max_count = 0;
    for (const auto& [token, count] : counts) max_count = std::max(max_count, count);
    std::map<std::string, double> weights;
    for (const auto& [token, count] : counts) {
        weights[token] = max_count == 0
                             ? 0.0
                             : static_cast<double>(count) / static_cast<double>(max_count);
    }
    return weights;
}

using CommentScorer = std::function<double(const CommentRecord&)>;

// Uses the stored score when present, otherwise the supplied model scorer.
inline CommentScorer stored_or(CommentScorer fallback) {
    return [fallback = std::move(fallback)](const CommentRecord& rec) -> double {
        if (rec.score) return *rec.score;
        if (!fallback) {
            throw input_error("no score for comment on token " + rec.token + " at " +
                              rec.day.to_string() + " and no model configured");
        }
        return fallback(rec);
    };
}

// Adjusted-score ranking over the window: score_orig is the mean per-comment
// score (0 with no comments), score_adj = score_orig * W_x. Sorted by
// adjusted score descending, ties by token ascending.
inline std::vector<RankEntry> rank_tokens(const std::vector<CommentRecord>& store,
                                          const Window& window,
                                          const CommentScorer& scorer) {
    auto counts = window_counts(store, window);
    if (counts.empty()) return {};
    auto weights = score_weights(counts);

    std::map<std::string, double> score_sums;
    for (const auto& [token, count] : counts) score_sums.emplace(token, 0.0);
    for (const auto& rec : store) {
        if (!window.contains(rec.day)) continue;
        double s;
        if (rec.score) {
            s = *rec.score;
        } else if (scorer) {
            s = scorer(rec);
        } else {
            throw input_error("no score for comment on token " + rec.token + " at " +
                              rec.day.to_string() + " and no scorer supplied");
        }
        if (!std::isfinite(s)) {
            throw numeric_error("scorer returned non-finite score for token " + rec.token +
                                " at " + rec.day.to_string());
        }
        score_sums[rec.token] += s;
    }

    std::vector<RankEntry> entries;
    entries.reserve(counts.size());
    for (const auto& [token, count] : counts) {
        RankEntry e;
        e.token = token;
        e.comment_count = count;
        e.weight = weights[token];
        e.score_orig = count == 0 ? 0.0 : score_sums[token] / static_cast<double>(count);
        e.score_adj = e.score_orig * e.weight;
        entries.push_back(std::move(e));
    }
    std::sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) {
        if (a.score_adj != b.score_adj) return a.score_adj > b.score_adj;
        return a.token < b.token;
    });
    return entries;
}

inline std::string rank_to_csv(const std::vector<RankEntry>& entries) {
    std::ostringstream out;
    out << "rank,token,M,W,score_orig,score_adj\n";
    out << std::setprecision(10);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const RankEntry& e = entries[i];
        out << (i + 1) << ',' << e.token << ',' << e.comment_count << ',' << e.weight << ','
            << e.score_orig << ',' << e.score_adj << '\n';
    }
    return out.str();
}

}  // namespace soc
