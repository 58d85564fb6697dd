#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "soc/common.hpp"

// Corpus loaders. Individual malformed rows are skipped and counted, never
// fatal; a file where more than half the rows are malformed is rejected.

namespace soc {

enum class BinaryLabel { negative, positive, none };

struct LabeledExample {
    std::string text;
    BinaryLabel binary_label = BinaryLabel::none;
    std::optional<double> ternary_target;  // -1, 0 or +1
};

struct DatasetSummary {
    std::string source;
    std::map<std::string, std::size_t> class_counts;
    std::size_t accepted = 0;
    std::size_t dropped = 0;    // malformed rows plus deliberately excluded ones
    std::size_t malformed = 0;
};

struct LoadResult {
    std::vector<LabeledExample> examples;
    DatasetSummary summary;
};

namespace detail {

// RFC-4180 field splitting: quoted fields may contain commas, doubled
// quotes and newlines. Returns one record per call, or nullopt at EOF.
inline std::optional<std::vector<std::string>> read_csv_record(std::istream& in) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool any = false;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        const char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && field.empty()) {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            fields.push_back(std::move(field));
            return fields;
        } else {
            field.push_back(ch);
        }
    }
    if (!any) return std::nullopt;
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(std::move(field));
    return fields;
}

inline void enforce_malformed_ratio(const DatasetSummary& summary, std::size_t total,
                                    const std::string& path) {
    if (total > 0 && summary.malformed * 2 > total) {
        throw format_error(path + ": " + std::to_string(summary.malformed) + " of " +
                           std::to_string(total) + " rows malformed");
    }
}

}  // namespace detail

// Sentiment140 CSV: target,id,date,flag,user,text with target in {0,2,4}.
// 0 maps to negative, 4 to positive; 2 (objectivity) is dropped and counted,
// matching binary training on the two emotions.
inline LoadResult load_sentiment140(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read dataset: " + path);
    LoadResult result;
    result.summary.source = path;
    std::size_t total = 0;
    while (auto record = detail::read_csv_record(in)) {
        if (record->size() == 1 && (*record)[0].empty()) continue;  // blank line
        ++total;
        if (record->size() != 6) {
            ++result.summary.malformed;
            ++result.summary.dropped;
            continue;
        }
        const std::string& target = (*record)[0];
        const std::string& text = (*record)[5];
        LabeledExample ex;
        ex.text = text;
        if (target == "0") {
            ex.binary_label = BinaryLabel::negative;
            ex.ternary_target = -1.0;
            ++result.summary.class_counts["negative"];
        } else if (target == "4") {
            ex.binary_label = BinaryLabel::positive;
            ex.ternary_target = 1.0;
            ++result.summary.class_counts["positive"];
        } else if (target == "2") {
            ++result.summary.dropped;
            continue;
        } else {
            ++result.summary.malformed;
            ++result.summary.dropped;
            continue;
        }
        ++result.summary.accepted;
        result.examples.push_back(std::move(ex));
    }
    detail::enforce_malformed_ratio(result.summary, total, path);
    return result;
}

// "sentence<TAB>label" lines with label in {0, 1}.
inline LoadResult load_tsv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read dataset: " + path);
    LoadResult result;
    result.summary.source = path;
    std::string line;
    std::size_t total = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++total;
        const auto tab = line.rfind('\t');
        if (tab == std::string::npos) {
            ++result.summary.malformed;
            ++result.summary.dropped;
            continue;
        }
        const std::string label = line.substr(tab + 1);
        LabeledExample ex;
        ex.text = line.substr(0, tab);
        if (label == "1") {
            ex.binary_label = BinaryLabel::positive;
            ex.ternary_target = 1.0;
            ++result.summary.class_counts["positive"];
        } else if (label == "0") {
            ex.binary_label = BinaryLabel::negative;
            ex.ternary_target = -1.0;
            ++result.summary.class_counts["negative"];
        } else {
            ++result.summary.malformed;
            ++result.summary.dropped;
            continue;
        }
        ++result.summary.accepted;
        result.examples.push_back(std::move(ex));
    }
    detail::enforce_malformed_ratio(result.summary, total, path);
    return result;
}

struct AmazonFields {
    std::string stars = "overall";
    std::string text = "reviewText";
};

// Amazon reviews as JSON lines. Star ratings collapse to three buckets:
// 4-5 positive (+1), 3 neutral (0), 1-2 negative (-1).
inline LoadResult load_amazon(const std::string& path, const AmazonFields& fields = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read dataset: " + path);
    LoadResult result;
    result.summary.source = path;
    std::string line;
    std::size_t total = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++total;
        nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object() || !row.contains(fields.stars) ||
            !row.contains(fields.text) || !row[fields.stars].is_number() ||
            !row[fields.text].is_string()) {
            ++result.summary.malformed;
            ++result.summary.dropped;
            continue;
        }
        const double stars = row[fields.stars].get<double>();
        const double rounded = std::round(stars);
        if (std::abs(stars - rounded) > 1e-9 || rounded < 1.0 || rounded > 5.0) {
            ++result.summary.malformed;
            ++result.summary.dropped;
            continue;
        }
        LabeledExample ex;
        ex.text = row[fields.text].get<std::string>();
        if (rounded >= 4.0) {
            ex.ternary_target = 1.0;
            ex.binary_label = BinaryLabel::positive;
            ++result.summary.class_counts["positive"];
        } else if (rounded >= 3.0) {
            ex.ternary_target = 0.0;
            ex.binary_label = BinaryLabel::none;
            ++result.summary.class_counts["neutral"];
        } else {
            ex.ternary_target = -1.0;
            ex.binary_label = BinaryLabel::negative;
            ++result.summary.class_counts["negative"];
        }
        ++result.summary.accepted;
        result.examples.push_back(std::move(ex));
    }
    detail::enforce_malformed_ratio(result.summary, total, path);
    return result;
}

inline LoadResult load_dataset(const std::string& path, const std::string& format) {
    if (format == "s140") return load_sentiment140(path);
    if (format == "tsv") return load_tsv(path);
    if (format == "amazon") return load_amazon(path);
    throw input_error("unknown dataset format: " + format +
                      " (expected s140, tsv or amazon)");
}

}  // namespace soc
