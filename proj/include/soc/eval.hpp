#pragma once

#include <array>
#include <cstddef>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "soc/common.hpp"

// Score bucketing and the metrics the result tables are built from.

namespace soc {

enum class SentimentClass { negative = 0, neutral = 1, positive = 2 };

inline const char* class_name(SentimentClass c) {
    switch (c) {
        case SentimentClass::negative: return "negative";
        case SentimentClass::neutral: return "neutral";
        case SentimentClass::positive: return "positive";
    }
    return "?";
}

// Continuous score to three-way class: positive (0.33, 1], neutral
// [-0.33, 0.33], negative [-1, -0.33). Both boundaries belong to neutral.
inline SentimentClass bucketize(double score) {
    if (!(score >= -1.0 && score <= 1.0)) {
        throw input_error("bucketize: score outside [-1, 1]");
    }
    if (score > 0.33) return SentimentClass::positive;
    if (score < -0.33) return SentimentClass::negative;
    return SentimentClass::neutral;
}

// Two-way decision for a tanh score. 0.0 counts as positive; fixed so ties
// are deterministic.
inline SentimentClass binarize_score(double score) {
    return score >= 0.0 ? SentimentClass::positive : SentimentClass::negative;
}

// Two-way decision for a softmax pair ordered [negative, positive]. An exact
// tie goes to positive, mirroring the tanh rule.
inline SentimentClass binarize_probs(double p_negative, double p_positive) {
    return p_positive >= p_negative ? SentimentClass::positive : SentimentClass::negative;
}

struct MetricsReport {
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    // confusion[gold][predicted], indexed by SentimentClass.
    std::array<std::array<std::size_t, 3>, 3> confusion{};
    // Absent when the denominator is zero, never reported as 0.
    std::array<std::optional<double>, 3> precision{};
    std::array<std::optional<double>, 3> recall{};
    std::optional<double> neutral_accuracy;

    std::string to_csv() const {
        std::ostringstream out;
        out << std::setprecision(6) << std::fixed;
        out << "class,precision,recall\n";
        for (int c = 0; c < 3; ++c) {
            out << class_name(static_cast<SentimentClass>(c)) << ',';
            if (precision[c]) out << *precision[c];
            out << ',';
            if (recall[c]) out << *recall[c];
            out << '\n';
        }
        out << "accuracy," << accuracy << ",\n";
        if (neutral_accuracy) out << "neutral_accuracy," << *neutral_accuracy << ",\n";
        return out.str();
    }

    std::string to_table() const {
        std::ostringstream out;
        out << std::setprecision(2) << std::fixed;
        out << "            precision    recall\n";
        for (int c = 0; c < 3; ++c) {
            out << std::left << std::setw(12) << class_name(static_cast<SentimentClass>(c))
                << std::right;
            if (precision[c]) out << std::setw(8) << 100.0 * *precision[c] << '%';
            else out << std::setw(9) << "-";
            if (recall[c]) out << std::setw(9) << 100.0 * *recall[c] << '%';
            else out << std::setw(10) << "-";
            out << '\n';
        }
        out << "accuracy    " << std::setw(8) << 100.0 * accuracy << "%\n";
        if (neutral_accuracy) {
            out << "neutral acc " << std::setw(8) << 100.0 * *neutral_accuracy << "%\n";
        }
        return out.str();
    }
};

inline MetricsReport metrics(const std::vector<SentimentClass>& predictions,
                             const std::vector<SentimentClass>& gold) {
    if (predictions.empty()) throw input_error("metrics: empty input");
    if (predictions.size() != gold.size()) {
        throw input_error("metrics: prediction/gold length mismatch");
    }
    MetricsReport report;
    report.total = predictions.size();
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int g = static_cast<int>(gold[i]);
        const int p = static_cast<int>(predictions[i]);
        report.confusion[g][p] += 1;
        if (g == p) ++report.correct;
    }
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
    for (int c = 0; c < 3; ++c) {
        std::size_t tp = report.confusion[c][c];
        std::size_t pred_c = 0, gold_c = 0;
        for (int k = 0; k < 3; ++k) {
            pred_c += report.confusion[k][c];
            gold_c += report.confusion[c][k];
        }
        if (pred_c > 0) report.precision[c] = static_cast<double>(tp) / static_cast<double>(pred_c);
        if (gold_c > 0) report.recall[c] = static_cast<double>(tp) / static_cast<double>(gold_c);
    }
    const int neutral = static_cast<int>(SentimentClass::neutral);
    std::size_t gold_neutral = 0;
    for (int k = 0; k < 3; ++k) gold_neutral += report.confusion[neutral][k];
    if (gold_neutral > 0) {
        report.neutral_accuracy =
            static_cast<double>(report.confusion[neutral][neutral]) / static_cast<double>(gold_neutral);
    }
    return report;
}

}  // namespace soc
