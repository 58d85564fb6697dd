#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "soc/data.hpp"
#include "soc/model.hpp"

// Glue between corpus loaders and the trainer: encoding, splitting and the
// metric log format.

namespace soc {

// Tokenizes and encodes labeled examples for the given head. The softmax
// head trains on the two emotions only, so rows without a binary label are
// skipped; the tanh head takes every row with a ternary target.
inline std::vector<TrainingExample> make_training_set(
    const std::vector<LabeledExample>& examples, const Vocabulary& vocab, Head head,
    std::size_t max_len, const TokenizerConfig& tok_cfg = {}) {
    std::vector<TrainingExample> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
        if (head == Head::softmax_pair && ex.binary_label == BinaryLabel::none) continue;
        if (head == Head::tanh_score && !ex.ternary_target) continue;
        TrainingExample item;
        item.seq = encode(tokenize(ex.text, tok_cfg), vocab, max_len);
        item.cls = ex.binary_label == BinaryLabel::positive ? 1 : 0;
        item.target = ex.ternary_target
                          ? *ex.ternary_target
                          : (ex.binary_label == BinaryLabel::positive ? 1.0 : -1.0);
        out.push_back(std::move(item));
    }
    return out;
}

// Seeded shuffle, then the first eval_fraction of items become the held-out
// split. eval_fraction 0 evaluates on the training set itself.
inline void split_train_eval(std::vector<TrainingExample> all, double eval_fraction,
                             std::uint64_t seed, std::vector<TrainingExample>& train_out,
                             std::vector<TrainingExample>& eval_out) {
    if (!(eval_fraction >= 0.0 && eval_fraction < 1.0)) {
        throw input_error("eval fraction must be in [0, 1)");
    }
    Rng rng(seed);
    rng.shuffle(all);
    const auto eval_n =
        static_cast<std::size_t>(eval_fraction * static_cast<double>(all.size()));
    eval_out.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(eval_n));
    train_out.assign(all.begin() + static_cast<std::ptrdiff_t>(eval_n), all.end());
    if (eval_out.empty()) eval_out = train_out;
}

// "epoch,train_loss,eval_accuracy" rows, full double precision so equal runs
// produce byte-identical logs.
inline std::string metric_log_csv(const std::vector<EpochLog>& log) {
    std::ostringstream out;
    out << "epoch,train_loss,eval_accuracy\n";
    out << std::setprecision(17);
    for (const auto& entry : log) {
        out << entry.epoch << ',' << entry.train_loss << ',' << entry.eval_accuracy << '\n';
    }
    return out.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write file: " + path);
    out << content;
    if (!out) throw io_error("failed writing file: " + path);
}

}  // namespace soc
