#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "soc/eval.hpp"
#include "soc/nn.hpp"
#include "soc/textprep.hpp"

// The network: embedding -> LSTM over time -> parallel conv banks with
// max-over-time pooling -> SELU dense stack -> tanh or softmax head.
// Training, inference and checkpoint persistence live here.

namespace soc {

enum class Head { tanh_score, softmax_pair };

// Softmax pair ordering, everywhere: index 0 negative, index 1 positive.
inline constexpr std::size_t kNegativeIndex = 0;
inline constexpr std::size_t kPositiveIndex = 1;

struct ModelConfig {
    int embed_dim = 100;
    int lstm_hidden = 64;
    int dense_size = 128;
    int dense_layers = 2;
    std::vector<int> conv_widths = {3, 4, 5};
    int conv_filters = 64;
    Head head = Head::softmax_pair;
    int max_len = 64;
    bool embeddings_trainable = true;

    int head_dim() const { return head == Head::tanh_score ? 1 : 2; }
    int feature_dim() const { return conv_filters * static_cast<int>(conv_widths.size()); }

    void validate() const {
        if (embed_dim < 1 || lstm_hidden < 1 || dense_size < 1 || dense_layers < 1 ||
            conv_filters < 1 || max_len < 1) {
            throw config_error("model config: dimensions must be positive");
        }
        if (conv_widths.empty()) throw config_error("model config: no conv widths");
        for (int w : conv_widths) {
            if (w < 1) throw config_error("model config: conv width must be positive");
            if (w > max_len) {
                throw config_error("model config: conv width " + std::to_string(w) +
                                   " exceeds max sequence length " + std::to_string(max_len));
            }
        }
    }
};

template <typename Real>
struct NamedParam {
    std::string name;
    Parameter<Real>* param;
};

template <typename Real>
struct ModelWeights {
    ModelConfig config;
    std::size_t vocab_size = 0;

    Parameter<Real> embedding;  // V x d, row 0 frozen at zero
    Parameter<Real> lstm_wx;    // 4H x d
    Parameter<Real> lstm_wh;    // 4H x H
    Parameter<Real> lstm_b;     // 4H
    std::vector<Parameter<Real>> conv_filters;  // per width: F x w x H
    std::vector<Parameter<Real>> dense_w;       // dense_size x prev
    std::vector<Parameter<Real>> dense_b;
    Parameter<Real> head_w;  // head_dim x dense_size
    Parameter<Real> head_b;

    // RNG draw order is fixed (embedding, LSTM, convs, dense stack, head) so
    // identical seeds give identical weights.
    static ModelWeights init(const ModelConfig& cfg, std::size_t vocab_size, Rng& rng,
                             const EmbeddingTable<Real>* pretrained = nullptr) {
        cfg.validate();
        if (vocab_size < 2) throw config_error("model init: vocabulary too small");
        if (pretrained && (pretrained->dim != static_cast<std::size_t>(cfg.embed_dim) ||
                           pretrained->vectors.dim(0) != vocab_size)) {
            throw config_error("model init: embedding table does not match config");
        }
        const auto d = static_cast<std::size_t>(cfg.embed_dim);
        const auto hidden = static_cast<std::size_t>(cfg.lstm_hidden);
        ModelWeights w;
        w.config = cfg;
        w.vocab_size = vocab_size;

        w.embedding = Parameter<Real>({vocab_size, d});
        w.embedding.frozen_begin = 0;
        w.embedding.frozen_end = d;  // pad row
        if (pretrained) {
            std::copy(pretrained->vectors.data(), pretrained->vectors.data() + vocab_size * d,
                      w.embedding.value.data());
        } else {
            for (std::size_t i = d; i < vocab_size * d; ++i) {
                w.embedding.value[i] = Real(rng.uniform(-0.05, 0.05));
            }
        }
        for (std::size_t j = 0; j < d; ++j) w.embedding.value[j] = Real(0);

        w.lstm_wx = glorot(rng, 4 * hidden, d);
        w.lstm_wh = glorot(rng, 4 * hidden, hidden);
        w.lstm_b = Parameter<Real>({4 * hidden});
        // Forget-gate bias starts at +1 so early training remembers.
        for (std::size_t j = hidden; j < 2 * hidden; ++j) w.lstm_b.value[j] = Real(1);

        const auto filters = static_cast<std::size_t>(cfg.conv_filters);
        for (int width : cfg.conv_widths) {
            const auto kw = static_cast<std::size_t>(width);
            Parameter<Real> filt({filters, kw, hidden});
            fill_uniform(rng, filt.value, filters, kw * hidden);
            w.conv_filters.push_back(std::move(filt));
        }

        std::size_t prev = static_cast<std::size_t>(cfg.feature_dim());
        const auto dense = static_cast<std::size_t>(cfg.dense_size);
        for (int l = 0; l < cfg.dense_layers; ++l) {
            w.dense_w.push_back(glorot(rng, dense, prev));
            w.dense_b.push_back(Parameter<Real>({dense}));
            prev = dense;
        }
        w.head_w = glorot(rng, static_cast<std::size_t>(cfg.head_dim()), dense);
        w.head_b = Parameter<Real>({static_cast<std::size_t>(cfg.head_dim())});
        return w;
    }

    std::vector<NamedParam<Real>> named_params() {
        std::vector<NamedParam<Real>> out;
        out.push_back({"embedding", &embedding});
        out.push_back({"lstm.w_x", &lstm_wx});
        out.push_back({"lstm.w_h", &lstm_wh});
        out.push_back({"lstm.b", &lstm_b});
        for (std::size_t i = 0; i < conv_filters.size(); ++i) {
            out.push_back({"conv" + std::to_string(config.conv_widths[i]) + ".w",
                           &conv_filters[i]});
        }
        for (std::size_t l = 0; l < dense_w.size(); ++l) {
            out.push_back({"dense" + std::to_string(l + 1) + ".w", &dense_w[l]});
            out.push_back({"dense" + std::to_string(l + 1) + ".b", &dense_b[l]});
        }
        out.push_back({"head.w", &head_w});
        out.push_back({"head.b", &head_b});
        return out;
    }

    std::vector<NamedParam<Real>> trainable_params() {
        auto all = named_params();
        if (!config.embeddings_trainable) {
            all.erase(all.begin());  // embedding is first
        }
        return all;
    }

private:
    static Parameter<Real> glorot(Rng& rng, std::size_t rows, std::size_t cols) {
        Parameter<Real> p({rows, cols});
        fill_uniform(rng, p.value, rows, cols);
        return p;
    }

    static void fill_uniform(Rng& rng, Tensor<Real>& t, std::size_t fan_out,
                             std::size_t fan_in) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = Real(rng.uniform(-bound, bound));
        }
    }
};

// ---------------------------------------------------------------------------
// Forward / backward. One example at a time over a reusable workspace; batch
// members never interact, so per-example outputs are independent of batch
// composition.

template <typename Real>
struct ModelWorkspace {
    Tensor<Real> x;      // T x d embeddings
    Tensor<Real> h;      // T x H hidden states
    Tensor<Real> c;      // T x H cell states
    Tensor<Real> gates;  // T x 4H post-activation gate values
    std::vector<ConvPoolResult<Real>> conv;
    std::vector<std::vector<Real>> dense_z;
    std::vector<std::vector<Real>> dense_a;
    std::vector<Real> features;
    std::vector<Real> head_z;
    std::vector<Real> output;
    // scratch
    Tensor<Real> dh_seq;
    Tensor<Real> dx;
    std::vector<Real> state_zero, dvec_a, dvec_b, dz4h, dh_next, dc_next;

    explicit ModelWorkspace(const ModelConfig& cfg) {
        const auto steps = static_cast<std::size_t>(cfg.max_len);
        const auto d = static_cast<std::size_t>(cfg.embed_dim);
        const auto hidden = static_cast<std::size_t>(cfg.lstm_hidden);
        x = Tensor<Real>({steps, d});
        h = Tensor<Real>({steps, hidden});
        c = Tensor<Real>({steps, hidden});
        gates = Tensor<Real>({steps, 4 * hidden});
        conv.resize(cfg.conv_widths.size());
        dense_z.resize(static_cast<std::size_t>(cfg.dense_layers));
        dense_a.resize(static_cast<std::size_t>(cfg.dense_layers));
        for (auto& z : dense_z) z.resize(static_cast<std::size_t>(cfg.dense_size));
        for (auto& a : dense_a) a.resize(static_cast<std::size_t>(cfg.dense_size));
        features.resize(static_cast<std::size_t>(cfg.feature_dim()));
        head_z.resize(static_cast<std::size_t>(cfg.head_dim()));
        output.resize(static_cast<std::size_t>(cfg.head_dim()));
        dh_seq = Tensor<Real>({steps, hidden});
        dx = Tensor<Real>({steps, d});
        state_zero.assign(hidden, Real(0));
        dvec_a.resize(std::max<std::size_t>(features.size(),
                                            static_cast<std::size_t>(cfg.dense_size)));
        dvec_b.resize(dvec_a.size());
        dz4h.resize(4 * hidden);
        dh_next.resize(hidden);
        dc_next.resize(hidden);
    }
};

template <typename Real>
void forward_example(const ModelWeights<Real>& w, const std::int32_t* indices,
                     ModelWorkspace<Real>& ws) {
    const ModelConfig& cfg = w.config;
    const auto steps = static_cast<std::size_t>(cfg.max_len);
    const auto d = static_cast<std::size_t>(cfg.embed_dim);
    const auto hidden = static_cast<std::size_t>(cfg.lstm_hidden);

    for (std::size_t t = 0; t < steps; ++t) {
        const std::int32_t idx = indices[t];
        if (idx < 0 || static_cast<std::size_t>(idx) >= w.vocab_size) {
            throw input_error("forward: index " + std::to_string(idx) + " at position " +
                              std::to_string(t) + " outside vocabulary of size " +
                              std::to_string(w.vocab_size));
        }
        std::memcpy(ws.x.data() + t * d,
                    w.embedding.value.data() + static_cast<std::size_t>(idx) * d,
                    d * sizeof(Real));
    }

    for (std::size_t t = 0; t < steps; ++t) {
        const Real* h_prev = t == 0 ? ws.state_zero.data() : ws.h.data() + (t - 1) * hidden;
        const Real* c_prev = t == 0 ? ws.state_zero.data() : ws.c.data() + (t - 1) * hidden;
        lstm_step_kernel(ws.x.data() + t * d, h_prev, c_prev, w.lstm_wx.value,
                         w.lstm_wh.value, w.lstm_b.value, hidden,
                         ws.h.data() + t * hidden, ws.c.data() + t * hidden,
                         ws.gates.data() + t * 4 * hidden, ws.dz4h.data());
    }

    std::size_t offset = 0;
    for (std::size_t b = 0; b < w.conv_filters.size(); ++b) {
        ws.conv[b] = conv1d_maxpool(ws.h, static_cast<std::size_t>(cfg.conv_widths[b]),
                                    w.conv_filters[b].value);
        std::copy(ws.conv[b].pooled.begin(), ws.conv[b].pooled.end(),
                  ws.features.begin() + static_cast<std::ptrdiff_t>(offset));
        offset += ws.conv[b].pooled.size();
    }

    const Real* prev = ws.features.data();
    for (std::size_t l = 0; l < ws.dense_z.size(); ++l) {
        affine(w.dense_w[l].value, prev, w.dense_b[l].value.data(), ws.dense_z[l].data());
        for (std::size_t j = 0; j < ws.dense_z[l].size(); ++j) {
            ws.dense_a[l][j] = selu(ws.dense_z[l][j]);
        }
        prev = ws.dense_a[l].data();
    }

    affine(w.head_w.value, prev, w.head_b.value.data(), ws.head_z.data());
    if (cfg.head == Head::tanh_score) {
        ws.output[0] = std::tanh(ws.head_z[0]);
    } else {
        std::copy(ws.head_z.begin(), ws.head_z.end(), ws.output.begin());
        softmax_inplace(ws.output.data(), ws.output.size());
    }
}

// Accumulates gradients for one example. d_head_z is dLoss/d(head
// pre-activation); the caller folds in any 1/batch scaling there.
template <typename Real>
void backward_example(ModelWeights<Real>& w, const std::int32_t* indices,
                      ModelWorkspace<Real>& ws, const Real* d_head_z) {
    const ModelConfig& cfg = w.config;
    const auto steps = static_cast<std::size_t>(cfg.max_len);
    const auto d = static_cast<std::size_t>(cfg.embed_dim);
    const auto hidden = static_cast<std::size_t>(cfg.lstm_hidden);
    const std::size_t layers = ws.dense_z.size();

    // Head.
    Real* d_prev = ws.dvec_a.data();  // gradient w.r.t. the layer below
    std::fill(d_prev, d_prev + ws.dense_a[layers - 1].size(), Real(0));
    affine_backward(w.head_w.value, ws.dense_a[layers - 1].data(), d_head_z,
                    w.head_w.grad, w.head_b.grad.data(), d_prev);

    // Dense stack, top down.
    Real* d_cur = ws.dvec_b.data();
    for (std::size_t l = layers; l-- > 0;) {
        for (std::size_t j = 0; j < ws.dense_z[l].size(); ++j) {
            d_prev[j] *= selu_grad(ws.dense_z[l][j]);
        }
        const Real* below = l == 0 ? ws.features.data() : ws.dense_a[l - 1].data();
        const std::size_t below_n = l == 0 ? ws.features.size() : ws.dense_a[l - 1].size();
        std::fill(d_cur, d_cur + below_n, Real(0));
        affine_backward(w.dense_w[l].value, below, d_prev, w.dense_w[l].grad,
                        w.dense_b[l].grad.data(), d_cur);
        std::swap(d_prev, d_cur);
    }
    // d_prev now holds dLoss/d(features).

    ws.dh_seq.fill(Real(0));
    std::size_t offset = 0;
    for (std::size_t b = 0; b < w.conv_filters.size(); ++b) {
        conv1d_maxpool_backward(ws.h, static_cast<std::size_t>(cfg.conv_widths[b]),
                                w.conv_filters[b].value, ws.conv[b], d_prev + offset,
                                w.conv_filters[b].grad, ws.dh_seq);
        offset += ws.conv[b].pooled.size();
    }

    // Backprop through time. Every timestep feeds the conv banks, so each
    // step picks up its share of dh_seq on top of the recurrent gradient.
    std::fill(ws.dh_next.begin(), ws.dh_next.end(), Real(0));
    std::fill(ws.dc_next.begin(), ws.dc_next.end(), Real(0));
    const bool train_embed = cfg.embeddings_trainable;
    if (train_embed) ws.dx.fill(Real(0));
    for (std::size_t t = steps; t-- > 0;) {
        const Real* gi = ws.gates.data() + t * 4 * hidden;
        const Real* gf = gi + hidden;
        const Real* gg = gi + 2 * hidden;
        const Real* go = gi + 3 * hidden;
        const Real* ct = ws.c.data() + t * hidden;
        const Real* c_prev = t == 0 ? nullptr : ws.c.data() + (t - 1) * hidden;
        Real* dz = ws.dz4h.data();
        for (std::size_t j = 0; j < hidden; ++j) {
            const Real dh = ws.dh_seq(t, j) + ws.dh_next[j];
            const Real tc = std::tanh(ct[j]);
            const Real dout = dh * tc;
            const Real dc = dh * go[j] * (Real(1) - tc * tc) + ws.dc_next[j];
            const Real din = dc * gg[j];
            const Real dg = dc * gi[j];
            const Real df = c_prev ? dc * c_prev[j] : Real(0);
            ws.dc_next[j] = dc * gf[j];
            dz[j] = din * gi[j] * (Real(1) - gi[j]);
            dz[hidden + j] = df * gf[j] * (Real(1) - gf[j]);
            dz[2 * hidden + j] = dg * (Real(1) - gg[j] * gg[j]);
            dz[3 * hidden + j] = dout * go[j] * (Real(1) - go[j]);
        }
        const Real* x_t = ws.x.data() + t * d;
        Real* dx_t = train_embed ? ws.dx.data() + t * d : nullptr;
        affine_backward(w.lstm_wx.value, x_t, dz, w.lstm_wx.grad, w.lstm_b.grad.data(),
                        dx_t);
        if (t > 0) {
            const Real* h_prev = ws.h.data() + (t - 1) * hidden;
            std::fill(ws.dh_next.begin(), ws.dh_next.end(), Real(0));
            affine_backward(w.lstm_wh.value, h_prev, dz, w.lstm_wh.grad,
                            static_cast<Real*>(nullptr), ws.dh_next.data());
        }
    }

    if (train_embed) {
        for (std::size_t t = 0; t < steps; ++t) {
            const auto row = static_cast<std::size_t>(indices[t]);
            axpy(Real(1), ws.dx.data() + t * d, w.embedding.grad.data() + row * d, d);
        }
        w.embedding.mask_frozen();  // pad row stays exactly zero
    }
}

// Batch forward. Returns a B x head_dim tensor: tanh scores in [-1, 1] or
// softmax pairs summing to 1.
template <typename Real>
Tensor<Real> forward(const ModelWeights<Real>& w, const std::vector<EncodedSequence>& batch) {
    const auto out_dim = static_cast<std::size_t>(w.config.head_dim());
    Tensor<Real> out({batch.size(), out_dim});
    ModelWorkspace<Real> ws(w.config);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].indices.size() != static_cast<std::size_t>(w.config.max_len)) {
            throw input_error("forward: sequence " + std::to_string(i) +
                              " has length " + std::to_string(batch[i].indices.size()) +
                              ", expected " + std::to_string(w.config.max_len));
        }
        forward_example(w, batch[i].indices.data(), ws);
        for (std::size_t j = 0; j < out_dim; ++j) out(i, j) = ws.output[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
    int batch_size = 2048;
    int max_epochs = 300;
    double lr = 1e-3;
    std::uint64_t seed = 42;

    void validate() const {
        if (batch_size < 1) throw config_error("train config: batch_size must be >= 1");
        if (max_epochs < 1) throw config_error("train config: max_epochs must be >= 1");
    }
};

// One training/eval item. `cls` is the binary class (negative 0 / positive 1)
// the softmax head trains on; `target` is the continuous value in [-1, 1] the
// tanh head regresses to.
struct TrainingExample {
    EncodedSequence seq;
    int cls = 0;
    double target = 0.0;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double eval_accuracy = 0.0;
};

template <typename Real>
struct TrainResult {
    ModelWeights<Real> best;
    int best_epoch = 0;
    double best_accuracy = 0.0;
    std::uint64_t steps = 0;
    std::vector<EpochLog> log;
};

namespace detail {

// Bucketize when the eval targets include a neutral band, binarize otherwise.
inline bool is_ternary(const std::vector<TrainingExample>& examples) {
    for (const auto& ex : examples) {
        if (bucketize(ex.target) == SentimentClass::neutral) return true;
    }
    return false;
}

template <typename Real>
SentimentClass predicted_class(Head head, const Real* output, bool ternary) {
    if (head == Head::softmax_pair) {
        return binarize_probs(static_cast<double>(output[kNegativeIndex]),
                              static_cast<double>(output[kPositiveIndex]));
    }
    const double s = static_cast<double>(output[0]);
    return ternary ? bucketize(std::clamp(s, -1.0, 1.0)) : binarize_score(s);
}

inline SentimentClass gold_class(Head head, const TrainingExample& ex, bool ternary) {
    if (head == Head::softmax_pair) {
        return ex.cls == 1 ? SentimentClass::positive : SentimentClass::negative;
    }
    return ternary ? bucketize(ex.target) : binarize_score(ex.target);
}

}  // namespace detail

template <typename Real>
double evaluate_accuracy(const ModelWeights<Real>& w,
                         const std::vector<TrainingExample>& examples) {
    if (examples.empty()) throw input_error("evaluate_accuracy: empty eval set");
    const bool ternary =
        w.config.head == Head::tanh_score && detail::is_ternary(examples);
    ModelWorkspace<Real> ws(w.config);
    std::size_t correct = 0;
    for (const auto& ex : examples) {
        forward_example(w, ex.seq.indices.data(), ws);
        if (detail::predicted_class(w.config.head, ws.output.data(), ternary) ==
            detail::gold_class(w.config.head, ex, ternary)) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(examples.size());
}

// Seeded-shuffle minibatch Adam training. The final partial batch is kept.
// Model selection: the checkpoint of the epoch with the best eval accuracy
// (earliest epoch wins ties). Pass the training set as eval_split to select
// on training accuracy.
template <typename Real>
TrainResult<Real> train(ModelWeights<Real>& w,
                        const std::vector<TrainingExample>& dataset,
                        const std::vector<TrainingExample>& eval_split,
                        const TrainConfig& tcfg,
                        const std::function<void(const EpochLog&)>& on_epoch = {}) {
    tcfg.validate();
    if (dataset.empty()) throw input_error("train: empty dataset");
    if (eval_split.empty()) throw input_error("train: empty eval split");
    const Head head = w.config.head;
    for (const auto& ex : dataset) {
        if (head == Head::softmax_pair && ex.cls != 0 && ex.cls != 1) {
            throw input_error("train: softmax head requires binary class labels");
        }
        if (head == Head::tanh_score && !(ex.target >= -1.0 && ex.target <= 1.0)) {
            throw input_error("train: tanh head requires targets in [-1, 1]");
        }
    }

    auto trainable = w.trainable_params();
    std::vector<AdamState<Real>> states;
    states.reserve(trainable.size());
    for (auto& np : trainable) {
        states.emplace_back(np.param->value, Real(tcfg.lr));
    }

    Rng rng(tcfg.seed);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    ModelWorkspace<Real> ws(w.config);
    TrainResult<Real> result;
    result.best = w;
    result.best_accuracy = -1.0;

    const auto batch_size = static_cast<std::size_t>(tcfg.batch_size);
    std::array<Real, 2> d_head_z{};
    for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t begin = 0, batch_index = 0; begin < order.size();
             begin += batch_size, ++batch_index) {
            const std::size_t end = std::min(begin + batch_size, order.size());
            const Real inv_batch = Real(1) / Real(end - begin);
            for (auto& np : trainable) np.param->zero_grad();
            double batch_loss = 0.0;
            for (std::size_t k = begin; k < end; ++k) {
                const TrainingExample& ex = dataset[order[k]];
                forward_example(w, ex.seq.indices.data(), ws);
                if (head == Head::softmax_pair) {
                    const auto target = static_cast<std::size_t>(ex.cls);
                    batch_loss += static_cast<double>(
                        cross_entropy(ws.output, target));
                    for (std::size_t j = 0; j < 2; ++j) {
                        const Real onehot = j == target ? Real(1) : Real(0);
                        d_head_z[j] = (ws.output[j] - onehot) * inv_batch;
                    }
                } else {
                    const Real s = ws.output[0];
                    const Real target = Real(ex.target);
                    batch_loss += static_cast<double>(l2_loss(s, target));
                    d_head_z[0] =
                        Real(2) * (s - target) * (Real(1) - s * s) * inv_batch;
                }
                backward_example(w, ex.seq.indices.data(), ws, d_head_z.data());
            }
            if (!std::isfinite(batch_loss)) {
                throw numeric_error("train: non-finite loss at epoch " +
                                    std::to_string(epoch) + ", step " +
                                    std::to_string(result.steps) + ", batch " +
                                    std::to_string(batch_index));
            }
            for (std::size_t p = 0; p < trainable.size(); ++p) {
                adam_update(*trainable[p].param, states[p]);
            }
            result.steps += 1;
            loss_sum += batch_loss;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = loss_sum / static_cast<double>(dataset.size());
        entry.eval_accuracy = evaluate_accuracy(w, eval_split);
        result.log.push_back(entry);
        if (on_epoch) on_epoch(entry);
        if (entry.eval_accuracy > result.best_accuracy) {
            result.best_accuracy = entry.eval_accuracy;
            result.best_epoch = epoch;
            result.best = w;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Prediction.

struct SentimentScore {
    Head head = Head::tanh_score;
    double score = 0.0;               // tanh scalar, or P(positive) for softmax
    std::array<double, 2> probs{};    // softmax pair [negative, positive]
    SentimentClass label = SentimentClass::neutral;
};

template <typename Real>
SentimentScore predict(const std::string& text, const ModelWeights<Real>& w,
                       const Vocabulary& vocab, const TokenizerConfig& tok_cfg = {}) {
    const EncodedSequence seq =
        encode(tokenize(text, tok_cfg), vocab, static_cast<std::size_t>(w.config.max_len));
    ModelWorkspace<Real> ws(w.config);
    forward_example(w, seq.indices.data(), ws);
    SentimentScore out;
    out.head = w.config.head;
    if (w.config.head == Head::tanh_score) {
        out.score = static_cast<double>(ws.output[0]);
        out.label = bucketize(std::clamp(out.score, -1.0, 1.0));
    } else {
        out.probs = {static_cast<double>(ws.output[kNegativeIndex]),
                     static_cast<double>(ws.output[kPositiveIndex])};
        out.score = out.probs[kPositiveIndex];
        out.label = binarize_probs(out.probs[kNegativeIndex], out.probs[kPositiveIndex]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint container: magic "SOCM", u32 version, config block, then each
// tensor as (name, shape, little-endian 32-bit floats).

inline constexpr char kCheckpointMagic[4] = {'S', 'O', 'C', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
    std::uint32_t version = kCheckpointVersion;
    ModelConfig config;
    std::size_t vocab_size = 0;
    std::uint64_t vocab_hash = 0;
    std::uint64_t train_steps = 0;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

class Reader {
public:
    Reader(const std::string& bytes, std::string path)
        : bytes_(bytes), path_(std::move(path)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
        }
        pos_ += 8;
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }

    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw format_error("truncated checkpoint: " + path_);
        }
    }

    const std::string& bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace detail

template <typename Real>
void save_checkpoint(ModelWeights<Real>& w, std::uint64_t vocab_hash,
                     std::uint64_t train_steps, const std::string& path) {
    std::string out;
    out.append(kCheckpointMagic, 4);
    detail::put_u32(out, kCheckpointVersion);
    const ModelConfig& cfg = w.config;
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.embed_dim));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.lstm_hidden));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.dense_size));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.dense_layers));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.conv_widths.size()));
    for (int width : cfg.conv_widths) detail::put_u32(out, static_cast<std::uint32_t>(width));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.conv_filters));
    detail::put_u32(out, cfg.head == Head::tanh_score ? 0u : 1u);
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.max_len));
    detail::put_u32(out, cfg.embeddings_trainable ? 1u : 0u);
    detail::put_u64(out, static_cast<std::uint64_t>(w.vocab_size));
    detail::put_u64(out, vocab_hash);
    detail::put_u64(out, train_steps);

    auto params = w.named_params();
    detail::put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (auto& np : params) {
        detail::put_u32(out, static_cast<std::uint32_t>(np.name.size()));
        out += np.name;
        const Tensor<Real>& t = np.param->value;
        detail::put_u32(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t dim : t.shape()) detail::put_u64(out, dim);
        for (std::size_t i = 0; i < t.size(); ++i) {
            detail::put_f32(out, static_cast<float>(t[i]));
        }
    }

    std::ofstream file(path, std::ios::binary);
    if (!file) throw io_error("cannot write checkpoint: " + path);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw io_error("failed writing checkpoint: " + path);
}

template <typename Real>
std::pair<ModelWeights<Real>, CheckpointMeta> load_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw io_error("cannot read checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(file)),
                      std::istreambuf_iterator<char>());
    detail::Reader in(bytes, path);

    if (in.str(4) != std::string(kCheckpointMagic, 4)) {
        throw format_error("not a SOCM checkpoint: " + path);
    }
    CheckpointMeta meta;
    meta.version = in.u32();
    if (meta.version != kCheckpointVersion) {
        throw format_error("unsupported checkpoint version " + std::to_string(meta.version) +
                           " (supported: " + std::to_string(kCheckpointVersion) + "): " + path);
    }
    ModelConfig cfg;
    cfg.embed_dim = static_cast<int>(in.u32());
    cfg.lstm_hidden = static_cast<int>(in.u32());
    cfg.dense_size = static_cast<int>(in.u32());
    cfg.dense_layers = static_cast<int>(in.u32());
    cfg.conv_widths.clear();
    const std::uint32_t n_widths = in.u32();
    for (std::uint32_t i = 0; i < n_widths; ++i) {
        cfg.conv_widths.push_back(static_cast<int>(in.u32()));
    }
    cfg.conv_filters = static_cast<int>(in.u32());
    cfg.head = in.u32() == 0 ? Head::tanh_score : Head::softmax_pair;
    cfg.max_len = static_cast<int>(in.u32());
    cfg.embeddings_trainable = in.u32() != 0;
    meta.config = cfg;
    meta.vocab_size = static_cast<std::size_t>(in.u64());
    meta.vocab_hash = in.u64();
    meta.train_steps = in.u64();
    cfg.validate();

    Rng rng(0);  // no draws: every tensor is overwritten below
    ModelWeights<Real> w = ModelWeights<Real>::init(cfg, meta.vocab_size, rng);
    auto params = w.named_params();
    const std::uint32_t count = in.u32();
    if (count != params.size()) {
        throw format_error("checkpoint tensor count mismatch: expected " +
                           std::to_string(params.size()) + ", found " + std::to_string(count) +
                           ": " + path);
    }
    for (auto& np : params) {
        const std::uint32_t name_len = in.u32();
        const std::string name = in.str(name_len);
        if (name != np.name) {
            throw format_error("checkpoint tensor order mismatch: expected " + np.name +
                               ", found " + name + ": " + path);
        }
        const std::uint32_t rank = in.u32();
        std::vector<std::size_t> shape;
        for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(static_cast<std::size_t>(in.u64()));
        Tensor<Real>& t = np.param->value;
        if (shape != t.shape()) {
            throw format_error("checkpoint tensor " + np.name + ": shape mismatch: " + path);
        }
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = Real(in.f32());
    }
    if (!in.done()) throw format_error("trailing bytes in checkpoint: " + path);
    return {std::move(w), meta};
}

}  // namespace soc
