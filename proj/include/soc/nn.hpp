#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "soc/tensor.hpp"

// Dense numeric kernel: activations, layer forward/backward passes, losses,
// Adam, and a finite-difference gradient checker. Everything is deterministic
// given identical inputs; reductions run in a fixed order.

namespace soc {

// SELU constants at full double precision.
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

template <typename Real>
Real selu(Real x) {
    const Real lambda = Real(kSeluLambda);
    const Real alpha = Real(kSeluAlpha);
    return x > Real(0) ? lambda * x : lambda * alpha * (std::exp(x) - Real(1));
}

// d/dx selu, from the pre-activation value.
template <typename Real>
Real selu_grad(Real x) {
    const Real lambda = Real(kSeluLambda);
    const Real alpha = Real(kSeluAlpha);
    return x > Real(0) ? lambda : lambda * alpha * std::exp(x);
}

template <typename Real>
Tensor<Real> selu(const Tensor<Real>& x) {
    Tensor<Real> y = Tensor<Real>::zeros_like(x);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = selu(x[i]);
    return y;
}

template <typename Real>
Real sigmoid(Real x) {
    return Real(1) / (Real(1) + std::exp(-x));
}

// Max-subtraction softmax; output is positive and sums to 1 within fp error.
template <typename Real>
void softmax_inplace(Real* logits, std::size_t n) {
    Real mx = logits[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    Real sum = Real(0);
    for (std::size_t i = 0; i < n; ++i) {
        logits[i] = std::exp(logits[i] - mx);
        sum += logits[i];
    }
    for (std::size_t i = 0; i < n; ++i) logits[i] /= sum;
}

template <typename Real>
std::vector<Real> softmax(std::vector<Real> logits) {
    if (logits.empty()) throw input_error("softmax: empty logit vector");
    for (Real v : logits) {
        if (!std::isfinite(v)) throw numeric_error("softmax: non-finite logit");
    }
    softmax_inplace(logits.data(), logits.size());
    return logits;
}

// ---------------------------------------------------------------------------
// Inner kernels. Row-major weights, fixed accumulation order. The omp simd
// reduction pins a single reassociation scheme, so results are reproducible
// run to run.

template <typename Real>
Real dot(const Real* a, const Real* b, std::size_t n) {
    Real s = Real(0);
#pragma omp simd reduction(+ : s)
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

template <typename Real>
void axpy(Real a, const Real* x, Real* y, std::size_t n) {
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// y = W x + b, W is rows x cols.
template <typename Real>
void affine(const Tensor<Real>& w, const Real* x, const Real* b, Real* y) {
    const std::size_t rows = w.dim(0), cols = w.dim(1);
    const Real* wp = w.data();
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = dot(wp + r * cols, x, cols) + (b ? b[r] : Real(0));
    }
}

// Accumulates dW += outer(dy, x), db += dy, dx += W^T dy.
template <typename Real>
void affine_backward(const Tensor<Real>& w, const Real* x, const Real* dy,
                     Tensor<Real>& dw, Real* db, Real* dx) {
    const std::size_t rows = w.dim(0), cols = w.dim(1);
    const Real* wp = w.data();
    Real* dwp = dw.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const Real g = dy[r];
        axpy(g, x, dwp + r * cols, cols);
        if (db) db[r] += g;
        if (dx) axpy(g, wp + r * cols, dx, cols);
    }
}

// ---------------------------------------------------------------------------
// LSTM cell. Gates are packed [input, forget, cell-candidate, output] along
// the first axis: w_x is 4H x D, w_h is 4H x H, b is 4H.

template <typename Real>
struct LstmWeights {
    Tensor<Real> w_x;
    Tensor<Real> w_h;
    Tensor<Real> b;
};

// Post-activation gate values for one step, kept for the backward pass.
template <typename Real>
struct LstmStepCache {
    std::vector<Real> i, f, g, o;
};

template <typename Real>
void lstm_step_kernel(const Real* x, const Real* h_prev, const Real* c_prev,
                      const Tensor<Real>& w_x, const Tensor<Real>& w_h,
                      const Tensor<Real>& b, std::size_t hidden, Real* h_out,
                      Real* c_out, Real* gates_out /* 4H, post-activation */,
                      Real* z /* scratch, 4H */) {
    affine(w_x, x, b.data(), z);
    for (std::size_t r = 0; r < 4 * hidden; ++r) {
        z[r] += dot(w_h.data() + r * hidden, h_prev, hidden);
    }
    Real* gi = gates_out;
    Real* gf = gates_out + hidden;
    Real* gg = gates_out + 2 * hidden;
    Real* go = gates_out + 3 * hidden;
    for (std::size_t j = 0; j < hidden; ++j) {
        gi[j] = sigmoid(z[j]);
        gf[j] = sigmoid(z[hidden + j]);
        gg[j] = std::tanh(z[2 * hidden + j]);
        go[j] = sigmoid(z[3 * hidden + j]);
        c_out[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
        h_out[j] = go[j] * std::tanh(c_out[j]);
    }
}

// Single LSTM step on vectors. |h_t| < 1 elementwise by construction.
template <typename Real>
std::pair<std::vector<Real>, std::vector<Real>> lstm_step(
    const std::vector<Real>& x, const std::vector<Real>& h_prev,
    const std::vector<Real>& c_prev, const LstmWeights<Real>& w) {
    const std::size_t hidden = h_prev.size();
    if (w.w_x.rank() != 2 || w.w_h.rank() != 2 || w.w_x.dim(0) != 4 * hidden ||
        w.w_h.dim(0) != 4 * hidden || w.w_h.dim(1) != hidden ||
        w.w_x.dim(1) != x.size() || w.b.size() != 4 * hidden ||
        c_prev.size() != hidden) {
        throw config_error("lstm_step: inconsistent weight shapes");
    }
    std::vector<Real> h(hidden), c(hidden), gates(4 * hidden), scratch(4 * hidden);
    lstm_step_kernel(x.data(), h_prev.data(), c_prev.data(), w.w_x, w.w_h, w.b,
                     hidden, h.data(), c.data(), gates.data(), scratch.data());
    return {std::move(h), std::move(c)};
}

// ---------------------------------------------------------------------------
// Valid 1-D convolution over time with max-over-time pooling. seq is T x H,
// filters is F x width x H. Pooling argmax positions are recorded for the
// backward pass.

template <typename Real>
struct ConvPoolResult {
    std::vector<Real> pooled;       // F
    std::vector<std::size_t> argmax;  // window index per filter
};

template <typename Real>
ConvPoolResult<Real> conv1d_maxpool(const Tensor<Real>& seq,
                                    std::size_t kernel_width,
                                    const Tensor<Real>& filters) {
    if (seq.rank() != 2 || filters.rank() != 3 ||
        filters.dim(1) != kernel_width || filters.dim(2) != seq.dim(1)) {
        throw config_error("conv1d_maxpool: inconsistent shapes");
    }
    const std::size_t steps = seq.dim(0), hidden = seq.dim(1);
    const std::size_t nfilters = filters.dim(0);
    if (steps < kernel_width) {
        throw config_error("conv1d_maxpool: sequence shorter than kernel width");
    }
    const std::size_t windows = steps - kernel_width + 1;
    ConvPoolResult<Real> out;
    out.pooled.assign(nfilters, Real(0));
    out.argmax.assign(nfilters, 0);
    const std::size_t flat = kernel_width * hidden;
    for (std::size_t f = 0; f < nfilters; ++f) {
        const Real* filt = filters.data() + f * flat;
        Real best = -std::numeric_limits<Real>::infinity();
        std::size_t best_p = 0;
        for (std::size_t p = 0; p < windows; ++p) {
            // Windows are contiguous rows, so this is one flat dot product.
            const Real r = dot(filt, seq.data() + p * hidden, flat);
            if (r > best) {
                best = r;
                best_p = p;
            }
        }
        out.pooled[f] = best;
        out.argmax[f] = best_p;
    }
    return out;
}

// Routes d(pooled) back through the recorded argmax windows.
template <typename Real>
void conv1d_maxpool_backward(const Tensor<Real>& seq, std::size_t kernel_width,
                             const Tensor<Real>& filters,
                             const ConvPoolResult<Real>& cache,
                             const Real* d_pooled, Tensor<Real>& d_filters,
                             Tensor<Real>& d_seq) {
    const std::size_t hidden = seq.dim(1);
    const std::size_t nfilters = filters.dim(0);
    const std::size_t flat = kernel_width * hidden;
    for (std::size_t f = 0; f < nfilters; ++f) {
        const Real g = d_pooled[f];
        const std::size_t p = cache.argmax[f];
        axpy(g, seq.data() + p * hidden, d_filters.data() + f * flat, flat);
        axpy(g, filters.data() + f * flat, d_seq.data() + p * hidden, flat);
    }
}

// ---------------------------------------------------------------------------
// Dense layer.

enum class Activation { identity, selu, tanh };

template <typename Real>
std::vector<Real> dense(const std::vector<Real>& x, const Tensor<Real>& w,
                        const Tensor<Real>& b, Activation act) {
    if (w.rank() != 2 || w.dim(1) != x.size() || b.size() != w.dim(0)) {
        throw config_error("dense: inconsistent shapes");
    }
    std::vector<Real> y(w.dim(0));
    affine(w, x.data(), b.data(), y.data());
    switch (act) {
        case Activation::identity:
            break;
        case Activation::selu:
            for (Real& v : y) v = selu(v);
            break;
        case Activation::tanh:
            for (Real& v : y) v = std::tanh(v);
            break;
    }
    return y;
}

// ---------------------------------------------------------------------------
// Losses.

// -log(probs[target]) with probabilities clamped to >= 1e-12 before the log.
template <typename Real>
Real cross_entropy(const std::vector<Real>& probs, std::size_t target) {
    if (target >= probs.size()) throw input_error("cross_entropy: bad target");
    const Real p = std::max(probs[target], Real(1e-12));
    return -std::log(p);
}

template <typename Real>
Real l2_loss(Real pred, Real target) {
    const Real d = pred - target;
    return d * d;
}

// ---------------------------------------------------------------------------
// Adam (element-wise moments, bias correction, dense update). Frozen ranges
// never move: their gradients are masked to zero, so m and v stay zero and
// the update is exactly zero.

template <typename Real>
struct AdamState {
    Tensor<Real> m;
    Tensor<Real> v;
    std::int64_t t = 0;
    Real lr = Real(1e-3);
    Real beta1 = Real(0.9);
    Real beta2 = Real(0.999);
    Real epsilon = Real(1e-8);

    AdamState() = default;
    explicit AdamState(const Tensor<Real>& like, Real learning_rate = Real(1e-3))
        : m(Tensor<Real>::zeros_like(like)),
          v(Tensor<Real>::zeros_like(like)),
          lr(learning_rate) {}
};

template <typename Real>
void adam_update(Parameter<Real>& param, AdamState<Real>& state) {
    if (!state.m.same_shape(param.value)) {
        throw config_error("adam_update: state shape mismatch");
    }
    state.t += 1;
    const Real b1t = Real(1) - std::pow(state.beta1, Real(state.t));
    const Real b2t = Real(1) - std::pow(state.beta2, Real(state.t));
    Real* value = param.value.data();
    const Real* grad = param.grad.data();
    Real* m = state.m.data();
    Real* v = state.v.data();
    const std::size_t n = param.value.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Real g = grad[i];
        m[i] = state.beta1 * m[i] + (Real(1) - state.beta1) * g;
        v[i] = state.beta2 * v[i] + (Real(1) - state.beta2) * g * g;
        const Real mhat = m[i] / b1t;
        const Real vhat = v[i] / b2t;
        value[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checker. Run in double mode.

struct GradCheckParam {
    std::string name;
    Tensor<double>* value;
    Tensor<double>* grad;
    std::size_t skip_begin = 0;  // flat range excluded from the check
    std::size_t skip_end = 0;    // (frozen elements such as the pad row)
};

struct GradCheckReport {
    struct Entry {
        std::string name;
        double max_rel_err;
    };
    std::vector<Entry> per_param;
    double max_rel_err = 0.0;
};

// loss_fn must zero gradients, run forward + backward, and return the loss.
// For every checked element the analytic gradient is compared against the
// central difference (f(x+eps) - f(x-eps)) / 2 eps; the relative error is
// |a - n| / max(1e-8, |a| + |n|).
inline GradCheckReport grad_check(const std::function<double()>& loss_fn,
                                  const std::vector<GradCheckParam>& params,
                                  double epsilon = 1e-4) {
    GradCheckReport report;
    loss_fn();
    // Snapshot analytic gradients before the probing passes overwrite them.
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) {
        analytic.emplace_back(p.grad->data(), p.grad->data() + p.grad->size());
    }
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        const auto& p = params[pi];
        double worst = 0.0;
        for (std::size_t i = 0; i < p.value->size(); ++i) {
            if (i >= p.skip_begin && i < p.skip_end) continue;
            const double saved = (*p.value)[i];
            (*p.value)[i] = saved + epsilon;
            const double up = loss_fn();
            (*p.value)[i] = saved - epsilon;
            const double down = loss_fn();
            (*p.value)[i] = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double a = analytic[pi][i];
            const double rel =
                std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            worst = std::max(worst, rel);
        }
        report.per_param.push_back({p.name, worst});
        report.max_rel_err = std::max(report.max_rel_err, worst);
    }
    // Leave gradients consistent with the current values.
    loss_fn();
    return report;
}

}  // namespace soc
