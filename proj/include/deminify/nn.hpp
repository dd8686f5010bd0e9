#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "deminify/error.hpp"

namespace deminify::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Deterministic random source. Draws are derived from raw mt19937_64 output
/// so results do not depend on the standard library's distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

/// Mutable view of one parameter tensor; used by the optimizer, gradient
/// checks and serialization.
struct TensorRef {
    std::string name;
    double* data = nullptr;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;

    Eigen::Index size() const { return rows * cols; }
    std::span<double> values() const { return {data, static_cast<std::size_t>(size())}; }
};

inline TensorRef tensor_ref(std::string name, Mat& m) { return {std::move(name), m.data(), m.rows(), m.cols()}; }
inline TensorRef tensor_ref(std::string name, Vec& v) { return {std::move(name), v.data(), v.rows(), 1}; }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One-hot input given by its hot index; multiplies as a column lookup.
struct OneHotInput {
    std::size_t index = 0;
};

struct LstmState {
    Vec hidden;
    Vec cell;

    static LstmState zero(Eigen::Index h) { return {Vec::Zero(h), Vec::Zero(h)}; }
};

/// Single LSTM layer. Gate rows are stacked as [input; forget; candidate; output].
struct LstmCell {
    Mat W; // 4h x in
    Mat U; // 4h x h
    Vec b; // 4h

    Eigen::Index input_size() const { return W.cols(); }
    Eigen::Index hidden_size() const { return U.cols(); }

    static LstmCell zeros(Eigen::Index in, Eigen::Index h) {
        return {Mat::Zero(4 * h, in), Mat::Zero(4 * h, h), Vec::Zero(4 * h)};
    }

    // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; forget-gate bias 1.
    static LstmCell random(Eigen::Index in, Eigen::Index h, Rng& rng) {
        LstmCell c = zeros(in, h);
        const double rw = 1.0 / std::sqrt(static_cast<double>(in));
        const double ru = 1.0 / std::sqrt(static_cast<double>(h));
        for (Eigen::Index j = 0; j < c.W.cols(); ++j)
            for (Eigen::Index i = 0; i < c.W.rows(); ++i) c.W(i, j) = rng.uniform(-rw, rw);
        for (Eigen::Index j = 0; j < c.U.cols(); ++j)
            for (Eigen::Index i = 0; i < c.U.rows(); ++i) c.U(i, j) = rng.uniform(-ru, ru);
        c.b.segment(h, h).setOnes();
        return c;
    }

    void set_zero() {
        W.setZero();
        U.setZero();
        b.setZero();
    }

    std::vector<TensorRef> tensors(const std::string& prefix) {
        return {tensor_ref(prefix + "W", W), tensor_ref(prefix + "U", U), tensor_ref(prefix + "b", b)};
    }
};

/// Affine map followed by softmax.
struct DenseSoftmax {
    Mat W; // out x in
    Vec b; // out

    static DenseSoftmax zeros(Eigen::Index in, Eigen::Index out) { return {Mat::Zero(out, in), Vec::Zero(out)}; }

    static DenseSoftmax random(Eigen::Index in, Eigen::Index out, Rng& rng) {
        DenseSoftmax d = zeros(in, out);
        const double r = 1.0 / std::sqrt(static_cast<double>(in));
        for (Eigen::Index j = 0; j < d.W.cols(); ++j)
            for (Eigen::Index i = 0; i < d.W.rows(); ++i) d.W(i, j) = rng.uniform(-r, r);
        return d;
    }

    void set_zero() {
        W.setZero();
        b.setZero();
    }

    std::vector<TensorRef> tensors(const std::string& prefix) {
        return {tensor_ref(prefix + "W", W), tensor_ref(prefix + "b", b)};
    }
};

inline Vec softmax(const Vec& logits) {
    Vec p = (logits.array() - logits.maxCoeff()).exp().matrix();
    return p / p.sum();
}

inline Vec softmax_apply(const DenseSoftmax& layer, const Vec& h) {
    if (h.size() != layer.W.cols())
        throw ShapeError("dense input has " + std::to_string(h.size()) + " entries, expected " +
                         std::to_string(layer.W.cols()));
    return softmax(layer.W * h + layer.b);
}

inline constexpr double kCrossEntropyEps = 1e-12;

inline double cross_entropy(const Vec& pred, std::size_t target) {
    if (target >= static_cast<std::size_t>(pred.size())) throw ShapeError("target index out of range");
    return -std::log(pred(static_cast<Eigen::Index>(target)) + kCrossEntropyEps);
}

/// d cross_entropy(softmax(z), target) / dz, including the epsilon term.
inline Vec cross_entropy_softmax_grad(const Vec& pred, std::size_t target) {
    const auto t = static_cast<Eigen::Index>(target);
    const double scale = pred(t) / (pred(t) + kCrossEntropyEps);
    Vec g = pred * scale;
    g(t) -= scale;
    return g;
}

namespace detail {

inline void check_input(const LstmCell& cell, const Vec& x) {
    if (x.size() != cell.input_size())
        throw ShapeError("LSTM input has " + std::to_string(x.size()) + " entries, expected " +
                         std::to_string(cell.input_size()));
}

inline void check_input(const LstmCell& cell, OneHotInput x) {
    if (static_cast<Eigen::Index>(x.index) >= cell.input_size())
        throw ShapeError("one-hot index " + std::to_string(x.index) + " exceeds LSTM input size " +
                         std::to_string(cell.input_size()));
}

inline void add_input(Vec& z, const Mat& W, const Vec& x) { z.noalias() += W * x; }
inline void add_input(Vec& z, const Mat& W, OneHotInput x) { z += W.col(static_cast<Eigen::Index>(x.index)); }

inline void accumulate_input_grad(Mat& dW, const Vec& dz, const Vec& x) { dW.noalias() += dz * x.transpose(); }
inline void accumulate_input_grad(Mat& dW, const Vec& dz, OneHotInput x) {
    dW.col(static_cast<Eigen::Index>(x.index)) += dz;
}

} // namespace detail

/// Values kept from the forward pass for backpropagation.
struct StepCache {
    Vec h_prev, c_prev;
    Vec i, f, g, o;
    Vec tanh_c;
};

template <class Input>
LstmState lstm_step(const LstmCell& cell, const LstmState& state, const Input& x, StepCache* cache = nullptr) {
    detail::check_input(cell, x);
    const Eigen::Index h = cell.hidden_size();
    if (state.hidden.size() != h || state.cell.size() != h) throw ShapeError("LSTM state size mismatch");

    Vec z = cell.b;
    detail::add_input(z, cell.W, x);
    z.noalias() += cell.U * state.hidden;

    Vec i = z.segment(0, h).unaryExpr([](double v) { return sigmoid(v); });
    Vec f = z.segment(h, h).unaryExpr([](double v) { return sigmoid(v); });
    Vec g = z.segment(2 * h, h).array().tanh().matrix();
    Vec o = z.segment(3 * h, h).unaryExpr([](double v) { return sigmoid(v); });

    LstmState next;
    next.cell = f.cwiseProduct(state.cell) + i.cwiseProduct(g);
    Vec tanh_c = next.cell.array().tanh().matrix();
    next.hidden = o.cwiseProduct(tanh_c);
    if (cache) {
        cache->h_prev = state.hidden;
        cache->c_prev = state.cell;
        cache->i = std::move(i);
        cache->f = std::move(f);
        cache->g = std::move(g);
        cache->o = std::move(o);
        cache->tanh_c = std::move(tanh_c);
    }
    return next;
}

struct SequenceResult {
    LstmState final_state;
    std::vector<Vec> hiddens;
};

/// Folds lstm_step over `inputs` starting from the zero state.
template <class Input>
SequenceResult run_sequence(const LstmCell& cell, std::span<const Input> inputs) {
    SequenceResult r{LstmState::zero(cell.hidden_size()), {}};
    r.hiddens.reserve(inputs.size());
    for (const Input& x : inputs) {
        r.final_state = lstm_step(cell, r.final_state, x);
        r.hiddens.push_back(r.final_state.hidden);
    }
    return r;
}

/// Forward pass that records what backward() needs.
template <class Input>
struct LstmTrace {
    std::vector<Input> inputs;
    std::vector<StepCache> steps;
    std::vector<Vec> hiddens;
};

template <class Input>
LstmTrace<Input> lstm_forward(const LstmCell& cell, std::span<const Input> inputs) {
    LstmTrace<Input> t;
    t.inputs.assign(inputs.begin(), inputs.end());
    t.steps.resize(inputs.size());
    t.hiddens.reserve(inputs.size());
    LstmState s = LstmState::zero(cell.hidden_size());
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        s = lstm_step(cell, s, inputs[k], &t.steps[k]);
        t.hiddens.push_back(s.hidden);
    }
    return t;
}

/// Backpropagation through time. `dh` holds the loss gradient with respect
/// to each step's hidden output (empty entries mean zero). Parameter
/// gradients are added to `grad`; input gradients are written to `dx` when
/// requested (dense inputs only).
template <class Input>
void lstm_backward(const LstmCell& cell, const LstmTrace<Input>& trace, std::span<const Vec> dh, LstmCell& grad,
                   std::vector<Vec>* dx = nullptr) {
    const Eigen::Index h = cell.hidden_size();
    const std::size_t T = trace.steps.size();
    if (dh.size() != T) throw ShapeError("gradient sequence length mismatch");
    if (dx) dx->assign(T, Vec());

    Vec dh_next = Vec::Zero(h);
    Vec dc_next = Vec::Zero(h);
    Vec dz(4 * h);
    for (std::size_t k = T; k-- > 0;) {
        const StepCache& s = trace.steps[k];
        Vec dh_t = dh_next;
        if (dh[k].size() != 0) dh_t += dh[k];

        const Vec d_o = dh_t.cwiseProduct(s.tanh_c);
        const Vec dc = dc_next + dh_t.cwiseProduct(s.o).cwiseProduct(
                                     (1.0 - s.tanh_c.array().square()).matrix());
        dz.segment(0, h) = dc.cwiseProduct(s.g).cwiseProduct(s.i.cwiseProduct((1.0 - s.i.array()).matrix()));
        dz.segment(h, h) = dc.cwiseProduct(s.c_prev).cwiseProduct(s.f.cwiseProduct((1.0 - s.f.array()).matrix()));
        dz.segment(2 * h, h) = dc.cwiseProduct(s.i).cwiseProduct((1.0 - s.g.array().square()).matrix());
        dz.segment(3 * h, h) = d_o.cwiseProduct(s.o.cwiseProduct((1.0 - s.o.array()).matrix()));

        detail::accumulate_input_grad(grad.W, dz, trace.inputs[k]);
        grad.U.noalias() += dz * s.h_prev.transpose();
        grad.b += dz;

        if constexpr (std::is_same_v<Input, Vec>) {
            if (dx) (*dx)[k].noalias() = cell.W.transpose() * dz;
        }
        dh_next.noalias() = cell.U.transpose() * dz;
        dc_next = dc.cwiseProduct(s.f);
    }
}

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t batch_size = 16;
    std::size_t epochs = 5;
    double clip_norm = 5.0;
    std::uint64_t seed = 1;
    double momentum = 0.9;
    double lr_decay = 1.0; // learning rate multiplier applied after each epoch
};

struct TrainReport {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_accuracy;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Global L2 norm over all gradient tensors.
inline double global_norm(std::span<const TensorRef> grads) {
    double sq = 0;
    for (const auto& g : grads)
        for (double v : g.values()) sq += v * v;
    return std::sqrt(sq);
}

/// Gradient descent with momentum and global-norm clipping:
/// v <- mu*v + g;  p <- p - lr*v.
class MomentumSgd {
public:
    MomentumSgd(double momentum, double clip_norm) : momentum_(momentum), clip_(clip_norm) {}

    void step(std::span<const TensorRef> params, std::span<const TensorRef> grads, double lr) {
        if (params.size() != grads.size()) throw ShapeError("parameter/gradient count mismatch");
        const double norm = global_norm(grads);
        if (!std::isfinite(norm)) throw NonFiniteGradient("gradient norm is not finite");
        const double scale = (clip_ > 0 && norm > clip_) ? clip_ / norm : 1.0;
        if (velocity_.empty()) {
            velocity_.resize(params.size());
            for (std::size_t t = 0; t < params.size(); ++t)
                velocity_[t].assign(static_cast<std::size_t>(params[t].size()), 0.0);
        }
        for (std::size_t t = 0; t < params.size(); ++t) {
            if (params[t].size() != grads[t].size()) throw ShapeError("tensor shape mismatch for " + params[t].name);
            auto p = params[t].values();
            auto g = grads[t].values();
            auto& v = velocity_[t];
            for (std::size_t k = 0; k < p.size(); ++k) {
                v[k] = momentum_ * v[k] + scale * g[k];
                p[k] -= lr * v[k];
            }
        }
    }

private:
    double momentum_;
    double clip_;
    std::vector<std::vector<double>> velocity_;
};

/// Generic minibatch loop shared by both networks. `Model` must provide
/// tensors() and set_zero(); `example_grad(model, index, grad)` adds one
/// example's gradient into `grad` and returns (loss, accuracy in [0, 1]).
template <class Model, class ExampleGrad, class ZeroLike>
TrainReport minibatch_train(Model& model, std::size_t n_examples, const TrainConfig& config, ExampleGrad&& example_grad,
                            ZeroLike&& zero_like, const EpochCallback& on_epoch = {}) {
    TrainReport report;
    if (config.epochs == 0) return report;
    if (!(config.learning_rate >= 0)) throw DataError("learning rate must be non-negative");
    const std::size_t batch = config.batch_size == 0 ? 1 : config.batch_size;

    Rng rng(config.seed);
    MomentumSgd opt(config.momentum, config.clip_norm);
    Model grad = zero_like(model);
    std::vector<std::size_t> order(n_examples);
    for (std::size_t k = 0; k < n_examples; ++k) order[k] = k;
    double lr = config.learning_rate;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0;
        double correct = 0;
        for (std::size_t start = 0; start < n_examples; start += batch) {
            const std::size_t end = std::min(n_examples, start + batch);
            grad.set_zero();
            for (std::size_t k = start; k < end; ++k) {
                auto [loss, ok] = example_grad(model, order[k], grad);
                if (!std::isfinite(loss)) throw NonFiniteGradient("loss is not finite");
                loss_sum += loss;
                correct += ok;
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            auto g = grad.tensors();
            for (auto& t : g)
                for (double& v : t.values()) v *= inv;
            auto p = model.tensors();
            opt.step(p, g, lr);
        }
        const double mean_loss = loss_sum / static_cast<double>(n_examples);
        report.epoch_loss.push_back(mean_loss);
        report.epoch_accuracy.push_back(correct / static_cast<double>(n_examples));
        if (on_epoch) on_epoch(epoch, mean_loss);
        lr *= config.lr_decay;
    }
    return report;
}

} // namespace deminify::nn
