#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "deminify/autoencoder.hpp"
#include "deminify/error.hpp"
#include "deminify/nn.hpp"
#include "deminify/vocabulary.hpp"

namespace deminify {

/// Name predictor: an LSTM over the (reversed) embedding sequence followed
/// by a softmax over the output vocabulary.
struct PredictorModel {
    nn::LstmCell lstm;       // embed -> hidden
    nn::DenseSoftmax readout; // hidden -> |V_out|
    std::size_t l = 0;

    std::size_t embed_size() const { return static_cast<std::size_t>(lstm.input_size()); }
    std::size_t hidden_size() const { return static_cast<std::size_t>(lstm.hidden_size()); }
    std::size_t vocab_size() const { return static_cast<std::size_t>(readout.W.rows()); }

    static PredictorModel zeros(std::size_t embed, std::size_t l, std::size_t hidden, std::size_t vocab) {
        const auto e = static_cast<Eigen::Index>(embed);
        const auto h = static_cast<Eigen::Index>(hidden);
        return {nn::LstmCell::zeros(e, h), nn::DenseSoftmax::zeros(h, static_cast<Eigen::Index>(vocab)), l};
    }

    static PredictorModel random(std::size_t embed, std::size_t l, std::size_t hidden, std::size_t vocab,
                                 std::uint64_t seed) {
        nn::Rng rng(seed);
        const auto e = static_cast<Eigen::Index>(embed);
        const auto h = static_cast<Eigen::Index>(hidden);
        PredictorModel m;
        m.lstm = nn::LstmCell::random(e, h, rng);
        m.readout = nn::DenseSoftmax::random(h, static_cast<Eigen::Index>(vocab), rng);
        m.l = l;
        return m;
    }

    void set_zero() {
        lstm.set_zero();
        readout.set_zero();
    }

    std::vector<nn::TensorRef> tensors() {
        auto t = lstm.tensors("pr.lstm.");
        auto d = readout.tensors("pr.out.");
        t.insert(t.end(), d.begin(), d.end());
        return t;
    }
};

namespace detail {

inline std::vector<nn::Vec> reversed_inputs(const PredictorModel& m, std::span<const Embedding> embeddings) {
    if (embeddings.size() != m.l)
        throw ShapeError("expected " + std::to_string(m.l) + " embeddings, got " + std::to_string(embeddings.size()));
    std::vector<nn::Vec> in(embeddings.rbegin(), embeddings.rend());
    for (const auto& e : in)
        if (static_cast<std::size_t>(e.size()) != m.embed_size()) throw ShapeError("embedding size mismatch");
    return in;
}

} // namespace detail

/// The sequence is reversed first so that padding embeddings come first.
inline nn::Vec predict_distribution(const PredictorModel& m, std::span<const Embedding> embeddings) {
    auto in = detail::reversed_inputs(m, embeddings);
    auto r = nn::run_sequence<nn::Vec>(m.lstm, in);
    return nn::softmax_apply(m.readout, r.final_state.hidden);
}

struct RankedPrediction {
    std::string name;
    double probability = 0;
    std::size_t index = 0; // position in the output vocabulary
    bool assignable = true; // false for <UNK>
};

using RankedPredictions = std::vector<RankedPrediction>;

/// All vocabulary entries by descending probability; ties keep the lower
/// vocabulary index first.
inline RankedPredictions rank(const nn::Vec& dist, const Vocabulary& v) {
    if (static_cast<std::size_t>(dist.size()) != v.size()) throw ShapeError("distribution/vocabulary size mismatch");
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dist(static_cast<Eigen::Index>(a)) > dist(static_cast<Eigen::Index>(b));
    });
    const std::size_t unk = v.unk();
    RankedPredictions out;
    out.reserve(order.size());
    for (std::size_t i : order) out.push_back({v.at(i), dist(static_cast<Eigen::Index>(i)), i, i != unk});
    return out;
}

struct PredictorExample {
    std::vector<Embedding> embeddings; // l entries, in summary order
    std::size_t target = 0;            // output-vocabulary index (UNK if unknown)
};

struct PredictionStep {
    double loss = 0;
    bool correct = false;
};

inline PredictionStep prediction_grad(const PredictorModel& m, const PredictorExample& ex, PredictorModel* grad) {
    auto in = detail::reversed_inputs(m, ex.embeddings);
    if (ex.target >= m.vocab_size()) throw ShapeError("target index out of range");
    auto trace = nn::lstm_forward<nn::Vec>(m.lstm, in);
    const nn::Vec h = trace.hiddens.empty() ? nn::Vec::Zero(m.lstm.hidden_size()) : trace.hiddens.back();
    nn::Vec p = nn::softmax_apply(m.readout, h);
    PredictionStep r;
    r.loss = nn::cross_entropy(p, ex.target);
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    r.correct = static_cast<std::size_t>(best) == ex.target;
    if (grad) {
        nn::Vec dz = nn::cross_entropy_softmax_grad(p, ex.target);
        grad->readout.W.noalias() += dz * h.transpose();
        grad->readout.b += dz;
        if (!in.empty()) {
            std::vector<nn::Vec> dh(in.size());
            dh.back() = m.readout.W.transpose() * dz;
            nn::lstm_backward<nn::Vec>(m.lstm, trace, dh, grad->lstm);
        }
    }
    return r;
}

struct PredictorDims {
    std::size_t embed = 16;
    std::size_t l = 5;
    std::size_t hidden = 64;
    std::size_t vocab = 512;
};

using PredictorEpochCallback = std::function<void(std::size_t epoch, double loss, const PredictorModel&)>;

struct PredictorTraining {
    PredictorModel model;
    nn::TrainReport report;
};

inline PredictorTraining train_predictor(std::span<const PredictorExample> examples, const PredictorDims& dims,
                                         const nn::TrainConfig& config, const PredictorEpochCallback& on_epoch = {}) {
    if (examples.empty()) throw EmptyCorpus("no examples to train the predictor on");
    PredictorTraining out{PredictorModel::random(dims.embed, dims.l, dims.hidden, dims.vocab, config.seed), {}};
    out.report = nn::minibatch_train(
        out.model, examples.size(), config,
        [&](const PredictorModel& m, std::size_t k, PredictorModel& grad) {
            auto r = prediction_grad(m, examples[k], &grad);
            return std::pair{r.loss, r.correct ? 1.0 : 0.0};
        },
        [](const PredictorModel& m) {
            return PredictorModel::zeros(m.embed_size(), m.l, m.hidden_size(), m.vocab_size());
        },
        [&](std::size_t epoch, double loss) {
            if (on_epoch) on_epoch(epoch, loss, out.model);
        });
    return out;
}

/// Fraction of examples whose argmax equals the target.
inline double top1_accuracy(const PredictorModel& m, std::span<const PredictorExample> examples) {
    if (examples.empty()) return 0;
    std::size_t ok = 0;
    for (const auto& ex : examples) ok += prediction_grad(m, ex, nullptr).correct ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(examples.size());
}

} // namespace deminify
