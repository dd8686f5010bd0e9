#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "deminify/context.hpp"
#include "deminify/error.hpp"
#include "deminify/nn.hpp"
#include "deminify/vocabulary.hpp"

namespace deminify {

using Embedding = nn::Vec;

/// ln|V|, floored at 1. With this scale a saturated decoder state can put
/// probability close to 1 - 1/|V| on a single entry.
inline double default_logit_scale(std::size_t vocab) {
    return std::max(1.0, std::log(static_cast<double>(vocab)));
}

/// Sequence autoencoder over one-hot contexts. The encoder's final hidden
/// state is the embedding; the decoder sees that embedding at each of the
/// 2q steps and its hidden state, times a fixed logit scale, is read out
/// through a softmax directly.
struct AutoencoderModel {
    nn::LstmCell encoder; // vocab -> embed
    nn::LstmCell decoder; // embed -> vocab
    std::size_t q = 0;
    double logit_scale = 1.0;

    std::size_t vocab_size() const { return static_cast<std::size_t>(encoder.input_size()); }
    std::size_t embed_size() const { return static_cast<std::size_t>(encoder.hidden_size()); }
    std::size_t steps() const { return 2 * q; }

    static AutoencoderModel zeros(std::size_t vocab, std::size_t q, std::size_t embed) {
        const auto v = static_cast<Eigen::Index>(vocab);
        const auto e = static_cast<Eigen::Index>(embed);
        return {nn::LstmCell::zeros(v, e), nn::LstmCell::zeros(e, v), q, default_logit_scale(vocab)};
    }

    static AutoencoderModel random(std::size_t vocab, std::size_t q, std::size_t embed, std::uint64_t seed) {
        nn::Rng rng(seed);
        const auto v = static_cast<Eigen::Index>(vocab);
        const auto e = static_cast<Eigen::Index>(embed);
        AutoencoderModel m;
        m.encoder = nn::LstmCell::random(v, e, rng);
        m.decoder = nn::LstmCell::random(e, v, rng);
        m.q = q;
        m.logit_scale = default_logit_scale(vocab);
        return m;
    }

    void set_zero() {
        encoder.set_zero();
        decoder.set_zero();
    }

    std::vector<nn::TensorRef> tensors() {
        auto t = encoder.tensors("ae.enc.");
        auto d = decoder.tensors("ae.dec.");
        t.insert(t.end(), d.begin(), d.end());
        return t;
    }
};

namespace detail {

inline std::vector<nn::OneHotInput> as_inputs(const AutoencoderModel& m, std::span<const OneHot> context) {
    if (context.size() != m.steps())
        throw ShapeError("context has " + std::to_string(context.size()) + " tokens, expected " +
                         std::to_string(m.steps()));
    std::vector<nn::OneHotInput> in;
    in.reserve(context.size());
    for (const OneHot& h : context) {
        if (h.length != m.vocab_size() || h.hot >= h.length)
            throw ShapeError("one-hot width " + std::to_string(h.length) + " does not match vocabulary size " +
                             std::to_string(m.vocab_size()));
        in.push_back({h.hot});
    }
    return in;
}

} // namespace detail

inline Embedding encode(const AutoencoderModel& m, std::span<const OneHot> context) {
    auto in = detail::as_inputs(m, context);
    return nn::run_sequence<nn::OneHotInput>(m.encoder, in).final_state.hidden;
}

/// 2q probability vectors over the input vocabulary.
inline std::vector<nn::Vec> decode(const AutoencoderModel& m, const Embedding& e) {
    if (static_cast<std::size_t>(e.size()) != m.embed_size()) throw ShapeError("embedding size mismatch");
    std::vector<nn::Vec> repeated(m.steps(), e);
    auto r = nn::run_sequence<nn::Vec>(m.decoder, repeated);
    std::vector<nn::Vec> out;
    out.reserve(r.hiddens.size());
    for (const auto& h : r.hiddens) out.push_back(nn::softmax(m.logit_scale * h));
    return out;
}

struct ReconstructionStep {
    double loss = 0;     // mean cross-entropy per step
    double accuracy = 0; // fraction of steps whose argmax matches
};

/// Forward and backward pass for one context; gradients are added to `grad`.
inline ReconstructionStep reconstruction_grad(const AutoencoderModel& m, std::span<const OneHot> context,
                                              AutoencoderModel* grad) {
    auto in = detail::as_inputs(m, context);
    const std::size_t T = in.size();
    auto enc = nn::lstm_forward<nn::OneHotInput>(m.encoder, in);
    const Embedding e = enc.hiddens.empty() ? Embedding::Zero(m.encoder.hidden_size()) : enc.hiddens.back();
    std::vector<nn::Vec> repeated(T, e);
    auto dec = nn::lstm_forward<nn::Vec>(m.decoder, repeated);

    ReconstructionStep r;
    std::vector<nn::Vec> dh(T);
    for (std::size_t t = 0; t < T; ++t) {
        nn::Vec p = nn::softmax(m.logit_scale * dec.hiddens[t]);
        r.loss += nn::cross_entropy(p, in[t].index);
        Eigen::Index best = 0;
        p.maxCoeff(&best);
        r.accuracy += static_cast<std::size_t>(best) == in[t].index ? 1.0 : 0.0;
        if (grad)
            dh[t] = nn::cross_entropy_softmax_grad(p, in[t].index) * (m.logit_scale / static_cast<double>(T));
    }
    if (T > 0) {
        r.loss /= static_cast<double>(T);
        r.accuracy /= static_cast<double>(T);
    }
    if (grad && T > 0) {
        std::vector<nn::Vec> dx;
        nn::lstm_backward<nn::Vec>(m.decoder, dec, dh, grad->decoder, &dx);
        std::vector<nn::Vec> dh_enc(T);
        dh_enc[T - 1] = nn::Vec::Zero(m.encoder.hidden_size());
        for (const auto& d : dx) dh_enc[T - 1] += d;
        nn::lstm_backward<nn::OneHotInput>(m.encoder, enc, dh_enc, grad->encoder);
    }
    return r;
}

struct AutoencoderDims {
    std::size_t vocab = 256;
    std::size_t q = 3;
    std::size_t embed = 16;
    double logit_scale = 0; // 0: default_logit_scale(vocab)
};

using AutoencoderEpochCallback = std::function<void(std::size_t epoch, double loss, const AutoencoderModel&)>;

struct AutoencoderTraining {
    AutoencoderModel model;
    nn::TrainReport report;
};

/// Trains on encoded contexts (each 2q one-hots) minimizing per-step
/// reconstruction cross-entropy.
inline AutoencoderTraining train_autoencoder(std::span<const std::vector<OneHot>> contexts,
                                             const AutoencoderDims& dims, const nn::TrainConfig& config,
                                             const AutoencoderEpochCallback& on_epoch = {}) {
    if (contexts.empty()) throw EmptyCorpus("no contexts to train the autoencoder on");
    AutoencoderTraining out{AutoencoderModel::random(dims.vocab, dims.q, dims.embed, config.seed), {}};
    if (dims.logit_scale > 0) out.model.logit_scale = dims.logit_scale;
    out.report = nn::minibatch_train(
        out.model, contexts.size(), config,
        [&](const AutoencoderModel& m, std::size_t k, AutoencoderModel& grad) {
            auto r = reconstruction_grad(m, contexts[k], &grad);
            return std::pair{r.loss, r.accuracy};
        },
        [](const AutoencoderModel& m) {
            auto z = AutoencoderModel::zeros(m.vocab_size(), m.q, m.embed_size());
            z.logit_scale = m.logit_scale;
            return z;
        },
        [&](std::size_t epoch, double loss) {
            if (on_epoch) on_epoch(epoch, loss, out.model);
        });
    return out;
}

/// Mean per-step argmax reconstruction accuracy.
inline double reconstruction_accuracy(const AutoencoderModel& m, std::span<const std::vector<OneHot>> contexts) {
    if (contexts.empty()) return 0;
    double acc = 0;
    for (const auto& c : contexts) acc += reconstruction_grad(m, c, nullptr).accuracy;
    return acc / static_cast<double>(contexts.size());
}

/// One embedding per context of the summary, in order.
inline std::vector<Embedding> embed_summary(const AutoencoderModel& m, const UsageSummary& u, const Vocabulary& v) {
    std::vector<Embedding> out;
    out.reserve(u.contexts.size());
    for (const Context& c : u.contexts) out.push_back(encode(m, encode_context(c, v)));
    return out;
}

} // namespace deminify
