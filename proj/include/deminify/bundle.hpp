#pragma once

#include <charconv>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>

#include "deminify/autoencoder.hpp"
#include "deminify/container.hpp"
#include "deminify/error.hpp"
#include "deminify/predictor.hpp"
#include "deminify/vocabulary.hpp"

namespace deminify {

struct Hyperparams {
    std::size_t q = 3;
    std::size_t l = 5;
    std::size_t vin = 256;  // requested |V_inp|
    std::size_t vout = 512; // requested |V_out|
    std::size_t embed = 16;
    std::size_t hidden = 64;

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct TrainingMeta {
    std::uint64_t seed = 0;
    std::size_t ae_epochs = 0;
    std::size_t pr_epochs = 0;
    std::string corpus_digest;
};

namespace detail {

inline std::string write_frequencies(const FrequencyTable& f) {
    std::ostringstream os;
    for (const auto& [item, count] : f) {
        os << count << '\t';
        for (char c : item) {
            if (c == '\\') os << "\\\\";
            else if (c == '\n') os << "\\n";
            else if (c == '\r') os << "\\r";
            else os << c;
        }
        os << '\n';
    }
    return os.str();
}

inline FrequencyTable read_frequencies(const std::string& text) {
    FrequencyTable f;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ModelMismatch("bad frequency record");
        std::uint64_t n = 0;
        auto [p, ec] = std::from_chars(line.data(), line.data() + tab, n);
        if (ec != std::errc() || p != line.data() + tab) throw ModelMismatch("bad frequency count");
        std::string item;
        for (std::size_t i = tab + 1; i < line.size(); ++i) {
            if (line[i] == '\\' && i + 1 < line.size()) {
                char e = line[++i];
                item += e == 'n' ? '\n' : e == 'r' ? '\r' : e;
            } else {
                item += line[i];
            }
        }
        f[item] = n;
    }
    return f;
}

inline std::size_t to_size(const std::string& s, std::string_view key) {
    std::size_t n = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ModelMismatch("bad value for " + std::string(key) + ": " + s);
    return n;
}

// Shortest round-trip decimal for a double.
inline std::string format_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double to_double(const std::string& s, std::string_view key) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ModelMismatch("bad value for " + std::string(key) + ": " + s);
    return v;
}

} // namespace detail

/// Everything needed to recover names: both networks, both vocabularies and
/// the training-corpus frequency tables behind them.
struct ModelBundle {
    Hyperparams hp;
    AutoencoderModel autoencoder;
    PredictorModel predictor;
    Vocabulary input_vocab;
    Vocabulary output_vocab;
    FrequencyTable input_frequencies; // abstract tokens over training summaries
    FrequencyTable name_frequencies;  // original local names
    TrainingMeta meta;

    /// Throws ModelMismatch unless the networks agree with the vocabularies
    /// and hyperparameters.
    void check_consistent() const {
        auto fail = [](const std::string& what) { throw ModelMismatch("inconsistent model bundle: " + what); };
        if (autoencoder.vocab_size() != input_vocab.size()) fail("autoencoder width vs input vocabulary");
        if (autoencoder.q != hp.q) fail("q");
        if (autoencoder.embed_size() != hp.embed || predictor.embed_size() != hp.embed) fail("embedding size");
        if (predictor.l != hp.l) fail("l");
        if (predictor.hidden_size() != hp.hidden) fail("hidden size");
        if (predictor.vocab_size() != output_vocab.size()) fail("predictor width vs output vocabulary");
        if (input_vocab.kind() != VocabKind::input || output_vocab.kind() != VocabKind::output)
            fail("vocabulary kinds");
    }

    Container to_container() const {
        check_consistent();
        Container c;
        c.set("q", std::to_string(hp.q));
        c.set("l", std::to_string(hp.l));
        c.set("vin", std::to_string(hp.vin));
        c.set("vout", std::to_string(hp.vout));
        c.set("embed", std::to_string(hp.embed));
        c.set("hidden", std::to_string(hp.hidden));
        c.set("vin.size", std::to_string(input_vocab.size()));
        c.set("vout.size", std::to_string(output_vocab.size()));
        c.set("ae.logit_scale", detail::format_double(autoencoder.logit_scale));
        c.set("vin.digest", input_vocab.digest());
        c.set("vout.digest", output_vocab.digest());
        c.set("seed", std::to_string(meta.seed));
        c.set("ae.epochs", std::to_string(meta.ae_epochs));
        c.set("pr.epochs", std::to_string(meta.pr_epochs));
        c.set("corpus.digest", meta.corpus_digest);
        auto ae = const_cast<AutoencoderModel&>(autoencoder).tensors();
        auto pr = const_cast<PredictorModel&>(predictor).tensors();
        c.add_tensors(ae);
        c.add_tensors(pr);
        c.blobs.push_back({"vocab.input", input_vocab.serialize()});
        c.blobs.push_back({"vocab.output", output_vocab.serialize()});
        c.blobs.push_back({"freq.input", detail::write_frequencies(input_frequencies)});
        c.blobs.push_back({"freq.names", detail::write_frequencies(name_frequencies)});
        return c;
    }

    static ModelBundle from_container(const Container& c) {
        ModelBundle b;
        auto size = [&](std::string_view k) { return detail::to_size(c.require(k), k); };
        b.hp.q = size("q");
        b.hp.l = size("l");
        b.hp.vin = size("vin");
        b.hp.vout = size("vout");
        b.hp.embed = size("embed");
        b.hp.hidden = size("hidden");
        b.meta.seed = size("seed");
        b.meta.ae_epochs = size("ae.epochs");
        b.meta.pr_epochs = size("pr.epochs");
        b.meta.corpus_digest = c.require("corpus.digest");

        auto blob = [&](std::string_view name) -> const std::string& {
            const auto* bl = c.find_blob(name);
            if (!bl) throw ModelMismatch("model file lacks '" + std::string(name) + "'");
            return bl->bytes;
        };
        try {
            b.input_vocab = Vocabulary::parse(blob("vocab.input"));
            b.output_vocab = Vocabulary::parse(blob("vocab.output"));
        } catch (const DataError& e) {
            throw ModelMismatch(std::string("embedded vocabulary: ") + e.what());
        }
        if (b.input_vocab.digest() != c.require("vin.digest"))
            throw ModelMismatch("input vocabulary digest does not match the model header");
        if (b.output_vocab.digest() != c.require("vout.digest"))
            throw ModelMismatch("output vocabulary digest does not match the model header");
        if (b.input_vocab.size() != size("vin.size") || b.output_vocab.size() != size("vout.size"))
            throw ModelMismatch("vocabulary sizes do not match the model header");
        b.input_frequencies = detail::read_frequencies(blob("freq.input"));
        b.name_frequencies = detail::read_frequencies(blob("freq.names"));

        b.autoencoder = AutoencoderModel::zeros(b.input_vocab.size(), b.hp.q, b.hp.embed);
        b.autoencoder.logit_scale = detail::to_double(c.require("ae.logit_scale"), "ae.logit_scale");
        b.predictor = PredictorModel::zeros(b.hp.embed, b.hp.l, b.hp.hidden, b.output_vocab.size());
        c.load_tensors(b.autoencoder.tensors());
        c.load_tensors(b.predictor.tensors());
        b.check_consistent();
        return b;
    }

    std::string serialize() const { return to_container().serialize(); }
    void save(const std::string& path) const { to_container().save(path); }
    static ModelBundle load(const std::string& path) { return from_container(Container::load(path)); }
    static ModelBundle parse(const std::string& bytes) { return from_container(Container::parse(bytes)); }
};

} // namespace deminify
