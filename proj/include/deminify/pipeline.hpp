#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "deminify/autoencoder.hpp"
#include "deminify/bundle.hpp"
#include "deminify/context.hpp"
#include "deminify/digest.hpp"
#include "deminify/error.hpp"
#include "deminify/mangle.hpp"
#include "deminify/predictor.hpp"
#include "deminify/scope.hpp"
#include "deminify/vocabulary.hpp"

namespace deminify {

/// Runs fn(0..n-1) on up to `jobs` threads. The first exception thrown by
/// any task is rethrown after all threads finish.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw IoError("cannot read " + p.string());
    std::ostringstream os;
    os << is.rdbuf();
    if (is.bad()) throw IoError("read failed: " + p.string());
    return os.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view data) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + p.string());
    os.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!os.flush()) throw IoError("write failed: " + p.string());
}

/// Characters as UTF-8 code points (continuation bytes are not counted).
inline std::size_t count_chars(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
}

struct PipelineConfig {
    Hyperparams hp;
    std::uint64_t seed = 1;
    std::size_t ae_epochs = 5;
    std::size_t pr_epochs = 5;
    double ae_lr = 0.1;
    double pr_lr = 0.1;
    std::size_t ae_batch = 16;
    std::size_t pr_batch = 16;
    double lr_decay = 1.0;
    double momentum = 0.9;
    double clip = 5.0;
    std::size_t max_chars = 131072;
    double min_mean_local_length = 2.0;
    std::size_t jobs = 1;

    static const std::vector<std::string>& keys() {
        static const std::vector<std::string> k{
            "q",        "l",        "vin",      "vout",   "embed",    "hidden", "seed",      "ae_epochs",
            "pr_epochs", "ae_lr",   "pr_lr",    "ae_batch", "pr_batch", "lr_decay", "momentum", "clip",
            "max_chars", "min_mean_local_length", "jobs"};
        return k;
    }

    void set(std::string_view key, std::string_view value) {
        auto integer = [&](auto& field) {
            std::uint64_t v = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || p != value.data() + value.size())
                throw DataError("config: '" + std::string(key) + "' needs a non-negative integer, got '" +
                                std::string(value) + "'");
            field = static_cast<std::remove_reference_t<decltype(field)>>(v);
        };
        auto real = [&](double& field) {
            double v = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || p != value.data() + value.size() || !std::isfinite(v))
                throw DataError("config: '" + std::string(key) + "' needs a number, got '" + std::string(value) + "'");
            field = v;
        };
        if (key == "q") integer(hp.q);
        else if (key == "l") integer(hp.l);
        else if (key == "vin") integer(hp.vin);
        else if (key == "vout") integer(hp.vout);
        else if (key == "embed") integer(hp.embed);
        else if (key == "hidden") integer(hp.hidden);
        else if (key == "seed") integer(seed);
        else if (key == "ae_epochs") integer(ae_epochs);
        else if (key == "pr_epochs") integer(pr_epochs);
        else if (key == "ae_lr") real(ae_lr);
        else if (key == "pr_lr") real(pr_lr);
        else if (key == "ae_batch") integer(ae_batch);
        else if (key == "pr_batch") integer(pr_batch);
        else if (key == "lr_decay") real(lr_decay);
        else if (key == "momentum") real(momentum);
        else if (key == "clip") real(clip);
        else if (key == "max_chars") integer(max_chars);
        else if (key == "min_mean_local_length") real(min_mean_local_length);
        else if (key == "jobs") integer(jobs);
        else throw DataError("config: unknown key '" + std::string(key) + "'");
    }

    void validate() const {
        auto positive = [](std::size_t v, const char* what) {
            if (v == 0) throw DataError(std::string("config: ") + what + " must be positive");
        };
        positive(hp.q, "q");
        positive(hp.l, "l");
        positive(hp.embed, "embed");
        positive(hp.hidden, "hidden");
        if (hp.vin < 3) throw DataError("config: vin must be at least 3");
        if (hp.vout < 1) throw DataError("config: vout must be at least 1");
        if (ae_lr < 0 || pr_lr < 0) throw DataError("config: learning rates must be non-negative");
    }

    /// `key = value` lines; blank lines and `#` comments are skipped.
    void merge(std::string_view text) {
        std::size_t line_no = 0;
        std::istringstream is{std::string(text)};
        std::string line;
        auto trim = [](std::string_view s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string_view::npos) return std::string_view{};
            return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
        };
        while (std::getline(is, line)) {
            ++line_no;
            std::string_view t = trim(line);
            if (t.empty() || t.front() == '#') continue;
            auto eq = t.find('=');
            if (eq == std::string_view::npos)
                throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
            set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        }
    }

    static PipelineConfig parse(std::string_view text) {
        PipelineConfig c;
        c.merge(text);
        c.validate();
        return c;
    }

    static PipelineConfig load(const std::filesystem::path& p) { return parse(read_file(p)); }

    nn::TrainConfig autoencoder_training() const {
        return {ae_lr, ae_batch, ae_epochs, clip, seed, momentum, lr_decay};
    }
    nn::TrainConfig predictor_training() const {
        // distinct stream so the two phases do not share shuffles
        return {pr_lr, pr_batch, pr_epochs, clip, seed ^ 0x5DEECE66DULL, momentum, lr_decay};
    }
};

// ---------------------------------------------------------------- ingest

enum class IngestStatus { accepted, too_large, duplicate, parse_failure, already_minified };

inline const char* status_name(IngestStatus s) {
    switch (s) {
    case IngestStatus::accepted: return "accepted";
    case IngestStatus::too_large: return "too-large";
    case IngestStatus::duplicate: return "duplicate";
    case IngestStatus::parse_failure: return "parse-failure";
    case IngestStatus::already_minified: return "already-minified";
    }
    return "?";
}

inline IngestStatus parse_status(std::string_view s) {
    for (auto v : {IngestStatus::accepted, IngestStatus::too_large, IngestStatus::duplicate,
                   IngestStatus::parse_failure, IngestStatus::already_minified})
        if (s == status_name(v)) return v;
    throw DataError("unknown ingest status '" + std::string(s) + "'");
}

struct ManifestEntry {
    std::string path;
    std::size_t bytes = 0;
    std::size_t chars = 0;
    std::size_t tokens = 0;
    std::size_t locals = 0;
    std::string sha256;
    IngestStatus status = IngestStatus::accepted;
    std::string detail; // parse error message, duplicate's original, ...

    bool accepted() const { return status == IngestStatus::accepted; }
    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
    std::vector<ManifestEntry> entries;

    std::vector<const ManifestEntry*> accepted() const {
        std::vector<const ManifestEntry*> out;
        for (const auto& e : entries)
            if (e.accepted()) out.push_back(&e);
        return out;
    }

    std::string to_jsonl() const {
        std::string out;
        for (const auto& e : entries) {
            nlohmann::ordered_json j{{"path", e.path},     {"bytes", e.bytes},   {"chars", e.chars},
                                     {"tokens", e.tokens}, {"locals", e.locals}, {"sha256", e.sha256},
                                     {"status", e.accepted() ? "accepted" : "rejected"}};
            if (!e.accepted()) j["reason"] = status_name(e.status);
            if (!e.detail.empty()) j["detail"] = e.detail;
            out += j.dump();
            out += '\n';
        }
        return out;
    }

    static Manifest from_jsonl(std::string_view text) {
        Manifest m;
        std::istringstream is{std::string(text)};
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                auto j = nlohmann::json::parse(line);
                ManifestEntry e;
                e.path = j.at("path").get<std::string>();
                e.bytes = j.at("bytes").get<std::size_t>();
                e.chars = j.at("chars").get<std::size_t>();
                e.tokens = j.at("tokens").get<std::size_t>();
                e.locals = j.at("locals").get<std::size_t>();
                e.sha256 = j.at("sha256").get<std::string>();
                const auto status = j.at("status").get<std::string>();
                if (status == "accepted") e.status = IngestStatus::accepted;
                else if (status == "rejected") e.status = parse_status(j.at("reason").get<std::string>());
                else throw DataError("bad status '" + status + "'");
                if (j.contains("detail")) e.detail = j["detail"].get<std::string>();
                m.entries.push_back(std::move(e));
            } catch (const nlohmann::json::exception& ex) {
                throw DataError("manifest line " + std::to_string(line_no) + ": " + ex.what());
            }
        }
        return m;
    }

    void save(const std::filesystem::path& p) const { write_file(p, to_jsonl()); }
    static Manifest load(const std::filesystem::path& p) { return from_jsonl(read_file(p)); }
};

inline std::vector<std::filesystem::path> list_sources(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (fs::recursive_directory_iterator it(dir, ec), end; it != end; it.increment(ec)) {
        if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
        if (it->is_regular_file() && it->path().extension() == ".js") out.push_back(it->path());
    }
    if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
    std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
        return a.generic_string() < b.generic_string();
    });
    return out;
}

/// Screens every `.js` file under `dir`. Checks, in order: size, exact
/// duplicate of an earlier file (by path order), parse failure, and mean
/// local-name length below the minified threshold.
inline Manifest ingest(const std::filesystem::path& dir, const PipelineConfig& config) {
    const auto paths = list_sources(dir);
    Manifest m;
    m.entries.resize(paths.size());
    std::vector<bool> parsed_ok(paths.size(), false);
    std::vector<double> mean_length(paths.size(), 0);

    parallel_for(paths.size(), config.jobs, [&](std::size_t i) {
        ManifestEntry& e = m.entries[i];
        e.path = paths[i].generic_string();
        const std::string src = read_file(paths[i]);
        e.bytes = src.size();
        e.chars = count_chars(src);
        e.sha256 = sha256_hex(src);
        if (e.chars > config.max_chars) return;
        try {
            Analysis a = analyze(src);
            e.tokens = a.tokens.size();
            e.locals = a.names.size();
            std::size_t total = 0;
            for (const auto& n : a.names) total += count_chars(n.name);
            mean_length[i] = a.names.empty() ? 0 : static_cast<double>(total) / static_cast<double>(a.names.size());
            parsed_ok[i] = true;
        } catch (const SourceError& ex) {
            e.detail = ex.what();
        }
    });

    std::map<std::string, std::string> first_seen;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        ManifestEntry& e = m.entries[i];
        if (e.chars > config.max_chars) {
            e.status = IngestStatus::too_large;
            continue;
        }
        auto [it, fresh] = first_seen.emplace(e.sha256, e.path);
        if (!fresh) {
            e.status = IngestStatus::duplicate;
            e.detail = it->second;
        } else if (!parsed_ok[i]) {
            e.status = IngestStatus::parse_failure;
        } else if (e.locals > 0 && mean_length[i] < config.min_mean_local_length) {
            e.status = IngestStatus::already_minified;
        }
    }
    return m;
}

// ----------------------------------------------------------------- train

namespace detail {

template <class Model>
void round_to_float(Model& m) {
    for (auto& t : m.tensors())
        for (double& v : t.values()) v = static_cast<double>(static_cast<float>(v));
}

struct FileSummaries {
    std::vector<UsageSummary> summaries;
    std::vector<std::string> targets; // original name per summary
};

inline FileSummaries summarize_file(const std::string& original, const Hyperparams& hp) {
    MangleResult mr = mangle(original, 0);
    Analysis a = analyze(mr.source);
    FileSummaries out;
    out.summaries = extract_all(a, hp.q, hp.l);
    for (const auto& u : out.summaries) out.targets.push_back(mr.map.entries.at(u.owner.binding).orig);
    return out;
}

} // namespace detail

struct TrainOptions {
    std::filesystem::path checkpoint; // empty: no checkpoints
    std::function<void(const std::string&)> log;
};

struct CorpusData {
    std::vector<UsageSummary> summaries;
    std::vector<std::string> targets;
    std::string digest;
};

/// Mangles every accepted file and extracts its usage summaries, in
/// manifest order.
inline CorpusData load_corpus(const Manifest& manifest, const PipelineConfig& config) {
    const auto files = manifest.accepted();
    if (files.empty()) throw EmptyCorpus("manifest has no accepted files");
    std::vector<detail::FileSummaries> per_file(files.size());
    parallel_for(files.size(), config.jobs, [&](std::size_t i) {
        const std::string src = read_file(files[i]->path);
        if (sha256_hex(src) != files[i]->sha256) throw DataError(files[i]->path + " changed since ingest");
        per_file[i] = detail::summarize_file(src, config.hp);
    });
    CorpusData c;
    std::string digests;
    for (std::size_t i = 0; i < files.size(); ++i) {
        digests += files[i]->sha256 + "\n";
        for (auto& u : per_file[i].summaries) c.summaries.push_back(std::move(u));
        for (auto& t : per_file[i].targets) c.targets.push_back(std::move(t));
    }
    c.digest = sha256_hex(digests);
    if (c.summaries.empty()) throw EmptyCorpus("accepted files contain no local names");
    return c;
}

/// Mangle, extract, build vocabularies, train the autoencoder on the
/// distinct contexts, embed every summary and train the predictor. The
/// result depends only on the manifest contents and the config (jobs
/// excluded).
inline ModelBundle train(const Manifest& manifest, const PipelineConfig& config, const TrainOptions& options = {}) {
    config.validate();
    auto log = [&](const std::string& msg) {
        if (options.log) options.log(msg);
    };
    const Hyperparams& hp = config.hp;
    CorpusData corpus = load_corpus(manifest, config);
    log("summaries: " + std::to_string(corpus.summaries.size()));

    ModelBundle b;
    b.hp = hp;
    b.input_frequencies = count_input_tokens(corpus.summaries);
    b.name_frequencies = count_names(corpus.targets);
    b.input_vocab = Vocabulary::from_frequencies(VocabKind::input, b.input_frequencies, hp.vin);
    b.output_vocab = Vocabulary::from_frequencies(VocabKind::output, b.name_frequencies, hp.vout);
    if (b.input_vocab.is_short())
        log("input vocabulary has only " + std::to_string(b.input_vocab.size()) + " of " + std::to_string(hp.vin) +
            " entries");
    if (b.output_vocab.is_short())
        log("output vocabulary has only " + std::to_string(b.output_vocab.size()) + " of " +
            std::to_string(hp.vout) + " entries");

    std::set<std::vector<AbstractToken>> distinct;
    for (const auto& u : corpus.summaries)
        for (const auto& c : u.contexts) distinct.insert(c.tokens);
    std::vector<std::vector<OneHot>> encoded;
    encoded.reserve(distinct.size());
    for (const auto& toks : distinct) encoded.push_back(encode_context(Context{toks}, b.input_vocab));
    log("distinct contexts: " + std::to_string(encoded.size()));

    auto checkpoint = [&](const char* phase, std::size_t epoch, double loss, auto& model) {
        if (options.checkpoint.empty()) return;
        Container c;
        c.set("phase", phase);
        c.set("epoch", std::to_string(epoch + 1));
        c.set("loss", detail::format_double(loss));
        c.set("vin.digest", b.input_vocab.digest());
        c.set("vout.digest", b.output_vocab.digest());
        c.add_tensors(const_cast<std::remove_cvref_t<decltype(model)>&>(model).tensors());
        c.save(options.checkpoint.string());
    };

    AutoencoderDims ad{b.input_vocab.size(), hp.q, hp.embed, 0};
    auto ae = train_autoencoder(encoded, ad, config.autoencoder_training(),
                                [&](std::size_t epoch, double loss, const AutoencoderModel& m) {
                                    log("autoencoder epoch " + std::to_string(epoch + 1) + " loss " +
                                        detail::format_double(loss));
                                    checkpoint("autoencoder", epoch, loss, m);
                                });
    b.autoencoder = std::move(ae.model);
    detail::round_to_float(b.autoencoder); // what is trained next is what gets saved

    std::vector<PredictorExample> examples;
    examples.reserve(corpus.summaries.size());
    for (std::size_t k = 0; k < corpus.summaries.size(); ++k) {
        const auto idx = b.output_vocab.find(corpus.targets[k]);
        examples.push_back({embed_summary(b.autoencoder, corpus.summaries[k], b.input_vocab),
                            idx ? *idx : b.output_vocab.unk()});
    }
    PredictorDims pd{hp.embed, hp.l, hp.hidden, b.output_vocab.size()};
    auto pr = train_predictor(examples, pd, config.predictor_training(),
                              [&](std::size_t epoch, double loss, const PredictorModel& m) {
                                  log("predictor epoch " + std::to_string(epoch + 1) + " loss " +
                                      detail::format_double(loss));
                                  checkpoint("predictor", epoch, loss, m);
                              });
    b.predictor = std::move(pr.model);
    detail::round_to_float(b.predictor);

    b.meta = {config.seed, config.ae_epochs, config.pr_epochs, corpus.digest};
    return b;
}

} // namespace deminify
