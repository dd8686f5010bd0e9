// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "deminify/deminify.hpp"
#include "gradcheck.hpp"
#include "support/corpus.hpp"
#include "support/reference_assign.hpp"

using namespace deminify;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<std::string> split(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : " ") + s;
    return out;
}

// ------------------------------------------------------------ criterion 1

struct ExtractionFixture {
    const char* source;
    const char* scope; // scope path of the binding
    const char* name;
    std::size_t q, l;
    std::vector<const char*> contexts; // space-separated tokens per context
};

// Expected contexts were worked out by hand from the filtered token stream
// (punctuation `.`, `(` and `)` removed).
const std::vector<ExtractionFixture> kExtraction = {
    {"function f(x) { return x; }", "0/0", "x", 1, 2, {"f {", "return ;"}},
    {"function f(x) { return x; }", "0/0", "x", 2, 3,
     {"function f { return", "{ return ; }", "<PAD> <PAD> <PAD> <PAD>"}},
    {"function f(a, b) { return a + b; }", "0/0", "a", 2, 2, {"function f , <ID>", "{ return + <ID>"}},
    {"function f(a, b) { return a + b; }", "0/0", "b", 2, 2, {"<ID> , { return", "<ID> + ; }"}},
    {"var g = function (n) { var m = n * 2; return m; };", "0/0", "n", 1, 3, {"function {", "= *", "<PAD> <PAD>"}},
    {"var g = function (n) { var m = n * 2; return m; };", "0/0", "m", 2, 2, {"{ var = <ID>", "; return ; }"}},
    {"function h() { var s = 'a'; s += \"b\"; return s.length; }", "0/0", "s", 1, 3,
     {"var =", "; +=", "return length"}},
    {"function k(i) { i++; i--; i = i; }", "0/0", "i", 1, 2, {"k {", "{ ++"}},
    {"function e(p) {}", "0/0", "p", 3, 1, {"<PAD> function e { } <PAD>"}},
    {"try { go(); } catch (err) { log(err); }", "0/1", "err", 2, 2, {"} catch { log", "{ log ; }"}},
    {"function o(v) { function p(v) { return v; } return v; }", "0/0/0", "v", 1, 2, {"<ID> {", "return ;"}},
    {"function o(v) { function p(v) { return v; } return v; }", "0/0", "v", 1, 2, {"o {", "return ;"}},
    {"function r(a) { return { a: a }; }", "0/0", "a", 2, 3, {"function r { return", "a : } ;", "<PAD> <PAD> <PAD> <PAD>"}},
    {"function t(o) { return o.x.y; }", "0/0", "o", 2, 1, {"function t { return"}},
    {"function u(n) { for (var i = 0; i < n; i++) {} }", "0/0", "i", 2, 3,
     {"for var = 0", "0 ; < <ID>", "<ID> ; ++ {"}},
    {"function u(n) { for (var i = 0; i < n; i++) {} }", "0/0", "n", 1, 2, {"u {", "< ;"}},
    {"function w() { function inner() {} inner(); }", "0/0", "inner", 2, 2, {"{ function { }", "{ } ; }"}},
    {"function z(a) { if (a) { return typeof a; } }", "0/0", "a", 1, 3, {"z {", "if {", "typeof ;"}},
    {"function y(arr) { return arr[0] === arr[1]; }", "0/0", "arr", 2, 2, {"function y { return", "{ return [ 0"}},
    {"function c(total) { return function (x) { return total + x; }; }", "0/0", "total", 1, 2, {"c {", "return +"}},
    {"function c(total) { return function (x) { return total + x; }; }", "0/0/0", "x", 2, 2,
     {"return function { return", "<ID> + ; }"}},
    {"function m2(a, b, c) { return new Point(a, b, c); }", "0/0", "c", 2, 1, {"<ID> , { return"}},
};

Outcome criterion_extraction() {
    const auto t0 = Clock::now();
    std::size_t ok = 0;
    std::string first_failure;
    for (const auto& fx : kExtraction) {
        std::vector<std::string> got_ctx;
        try {
            Analysis a = analyze(fx.source);
            const ScopedName* target = nullptr;
            for (const auto& n : a.names)
                if (n.name == fx.name && a.tree.path(n.scope) == fx.scope) target = &n;
            if (!target) throw std::runtime_error("binding not found");
            UsageSummary u = usage_summary(filter_tokens(a.tokens), a.names, *target, fx.q, fx.l);
            for (const auto& c : u.contexts) {
                if (c.tokens.size() != 2 * fx.q) throw std::runtime_error("context width");
                got_ctx.push_back(join(c.tokens));
            }
        } catch (const std::exception& e) {
            got_ctx = {std::string("exception: ") + e.what()};
        }
        std::vector<std::string> want;
        for (const char* c : fx.contexts) want.push_back(join(split(c)));
        if (got_ctx == want) ++ok;
        else if (first_failure.empty())
            first_failure = std::string(fx.source) + " [" + fx.name + "] got {" +
                            [&] {
                                std::string s;
                                for (const auto& g : got_ctx) s += "<" + g + ">";
                                return s;
                            }() +
                            "}";
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = ok == kExtraction.size() && kExtraction.size() >= 20 && secs < 1.0;
    o.detail = std::to_string(ok) + "/" + std::to_string(kExtraction.size()) + " fixtures exact, " +
               std::to_string(secs) + " s";
    if (!first_failure.empty()) o.detail += "; first mismatch: " + first_failure;
    return o;
}

// ------------------------------------------------------------ criterion 2

Outcome criterion_gradients() {
    const auto t0 = Clock::now();
    auto ae = AutoencoderModel::random(8, 1, 4, 3);
    std::vector<OneHot> ctx{{8, 3}, {8, 6}};
    auto r1 = testing_support::gradient_check(
        ae, [&](const AutoencoderModel& m, AutoencoderModel* g) { return reconstruction_grad(m, ctx, g).loss; });

    nn::Rng rng(8);
    PredictorExample ex;
    for (int k = 0; k < 3; ++k) {
        Embedding e(4);
        for (auto& x : e) x = rng.uniform(-1, 1);
        ex.embeddings.push_back(e);
    }
    ex.target = 5;
    auto r2 = testing_support::gradient_check(
        PredictorModel::random(4, 3, 6, 8, 1),
        [&](const PredictorModel& m, PredictorModel* g) { return prediction_grad(m, ex, g).loss; });
    const double secs = seconds_since(t0);
    const double worst = std::max(r1.worst_rel, r2.worst_rel);
    Outcome o;
    o.pass = worst <= 1e-3 && secs < 30;
    std::ostringstream d;
    d << r1.checked + r2.checked << " parameters, worst relative error " << worst << " ("
      << (r1.worst_rel >= r2.worst_rel ? r1.worst_name : r2.worst_name) << "), " << secs << " s";
    o.detail = d.str();
    return o;
}

// ------------------------------------------------------------ criterion 3

Outcome criterion_autoencoder_memorization() {
    const auto t0 = Clock::now();
    nn::Rng rng(1);
    std::set<std::vector<std::size_t>> seen;
    std::vector<std::vector<OneHot>> contexts;
    while (contexts.size() < 50) {
        std::vector<std::size_t> ids;
        for (int k = 0; k < 4; ++k) ids.push_back(rng.below(64));
        if (!seen.insert(ids).second) continue;
        std::vector<OneHot> c;
        for (auto id : ids) c.push_back({64, id});
        contexts.push_back(std::move(c));
    }
    nn::TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 2;
    cfg.epochs = 3000;
    cfg.lr_decay = 0.999;
    cfg.seed = 1;
    auto t = train_autoencoder(contexts, {64, 2, 12, 0}, cfg);
    const double acc = reconstruction_accuracy(t.model, contexts);
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = acc >= 0.95 && secs < 300;
    std::ostringstream d;
    d << "per-step reconstruction accuracy " << 100 * acc << "% on 50 distinct contexts, " << secs << " s";
    o.detail = d.str();
    return o;
}

// ------------------------------------------------------------ criterion 4

Outcome criterion_predictor_memorization() {
    const auto t0 = Clock::now();
    const PredictorDims dims{16, 5, 64, 512};
    nn::Rng rng(3);
    std::vector<PredictorExample> ex;
    std::set<std::vector<double>> seen;
    while (ex.size() < 100) {
        PredictorExample e;
        std::vector<double> key;
        for (std::size_t k = 0; k < dims.l; ++k) {
            Embedding v(static_cast<Eigen::Index>(dims.embed));
            for (auto& x : v) {
                x = rng.uniform(-1, 1);
                key.push_back(x);
            }
            e.embeddings.push_back(v);
        }
        e.target = 1 + rng.below(dims.vocab - 1);
        if (seen.insert(key).second) ex.push_back(std::move(e));
    }
    nn::TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 8;
    cfg.seed = 7;
    auto t = train_predictor(ex, dims, cfg);
    const double acc = top1_accuracy(t.model, ex);
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = acc == 1.0 && cfg.epochs <= 1000 && secs < 600;
    std::ostringstream d;
    d << "top-1 training accuracy " << 100 * acc << "% after " << cfg.epochs << " epochs, " << secs << " s";
    o.detail = d.str();
    return o;
}

// ------------------------------------------------------- desk corpus setup

struct Desk {
    fs::path dir;
    Manifest manifest;
    PipelineConfig config;
    ModelBundle bundle;
    std::vector<std::string> sources; // accepted originals, manifest order
    std::vector<FileEvaluation> results;
    double train_secs = 0;
    double total_secs = 0;
};

PipelineConfig desk_config() {
    PipelineConfig c; // desk dims: q=3 l=5 vin=256 vout=512 embed=16 hidden=64
    c.ae_epochs = 10;
    c.pr_epochs = 20;
    c.seed = 1;
    return c;
}

Desk build_desk() {
    const auto t0 = Clock::now();
    Desk d;
    d.dir = fs::temp_directory_path() / ("deminify_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(d.dir);
    fs::create_directories(d.dir / "corpus");
    testing_support::CorpusGenerator gen(2024);
    for (int i = 0; i < 200; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "f%03d.js", i);
        write_file(d.dir / "corpus" / name, gen.file());
    }
    d.config = desk_config();
    d.manifest = ingest(d.dir / "corpus", d.config);
    d.manifest.save(d.dir / "manifest.jsonl");
    const auto t1 = Clock::now();
    d.bundle = train(d.manifest, d.config);
    d.train_secs = seconds_since(t1);
    d.bundle.save((d.dir / "model.bin").string());
    for (const auto* e : d.manifest.accepted()) d.sources.push_back(read_file(e->path));
    for (const auto& s : d.sources) d.results.push_back(evaluate_source(s, d.bundle, 0));
    d.total_secs = seconds_since(t0);
    return d;
}

// ------------------------------------------------------------ criterion 5

Outcome criterion_end_to_end(const Desk& d) {
    EvaluationReport r = make_report(d.results);
    const auto local_once = r.accuracy[kLocalOnce];
    Outcome o;
    o.pass = local_once && *local_once >= 80.0 && d.total_secs < 1800;
    std::ostringstream s;
    s << d.manifest.accepted().size() << "/" << d.manifest.entries.size() << " files accepted, Local-Once "
      << (local_once ? std::to_string(*local_once) : "n/a") << "% ("
      << r.accuracy.pooled[kLocalOnce.index()].correct << "/" << r.accuracy.pooled[kLocalOnce.index()].total
      << "), training " << d.train_secs << " s, total " << d.total_secs << " s";
    o.detail = s.str();
    return o;
}

// ------------------------------------------------------------ criterion 6

// Random program with nested function expressions; globals overlap the
// candidate pool so capture checks are exercised.
std::string random_program(nn::Rng& rng) {
    static const std::vector<std::string> locals{"a", "b", "c", "d"};
    static const std::vector<std::string> globals{"foo", "data", "http", "window"};
    std::function<std::string(int, std::vector<std::string>)> body = [&](int depth, std::vector<std::string> vis) {
        std::string s;
        if (rng.below(2)) {
            const std::string v = locals[rng.below(locals.size())];
            s += "var " + v + " = 1; ";
            vis.push_back(v);
        }
        if (depth < 3 && rng.below(3)) {
            std::string params;
            std::vector<std::string> inner = vis;
            const std::size_t np = rng.below(3);
            for (std::size_t k = 0; k < np; ++k) {
                const std::string p = locals[rng.below(locals.size())];
                if (std::find(inner.end() - static_cast<long>(k), inner.end(), p) != inner.end()) continue;
                params += (params.empty() ? "" : ", ") + p;
                inner.push_back(p);
            }
            s += globals[rng.below(globals.size())] + "(function (" + params + ") { " + body(depth + 1, inner) + "}); ";
        }
        std::string expr = "0";
        for (std::size_t k = 0, n = 1 + rng.below(3); k < n; ++k) {
            const bool global = vis.empty() || rng.below(3) == 0;
            expr += " + " + (global ? globals[rng.below(globals.size())] : vis[rng.below(vis.size())]);
        }
        return s + "return " + expr + "; ";
    };
    return "run(function (a) { " + body(0, {"a"}) + "});";
}

Outcome criterion_algorithm_equivalence() {
    const auto t0 = Clock::now();
    std::size_t matched = 0, instances = 0;
    std::string first_failure;

    // worked example
    {
        Analysis a = analyze("function f(a, b) { return a + b; }");
        std::vector<RankedPredictions> r(2);
        r[0] = {{"foo", 0.9, 1, true}, {"bar", 0.05, 2, true}};
        r[1] = {{"foo", 0.8, 1, true}, {"baz", 0.1, 3, true}};
        Recovery out = recover_with_rankings(a, r);
        ++instances;
        if (out.names == std::vector<std::string>{"foo", "baz"} &&
            out.names == testing_support::reference_assign(a.tree, r))
            ++matched;
        else
            first_failure = "worked example";
    }

    static const std::vector<std::string> pool{"foo", "baz", "data", "i",    "value", "http",
                                               "window", "if", "new",  "arguments", "x", "a", "<UNK>"};
    nn::Rng rng(2718);
    std::size_t with_conflict = 0;
    while (instances < 1001) {
        const std::string src = random_program(rng);
        Analysis a = analyze(src);
        if (a.names.empty() || a.names.size() > 6) continue;
        std::vector<RankedPredictions> r(a.names.size());
        for (auto& rk : r) {
            std::vector<std::string> cands = pool;
            rng.shuffle(cands);
            cands.resize(1 + rng.below(8));
            std::vector<double> p(cands.size());
            const bool coarse = rng.below(3) == 0; // forces probability ties
            for (auto& x : p) x = coarse ? static_cast<double>(rng.below(4)) / 4 : rng.uniform01();
            std::sort(p.rbegin(), p.rend());
            for (std::size_t k = 0; k < cands.size(); ++k) rk.push_back({cands[k], p[k], k, cands[k] != kUnkToken});
        }
        Recovery out = recover_with_rankings(a, r);
        const auto want = testing_support::reference_assign(a.tree, r);
        ++instances;
        for (std::size_t b = 0; b < r.size(); ++b)
            if (!r[b].empty() && out.names[b] != r[b][0].name) {
                ++with_conflict;
                break;
            }
        if (out.names == want) ++matched;
        else if (first_failure.empty()) first_failure = src;
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = matched == instances && secs < 60;
    o.detail = std::to_string(matched) + "/" + std::to_string(instances) + " instances match the reference (" +
               std::to_string(with_conflict) + " needed a non-top choice), " + std::to_string(secs) + " s";
    if (!first_failure.empty()) o.detail += "; first mismatch: " + first_failure;
    return o;
}

// ------------------------------------------------------------ criterion 7

struct SemanticsCheck {
    std::size_t files = 0, parse = 0, isomorphic = 0, keywords = 0, duplicates = 0, captures = 0;
};

void check_semantics(const std::string& minified, const std::string& recovered, SemanticsCheck& c) {
    ++c.files;
    Analysis before = analyze(minified);
    Analysis after;
    try {
        after = analyze(recovered);
    } catch (const DataError&) {
        ++c.parse;
        return;
    }
    if (!alpha_equivalent(before, after)) ++c.isomorphic;
    const ScopeTree& t = after.tree;
    for (BindingId b = 0; b < t.bindings.size(); ++b) {
        const auto& name = t.bindings[b].name;
        const ScopeIndex s = t.bindings[b].scope;
        if (is_unassignable(name)) ++c.keywords;
        for (BindingId o = b + 1; o < t.bindings.size(); ++o) {
            const ScopeIndex u = t.bindings[o].scope;
            if (t.bindings[o].name == name && (t.is_ancestor_or_self(s, u) || t.is_ancestor_or_self(u, s)))
                ++c.duplicates;
        }
    }
    // a renamed local must not take over a global referenced in the minified
    // file from within its scope
    for (BindingId b = 0; b < t.bindings.size(); ++b) {
        const ScopeIndex s = t.bindings[b].scope;
        for (ScopeIndex r = 0; r < before.tree.scopes.size(); ++r) {
            if (!before.tree.is_ancestor_or_self(s, r)) continue;
            for (const auto& ref : before.tree.scopes[r].references)
                if (!ref.binding && ref.name == t.bindings[b].name) ++c.captures;
        }
    }
}

Outcome criterion_semantics(const Desk& d) {
    SemanticsCheck c;
    for (const auto& r : d.results) check_semantics(r.minified, r.recovered, c);
    Outcome o;
    o.pass = c.files == d.sources.size() && c.files > 0 && c.parse + c.isomorphic + c.keywords + c.duplicates + c.captures == 0;
    std::ostringstream s;
    s << c.files << " files: " << c.parse << " parse failures, " << c.isomorphic << " non-isomorphic, " << c.keywords
      << " keyword names, " << c.duplicates << " visible duplicates, " << c.captures << " captures";
    o.detail = s.str();
    return o;
}

// ------------------------------------------------------------ criterion 8

Outcome criterion_metrics(const Desk& d) {
    MangleResult mr = mangle("(function (i, j) { return i * i + h(g); });");
    Analysis a = analyze(mr.source);
    PredictionMap p;
    for (const auto& e : mr.map.entries) p.entries.push_back({e.scope, e.min, e.orig == "i" ? "i" : "k", 0.5, 1});
    FileScore s = score_file(mr.map, p, a.tree);
    const bool fixture = s[kLocalOnce] == Count{1, 2} && s[kLocalRepeat] == Count{3, 4} &&
                         s[kAllOnce] == Count{3, 4} && s[kAllRepeat] == Count{5, 6};
    std::size_t below_baseline = 0, imperfect = 0;
    for (const auto& r : d.results) {
        Analysis ma = analyze(r.minified);
        for (MetricKind k : {kAllOnce, kAllRepeat})
            if (r.score[k].correct < r.base[k].correct) ++below_baseline;
        PredictionMap perfect;
        for (const auto& e : r.truth.entries) perfect.entries.push_back({e.scope, e.min, e.orig, 1.0, 1});
        FileScore ps = score_file(r.truth, perfect, ma.tree);
        for (MetricKind k : kAllMetrics)
            if (ps[k].correct != ps[k].total) ++imperfect;
    }
    Outcome o;
    o.pass = fixture && below_baseline == 0 && imperfect == 0;
    o.detail = std::string("fixture ") + (fixture ? "1/2 3/4 3/4 5/6" : "MISMATCH") + "; " +
               std::to_string(below_baseline) + " files below baseline, " + std::to_string(imperfect) +
               " imperfect perfect-prediction scores over " + std::to_string(d.results.size()) + " files";
    return o;
}

// ------------------------------------------------------------ criterion 9

struct BruteCoverage {
    double unique_pct, occurrence_pct;
};

// Counts every item occurrence directly and tests membership by scanning the
// vocabulary list.
BruteCoverage brute_coverage(const std::vector<std::string>& occurrences, const Vocabulary& v) {
    auto special = [](const std::string& s) { return s == kIdToken || s == kPadToken || s == kUnkToken; };
    auto in_vocab = [&](const std::string& s) {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v.at(i) == s) return true;
        return false;
    };
    std::vector<std::string> items;
    for (const auto& s : occurrences)
        if (!special(s)) items.push_back(s);
    std::size_t hit = 0;
    for (const auto& s : items) hit += in_vocab(s);
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    std::size_t uhit = 0;
    for (const auto& s : items) uhit += in_vocab(s);
    return {100.0 * static_cast<double>(uhit) / static_cast<double>(items.size()),
            100.0 * static_cast<double>(hit) / static_cast<double>(std::count_if(
                                                   occurrences.begin(), occurrences.end(),
                                                   [&](const std::string& s) { return !special(s); }))};
}

Outcome criterion_coverage(const Desk& d) {
    std::vector<std::string> tokens, names;
    for (const auto& src : d.sources) {
        MangleResult mr = mangle(src, 0);
        Analysis a = analyze(mr.source);
        for (const auto& u : extract_all(a, d.config.hp.q, d.config.hp.l)) {
            for (const auto& c : u.contexts) tokens.insert(tokens.end(), c.tokens.begin(), c.tokens.end());
            names.push_back(mr.map.entries[u.owner.binding].orig);
        }
    }
    std::size_t compared = 0, agreed = 0;
    auto compare = [&](const Vocabulary& v, const FrequencyTable& f, const std::vector<std::string>& occ) {
        const Coverage got = coverage_report(v, f);
        const BruteCoverage want = brute_coverage(occ, v);
        ++compared;
        char a[64], b[64];
        std::snprintf(a, sizeof a, "%.6f %.6f", got.unique_pct, got.occurrence_pct);
        std::snprintf(b, sizeof b, "%.6f %.6f", want.unique_pct, want.occurrence_pct);
        if (got.unique_pct == want.unique_pct && got.occurrence_pct == want.occurrence_pct && std::string(a) == b)
            ++agreed;
    };
    for (std::size_t size : {4, 8, 16, 32, 64, 256})
        compare(Vocabulary::from_frequencies(VocabKind::input, d.bundle.input_frequencies, size),
                d.bundle.input_frequencies, tokens);
    for (std::size_t size : {2, 5, 10, 20, 512})
        compare(Vocabulary::from_frequencies(VocabKind::output, d.bundle.name_frequencies, size),
                d.bundle.name_frequencies, names);
    compare(d.bundle.input_vocab, d.bundle.input_frequencies, tokens);
    compare(d.bundle.output_vocab, d.bundle.name_frequencies, names);
    const Coverage small = coverage_report(
        Vocabulary::from_frequencies(VocabKind::input, d.bundle.input_frequencies, 16), d.bundle.input_frequencies);
    Outcome o;
    o.pass = agreed == compared;
    std::ostringstream s;
    s << agreed << "/" << compared << " vocabulary sizes agree exactly with brute-force counts ("
      << tokens.size() << " token and " << names.size() << " name occurrences; |V_inp|=16 covers "
      << small.unique_pct << "% unique, " << small.occurrence_pct << "% occurrences)";
    o.detail = s.str();
    return o;
}

// ----------------------------------------------------------- criterion 10

Outcome criterion_performance(const Desk& d) {
    testing_support::CorpusGenerator gen(99);
    std::string original;
    auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
    while (lines(original) < 200) original += gen.file();
    const std::string minified = mangle(original, 0).source;
    Recovery warm = recover_names(minified, d.bundle);
    const auto t0 = Clock::now();
    Recovery r = recover_names(minified, d.bundle);
    const double secs = seconds_since(t0);
    (void)warm;
    Outcome o;
    o.pass = secs < 1.0 && r.times.total_ms() > 0;
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << lines(minified) << "-line file, " << r.map.entries.size() << " locals, " << secs * 1000
      << " ms wall; phases extract " << r.times.extract_ms << " ms, embed " << r.times.embed_ms << " ms, predict "
      << r.times.predict_ms << " ms, assign " << r.times.assign_ms << " ms";
    o.detail = s.str();
    return o;
}

// ----------------------------------------------------------- criterion 11

Outcome criterion_reproducibility(const Desk& d) {
    const fs::path a = d.dir / "run_a.bin", b = d.dir / "run_b.bin";
    Manifest m = Manifest::load(d.dir / "manifest.jsonl");
    train(m, d.config).save(a.string());
    train(m, d.config).save(b.string());
    const std::string x = read_file(a), y = read_file(b);
    const std::string first = read_file(d.dir / "model.bin");
    Outcome o;
    o.pass = x == y && x == first;
    o.detail = std::to_string(x.size()) + "-byte bundles " + (x == y && x == first ? "bit-identical" : "DIFFER") +
               " across three training runs";
    return o;
}

} // namespace

int main() {
    int failures = 0;
    auto report = [&](int n, const char* title, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " - " << title << " (" << o.detail
                  << ")" << std::endl;
    };

    report(1, "extraction oracle", criterion_extraction);
    report(2, "gradient correctness", criterion_gradients);
    report(3, "autoencoder memorization", criterion_autoencoder_memorization);
    report(4, "predictor memorization", criterion_predictor_memorization);

    std::optional<Desk> desk;
    std::string desk_error;
    try {
        desk = build_desk();
    } catch (const std::exception& e) {
        desk_error = e.what();
    }
    auto with_desk = [&](Outcome (*fn)(const Desk&)) {
        return [&, fn] {
            if (!desk) return Outcome{false, "desk pipeline failed: " + desk_error};
            return fn(*desk);
        };
    };
    report(5, "end-to-end desk pipeline", with_desk(criterion_end_to_end));
    report(6, "greedy assignment equivalence", criterion_algorithm_equivalence);
    report(7, "semantics preservation", with_desk(criterion_semantics));
    report(8, "metric fixtures", with_desk(criterion_metrics));
    report(9, "coverage-report oracle", with_desk(criterion_coverage));
    report(10, "performance sanity", with_desk(criterion_performance));
    report(11, "reproducibility", with_desk(criterion_reproducibility));

    if (desk) fs::remove_all(desk->dir);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
