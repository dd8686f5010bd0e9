#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deminify/bundle.hpp"
#include "deminify/error.hpp"
#include "deminify/mangle.hpp"
#include "deminify/recovery.hpp"
#include "deminify/scope.hpp"

namespace deminify {

enum class Locality { local_only, all_names };
enum class Weighting { once, repeat };

struct MetricKind {
    Locality locality = Locality::local_only;
    Weighting weighting = Weighting::once;

    std::size_t index() const {
        return (locality == Locality::all_names ? 2 : 0) + (weighting == Weighting::repeat ? 1 : 0);
    }
    friend bool operator==(const MetricKind&, const MetricKind&) = default;
};

inline constexpr MetricKind kLocalOnce{Locality::local_only, Weighting::once};
inline constexpr MetricKind kLocalRepeat{Locality::local_only, Weighting::repeat};
inline constexpr MetricKind kAllOnce{Locality::all_names, Weighting::once};
inline constexpr MetricKind kAllRepeat{Locality::all_names, Weighting::repeat};
inline constexpr std::array<MetricKind, 4> kAllMetrics{kLocalOnce, kLocalRepeat, kAllOnce, kAllRepeat};

inline const char* metric_key(MetricKind k) {
    static constexpr const char* keys[] = {"local_once", "local_repeat", "all_once", "all_repeat"};
    return keys[k.index()];
}

inline const char* metric_label(MetricKind k) {
    static constexpr const char* labels[] = {"Local-Once", "Local-Repeat", "All-Once", "All-Repeat"};
    return labels[k.index()];
}

struct Count {
    std::size_t correct = 0;
    std::size_t total = 0;

    Count& operator+=(const Count& o) {
        correct += o.correct;
        total += o.total;
        return *this;
    }
    friend bool operator==(const Count&, const Count&) = default;
};

struct FileScore {
    std::array<Count, 4> counts;

    Count& operator[](MetricKind k) { return counts[k.index()]; }
    const Count& operator[](MetricKind k) const { return counts[k.index()]; }
    friend bool operator==(const FileScore&, const FileScore&) = default;
};

namespace detail {

// Per binding of the minified file: was the original name recovered?
// nullptr predictions mean "nothing renamed".
inline std::vector<bool> local_hits(const RenameMap& truth, const PredictionMap* predicted, const ScopeTree& tree) {
    const std::size_t n = tree.bindings.size();
    auto check_cover = [&](std::size_t entries, const char* what) {
        if (entries != n)
            throw MapMismatch(std::string(what) + " has " + std::to_string(entries) + " entries for " +
                              std::to_string(n) + " bindings");
    };
    check_cover(truth.entries.size(), "rename map");
    if (predicted) check_cover(predicted->entries.size(), "prediction map");

    std::vector<bool> hit(n, false);
    for (BindingId b = 0; b < n; ++b) {
        const std::string path = tree.binding_path(b);
        const std::string& min = tree.bindings[b].name;
        const RenameEntry* t = truth.find(path, min);
        if (!t) throw MapMismatch("rename map lacks " + path + ":" + min);
        if (!predicted) continue;
        const PredictionEntry* p = predicted->find(path, min);
        if (!p) throw MapMismatch("prediction map lacks " + path + ":" + min);
        hit[b] = p->pred == t->orig;
    }
    return hit;
}

inline FileScore tally(const ScopeTree& tree, const std::vector<bool>& hit) {
    FileScore s;
    for (BindingId b = 0; b < hit.size(); ++b) {
        ++s[kLocalOnce].total;
        s[kLocalOnce].correct += hit[b];
    }
    std::set<std::string> globals;
    for (const Scope& sc : tree.scopes)
        for (const Reference& r : sc.references) {
            if (r.binding) {
                ++s[kLocalRepeat].total;
                s[kLocalRepeat].correct += hit[*r.binding];
            } else {
                globals.insert(r.name);
                ++s[kAllRepeat].total;
                ++s[kAllRepeat].correct;
            }
        }
    s[kAllOnce] = s[kLocalOnce];
    s[kAllOnce].total += globals.size();
    s[kAllOnce].correct += globals.size();
    s[kAllRepeat] += s[kLocalRepeat];
    return s;
}

} // namespace detail

/// All four metrics for one file. `tree` is the minified file's scope tree;
/// both maps are keyed by its (scope path, minified name) pairs. Global
/// names are never renamed and so always count as correct.
inline FileScore score_file(const RenameMap& truth, const PredictionMap& predicted, const ScopeTree& tree) {
    return detail::tally(tree, detail::local_hits(truth, &predicted, tree));
}

inline Count score_file(const RenameMap& truth, const PredictionMap& predicted, const ScopeTree& tree,
                        MetricKind kind) {
    return score_file(truth, predicted, tree)[kind];
}

/// Score of a tool that renames nothing.
inline FileScore baseline(const RenameMap& truth, const ScopeTree& tree) {
    return detail::tally(tree, detail::local_hits(truth, nullptr, tree));
}

inline Count baseline(const RenameMap& truth, const ScopeTree& tree, MetricKind kind) {
    return baseline(truth, tree)[kind];
}

/// Percentage to one decimal; nullopt when the metric has no items.
inline std::optional<double> percentage(const Count& c) {
    if (c.total == 0) return std::nullopt;
    return std::round(1000.0 * static_cast<double>(c.correct) / static_cast<double>(c.total)) / 10.0;
}

struct Accuracy {
    std::array<Count, 4> pooled;
    std::array<std::optional<double>, 4> percent;

    std::optional<double> operator[](MetricKind k) const { return percent[k.index()]; }
};

/// Pooled Σcorrect/Σtotal per metric across files.
inline Accuracy aggregate(std::span<const FileScore> scores) {
    if (scores.empty()) throw EmptyCorpus("no files to aggregate");
    Accuracy a;
    for (const FileScore& s : scores)
        for (std::size_t k = 0; k < 4; ++k) a.pooled[k] += s.counts[k];
    for (std::size_t k = 0; k < 4; ++k) a.percent[k] = percentage(a.pooled[k]);
    return a;
}

struct Stats {
    double min = 0, max = 0, mean = 0, median = 0;
};

inline Stats summarize(std::vector<double> xs) {
    Stats s;
    if (xs.empty()) return s;
    std::sort(xs.begin(), xs.end());
    s.min = xs.front();
    s.max = xs.back();
    double sum = 0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    const std::size_t m = xs.size() / 2;
    s.median = xs.size() % 2 ? xs[m] : (xs[m - 1] + xs[m]) / 2;
    return s;
}

struct TimingSummary {
    std::size_t files = 0;
    Stats total, extract, embed, predict, assign;
};

inline TimingSummary summarize_timing(std::span<const PhaseTimes> per_file) {
    TimingSummary t;
    t.files = per_file.size();
    std::vector<double> tot, ex, em, pr, as;
    for (const auto& p : per_file) {
        tot.push_back(p.total_ms());
        ex.push_back(p.extract_ms);
        em.push_back(p.embed_ms);
        pr.push_back(p.predict_ms);
        as.push_back(p.assign_ms);
    }
    t.total = summarize(tot);
    t.extract = summarize(ex);
    t.embed = summarize(em);
    t.predict = summarize(pr);
    t.assign = summarize(as);
    return t;
}

/// Wall-clock phase breakdown of recovering one minified file.
inline PhaseTimes time_file(const std::string& min_source, const ModelBundle& m) {
    return recover_names(min_source, m).times;
}

/// Outcome of mangling one original file, recovering it and scoring.
struct FileEvaluation {
    FileScore score;
    FileScore base;
    PhaseTimes times;
    std::string minified;
    std::string recovered;
    RenameMap truth;
    PredictionMap predicted;
};

inline FileEvaluation evaluate_source(const std::string& original, const ModelBundle& m, std::uint64_t seed = 0) {
    FileEvaluation e;
    MangleResult mr = mangle(original, seed);
    e.minified = std::move(mr.source);
    e.truth = std::move(mr.map);
    Analysis a = analyze(e.minified);
    Recovery r = recover_names(a, m);
    e.times = r.times;
    e.recovered = std::move(r.source);
    e.predicted = std::move(r.map);
    e.score = score_file(e.truth, e.predicted, a.tree);
    e.base = baseline(e.truth, a.tree);
    return e;
}

struct EvaluationReport {
    Accuracy accuracy;
    Accuracy baseline;
    TimingSummary timing;

    nlohmann::ordered_json to_json() const {
        auto pct = [](std::optional<double> v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
        auto stats = [](const Stats& s) {
            return nlohmann::ordered_json{{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"median", s.median}};
        };
        nlohmann::ordered_json j;
        for (MetricKind k : kAllMetrics) j[metric_key(k)] = pct(accuracy[k]);
        j["baseline_all_once"] = pct(baseline[kAllOnce]);
        j["timing"] = {{"files", timing.files},       {"total_ms", stats(timing.total)},
                       {"extract_ms", stats(timing.extract)}, {"embed_ms", stats(timing.embed)},
                       {"predict_ms", stats(timing.predict)}, {"assign_ms", stats(timing.assign)}};
        return j;
    }

    void print_table(std::ostream& os) const {
        auto show = [&](std::optional<double> v) {
            if (v) os << std::fixed << std::setprecision(1) << std::setw(7) << *v << '%';
            else os << std::setw(8) << "n/a";
        };
        os << std::left << std::setw(14) << "metric" << std::right << std::setw(8) << "tool" << std::setw(12)
           << "baseline" << std::setw(16) << "correct/total" << '\n';
        for (MetricKind k : kAllMetrics) {
            os << std::left << std::setw(14) << metric_label(k) << std::right;
            show(accuracy[k]);
            os << "    ";
            show(baseline[k]);
            const Count& c = accuracy.pooled[k.index()];
            os << std::setw(16) << (std::to_string(c.correct) + "/" + std::to_string(c.total)) << '\n';
        }
        os << std::fixed << std::setprecision(2) << "time per file (ms) over " << timing.files
           << " files: min " << timing.total.min << ", max " << timing.total.max << ", mean " << timing.total.mean
           << ", median " << timing.total.median << '\n';
    }
};

inline EvaluationReport make_report(std::span<const FileEvaluation> files) {
    std::vector<FileScore> tool, base;
    std::vector<PhaseTimes> times;
    for (const auto& f : files) {
        tool.push_back(f.score);
        base.push_back(f.base);
        times.push_back(f.times);
    }
    return {aggregate(tool), aggregate(base), summarize_timing(times)};
}

} // namespace deminify
