#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "deminify/bundle.hpp"
#include "deminify/context.hpp"
#include "deminify/mangle.hpp"
#include "deminify/predictor.hpp"
#include "deminify/scope.hpp"

namespace deminify {

/// Names that are never assigned: reserved words plus a few globals whose
/// shadowing changes program meaning.
inline bool is_unassignable(std::string_view name) {
    static constexpr std::array<std::string_view, 5> extra{"Infinity", "NaN", "arguments", "eval", "undefined"};
    return is_reserved_word(name) || std::find(extra.begin(), extra.end(), name) != extra.end();
}

inline bool is_identifier_name(std::string_view s) {
    if (s.empty()) return false;
    auto start = [](unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; };
    if (!start(static_cast<unsigned char>(s[0]))) return false;
    for (char ch : s.substr(1)) {
        const auto c = static_cast<unsigned char>(ch);
        if (!start(c) && !std::isdigit(c)) return false;
    }
    return true;
}

struct NextPrediction {
    std::string name;
    double probability = 0;
    std::size_t rank = 0;   // 1-based position in the ranking
    std::size_t cursor = 0; // where the following call resumes
};

/// Next assignable entry at or after `cursor`; nullopt once the ranking is
/// used up.
inline std::optional<NextPrediction> next_prediction(const RankedPredictions& ranked, std::size_t cursor) {
    for (std::size_t k = cursor; k < ranked.size(); ++k)
        if (ranked[k].assignable) return NextPrediction{ranked[k].name, ranked[k].probability, k + 1, k + 1};
    return std::nullopt;
}

/// Committed names plus what is needed to check a new one. A candidate c for
/// binding b (declared in scope S) conflicts when c is unassignable, when a
/// global named c is referenced anywhere under S, or when another binding
/// already named c is declared in S, in an ancestor of S or in a
/// descendant of S.
class AssignmentState {
public:
    explicit AssignmentState(const ScopeTree& tree) : tree_(tree), capture_(tree), assigned_(tree.bindings.size()) {
        const std::size_t n = tree.scopes.size();
        enter_.resize(n);
        exit_.resize(n);
        std::size_t clock = 0;
        if (n == 0) return;
        // iterative pre-order walk for Euler intervals
        std::vector<std::pair<ScopeIndex, std::size_t>> stack{{0, 0}};
        enter_[0] = clock++;
        while (!stack.empty()) {
            auto& [s, next] = stack.back();
            if (next < tree.scopes[s].children.size()) {
                ScopeIndex c = tree.scopes[s].children[next++];
                enter_[c] = clock++;
                stack.push_back({c, 0});
            } else {
                exit_[s] = clock++;
                stack.pop_back();
            }
        }
    }

    bool no_conflicts(BindingId b, std::string_view candidate) const {
        if (!is_identifier_name(candidate) || is_unassignable(candidate)) return false;
        const ScopeIndex s = tree_.bindings[b].scope;
        if (capture_.globals[s].count(candidate)) return false;
        auto it = by_name_.find(candidate);
        if (it == by_name_.end()) return true;
        for (BindingId other : it->second) {
            if (other == b) continue;
            const ScopeIndex t = tree_.bindings[other].scope;
            if (related(s, t)) return false;
        }
        return true;
    }

    void assign(BindingId b, std::string name) {
        if (assigned_[b]) {
            auto& v = by_name_[*assigned_[b]];
            v.erase(std::remove(v.begin(), v.end(), b), v.end());
        }
        by_name_[name].push_back(b);
        assigned_[b] = std::move(name);
    }

    const std::optional<std::string>& assigned(BindingId b) const { return assigned_[b]; }

private:
    // ancestor-or-self in either direction
    bool related(ScopeIndex a, ScopeIndex b) const {
        auto within = [&](ScopeIndex inner, ScopeIndex outer) {
            return enter_[outer] <= enter_[inner] && exit_[inner] <= exit_[outer];
        };
        return within(a, b) || within(b, a);
    }

    const ScopeTree& tree_;
    CaptureSets capture_;
    std::vector<std::optional<std::string>> assigned_;
    std::map<std::string, std::vector<BindingId>, std::less<>> by_name_;
    std::vector<std::size_t> enter_, exit_;
};

struct PredictionEntry {
    std::string scope;
    std::string min;
    std::string pred;
    double prob = 0;
    std::size_t rank = 0; // 0 for a synthetic fallback name

    friend bool operator==(const PredictionEntry&, const PredictionEntry&) = default;
};

struct PredictionMap {
    std::vector<PredictionEntry> entries;

    const PredictionEntry* find(std::string_view scope, std::string_view min) const {
        for (const auto& e : entries)
            if (e.scope == scope && e.min == min) return &e;
        return nullptr;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["version"] = 1;
        j["entries"] = nlohmann::ordered_json::array();
        for (const auto& e : entries)
            j["entries"].push_back(
                {{"scope", e.scope}, {"min", e.min}, {"pred", e.pred}, {"prob", e.prob}, {"rank", e.rank}});
        return j;
    }

    static PredictionMap from_json(const nlohmann::json& j) {
        try {
            if (j.at("version").get<int>() != 1) throw DataError("unsupported prediction map version");
            PredictionMap m;
            for (const auto& e : j.at("entries"))
                m.entries.push_back({e.at("scope").get<std::string>(), e.at("min").get<std::string>(),
                                     e.at("pred").get<std::string>(), e.at("prob").get<double>(),
                                     e.at("rank").get<std::size_t>()});
            return m;
        } catch (const nlohmann::json::exception& ex) {
            throw DataError(std::string("malformed prediction map: ") + ex.what());
        }
    }

    friend bool operator==(const PredictionMap&, const PredictionMap&) = default;
};

/// One committed decision, in commit order.
struct Commit {
    BindingId binding = 0;
    std::string name;
    double probability = 0;
};

struct Assignment {
    std::vector<std::string> names; // indexed by binding
    std::vector<Commit> commits;
    PredictionMap map;
};

/// Greedy assignment over per-binding rankings: the most probable pending
/// (binding, name) pair is committed if it conflicts with nothing already
/// committed, otherwise that binding's next prediction is queued. Bindings
/// whose ranking runs out get `v<k>` names once the queue is empty.
inline Assignment assign_names(const ScopeTree& tree, std::span<const RankedPredictions> rankings) {
    const std::size_t n = tree.bindings.size();
    if (rankings.size() != n) throw ShapeError("one ranking per binding is required");

    struct Pending {
        double probability;
        BindingId binding;
        std::string name;
        std::size_t rank;
        std::size_t cursor;
    };
    std::vector<std::string> paths(n);
    for (BindingId b = 0; b < n; ++b) paths[b] = tree.binding_path(b);
    // max-probability first; ties by (scope path, current name, binding)
    auto lower = [&](const Pending& x, const Pending& y) {
        if (x.probability != y.probability) return x.probability < y.probability;
        const auto& bx = tree.bindings[x.binding];
        const auto& by = tree.bindings[y.binding];
        if (paths[x.binding] != paths[y.binding]) return paths[x.binding] > paths[y.binding];
        if (bx.name != by.name) return bx.name > by.name;
        return x.binding > y.binding;
    };
    std::priority_queue<Pending, std::vector<Pending>, decltype(lower)> queue(lower);

    AssignmentState state(tree);
    Assignment out;
    out.names.resize(n);
    out.map.entries.resize(n);
    std::vector<BindingId> exhausted;

    auto advance = [&](BindingId b, std::size_t cursor) {
        if (auto p = next_prediction(rankings[b], cursor))
            queue.push({p->probability, b, std::move(p->name), p->rank, p->cursor});
        else
            exhausted.push_back(b);
    };
    for (BindingId b = 0; b < n; ++b) advance(b, 0);

    while (!queue.empty()) {
        Pending top = queue.top();
        queue.pop();
        if (state.no_conflicts(top.binding, top.name)) {
            state.assign(top.binding, top.name);
            out.commits.push_back({top.binding, top.name, top.probability});
            out.map.entries[top.binding] = {paths[top.binding], tree.bindings[top.binding].name, top.name,
                                            top.probability, top.rank};
            out.names[top.binding] = std::move(top.name);
        } else {
            advance(top.binding, top.cursor);
        }
    }

    for (BindingId b : exhausted) {
        std::string name;
        for (std::size_t k = 0;; ++k) {
            name = "v" + std::to_string(k);
            if (state.no_conflicts(b, name)) break;
        }
        state.assign(b, name);
        out.commits.push_back({b, name, 0.0});
        out.map.entries[b] = {paths[b], tree.bindings[b].name, name, 0.0, 0};
        out.names[b] = std::move(name);
    }
    return out;
}

struct PhaseTimes {
    double extract_ms = 0;
    double embed_ms = 0;
    double predict_ms = 0;
    double assign_ms = 0;

    double total_ms() const { return extract_ms + embed_ms + predict_ms + assign_ms; }
};

struct Recovery {
    std::string source;
    PredictionMap map;
    std::vector<std::string> names; // by binding of the minified input
    PhaseTimes times;
};

/// Recovery with externally supplied rankings (one per binding of `a`).
inline Recovery recover_with_rankings(const Analysis& a, std::span<const RankedPredictions> rankings) {
    auto t0 = std::chrono::steady_clock::now();
    Assignment as = assign_names(a.tree, rankings);
    Recovery r;
    r.source = rename_bindings(a, as.names);
    r.map = std::move(as.map);
    r.names = std::move(as.names);
    r.times.assign_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

/// Ranked names for every binding of `a`, in binding order.
inline std::vector<RankedPredictions> predict_rankings(const Analysis& a, const ModelBundle& m,
                                                       PhaseTimes* times = nullptr) {
    using clock = std::chrono::steady_clock;
    auto ms = [](clock::time_point from) {
        return std::chrono::duration<double, std::milli>(clock::now() - from).count();
    };
    auto t = clock::now();
    const TokenStream filtered = filter_tokens(a.tokens);
    ContextExtractor ex(filtered, a.names);
    std::vector<UsageSummary> summaries;
    summaries.reserve(a.names.size());
    for (const ScopedName& n : a.names) summaries.push_back(ex.usage_summary(n, m.hp.q, m.hp.l));
    if (times) times->extract_ms = ms(t);

    t = clock::now();
    std::vector<std::vector<Embedding>> embedded;
    embedded.reserve(summaries.size());
    for (const auto& u : summaries) embedded.push_back(embed_summary(m.autoencoder, u, m.input_vocab));
    if (times) times->embed_ms = ms(t);

    t = clock::now();
    std::vector<RankedPredictions> rankings;
    rankings.reserve(summaries.size());
    for (const auto& e : embedded) rankings.push_back(rank(predict_distribution(m.predictor, e), m.output_vocab));
    if (times) times->predict_ms = ms(t);
    return rankings;
}

inline Recovery recover_names(const Analysis& a, const ModelBundle& m) {
    PhaseTimes times;
    auto rankings = predict_rankings(a, m, &times);
    Recovery r = recover_with_rankings(a, rankings);
    times.assign_ms = r.times.assign_ms;
    r.times = times;
    return r;
}

inline Recovery recover_names(const std::string& min_source, const ModelBundle& m) {
    auto t = std::chrono::steady_clock::now();
    Analysis a = analyze(min_source);
    const double parse_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
    Recovery r = recover_names(a, m);
    r.times.extract_ms += parse_ms;
    return r;
}

} // namespace deminify
