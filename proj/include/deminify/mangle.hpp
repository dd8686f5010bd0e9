#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "deminify/error.hpp"
#include "deminify/scope.hpp"

namespace deminify {

struct RenameEntry {
    std::string scope; // scope path, e.g. "0/2/1"
    std::string min;
    std::string orig;

    friend bool operator==(const RenameEntry&, const RenameEntry&) = default;
};

/// Ground truth from (scope, minified name) back to the original name.
struct RenameMap {
    std::vector<RenameEntry> entries;

    const RenameEntry* find(std::string_view scope, std::string_view min) const {
        for (const auto& e : entries)
            if (e.scope == scope && e.min == min) return &e;
        return nullptr;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["version"] = 1;
        j["entries"] = nlohmann::ordered_json::array();
        for (const auto& e : entries)
            j["entries"].push_back({{"scope", e.scope}, {"min", e.min}, {"orig", e.orig}});
        return j;
    }

    static RenameMap from_json(const nlohmann::json& j) {
        try {
            if (j.at("version").get<int>() != 1) throw DataError("unsupported rename map version");
            RenameMap m;
            for (const auto& e : j.at("entries"))
                m.entries.push_back({e.at("scope").get<std::string>(), e.at("min").get<std::string>(),
                                     e.at("orig").get<std::string>()});
            return m;
        } catch (const nlohmann::json::exception& ex) {
            throw DataError(std::string("malformed rename map: ") + ex.what());
        }
    }

    friend bool operator==(const RenameMap&, const RenameMap&) = default;
};

/// k-th name of a, b, ..., z, aa, ab, ... (bijective base 26).
inline std::string short_name(std::size_t k) {
    std::string s;
    ++k;
    while (k > 0) {
        --k;
        s.insert(s.begin(), static_cast<char>('a' + k % 26));
        k /= 26;
    }
    return s;
}

/// Replaces every occurrence of binding b with new_names[b], leaving all
/// other bytes of the source untouched.
inline std::string rename_bindings(const Analysis& a, std::span<const std::string> new_names) {
    std::string out;
    out.reserve(a.source.size());
    std::size_t copied = 0;
    for (const Token& t : a.tokens) {
        if (!t.binding) continue;
        out.append(a.source, copied, t.span.start - copied);
        out += new_names[*t.binding];
        copied = t.span.end;
    }
    out.append(a.source, copied, std::string::npos);
    return out;
}

/// Names that renaming a binding declared in scope S must not capture:
/// globals referenced anywhere under S and outer bindings referenced under S.
struct CaptureSets {
    std::vector<std::set<std::string, std::less<>>> globals;
    std::vector<std::set<BindingId>> outer;

    explicit CaptureSets(const ScopeTree& tree)
        : globals(tree.scopes.size()), outer(tree.scopes.size()) {
        for (ScopeIndex r = 0; r < tree.scopes.size(); ++r) {
            for (const Reference& ref : tree.scopes[r].references) {
                if (!ref.binding) {
                    for (std::optional<ScopeIndex> s = r; s; s = tree.scopes[*s].parent)
                        globals[*s].insert(ref.name);
                    continue;
                }
                ScopeIndex decl = tree.bindings[*ref.binding].scope;
                for (std::optional<ScopeIndex> s = r; s && *s != decl; s = tree.scopes[*s].parent)
                    outer[*s].insert(*ref.binding);
            }
        }
    }
};

struct MangleResult {
    std::string source;
    RenameMap map;
};

/// Renames every local binding to a short name. Names restart at `a` in each
/// scope; `seed` permutes which binding of a scope gets which name (seed 0
/// keeps declaration order).
inline MangleResult mangle(std::string_view source, std::uint64_t seed = 0) {
    Analysis a = analyze(std::string(source));
    const ScopeTree& tree = a.tree;
    CaptureSets capture(tree);

    std::vector<std::string> new_names(tree.bindings.size());
    std::vector<std::vector<BindingId>> per_scope(tree.scopes.size());
    for (BindingId b = 0; b < tree.bindings.size(); ++b) per_scope[tree.bindings[b].scope].push_back(b);

    // Scopes are numbered in pre-order, so outer names are fixed first.
    for (ScopeIndex s = 0; s < tree.scopes.size(); ++s) {
        auto& order = per_scope[s];
        if (order.empty()) continue;
        if (seed != 0 && order.size() > 1) {
            std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * (s + 1)));
            for (std::size_t i = order.size() - 1; i > 0; --i)
                std::swap(order[i], order[rng() % (i + 1)]);
        }
        std::set<std::string, std::less<>> taken(capture.globals[s].begin(), capture.globals[s].end());
        for (BindingId outer : capture.outer[s]) taken.insert(new_names[outer]);
        std::size_t k = 0;
        for (BindingId b : order) {
            std::string name;
            do {
                name = short_name(k++);
            } while (is_reserved_word(name) || taken.count(name));
            taken.insert(name);
            new_names[b] = name;
        }
    }

    MangleResult out;
    out.source = rename_bindings(a, new_names);
    for (BindingId b = 0; b < tree.bindings.size(); ++b)
        out.map.entries.push_back({tree.binding_path(b), new_names[b], tree.bindings[b].name});
    return out;
}

} // namespace deminify
