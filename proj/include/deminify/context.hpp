#pragma once

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deminify/error.hpp"
#include "deminify/scope.hpp"
#include "deminify/token.hpp"

namespace deminify {

// Abstract tokens are plain strings. The reserved spellings cannot collide
// with lexed token text because `<` always lexes as its own punctuator.
using AbstractToken = std::string;

inline const AbstractToken kIdToken = "<ID>";
inline const AbstractToken kPadToken = "<PAD>";
inline const AbstractToken kUnkToken = "<UNK>";

/// 2q abstract tokens around one occurrence; the occurrence itself is not
/// included.
struct Context {
    std::vector<AbstractToken> tokens;

    friend bool operator==(const Context&, const Context&) = default;
};

inline Context pad_context(std::size_t q) { return Context{std::vector<AbstractToken>(2 * q, kPadToken)}; }

struct UsageSummary {
    ScopedName owner;
    std::vector<Context> contexts; // always exactly l entries
};

/// Occurrence lookup over a filtered token stream. The stream's binding
/// annotations decide which positions are local-name occurrences; only
/// bindings listed in `names` count.
class ContextExtractor {
public:
    ContextExtractor(const TokenStream& filtered, std::span<const ScopedName> names)
        : stream_(filtered) {
        BindingId max_id = 0;
        for (const ScopedName& n : names) max_id = std::max(max_id, n.binding);
        local_.assign(names.empty() ? 0 : max_id + 1, false);
        for (const ScopedName& n : names) local_[n.binding] = true;
        occurrences_.resize(local_.size());
        for (std::size_t k = 0; k < stream_.size(); ++k)
            if (is_local(k)) occurrences_[*stream_[k].binding].push_back(k);
    }

    bool is_local(long k) const {
        if (k < 0 || static_cast<std::size_t>(k) >= stream_.size()) return false;
        const auto& b = stream_[static_cast<std::size_t>(k)].binding;
        return b && *b < local_.size() && local_[*b];
    }

    AbstractToken project(long k) const {
        if (k < 0 || static_cast<std::size_t>(k) >= stream_.size()) return kPadToken;
        if (is_local(k)) return kIdToken;
        return stream_[static_cast<std::size_t>(k)].text;
    }

    Context context_at(long k, std::size_t q) const {
        if (!is_local(k))
            throw OccurrenceError("token " + std::to_string(k) + " is not a local-name occurrence");
        Context c;
        c.tokens.reserve(2 * q);
        const long span = static_cast<long>(q);
        for (long i = k - span; i < k; ++i) c.tokens.push_back(project(i));
        for (long i = k + 1; i <= k + span; ++i) c.tokens.push_back(project(i));
        return c;
    }

    UsageSummary usage_summary(const ScopedName& n, std::size_t q, std::size_t l) const {
        if (n.binding >= local_.size() || !local_[n.binding] || occurrences_[n.binding].empty())
            throw UnknownNameError("no occurrences of '" + n.name + "'");
        UsageSummary u{n, {}};
        u.contexts.reserve(l);
        for (std::size_t k : occurrences_[n.binding]) {
            if (u.contexts.size() == l) break;
            u.contexts.push_back(context_at(static_cast<long>(k), q));
        }
        while (u.contexts.size() < l) u.contexts.push_back(pad_context(q));
        return u;
    }

    const std::vector<std::size_t>& occurrences(BindingId b) const { return occurrences_.at(b); }

private:
    const TokenStream& stream_;
    std::vector<bool> local_;
    std::vector<std::vector<std::size_t>> occurrences_;
};

inline AbstractToken project(const TokenStream& filtered, std::span<const ScopedName> names, long k) {
    return ContextExtractor(filtered, names).project(k);
}

inline Context context_at(const TokenStream& filtered, std::span<const ScopedName> names, long k,
                          std::size_t q) {
    return ContextExtractor(filtered, names).context_at(k, q);
}

inline UsageSummary usage_summary(const TokenStream& filtered, std::span<const ScopedName> names,
                                  const ScopedName& n, std::size_t q, std::size_t l) {
    return ContextExtractor(filtered, names).usage_summary(n, q, l);
}

/// One summary per local name, ordered by first occurrence in the stream.
inline std::vector<UsageSummary> extract_all(const TokenStream& filtered, std::span<const ScopedName> names,
                                             std::size_t q, std::size_t l) {
    ContextExtractor ex(filtered, names);
    std::vector<const ScopedName*> order;
    order.reserve(names.size());
    for (const ScopedName& n : names) order.push_back(&n);
    auto first = [&](const ScopedName* n) {
        const auto& occ = ex.occurrences(n->binding);
        if (occ.empty()) throw UnknownNameError("no occurrences of '" + n->name + "'");
        return occ.front();
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](const ScopedName* a, const ScopedName* b) { return first(a) < first(b); });
    std::vector<UsageSummary> out;
    out.reserve(order.size());
    for (const ScopedName* n : order) out.push_back(ex.usage_summary(*n, q, l));
    return out;
}

/// Convenience: summaries for every local name of an analyzed file.
inline std::vector<UsageSummary> extract_all(const Analysis& a, std::size_t q, std::size_t l) {
    return extract_all(filter_tokens(a.tokens), a.names, q, l);
}

/// `<scope-path>:<name>\t<tok>\t<tok>...`, one line per summary.
inline void dump_summaries(std::ostream& os, const ScopeTree& tree, std::span<const UsageSummary> summaries) {
    for (const UsageSummary& u : summaries) {
        os << tree.path(u.owner.scope) << ':' << u.owner.name;
        for (const Context& c : u.contexts)
            for (const AbstractToken& t : c.tokens) os << '\t' << t;
        os << '\n';
    }
}

} // namespace deminify
