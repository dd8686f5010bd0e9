#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "deminify/context.hpp"
#include "deminify/digest.hpp"
#include "deminify/error.hpp"

namespace deminify {

enum class VocabKind { input, output };

using FrequencyTable = std::map<std::string, std::uint64_t, std::less<>>;

struct OneHot {
    std::size_t length = 0;
    std::size_t hot = 0;

    friend bool operator==(const OneHot&, const OneHot&) = default;
};

struct Coverage {
    double unique_pct = 0;     // distinct corpus items present in the vocabulary
    double occurrence_pct = 0; // corpus occurrences present in the vocabulary
};

class Vocabulary {
public:
    Vocabulary() = default;

    /// Specials first (`<ID> <PAD> <UNK>` for input, `<UNK>` for output),
    /// then the most frequent items; ties go to the lexicographically smaller
    /// string. Returns fewer than `size` entries when the corpus is too small;
    /// see is_short().
    static Vocabulary from_frequencies(VocabKind kind, const FrequencyTable& freq, std::size_t size) {
        Vocabulary v;
        v.kind_ = kind;
        v.requested_ = size;
        std::vector<AbstractToken> specials = kind == VocabKind::input
                                                  ? std::vector<AbstractToken>{kIdToken, kPadToken, kUnkToken}
                                                  : std::vector<AbstractToken>{kUnkToken};
        if (size < specials.size())
            throw DataError("vocabulary size " + std::to_string(size) + " leaves no room for special entries");
        for (auto& s : specials) v.add(s);

        std::vector<std::pair<std::string_view, std::uint64_t>> ranked;
        ranked.reserve(freq.size());
        for (const auto& [item, count] : freq)
            if (!is_special(item) && count > 0) ranked.emplace_back(item, count);
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        for (const auto& r : ranked) {
            if (v.entries_.size() >= size) break;
            v.add(std::string(r.first));
        }
        return v;
    }

    VocabKind kind() const { return kind_; }
    std::size_t size() const { return entries_.size(); }
    const std::vector<std::string>& entries() const { return entries_; }
    const std::string& at(std::size_t i) const { return entries_.at(i); }
    bool is_short() const { return entries_.size() < requested_; }
    std::size_t requested_size() const { return requested_; }

    std::optional<std::size_t> find(std::string_view item) const {
        auto it = index_.find(std::string(item));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(std::string_view item) const { return find(item).has_value(); }

    std::size_t unk() const { return *find(kUnkToken); }
    std::size_t pad() const { return *find(kPadToken); }
    std::size_t id() const { return *find(kIdToken); }

    std::size_t index_or_unk(std::string_view item) const { return find(item).value_or(unk()); }

    OneHot one_hot(std::string_view item) const { return OneHot{size(), index_or_unk(item)}; }

    static bool is_special(std::string_view item) {
        return item == kIdToken || item == kPadToken || item == kUnkToken;
    }

    // File format: `#vocab v1 kind=<input|output> size=<n>` then one escaped
    // entry per line in index order.
    void write(std::ostream& os) const {
        os << "#vocab v1 kind=" << (kind_ == VocabKind::input ? "input" : "output") << " size=" << size()
           << '\n';
        for (const auto& e : entries_) os << escape(e) << '\n';
    }

    std::string serialize() const {
        std::ostringstream os;
        write(os);
        return os.str();
    }

    std::string digest() const { return sha256_hex(serialize()); }

    static Vocabulary read(std::istream& is) {
        std::string header;
        if (!std::getline(is, header)) throw DataError("empty vocabulary file");
        Vocabulary v;
        std::size_t n = 0;
        if (header.rfind("#vocab v1 kind=input size=", 0) == 0) {
            v.kind_ = VocabKind::input;
            n = parse_size(header.substr(26));
        } else if (header.rfind("#vocab v1 kind=output size=", 0) == 0) {
            v.kind_ = VocabKind::output;
            n = parse_size(header.substr(27));
        } else {
            throw DataError("bad vocabulary header: " + header);
        }
        std::string line;
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::getline(is, line)) throw DataError("truncated vocabulary file");
            std::string entry = unescape(line);
            if (v.index_.count(entry)) throw DataError("duplicate vocabulary entry: " + line);
            v.add(std::move(entry));
        }
        while (std::getline(is, line))
            if (!line.empty()) throw DataError("trailing data after vocabulary entries");
        v.requested_ = n;
        bool ok = v.kind_ == VocabKind::input
                      ? v.contains(kIdToken) && v.contains(kPadToken) && v.contains(kUnkToken)
                      : v.contains(kUnkToken) && !v.contains(kIdToken) && !v.contains(kPadToken);
        if (!ok) throw DataError("vocabulary is missing its special entries");
        return v;
    }

    static Vocabulary parse(const std::string& text) {
        std::istringstream is(text);
        return read(is);
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.kind_ == b.kind_ && a.entries_ == b.entries_;
    }

private:
    void add(std::string e) {
        index_.emplace(e, entries_.size());
        entries_.push_back(std::move(e));
    }

    static std::size_t parse_size(const std::string& s) {
        try {
            std::size_t used = 0;
            unsigned long long n = std::stoull(s, &used);
            if (used != s.size()) throw DataError("bad vocabulary size: " + s);
            return static_cast<std::size_t>(n);
        } catch (const std::logic_error&) {
            throw DataError("bad vocabulary size: " + s);
        }
    }

    static std::string escape(std::string_view s) {
        std::string out;
        for (char c : s) {
            if (c == '\\') out += "\\\\";
            else if (c == '\n') out += "\\n";
            else if (c == '\r') out += "\\r";
            else out += c;
        }
        return out;
    }

    static std::string unescape(std::string_view s) {
        std::string out;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != '\\' || i + 1 == s.size()) {
                out += s[i];
                continue;
            }
            char n = s[++i];
            out += n == 'n' ? '\n' : n == 'r' ? '\r' : n;
        }
        return out;
    }

    VocabKind kind_ = VocabKind::input;
    std::vector<std::string> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t requested_ = 0;
};

/// Token frequencies over usage summaries; `<ID>` and `<PAD>` are not counted.
inline FrequencyTable count_input_tokens(std::span<const UsageSummary> summaries) {
    FrequencyTable freq;
    for (const auto& u : summaries)
        for (const auto& c : u.contexts)
            for (const auto& t : c.tokens)
                if (!Vocabulary::is_special(t)) ++freq[t];
    return freq;
}

inline FrequencyTable count_names(std::span<const std::string> names) {
    FrequencyTable freq;
    for (const auto& n : names) ++freq[n];
    return freq;
}

inline Vocabulary build_input_vocab(std::span<const UsageSummary> summaries, std::size_t size) {
    return Vocabulary::from_frequencies(VocabKind::input, count_input_tokens(summaries), size);
}

inline Vocabulary build_output_vocab(std::span<const std::string> names, std::size_t size) {
    return Vocabulary::from_frequencies(VocabKind::output, count_names(names), size);
}

inline OneHot one_hot(std::string_view token, const Vocabulary& v) { return v.one_hot(token); }

inline std::vector<OneHot> encode_context(const Context& c, const Vocabulary& v) {
    std::vector<OneHot> out;
    out.reserve(c.tokens.size());
    for (const auto& t : c.tokens) out.push_back(v.one_hot(t));
    return out;
}

/// Percentages of distinct items and of occurrences in `corpus` that the
/// vocabulary covers. Special entries are ignored on both sides.
inline Coverage coverage_report(const Vocabulary& v, const FrequencyTable& corpus) {
    std::uint64_t distinct = 0, distinct_hit = 0, total = 0, total_hit = 0;
    for (const auto& [item, count] : corpus) {
        if (Vocabulary::is_special(item) || count == 0) continue;
        ++distinct;
        total += count;
        if (v.contains(item)) {
            ++distinct_hit;
            total_hit += count;
        }
    }
    if (total == 0) throw EmptyCorpus("coverage of an empty corpus");
    return Coverage{100.0 * static_cast<double>(distinct_hit) / static_cast<double>(distinct),
                    100.0 * static_cast<double>(total_hit) / static_cast<double>(total)};
}

} // namespace deminify
