#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deminify/error.hpp"

namespace deminify {

enum class TokenKind {
    identifier,
    keyword,
    punctuator,
    numeric_literal,
    string_literal,
    regex_literal,
    template_literal,
};

inline std::string_view to_string(TokenKind kind) {
    switch (kind) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::keyword: return "keyword";
    case TokenKind::punctuator: return "punctuator";
    case TokenKind::numeric_literal: return "numeric-literal";
    case TokenKind::string_literal: return "string-literal";
    case TokenKind::regex_literal: return "regex-literal";
    case TokenKind::template_literal: return "template-literal";
    }
    return "?";
}

using BindingId = std::uint32_t;

struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - start; }
    friend bool operator==(const Span&, const Span&) = default;
};

struct Token {
    std::string text;
    TokenKind kind = TokenKind::punctuator;
    Span span;
    // Set only for occurrences of local names.
    std::optional<BindingId> binding;
    // Needed for automatic semicolon insertion and restricted productions.
    bool line_break_before = false;

    bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
    bool is_punct(std::string_view t) const { return is(TokenKind::punctuator, t); }
    bool is_keyword(std::string_view t) const { return is(TokenKind::keyword, t); }
};

using TokenStream = std::vector<Token>;

namespace detail {

// Reserved words of the supported ES5-style subset plus the ES2015 words we
// reject at parse time (class, import, ...). Sorted for binary search.
inline constexpr std::array<std::string_view, 39> kReservedWords = {
    "break",   "case",     "catch",  "class",      "const",  "continue",
    "debugger", "default", "delete", "do",         "else",   "enum",
    "export",  "extends",  "false",  "finally",    "for",    "function",
    "if",      "implements", "import", "in",       "instanceof", "interface",
    "let",     "new",      "null",   "return",     "super",  "switch",
    "this",    "throw",    "true",   "try",        "typeof", "var",
    "void",    "while",    "with",
};

// Longest first so that greedy matching picks e.g. ">>>=" before ">>".
inline constexpr std::array<std::string_view, 50> kPunctuators = {
    ">>>=", "...", "===", "!==", ">>>", "<<=", ">>=", "**=", "=>", "==", "!=", "<=", ">=",
    "&&",   "||",  "++",  "--",  "<<",  ">>",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=",
    "^=",   "**",  "{",   "}",   "(",   ")",   "[",   "]",   ";",  ",",  "<",  ">",  "+",
    "-",    "*",   "/",   "%",   "&",   "|",   "^",   "!",   "~",  "?",  ":",
};

inline bool is_ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}

inline bool is_ident_part(unsigned char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
}

inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

inline bool is_hex_digit(unsigned char c) {
    return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

inline bool is_line_terminator(unsigned char c) { return c == '\n' || c == '\r'; }

inline bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\v' || c == '\f' || is_line_terminator(c);
}

// A '/' starts a regular expression unless the previous token can end an
// expression.
inline bool regex_allowed_after(const Token* prev) {
    if (prev == nullptr) return true;
    switch (prev->kind) {
    case TokenKind::identifier:
    case TokenKind::numeric_literal:
    case TokenKind::string_literal:
    case TokenKind::regex_literal:
    case TokenKind::template_literal:
        return false;
    case TokenKind::keyword:
        return !(prev->text == "this" || prev->text == "null" || prev->text == "true" ||
                 prev->text == "false" || prev->text == "super");
    case TokenKind::punctuator:
        return !(prev->text == ")" || prev->text == "]" || prev->text == "}" ||
                 prev->text == "++" || prev->text == "--");
    }
    return true;
}

class Lexer {
public:
    explicit Lexer(std::string_view source) : src_(source) {}

    TokenStream run() {
        TokenStream out;
        bool line_break = false;
        while (true) {
            line_break = skip_trivia() || line_break;
            if (pos_ >= src_.size()) break;
            Token tok = next(out.empty() ? nullptr : &out.back());
            tok.line_break_before = line_break;
            line_break = false;
            out.push_back(std::move(tok));
        }
        return out;
    }

private:
    // Returns true if a line terminator was skipped.
    bool skip_trivia() {
        bool saw_newline = false;
        while (pos_ < src_.size()) {
            unsigned char c = src_[pos_];
            if (is_space(c)) {
                saw_newline = saw_newline || is_line_terminator(c);
                ++pos_;
            } else if (c == '/' && peek(1) == '/') {
                while (pos_ < src_.size() && !is_line_terminator(src_[pos_])) ++pos_;
            } else if (c == '/' && peek(1) == '*') {
                std::size_t close = src_.find("*/", pos_ + 2);
                if (close == std::string_view::npos) throw LexError("unterminated comment", pos_);
                for (std::size_t i = pos_; i < close; ++i)
                    saw_newline = saw_newline || is_line_terminator(src_[i]);
                pos_ = close + 2;
            } else if (c == 0xEF && peek(1) == 0xBB && peek(2) == 0xBF) {
                pos_ += 3; // BOM
            } else {
                break;
            }
        }
        return saw_newline;
    }

    unsigned char peek(std::size_t ahead) const {
        return pos_ + ahead < src_.size() ? static_cast<unsigned char>(src_[pos_ + ahead]) : 0;
    }

    Token make(TokenKind kind, std::size_t start) const {
        Token t;
        t.kind = kind;
        t.span = {start, pos_};
        t.text = std::string(src_.substr(start, pos_ - start));
        return t;
    }

    Token next(const Token* prev) {
        const std::size_t start = pos_;
        const unsigned char c = src_[pos_];

        if (c == '\\') throw LexError("unicode escapes in identifiers are not supported", pos_);
        if (is_ident_start(c)) {
            while (pos_ < src_.size() && is_ident_part(src_[pos_])) ++pos_;
            if (pos_ < src_.size() && src_[pos_] == '\\')
                throw LexError("unicode escapes in identifiers are not supported", pos_);
            Token t = make(TokenKind::identifier, start);
            if (std::binary_search(kReservedWords.begin(), kReservedWords.end(),
                                   std::string_view(t.text)))
                t.kind = TokenKind::keyword;
            return t;
        }
        if (is_digit(c) || (c == '.' && is_digit(peek(1)))) return number(start);
        if (c == '"' || c == '\'') return string(start, c);
        if (c == '`') return template_literal(start);
        if (c == '/' && regex_allowed_after(prev)) return regex(start);

        for (std::string_view p : kPunctuators) {
            if (src_.substr(pos_, p.size()) == p) {
                pos_ += p.size();
                return make(TokenKind::punctuator, start);
            }
        }
        if (c == '.') {
            ++pos_;
            return make(TokenKind::punctuator, start);
        }
        if (c == '=') {
            ++pos_;
            return make(TokenKind::punctuator, start);
        }
        throw LexError("unrecognized character", pos_);
    }

    Token number(std::size_t start) {
        if (src_[pos_] == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
            pos_ += 2;
            if (!is_hex_digit(peek(0))) throw LexError("malformed hex literal", start);
            while (is_hex_digit(peek(0))) ++pos_;
        } else {
            while (is_digit(peek(0))) ++pos_;
            if (peek(0) == '.') {
                ++pos_;
                while (is_digit(peek(0))) ++pos_;
            }
            if (peek(0) == 'e' || peek(0) == 'E') {
                std::size_t save = pos_;
                ++pos_;
                if (peek(0) == '+' || peek(0) == '-') ++pos_;
                if (!is_digit(peek(0))) {
                    pos_ = save;
                    throw LexError("malformed exponent", save);
                }
                while (is_digit(peek(0))) ++pos_;
            }
        }
        if (is_ident_start(peek(0))) throw LexError("identifier directly after number", pos_);
        return make(TokenKind::numeric_literal, start);
    }

    Token string(std::size_t start, unsigned char quote) {
        ++pos_;
        while (true) {
            if (pos_ >= src_.size()) throw LexError("unterminated string literal", start);
            unsigned char c = src_[pos_];
            if (c == quote) {
                ++pos_;
                break;
            }
            if (c == '\\') {
                pos_ += 2;
                continue;
            }
            if (is_line_terminator(c)) throw LexError("line break in string literal", pos_);
            ++pos_;
        }
        return make(TokenKind::string_literal, start);
    }

    Token template_literal(std::size_t start) {
        ++pos_;
        while (true) {
            if (pos_ >= src_.size()) throw LexError("unterminated template literal", start);
            unsigned char c = src_[pos_];
            if (c == '`') {
                ++pos_;
                break;
            }
            if (c == '\\') {
                pos_ += 2;
                continue;
            }
            if (c == '$' && peek(1) == '{')
                throw LexError("template substitutions are not supported", pos_);
            ++pos_;
        }
        return make(TokenKind::template_literal, start);
    }

    Token regex(std::size_t start) {
        ++pos_;
        bool in_class = false;
        while (true) {
            if (pos_ >= src_.size() || is_line_terminator(src_[pos_]))
                throw LexError("unterminated regular expression", start);
            unsigned char c = src_[pos_];
            if (c == '\\') {
                pos_ += 2;
                continue;
            }
            ++pos_;
            if (c == '[') in_class = true;
            else if (c == ']') in_class = false;
            else if (c == '/' && !in_class) break;
        }
        while (pos_ < src_.size() && is_ident_part(src_[pos_])) ++pos_;
        return make(TokenKind::regex_literal, start);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline bool is_reserved_word(std::string_view word) {
    return std::binary_search(detail::kReservedWords.begin(), detail::kReservedWords.end(), word);
}

/// Lexes `source` into tokens; comments and whitespace are dropped. Each
/// token's text equals `source.substr(span.start, span.size())`.
inline TokenStream tokenize(std::string_view source) {
    return detail::Lexer(source).run();
}

/// Drops `.`, `(` and `)` punctuators, keeping everything else in order.
inline TokenStream filter_tokens(const TokenStream& stream) {
    TokenStream out;
    out.reserve(stream.size());
    for (const Token& t : stream) {
        if (t.kind == TokenKind::punctuator && (t.text == "." || t.text == "(" || t.text == ")"))
            continue;
        out.push_back(t);
    }
    return out;
}

} // namespace deminify
