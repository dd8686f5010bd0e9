#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deminify/error.hpp"
#include "deminify/token.hpp"

namespace deminify {

enum class ScopeKind { program, function, block, catch_clause };

inline constexpr BindingId kGlobalBinding = std::numeric_limits<BindingId>::max();

using ScopeIndex = std::size_t;

struct Reference {
    std::size_t token = 0; // index into the unfiltered token stream
    std::string name;
    std::optional<BindingId> binding; // nullopt: resolves to GLOBAL
};

struct Scope {
    std::optional<ScopeIndex> parent;
    ScopeKind kind = ScopeKind::block;
    std::size_t ordinal = 0; // position among the parent's children
    std::vector<ScopeIndex> children;
    // Program-level declarations map to kGlobalBinding.
    std::map<std::string, BindingId, std::less<>> declarations;
    std::vector<Reference> references;
};

struct Binding {
    std::string name;
    ScopeIndex scope = 0;
    std::size_t declaration_token = 0;
};

/// A local name together with the scope declaring it. Identity is the
/// binding id; the same spelling in two scopes gives two ScopedNames.
struct ScopedName {
    std::string name;
    ScopeIndex scope = 0;
    BindingId binding = 0;

    friend bool operator==(const ScopedName& a, const ScopedName& b) {
        return a.binding == b.binding;
    }
};

class ScopeTree {
public:
    std::vector<Scope> scopes;
    std::vector<Binding> bindings;

    static constexpr ScopeIndex root() { return 0; }

    /// `/`-joined ordinals from the root, e.g. "0/2/1".
    std::string path(ScopeIndex s) const {
        std::vector<std::size_t> chain;
        for (std::optional<ScopeIndex> cur = s; cur; cur = scopes[*cur].parent)
            chain.push_back(scopes[*cur].parent ? scopes[*cur].ordinal : 0);
        std::string out;
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            if (!out.empty()) out += '/';
            out += std::to_string(*it);
        }
        return out;
    }

    std::optional<ScopeIndex> find_path(std::string_view p) const {
        if (scopes.empty()) return std::nullopt;
        std::size_t pos = p.find('/');
        if (p.substr(0, pos) != "0") return std::nullopt;
        ScopeIndex cur = root();
        while (pos != std::string_view::npos) {
            std::size_t next = p.find('/', pos + 1);
            std::string_view part = p.substr(pos + 1, next == std::string_view::npos ? next : next - pos - 1);
            std::size_t ord = 0;
            for (char c : part) {
                if (c < '0' || c > '9') return std::nullopt;
                ord = ord * 10 + static_cast<std::size_t>(c - '0');
            }
            if (part.empty() || ord >= scopes[cur].children.size()) return std::nullopt;
            cur = scopes[cur].children[ord];
            pos = next;
        }
        return cur;
    }

    bool is_ancestor_or_self(ScopeIndex ancestor, ScopeIndex s) const {
        for (std::optional<ScopeIndex> cur = s; cur; cur = scopes[*cur].parent)
            if (*cur == ancestor) return true;
        return false;
    }

    std::optional<BindingId> lookup(ScopeIndex from, std::string_view name) const {
        for (std::optional<ScopeIndex> cur = from; cur; cur = scopes[*cur].parent) {
            auto it = scopes[*cur].declarations.find(name);
            if (it != scopes[*cur].declarations.end()) {
                if (it->second == kGlobalBinding) return std::nullopt;
                return it->second;
            }
        }
        return std::nullopt;
    }

    std::string binding_path(BindingId b) const { return path(bindings[b].scope); }
};

namespace detail {

class ScopeBuilder {
public:
    explicit ScopeBuilder(const TokenStream& tokens) : toks_(tokens) {
        tree_.scopes.push_back(Scope{std::nullopt, ScopeKind::program, 0, {}, {}, {}});
    }

    ScopeTree run() {
        while (!eof()) statement();
        resolve();
        return std::move(tree_);
    }

private:
    struct Occurrence {
        std::size_t token;
        ScopeIndex scope;
    };

    // --- token helpers --------------------------------------------------
    bool eof() const { return pos_ >= toks_.size(); }

    const Token& cur() const {
        if (eof()) throw ParseError("unexpected end of input", end_offset());
        return toks_[pos_];
    }

    std::size_t end_offset() const { return toks_.empty() ? 0 : toks_.back().span.end; }

    bool at_punct(std::string_view p) const { return !eof() && toks_[pos_].is_punct(p); }
    bool at_keyword(std::string_view k) const { return !eof() && toks_[pos_].is_keyword(k); }
    bool at_kind(TokenKind k) const { return !eof() && toks_[pos_].kind == k; }

    bool next_is_punct(std::string_view p) const {
        return pos_ + 1 < toks_.size() && toks_[pos_ + 1].is_punct(p);
    }

    [[noreturn]] void fail(std::string_view what) const {
        if (eof()) throw ParseError(std::string(what) + " (at end of input)", end_offset());
        throw ParseError(std::string(what) + " near '" + toks_[pos_].text + "'", toks_[pos_].span.start);
    }

    void expect_punct(std::string_view p) {
        if (!at_punct(p)) fail("expected '" + std::string(p) + "'");
        ++pos_;
    }

    void consume_semicolon() {
        if (at_punct(";")) {
            ++pos_;
            return;
        }
        if (eof() || at_punct("}") || toks_[pos_].line_break_before) return;
        fail("expected ';'");
    }

    // --- scope helpers --------------------------------------------------
    ScopeIndex push_scope(ScopeKind kind) {
        ScopeIndex idx = tree_.scopes.size();
        Scope s;
        s.parent = current_;
        s.kind = kind;
        s.ordinal = tree_.scopes[current_].children.size();
        tree_.scopes.push_back(std::move(s));
        tree_.scopes[current_].children.push_back(idx);
        current_ = idx;
        return idx;
    }

    void pop_scope() { current_ = *tree_.scopes[current_].parent; }

    ScopeIndex function_scope() const {
        ScopeIndex s = current_;
        while (tree_.scopes[s].kind != ScopeKind::function && tree_.scopes[s].kind != ScopeKind::program)
            s = *tree_.scopes[s].parent;
        return s;
    }

    void declare(ScopeIndex scope, std::size_t token) {
        const std::string& name = toks_[token].text;
        auto& decls = tree_.scopes[scope].declarations;
        if (decls.count(name)) return;
        if (scope == ScopeTree::root()) {
            decls.emplace(name, kGlobalBinding);
            return;
        }
        BindingId id = static_cast<BindingId>(tree_.bindings.size());
        tree_.bindings.push_back(Binding{name, scope, token});
        decls.emplace(name, id);
    }

    std::size_t binding_identifier() {
        if (!at_kind(TokenKind::identifier)) fail("expected identifier");
        return pos_++;
    }

    void occurrence(std::size_t token, ScopeIndex scope) { occurrences_.push_back({token, scope}); }

    // --- statements -----------------------------------------------------
    void statement() {
        const Token& t = cur();
        if (t.kind == TokenKind::punctuator) {
            if (t.text == "{") {
                push_scope(ScopeKind::block);
                block_body();
                pop_scope();
                return;
            }
            if (t.text == ";") {
                ++pos_;
                return;
            }
        }
        if (t.kind == TokenKind::keyword) {
            const std::string& k = t.text;
            if (k == "var" || k == "let" || k == "const") {
                declarations(false);
                consume_semicolon();
                return;
            }
            if (k == "function") return function_declaration();
            if (k == "if") return if_statement();
            if (k == "for") return for_statement();
            if (k == "while") {
                ++pos_;
                paren_expression();
                statement();
                return;
            }
            if (k == "do") {
                ++pos_;
                statement();
                if (!at_keyword("while")) fail("expected 'while'");
                ++pos_;
                paren_expression();
                if (at_punct(";")) ++pos_;
                return;
            }
            if (k == "continue" || k == "break") {
                ++pos_;
                if (at_kind(TokenKind::identifier) && !toks_[pos_].line_break_before) ++pos_; // label
                consume_semicolon();
                return;
            }
            if (k == "return") {
                ++pos_;
                if (!eof() && !at_punct(";") && !at_punct("}") && !toks_[pos_].line_break_before)
                    expression(false);
                consume_semicolon();
                return;
            }
            if (k == "throw") {
                ++pos_;
                if (eof() || toks_[pos_].line_break_before) fail("expected expression after 'throw'");
                expression(false);
                consume_semicolon();
                return;
            }
            if (k == "try") return try_statement();
            if (k == "switch") return switch_statement();
            if (k == "debugger") {
                ++pos_;
                consume_semicolon();
                return;
            }
            if (k == "with" || k == "class" || k == "import" || k == "export" || k == "enum" ||
                k == "extends" || k == "super" || k == "interface" || k == "implements")
                fail("unsupported construct '" + k + "'");
        }
        if (t.kind == TokenKind::identifier && next_is_punct(":")) {
            pos_ += 2; // label
            statement();
            return;
        }
        expression(false);
        consume_semicolon();
    }

    void block_body() {
        expect_punct("{");
        while (!at_punct("}")) {
            if (eof()) fail("unterminated block");
            statement();
        }
        ++pos_;
    }

    void paren_expression() {
        expect_punct("(");
        expression(false);
        expect_punct(")");
    }

    void declarations(bool no_in) {
        const bool is_var = cur().text == "var";
        ++pos_;
        while (true) {
            std::size_t tok = binding_identifier();
            declare(is_var ? function_scope() : current_, tok);
            occurrence(tok, current_);
            if (at_punct("=")) {
                ++pos_;
                assignment(no_in);
            }
            if (!at_punct(",")) break;
            ++pos_;
        }
    }

    void function_declaration() {
        ++pos_; // function
        std::size_t name = binding_identifier();
        declare(function_scope(), name);
        occurrence(name, current_);
        function_rest(std::nullopt);
    }

    // Parses `(params) { body }`; a function expression's own name is bound
    // inside its scope.
    void function_rest(std::optional<std::size_t> own_name) {
        push_scope(ScopeKind::function);
        if (own_name) {
            declare(current_, *own_name);
            occurrence(*own_name, current_);
        }
        expect_punct("(");
        if (!at_punct(")")) {
            while (true) {
                std::size_t p = binding_identifier();
                declare(current_, p);
                occurrence(p, current_);
                if (!at_punct(",")) break;
                ++pos_;
            }
        }
        expect_punct(")");
        expect_punct("{");
        while (!at_punct("}")) {
            if (eof()) fail("unterminated function body");
            statement();
        }
        ++pos_;
        pop_scope();
    }

    void if_statement() {
        ++pos_;
        paren_expression();
        statement();
        if (at_keyword("else")) {
            ++pos_;
            statement();
        }
    }

    void for_statement() {
        ++pos_;
        expect_punct("(");
        push_scope(ScopeKind::block);
        bool for_in = false;
        if (at_punct(";")) {
            // empty init
        } else if (at_keyword("var") || at_keyword("let") || at_keyword("const")) {
            declarations(true);
            for_in = at_keyword("in");
        } else {
            expression(true);
            for_in = at_keyword("in");
        }
        if (for_in) {
            ++pos_;
            expression(false);
        } else {
            expect_punct(";");
            if (!at_punct(";")) expression(false);
            expect_punct(";");
            if (!at_punct(")")) expression(false);
        }
        expect_punct(")");
        statement();
        pop_scope();
    }

    void try_statement() {
        ++pos_;
        push_scope(ScopeKind::block);
        block_body();
        pop_scope();
        bool handled = false;
        if (at_keyword("catch")) {
            handled = true;
            ++pos_;
            expect_punct("(");
            push_scope(ScopeKind::catch_clause);
            std::size_t param = binding_identifier();
            declare(current_, param);
            occurrence(param, current_);
            expect_punct(")");
            block_body();
            pop_scope();
        }
        if (at_keyword("finally")) {
            handled = true;
            ++pos_;
            push_scope(ScopeKind::block);
            block_body();
            pop_scope();
        }
        if (!handled) fail("expected 'catch' or 'finally'");
    }

    void switch_statement() {
        ++pos_;
        paren_expression();
        expect_punct("{");
        push_scope(ScopeKind::block);
        while (!at_punct("}")) {
            if (eof()) fail("unterminated switch");
            if (at_keyword("case")) {
                ++pos_;
                expression(false);
                expect_punct(":");
            } else if (at_keyword("default")) {
                ++pos_;
                expect_punct(":");
            } else {
                statement();
            }
        }
        ++pos_;
        pop_scope();
    }

    // --- expressions ----------------------------------------------------
    void expression(bool no_in) {
        assignment(no_in);
        while (at_punct(",")) {
            ++pos_;
            assignment(no_in);
        }
    }

    static bool is_assign_op(const Token& t) {
        if (t.kind != TokenKind::punctuator) return false;
        static constexpr std::string_view ops[] = {"=",  "+=", "-=",  "*=", "/=", "%=", "<<=",
                                                   ">>=", ">>>=", "&=", "|=", "^="};
        for (auto op : ops)
            if (t.text == op) return true;
        return false;
    }

    static bool is_binary_op(const Token& t, bool no_in) {
        if (t.kind == TokenKind::keyword) return t.text == "instanceof" || (t.text == "in" && !no_in);
        if (t.kind != TokenKind::punctuator) return false;
        static constexpr std::string_view ops[] = {"||", "&&", "|",  "^",  "&",  "==", "!=",
                                                   "===", "!==", "<", ">", "<=", ">=", "<<",
                                                   ">>", ">>>", "+", "-",  "*",  "/",  "%"};
        for (auto op : ops)
            if (t.text == op) return true;
        return false;
    }

    void assignment(bool no_in) {
        conditional(no_in);
        if (!eof() && is_assign_op(toks_[pos_])) {
            ++pos_;
            assignment(no_in);
        }
    }

    void conditional(bool no_in) {
        binary(no_in);
        if (at_punct("?")) {
            ++pos_;
            assignment(false);
            expect_punct(":");
            assignment(no_in);
        }
    }

    // Operator precedence does not affect scoping, so operands are parsed as
    // a flat chain.
    void binary(bool no_in) {
        unary();
        while (!eof() && is_binary_op(toks_[pos_], no_in)) {
            ++pos_;
            unary();
        }
    }

    void unary() {
        const Token& t = cur();
        bool prefix = (t.kind == TokenKind::keyword &&
                       (t.text == "delete" || t.text == "void" || t.text == "typeof")) ||
                      (t.kind == TokenKind::punctuator &&
                       (t.text == "+" || t.text == "-" || t.text == "~" || t.text == "!" ||
                        t.text == "++" || t.text == "--"));
        if (prefix) {
            ++pos_;
            unary();
            return;
        }
        call_member(true);
        if ((at_punct("++") || at_punct("--")) && !toks_[pos_].line_break_before) ++pos_;
    }

    void call_member(bool allow_call) {
        if (at_keyword("new")) {
            ++pos_;
            if (at_punct(".")) fail("unsupported construct 'new.target'");
            call_member(false);
            if (at_punct("(")) arguments();
        } else {
            primary();
        }
        while (!eof()) {
            if (at_punct(".")) {
                ++pos_;
                if (!at_kind(TokenKind::identifier) && !at_kind(TokenKind::keyword))
                    fail("expected property name");
                ++pos_; // property name, never a reference
            } else if (at_punct("[")) {
                ++pos_;
                expression(false);
                expect_punct("]");
            } else if (allow_call && at_punct("(")) {
                arguments();
            } else if (at_kind(TokenKind::template_literal)) {
                ++pos_; // tagged template
            } else {
                break;
            }
        }
    }

    void arguments() {
        expect_punct("(");
        if (!at_punct(")")) {
            while (true) {
                assignment(false);
                if (!at_punct(",")) break;
                ++pos_;
            }
        }
        expect_punct(")");
    }

    void primary() {
        const Token& t = cur();
        switch (t.kind) {
        case TokenKind::identifier:
            occurrence(pos_, current_);
            ++pos_;
            return;
        case TokenKind::numeric_literal:
        case TokenKind::string_literal:
        case TokenKind::regex_literal:
        case TokenKind::template_literal:
            ++pos_;
            return;
        case TokenKind::keyword:
            if (t.text == "this" || t.text == "null" || t.text == "true" || t.text == "false") {
                ++pos_;
                return;
            }
            if (t.text == "function") {
                ++pos_;
                std::optional<std::size_t> name;
                if (at_kind(TokenKind::identifier)) name = pos_++;
                function_rest(name);
                return;
            }
            fail("unexpected keyword");
        case TokenKind::punctuator:
            if (t.text == "(") {
                paren_expression();
                return;
            }
            if (t.text == "[") return array_literal();
            if (t.text == "{") return object_literal();
            fail("unexpected token");
        }
    }

    void array_literal() {
        ++pos_;
        while (!at_punct("]")) {
            if (at_punct(",")) {
                ++pos_;
                continue;
            }
            assignment(false);
            if (at_punct(",")) ++pos_;
            else if (!at_punct("]")) fail("expected ',' or ']'");
        }
        ++pos_;
    }

    static bool is_property_name(const Token& t) {
        return t.kind == TokenKind::identifier || t.kind == TokenKind::keyword ||
               t.kind == TokenKind::string_literal || t.kind == TokenKind::numeric_literal;
    }

    void object_literal() {
        ++pos_;
        while (!at_punct("}")) {
            if (eof() || !is_property_name(toks_[pos_])) fail("expected property name");
            const Token& key = toks_[pos_];
            bool accessor = key.kind == TokenKind::identifier && (key.text == "get" || key.text == "set") &&
                            pos_ + 1 < toks_.size() && is_property_name(toks_[pos_ + 1]);
            if (accessor) {
                pos_ += 2;
                function_rest(std::nullopt);
            } else {
                ++pos_;
                expect_punct(":");
                assignment(false);
            }
            if (at_punct(",")) ++pos_;
            else if (!at_punct("}")) fail("expected ',' or '}'");
        }
        ++pos_;
    }

    void resolve() {
        for (const Occurrence& occ : occurrences_) {
            const std::string& name = toks_[occ.token].text;
            tree_.scopes[occ.scope].references.push_back(
                Reference{occ.token, name, tree_.lookup(occ.scope, name)});
        }
    }

    const TokenStream& toks_;
    std::size_t pos_ = 0;
    ScopeIndex current_ = 0;
    ScopeTree tree_;
    std::vector<Occurrence> occurrences_;
};

} // namespace detail

struct LocalNames {
    ScopeTree tree;
    std::vector<ScopedName> names; // ordered by binding id
};

/// Builds the scope tree for `stream`, sets each local-name occurrence's
/// binding, and returns the local names. Program-level declarations are
/// global and never part of the result.
inline LocalNames resolve_local_names(TokenStream& stream) {
    LocalNames out;
    out.tree = detail::ScopeBuilder(stream).run();
    for (Token& t : stream) t.binding.reset();
    for (const Scope& s : out.tree.scopes)
        for (const Reference& r : s.references)
            if (r.binding) stream[r.token].binding = *r.binding;
    out.names.reserve(out.tree.bindings.size());
    for (BindingId b = 0; b < out.tree.bindings.size(); ++b)
        out.names.push_back(ScopedName{out.tree.bindings[b].name, out.tree.bindings[b].scope, b});
    return out;
}

/// Everything the later stages need about one source file.
struct Analysis {
    std::string source;
    TokenStream tokens; // unfiltered, binding-annotated
    ScopeTree tree;
    std::vector<ScopedName> names;
};

inline Analysis analyze(std::string source) {
    Analysis a;
    a.source = std::move(source);
    a.tokens = tokenize(a.source);
    LocalNames ln = resolve_local_names(a.tokens);
    a.tree = std::move(ln.tree);
    a.names = std::move(ln.names);
    return a;
}

/// Checks that two analyses have the same scope shape and the same
/// reference-to-binding structure. Unbound identifiers (globals, property
/// names, labels) must be spelled identically; bound ones may differ.
inline bool alpha_equivalent(const Analysis& a, const Analysis& b, std::string* why = nullptr) {
    auto no = [&](std::string msg) {
        if (why) *why = std::move(msg);
        return false;
    };
    if (a.tree.scopes.size() != b.tree.scopes.size()) return no("scope count differs");
    for (std::size_t i = 0; i < a.tree.scopes.size(); ++i) {
        const Scope& sa = a.tree.scopes[i];
        const Scope& sb = b.tree.scopes[i];
        if (sa.parent != sb.parent || sa.kind != sb.kind || sa.ordinal != sb.ordinal)
            return no("scope " + a.tree.path(i) + " differs");
        if (sa.declarations.size() != sb.declarations.size())
            return no("declaration count differs in scope " + a.tree.path(i));
        if (sa.references.size() != sb.references.size())
            return no("reference count differs in scope " + a.tree.path(i));
    }
    if (a.tree.bindings.size() != b.tree.bindings.size()) return no("binding count differs");
    for (std::size_t i = 0; i < a.tree.bindings.size(); ++i)
        if (a.tree.bindings[i].scope != b.tree.bindings[i].scope ||
            a.tree.bindings[i].declaration_token != b.tree.bindings[i].declaration_token)
            return no("binding " + std::to_string(i) + " differs");
    if (a.tokens.size() != b.tokens.size()) return no("token count differs");
    for (std::size_t i = 0; i < a.tokens.size(); ++i) {
        const Token& ta = a.tokens[i];
        const Token& tb = b.tokens[i];
        if (ta.kind != tb.kind) return no("token kind differs at token " + std::to_string(i));
        if (ta.binding != tb.binding) return no("binding differs at token " + std::to_string(i));
        if (!ta.binding && ta.text != tb.text)
            return no("unbound token '" + ta.text + "' became '" + tb.text + "'");
    }
    return true;
}

} // namespace deminify
