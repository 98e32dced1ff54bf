// SPDX-License-Identifier: Apache-2.0

#include "sepolyzer/parser.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <variant>

namespace sepolyzer {

std::string ParseError::str() const {
    return std::to_string(line) + ":" + std::to_string(column) + ": " + message;
}

namespace {

enum class TokKind { Id, NegId, Path, LBrace, RBrace, Semi, Colon, Comma, Star, Tilde, End, Bad };

struct Token {
    TokKind kind;
    std::string text;  // NegId stores the identifier without the leading '-'
    int line;
    int col;
};

bool is_id_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_id_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

bool is_path_char(char c) {
    return is_id_char(c) || c == '/';
}

std::vector<Token> lex(std::string_view text) {
    std::vector<Token> out;
    size_t i = 0;
    int line = 1;
    int col = 1;
    const size_t n = text.size();
    while (i < n) {
        char c = text[i];
        if (c == '\n') {
            ++line;
            col = 1;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++col;
            ++i;
            continue;
        }
        if (c == '#') {
            while (i < n && text[i] != '\n') {
                ++i;
            }
            continue;
        }
        const int tl = line;
        const int tc = col;
        auto single = [&](TokKind k) {
            out.push_back({k, std::string(1, c), tl, tc});
            ++i;
            ++col;
        };
        switch (c) {
        case '{':
            single(TokKind::LBrace);
            continue;
        case '}':
            single(TokKind::RBrace);
            continue;
        case ';':
            single(TokKind::Semi);
            continue;
        case ':':
            single(TokKind::Colon);
            continue;
        case ',':
            single(TokKind::Comma);
            continue;
        case '*':
            single(TokKind::Star);
            continue;
        case '~':
            single(TokKind::Tilde);
            continue;
        default:
            break;
        }
        if (c == '/') {
            size_t j = i + 1;
            while (j < n && is_path_char(text[j])) {
                ++j;
            }
            out.push_back({TokKind::Path, std::string(text.substr(i, j - i)), tl, tc});
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        if (c == '-' && i + 1 < n && is_id_start(text[i + 1])) {
            size_t j = i + 1;
            while (j < n && is_id_char(text[j])) {
                ++j;
            }
            out.push_back({TokKind::NegId, std::string(text.substr(i + 1, j - i - 1)), tl, tc});
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        if (is_id_start(c)) {
            size_t j = i + 1;
            while (j < n && is_id_char(text[j])) {
                ++j;
            }
            out.push_back({TokKind::Id, std::string(text.substr(i, j - i)), tl, tc});
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        out.push_back({TokKind::Bad, std::string(1, c), tl, tc});
        ++i;
        ++col;
    }
    out.push_back({TokKind::End, "", line, col});
    return out;
}

// Thrown while parsing one statement; the driver records it and resyncs.
struct StmtError {
    int line;
    int col;
    std::string message;
};

struct ClassStmt {
    std::string name;
    std::vector<std::string> perms;
    int line, col;
};
struct SidStmt {
    std::string name;
    std::optional<SecurityContext> ctx;
    int line, col;
};
struct AttributeStmt {
    std::string name;
    int line, col;
};
struct TypeStmt {
    std::string name;
    std::vector<std::string> attrs;
    int line, col;
};
struct TypeAttributeStmt {
    std::string type;
    std::vector<std::string> attrs;
    int line, col;
};
struct AvStmt {
    bool neverallow;
    TypeSetExpr source;
    TypeSetExpr target;
    AccessVector av;
    int line, col;
};
struct TransitionStmt {
    std::string subject, object, cls, result;
    int line, col;
};
struct GenfsStmt {
    std::string fs, path;
    SecurityContext ctx;
    int line, col;
};

using Stmt = std::variant<ClassStmt, SidStmt, AttributeStmt, TypeStmt, TypeAttributeStmt, AvStmt,
                          TransitionStmt, GenfsStmt>;

class Parser {
  public:
    Parser(std::string_view text, std::string file) : file_(std::move(file)), tokens_(lex(text)) {
        size_t start = 0;
        while (start <= text.size()) {
            auto nl = text.find('\n', start);
            if (nl == std::string_view::npos) {
                lines_.emplace_back(text.substr(start));
                break;
            }
            lines_.emplace_back(text.substr(start, nl - start));
            start = nl + 1;
        }
    }

    ParseResult run() {
        std::vector<Stmt> stmts;
        while (!at(TokKind::End)) {
            try {
                stmts.push_back(parse_statement());
            } catch (const StmtError& e) {
                error(e.line, e.col, e.message);
                resync();
            }
        }
        Policy policy = build(stmts);
        std::sort(errors_.begin(), errors_.end(), [](const ParseError& a, const ParseError& b) {
            return std::tie(a.line, a.column) < std::tie(b.line, b.column);
        });
        return {std::move(policy), std::move(errors_)};
    }

  private:
    const Token& peek() const { return tokens_[pos_]; }

    Token take() { return tokens_[pos_++]; }

    bool at(TokKind k) const { return peek().kind == k; }

    Token expect(TokKind k, const char* what) {
        if (!at(k)) {
            const Token& t = peek();
            throw StmtError{t.line, t.col, std::string("expected ") + what + before(t)};
        }
        return take();
    }

    static std::string before(const Token& t) {
        if (t.kind == TokKind::End) {
            return " before end of input";
        }
        return " before '" + t.text + "'";
    }

    void error(int line, int col, std::string message) {
        std::string snippet;
        if (line >= 1 && static_cast<size_t>(line) <= lines_.size()) {
            snippet = lines_[line - 1];
        }
        errors_.push_back({line, col, std::move(message), std::move(snippet)});
    }

    void resync() {
        while (!at(TokKind::End)) {
            if (take().kind == TokKind::Semi) {
                return;
            }
        }
    }

    Stmt parse_statement() {
        const Token& t = peek();
        if (t.kind != TokKind::Id) {
            throw StmtError{t.line, t.col, "expected a statement keyword" + before(t)};
        }
        if (t.text == "class") {
            return parse_class();
        }
        if (t.text == "sid") {
            return parse_sid();
        }
        if (t.text == "attribute") {
            return parse_attribute();
        }
        if (t.text == "type") {
            return parse_type();
        }
        if (t.text == "typeattribute") {
            return parse_typeattribute();
        }
        if (t.text == "allow" || t.text == "neverallow") {
            return parse_av(t.text == "neverallow");
        }
        if (t.text == "type_transition") {
            return parse_transition();
        }
        if (t.text == "genfscon") {
            return parse_genfs();
        }
        throw StmtError{t.line, t.col, "unknown statement '" + t.text + "'"};
    }

    Stmt parse_class() {
        Token kw = take();
        ClassStmt s{{}, {}, kw.line, kw.col};
        s.name = expect(TokKind::Id, "class name").text;
        if (at(TokKind::LBrace)) {
            take();
            while (at(TokKind::Id)) {
                s.perms.push_back(take().text);
            }
            Token close = expect(TokKind::RBrace, "'}'");
            if (s.perms.empty()) {
                throw StmtError{close.line, close.col, "empty permission set"};
            }
        }
        expect(TokKind::Semi, "';'");
        return s;
    }

    Stmt parse_sid() {
        Token kw = take();
        SidStmt s{{}, std::nullopt, kw.line, kw.col};
        s.name = expect(TokKind::Id, "sid name").text;
        if (!at(TokKind::Semi)) {
            s.ctx = parse_context();
        }
        expect(TokKind::Semi, "';'");
        return s;
    }

    Stmt parse_attribute() {
        Token kw = take();
        AttributeStmt s{{}, kw.line, kw.col};
        s.name = expect(TokKind::Id, "attribute name").text;
        expect(TokKind::Semi, "';'");
        return s;
    }

    Stmt parse_type() {
        Token kw = take();
        TypeStmt s{{}, {}, kw.line, kw.col};
        s.name = expect(TokKind::Id, "type name").text;
        while (at(TokKind::Comma)) {
            take();
            s.attrs.push_back(expect(TokKind::Id, "attribute name").text);
        }
        expect(TokKind::Semi, "';'");
        return s;
    }

    Stmt parse_typeattribute() {
        Token kw = take();
        TypeAttributeStmt s{{}, {}, kw.line, kw.col};
        s.type = expect(TokKind::Id, "type name").text;
        s.attrs.push_back(expect(TokKind::Id, "attribute name").text);
        while (at(TokKind::Comma)) {
            take();
            s.attrs.push_back(expect(TokKind::Id, "attribute name").text);
        }
        expect(TokKind::Semi, "';'");
        return s;
    }

    Stmt parse_av(bool neverallow) {
        Token kw = take();
        AvStmt s{neverallow, {}, {}, {}, kw.line, kw.col};
        s.source = parse_type_set(false);
        s.target = parse_type_set(true);
        expect(TokKind::Colon, "':' between target and class");
        s.av.cls = expect(TokKind::Id, "class name").text;
        parse_perms(s.av);
        expect(TokKind::Semi, "';'");
        return s;
    }

    Stmt parse_transition() {
        Token kw = take();
        TransitionStmt s{{}, {}, {}, {}, kw.line, kw.col};
        s.subject = expect(TokKind::Id, "subject type").text;
        s.object = expect(TokKind::Id, "object type").text;
        expect(TokKind::Colon, "':' between object and class");
        s.cls = expect(TokKind::Id, "class name").text;
        s.result = expect(TokKind::Id, "result type").text;
        expect(TokKind::Semi, "';'");
        return s;
    }

    Stmt parse_genfs() {
        Token kw = take();
        GenfsStmt s{{}, {}, {}, kw.line, kw.col};
        s.fs = expect(TokKind::Id, "filesystem name").text;
        Token p = peek();
        if (p.kind != TokKind::Path) {
            throw StmtError{p.line, p.col, "genfs path must start with '/'"};
        }
        s.path = take().text;
        s.ctx = parse_context();
        expect(TokKind::Semi, "';'");
        return s;
    }

    TypeSetExpr parse_type_set(bool isTarget) {
        const Token& t = peek();
        switch (t.kind) {
        case TokKind::Star:
            take();
            return TypeSetExpr::all();
        case TokKind::Id:
            if (t.text == "self") {
                if (!isTarget) {
                    throw StmtError{t.line, t.col, "'self' is only valid in target position"};
                }
                take();
                return TypeSetExpr::self();
            }
            return TypeSetExpr::single(take().text);
        case TokKind::Tilde:
            throw StmtError{t.line, t.col, "complement operator '~' is not supported"};
        case TokKind::NegId:
            throw StmtError{t.line, t.col, "negation is only valid inside a braced type set"};
        case TokKind::LBrace: {
            take();
            std::vector<std::string> pos, neg;
            while (true) {
                const Token& m = peek();
                if (m.kind == TokKind::Id) {
                    if (m.text == "self") {
                        throw StmtError{m.line, m.col, "'self' is not valid inside a type set"};
                    }
                    pos.push_back(take().text);
                } else if (m.kind == TokKind::NegId) {
                    neg.push_back(take().text);
                } else if (m.kind == TokKind::RBrace) {
                    Token close = take();
                    if (pos.empty()) {
                        throw StmtError{close.line, close.col,
                                        "type set needs at least one positive member"};
                    }
                    return TypeSetExpr::set(std::move(pos), std::move(neg));
                } else if (m.kind == TokKind::Star) {
                    throw StmtError{m.line, m.col, "'*' is not valid inside a type set"};
                } else if (m.kind == TokKind::Tilde) {
                    throw StmtError{m.line, m.col, "complement operator '~' is not supported"};
                } else {
                    throw StmtError{m.line, m.col, "expected type identifier" + before(m)};
                }
            }
        }
        default:
            throw StmtError{t.line, t.col, "expected a type set" + before(t)};
        }
    }

    void parse_perms(AccessVector& av) {
        const Token& t = peek();
        if (t.kind == TokKind::Star) {
            take();
            av.allPermissions = true;
            return;
        }
        if (t.kind == TokKind::Id) {
            av.permissions.insert(take().text);
            return;
        }
        if (t.kind == TokKind::LBrace) {
            take();
            while (at(TokKind::Id)) {
                av.permissions.insert(take().text);
            }
            Token close = expect(TokKind::RBrace, "'}'");
            if (av.permissions.empty()) {
                throw StmtError{close.line, close.col, "empty permission set"};
            }
            return;
        }
        throw StmtError{t.line, t.col, "expected permissions" + before(t)};
    }

    // Contexts never contain whitespace, so the exact string is recovered by
    // concatenating the identifier/colon/comma tokens they lex into.
    SecurityContext parse_context() {
        const Token& first = peek();
        std::string raw;
        while (true) {
            const Token& t = peek();
            if (t.kind == TokKind::Id || t.kind == TokKind::Colon || t.kind == TokKind::Comma) {
                raw += take().text;
            } else {
                break;
            }
        }
        if (raw.empty()) {
            throw StmtError{first.line, first.col, "expected a security context" + before(first)};
        }
        auto ctx = SecurityContext::parse(raw);
        if (!ctx) {
            throw StmtError{first.line, first.col, "invalid security context '" + raw + "'"};
        }
        return *ctx;
    }

    // --- policy assembly -------------------------------------------------
    //
    // Declarations are collected in a first pass so statement order within
    // the file does not matter; memberships and rules are attached after.
    // Identifiers that resolve to nothing are journaled, not rejected.

    Policy build(const std::vector<Stmt>& stmts) {
        Policy p;

        for (const auto& stmt : stmts) {
            if (const auto* c = std::get_if<ClassStmt>(&stmt)) {
                p.classes.insert(c->name);
                if (!c->perms.empty()) {
                    p.permissions[c->name].insert(c->perms.begin(), c->perms.end());
                }
            } else if (const auto* a = std::get_if<AttributeStmt>(&stmt)) {
                if (p.attributes.count(a->name)) {
                    error(a->line, a->col, "duplicate attribute declaration '" + a->name + "'");
                } else if (p.types.count(a->name)) {
                    error(a->line, a->col,
                          "attribute '" + a->name + "' collides with a type of the same name");
                } else {
                    p.attributes.emplace(a->name, Attribute{a->name, {}});
                }
            } else if (const auto* t = std::get_if<TypeStmt>(&stmt)) {
                if (p.types.count(t->name)) {
                    error(t->line, t->col, "duplicate type declaration '" + t->name + "'");
                } else if (p.attributes.count(t->name)) {
                    error(t->line, t->col,
                          "type '" + t->name + "' collides with an attribute of the same name");
                } else {
                    p.types.emplace(t->name, SecurityType{t->name, {}});
                }
            } else if (const auto* s = std::get_if<SidStmt>(&stmt)) {
                auto it = std::find_if(p.sids.begin(), p.sids.end(),
                                       [&](const InitialSid& x) { return x.name == s->name; });
                if (it == p.sids.end()) {
                    p.sids.push_back({s->name, s->ctx});
                } else if (!s->ctx) {
                    error(s->line, s->col, "duplicate initial SID '" + s->name + "'");
                } else if (it->label) {
                    error(s->line, s->col, "initial SID '" + s->name + "' already has a context");
                } else {
                    it->label = s->ctx;
                }
            }
        }

        auto add_membership = [&](const std::string& type, const std::string& attr, int line,
                                  int col) {
            auto ty = p.types.find(type);
            if (ty == p.types.end()) {
                if (p.attributes.count(type)) {
                    error(line, col, "'" + type + "' is an attribute, not a type");
                } else {
                    p.unknownIdentifiers.insert(type);
                }
                return;
            }
            auto at = p.attributes.find(attr);
            if (at == p.attributes.end()) {
                if (p.types.count(attr)) {
                    error(line, col, "'" + attr + "' is a type, not an attribute");
                } else {
                    p.unknownIdentifiers.insert(attr);
                }
                return;
            }
            ty->second.attributes.insert(attr);
            at->second.members.insert(type);
        };

        for (const auto& stmt : stmts) {
            if (const auto* t = std::get_if<TypeStmt>(&stmt)) {
                if (!p.types.count(t->name)) {
                    continue;  // declaration itself was rejected above
                }
                for (const auto& a : t->attrs) {
                    add_membership(t->name, a, t->line, t->col);
                }
            } else if (const auto* ta = std::get_if<TypeAttributeStmt>(&stmt)) {
                for (const auto& a : ta->attrs) {
                    add_membership(ta->type, a, ta->line, ta->col);
                }
            }
        }

        auto note_type_ident = [&](const std::string& id) {
            if (!p.types.count(id) && !p.attributes.count(id)) {
                p.unknownIdentifiers.insert(id);
            }
        };
        auto note_expr = [&](const TypeSetExpr& e) {
            for (const auto& id : e.positives) {
                note_type_ident(id);
            }
            for (const auto& id : e.negatives) {
                note_type_ident(id);
            }
        };
        auto note_av = [&](const AccessVector& av) {
            auto cls = p.permissions.find(av.cls);
            if (!p.classes.count(av.cls)) {
                p.unknownIdentifiers.insert(av.cls);
            }
            for (const auto& perm : av.permissions) {
                if (cls == p.permissions.end() || !cls->second.count(perm)) {
                    p.unknownIdentifiers.insert(perm);
                }
            }
        };

        for (const auto& stmt : stmts) {
            if (const auto* av = std::get_if<AvStmt>(&stmt)) {
                note_expr(av->source);
                note_expr(av->target);
                note_av(av->av);
                SourceLocation origin{file_, av->line};
                if (av->neverallow) {
                    p.neverallows.push_back({av->source, av->target, av->av, origin});
                } else {
                    p.allows.push_back({av->source, av->target, av->av, origin});
                }
            } else if (const auto* tr = std::get_if<TransitionStmt>(&stmt)) {
                note_type_ident(tr->subject);
                note_type_ident(tr->object);
                note_type_ident(tr->result);
                if (!p.classes.count(tr->cls)) {
                    p.unknownIdentifiers.insert(tr->cls);
                }
                p.transitions.push_back(
                    {tr->subject, tr->object, tr->cls, tr->result, {file_, tr->line}});
            } else if (const auto* g = std::get_if<GenfsStmt>(&stmt)) {
                note_type_ident(g->ctx.type);
                p.genfs.push_back({g->fs, g->path, g->ctx});
            } else if (const auto* s = std::get_if<SidStmt>(&stmt)) {
                if (s->ctx) {
                    note_type_ident(s->ctx->type);
                }
            }
        }

        return p;
    }

    std::string file_;
    std::vector<Token> tokens_;
    size_t pos_ = 0;
    std::vector<std::string> lines_;
    std::vector<ParseError> errors_;
};

}  // namespace

ParseResult parse_policy(std::string_view text, std::string file) {
    return Parser(text, std::move(file)).run();
}

std::string serialize_policy(const Policy& policy) {
    std::string out;
    auto emit = [&](const std::string& s) {
        out += s;
        out += '\n';
    };

    for (const auto& cls : policy.classes) {
        auto perms = policy.permissions.find(cls);
        if (perms == policy.permissions.end() || perms->second.empty()) {
            emit("class " + cls + ";");
        } else {
            std::string line = "class " + cls + " {";
            for (const auto& perm : perms->second) {
                line += " " + perm;
            }
            emit(line + " };");
        }
    }

    std::vector<InitialSid> sids = policy.sids;
    std::sort(sids.begin(), sids.end(),
              [](const InitialSid& a, const InitialSid& b) { return a.name < b.name; });
    for (const auto& sid : sids) {
        emit(sid.render());
    }

    for (const auto& [name, attr] : policy.attributes) {
        emit("attribute " + name + ";");
    }

    for (const auto& [name, type] : policy.types) {
        std::string line = "type " + name;
        for (const auto& attr : type.attributes) {
            line += ", " + attr;
        }
        emit(line + ";");
    }

    auto emit_sorted = [&](const auto& rules) {
        std::vector<std::string> lines;
        lines.reserve(rules.size());
        for (const auto& r : rules) {
            lines.push_back(r.render());
        }
        std::sort(lines.begin(), lines.end());
        for (const auto& l : lines) {
            emit(l);
        }
    };
    emit_sorted(policy.allows);
    emit_sorted(policy.neverallows);
    emit_sorted(policy.transitions);
    emit_sorted(policy.genfs);

    return out;
}

}  // namespace sepolyzer
