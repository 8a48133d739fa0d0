#include <algorithm>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "vid2scenic/scenic/lexer.hpp"
#include "vid2scenic/scenic/script.hpp"

namespace vid2scenic::scenic {

namespace {

struct SyntaxError {
    Diagnostic diagnostic;
};

int edit_distance(std::string_view a, std::string_view b) {
    std::vector<int> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        int diag = row[0];
        row[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            int up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

const std::vector<std::string_view>& keywords() {
    static const std::vector<std::string_view> words = {
        "new", "param", "model", "behavior", "require", "terminate", "do", "take",
        "wait", "try", "interrupt", "when", "while", "if", "elif", "else", "pass",
        "with", "ahead", "behind", "left", "right", "offset", "facing", "at", "on",
    };
    return words;
}

std::optional<std::string> suggest_keyword(std::string_view word) {
    for (auto kw : keywords()) {
        if (word != kw && edit_distance(word, kw) <= (kw.size() <= 3 ? 1 : 2)) {
            return fmt::format("did you mean '{}'?", kw);
        }
    }
    return std::nullopt;
}

// Tokens that end a specifier value; never consumed by expressions.
bool is_expression_stop_word(std::string_view w) {
    return w == "by" || w == "for" || w == "until" || w == "seconds" || w == "steps" ||
           w == "to" || w == "deg" || w == "relative" || w == "of" || w == "when" ||
           w == "with" || w == "and" || w == "or" || w == "in" || w == "from";
}

class Parser {
public:
    Parser(std::string_view source, std::vector<Token> tokens)
        : source_(source), tokens_(std::move(tokens)) {}

    ScenarioTree run(std::vector<Diagnostic>& errors) {
        ScenarioTree tree;
        while (!at(TokenKind::end)) {
            if (at(TokenKind::newline)) {
                advance();
                continue;
            }
            try {
                top_level(tree);
            } catch (const SyntaxError& e) {
                errors.push_back(e.diagnostic);
                synchronize();
            }
        }
        return tree;
    }

private:
    // ---- token helpers ----

    const Token& peek(std::size_t k = 0) const {
        return tokens_[std::min(pos_ + k, tokens_.size() - 1)];
    }
    bool at(TokenKind k) const { return peek().kind == k; }
    bool at_op(std::string_view s, std::size_t k = 0) const {
        return peek(k).kind == TokenKind::op && peek(k).text == s;
    }
    bool at_word(std::string_view s, std::size_t k = 0) const {
        return peek(k).kind == TokenKind::name && peek(k).text == s;
    }

    const Token& advance() {
        const Token& t = tokens_[pos_];
        if (t.kind == TokenKind::indent) ++level_;
        if (t.kind == TokenKind::dedent) --level_;
        if (pos_ + 1 < tokens_.size()) ++pos_;
        return t;
    }

    [[noreturn]] void fail(const Span& span, std::string message,
                           std::optional<std::string> hint = std::nullopt) const {
        throw SyntaxError{Diagnostic{Severity::error, std::string(code::syntax), span,
                                     std::move(message), std::move(hint)}};
    }

    std::string describe(const Token& t) const {
        switch (t.kind) {
            case TokenKind::name: return fmt::format("'{}'", t.text);
            case TokenKind::number: return fmt::format("number {}", t.text);
            case TokenKind::string: return "string literal";
            case TokenKind::op: return fmt::format("'{}'", t.text);
            case TokenKind::newline: return "end of line";
            case TokenKind::indent: return "indentation";
            case TokenKind::dedent: return "end of block";
            case TokenKind::end: return "end of input";
        }
        return "token";
    }

    [[noreturn]] void unexpected(std::string_view expected) const {
        const Token& t = peek();
        std::optional<std::string> hint;
        if (t.kind == TokenKind::name) hint = suggest_keyword(t.text);
        fail(t.span, fmt::format("expected {}, found {}", expected, describe(t)), hint);
    }

    const Token& expect_op(std::string_view s) {
        if (!at_op(s)) unexpected(fmt::format("'{}'", s));
        return advance();
    }

    const Token& expect_word(std::string_view s) {
        if (!at_word(s)) unexpected(fmt::format("'{}'", s));
        return advance();
    }

    const Token& expect_name(std::string_view what) {
        if (!at(TokenKind::name)) unexpected(what);
        return advance();
    }

    void expect_newline() {
        if (at(TokenKind::newline)) {
            advance();
            return;
        }
        if (at(TokenKind::end) || at(TokenKind::dedent)) return;
        unexpected("end of line");
    }

    Span prev_span() const { return tokens_[pos_ == 0 ? 0 : pos_ - 1].span; }

    // Skips to the start of the next top-level statement.
    void synchronize() {
        while (!at(TokenKind::end)) {
            const Token& t = advance();
            if ((t.kind == TokenKind::newline || t.kind == TokenKind::dedent) && level_ <= 0 &&
                !at(TokenKind::indent) && !at(TokenKind::dedent)) {
                level_ = 0;
                return;
            }
        }
    }

    // ---- top level ----

    void top_level(ScenarioTree& tree) {
        const Token& t = peek();
        if (t.kind == TokenKind::indent) fail(t.span, "unexpected indentation");
        if (t.kind != TokenKind::name) unexpected("a declaration");
        const std::string& w = t.text;
        if (w == "param") return param_decl(tree);
        if (w == "model") return model_decl(tree);
        if (w == "behavior") return tree.behaviors.push_back(behavior_decl());
        if (w == "require") {
            Span start = advance().span;
            Requirement r{expression(), {}};
            r.loc.span = join(start, prev_span());
            expect_newline();
            tree.requirements.push_back(std::move(r));
            return;
        }
        if (w == "terminate") return tree.terminations.push_back(termination_decl());
        if (w == "new") return tree.objects.push_back(object_decl("", t.span));
        if (w == "import" || w == "from") {
            fail(t.span, "imports are not supported in scenario scripts",
                 "use `model <module>` for the simulator model and inline any helpers");
        }
        if (at_op("=", 1)) return assignment(tree);
        if (peek(1).kind == TokenKind::name) {
            fail(t.span, fmt::format("unknown keyword '{}'", w), suggest_keyword(w));
        }
        unexpected("a declaration");
    }

    void param_decl(ScenarioTree& tree) {
        advance();  // param
        do {
            const Token& name = expect_name("a parameter name");
            ParamDecl p;
            p.name = name.text;
            expect_op("=");
            p.value = expression();
            p.loc.span = join(name.span, prev_span());
            tree.params.push_back(std::move(p));
        } while (at_op(",") && (advance(), true));
        expect_newline();
    }

    void model_decl(ScenarioTree& tree) {
        Span start = advance().span;
        std::string path = expect_name("a model module path").text;
        while (at_op(".")) {
            advance();
            path += '.';
            path += expect_name("a module name").text;
        }
        Span span = join(start, prev_span());
        expect_newline();
        if (tree.model_import) {
            throw SyntaxError{Diagnostic{Severity::error, std::string(code::duplicate_model), span,
                                         "a scenario imports exactly one simulator model",
                                         std::string("remove this `model` line")}};
        }
        tree.model_import = std::move(path);
        tree.model_loc.span = span;
    }

    void assignment(ScenarioTree& tree) {
        const Token& name = advance();
        advance();  // =
        if (at_word("new")) {
            tree.objects.push_back(object_decl(name.text, name.span));
            return;
        }
        const Token& rhs = peek();
        if (name.text == "ego") {
            std::optional<std::string> hint = "the ego vehicle is declared as `ego = new <Class> ...`";
            if (rhs.kind == TokenKind::name && edit_distance(rhs.text, "new") <= 2) {
                hint = "did you mean 'new'?";
            }
            fail(rhs.span, fmt::format("expected 'new' after 'ego =', found {}", describe(rhs)), hint);
        }
        if (rhs.kind == TokenKind::name && peek(1).kind == TokenKind::name &&
            !is_expression_stop_word(peek(1).text)) {
            fail(rhs.span, fmt::format("unknown keyword '{}'", rhs.text), suggest_keyword(rhs.text));
        }
        ConstDecl c;
        c.name = name.text;
        c.value = expression();
        c.loc.span = join(name.span, prev_span());
        expect_newline();
        tree.constants.push_back(std::move(c));
    }

    Termination termination_decl() {
        Span start = advance().span;  // terminate
        Termination t;
        if (at_word("when")) {
            advance();
            t.kind = Termination::Kind::when;
            t.value = expression();
        } else if (at_word("after")) {
            advance();
            t.kind = Termination::Kind::after;
            t.value = expression();
            if (at_word("seconds") || at_word("steps")) {
                t.unit = advance().text;
            } else {
                unexpected("'seconds' or 'steps'");
            }
        } else {
            unexpected("'when' or 'after'");
        }
        t.loc.span = join(start, prev_span());
        expect_newline();
        return t;
    }

    ObjectDecl object_decl(std::string binding, const Span& start) {
        ObjectDecl obj;
        obj.binding = std::move(binding);
        expect_word("new");
        const Token& cls = expect_name("an object class");
        obj.object_class = cls.text;
        obj.class_loc.span = cls.span;
        std::set<std::string> seen;
        if (!at(TokenKind::newline) && !at(TokenKind::end)) {
            while (true) {
                specifier(obj, seen);
                if (at_op(",")) {
                    advance();
                    continue;
                }
                if (at(TokenKind::newline) || at(TokenKind::end)) break;
                const Token& t = peek();
                fail(t.span, fmt::format("expected ',' or end of line after specifier, found {}",
                                         describe(t)),
                     t.kind == TokenKind::name ? suggest_keyword(t.text) : std::nullopt);
            }
        }
        obj.loc.span = join(start, prev_span());
        expect_newline();
        return obj;
    }

    void specifier(ObjectDecl& obj, std::set<std::string>& seen) {
        const Token& first = peek();
        if (first.kind != TokenKind::name) unexpected("a specifier");
        if (first.text == "with") {
            advance();
            const Token& prop = expect_name("a property name");
            if (prop.text == "behavior") {
                if (obj.behavior) {
                    fail(prop.span, "object already has a behavior", "keep a single `with behavior`");
                }
                obj.behavior = expression();
                return;
            }
            Property p;
            p.name = prop.text;
            p.value = expression();
            p.loc.span = join(first.span, prev_span());
            obj.properties.push_back(std::move(p));
            return;
        }
        Specifier s;
        advance();
        const std::string& w = first.text;
        bool allows_by = false;
        if (w == "ahead" || w == "left" || w == "right") {
            expect_word("of");
            s.kind = w + " of";
            allows_by = true;
        } else if (w == "behind") {
            s.kind = w;
            allows_by = true;
        } else if (w == "offset") {
            expect_word("by");
            s.kind = "offset by";
        } else if (w == "facing" && at_word("toward")) {
            advance();
            s.kind = "facing toward";
        } else if (at_word("of")) {
            advance();
            s.kind = w + " of";
            allows_by = true;
        } else {
            s.kind = w;
            allows_by = w != "at" && w != "on" && w != "facing";
        }
        s.value = expression();
        if (allows_by && at_word("by")) {
            advance();
            s.by = expression();
        }
        s.loc.span = join(first.span, prev_span());
        if (!seen.insert(s.kind).second) {
            throw SyntaxError{Diagnostic{
                Severity::error, std::string(code::duplicate_specifier), s.loc.span,
                fmt::format("specifier '{}' given twice for the same object", s.kind),
                std::string("keep one specifier of each kind")}};
        }
        obj.specifiers.push_back(std::move(s));
    }

    // ---- behaviors ----

    BehaviorDecl behavior_decl() {
        Span start = advance().span;  // behavior
        BehaviorDecl b;
        b.name = expect_name("a behavior name").text;
        expect_op("(");
        while (!at_op(")")) {
            FormalParam fp;
            fp.name = expect_name("a parameter name").text;
            if (at_op("=")) {
                advance();
                fp.default_value = expression();
            }
            b.params.push_back(std::move(fp));
            if (!at_op(",")) break;
            advance();
        }
        expect_op(")");
        b.loc.span = join(start, prev_span());
        b.body = block();
        return b;
    }

    std::vector<Stmt> block() {
        expect_op(":");
        if (!at(TokenKind::newline)) unexpected("end of line before an indented block");
        advance();
        if (!at(TokenKind::indent)) unexpected("an indented block");
        advance();
        std::vector<Stmt> body;
        while (!at(TokenKind::dedent) && !at(TokenKind::end)) {
            if (at(TokenKind::newline)) {
                advance();
                continue;
            }
            body.push_back(statement());
        }
        if (at(TokenKind::dedent)) advance();
        return body;
    }

    Stmt statement() {
        const Token& t = peek();
        if (t.kind != TokenKind::name) unexpected("a statement");
        Stmt s;
        const std::string w = t.text;
        Span start = t.span;
        if (w == "do") {
            advance();
            s.kind = StmtKind::do_;
            s.exprs.push_back(expression());
            if (at_word("for")) {
                advance();
                s.duration = expression();
                if (!(at_word("seconds") || at_word("steps"))) unexpected("'seconds' or 'steps'");
                s.duration_unit = advance().text;
            }
            if (at_word("until")) {
                advance();
                s.until = expression();
            }
            s.loc.span = join(start, prev_span());
            expect_newline();
        } else if (w == "take") {
            advance();
            s.kind = StmtKind::take;
            s.exprs.push_back(expression());
            while (at_op(",")) {
                advance();
                s.exprs.push_back(expression());
            }
            s.loc.span = join(start, prev_span());
            expect_newline();
        } else if (w == "wait" || w == "terminate" || w == "pass") {
            advance();
            s.kind = w == "wait" ? StmtKind::wait : w == "pass" ? StmtKind::pass : StmtKind::terminate;
            s.loc.span = start;
            expect_newline();
        } else if (w == "try") {
            advance();
            s.kind = StmtKind::try_;
            s.loc.span = start;
            s.body = block();
            while (at_word("interrupt")) {
                Span hs = advance().span;
                expect_word("when");
                Handler h;
                h.condition = expression();
                h.loc.span = join(hs, prev_span());
                h.body = block();
                s.handlers.push_back(std::move(h));
            }
            if (s.handlers.empty()) unexpected("'interrupt when' after a try block");
        } else if (w == "while") {
            advance();
            s.kind = StmtKind::while_;
            s.exprs.push_back(expression());
            s.loc.span = join(start, prev_span());
            s.body = block();
        } else if (w == "if") {
            advance();
            s.kind = StmtKind::if_;
            Handler first;
            first.condition = expression();
            first.loc.span = join(start, prev_span());
            first.body = block();
            s.handlers.push_back(std::move(first));
            s.loc.span = start;
            while (at_word("elif")) {
                Span es = advance().span;
                Handler h;
                h.condition = expression();
                h.loc.span = join(es, prev_span());
                h.body = block();
                s.handlers.push_back(std::move(h));
            }
            if (at_word("else")) {
                advance();
                s.orelse = block();
            }
        } else if (at_op("=", 1)) {
            advance();
            advance();
            s.kind = StmtKind::assign;
            s.target = w;
            s.exprs.push_back(expression());
            s.loc.span = join(start, prev_span());
            expect_newline();
        } else {
            fail(t.span, fmt::format("unknown statement '{}'", w), suggest_keyword(w));
        }
        return s;
    }

    // ---- expressions ----

    Expr make(ExprKind kind, std::string text, std::vector<Expr> args, const Span& span) {
        Expr e;
        e.kind = kind;
        e.text = std::move(text);
        e.args = std::move(args);
        e.loc.span = span;
        return e;
    }

    Expr expression() { return parse_or(); }

    Expr parse_or() {
        Expr lhs = parse_and();
        while (at_word("or")) {
            advance();
            Expr rhs = parse_and();
            Span sp = join(lhs.loc.span, rhs.loc.span);
            lhs = make(ExprKind::binary, "or", {std::move(lhs), std::move(rhs)}, sp);
        }
        return lhs;
    }

    Expr parse_and() {
        Expr lhs = parse_not();
        while (at_word("and")) {
            advance();
            Expr rhs = parse_not();
            Span sp = join(lhs.loc.span, rhs.loc.span);
            lhs = make(ExprKind::binary, "and", {std::move(lhs), std::move(rhs)}, sp);
        }
        return lhs;
    }

    Expr parse_not() {
        if (at_word("not")) {
            Span start = advance().span;
            Expr operand = parse_not();
            Span sp = join(start, operand.loc.span);
            return make(ExprKind::unary, "not", {std::move(operand)}, sp);
        }
        return parse_comparison();
    }

    Expr parse_comparison() {
        Expr lhs = parse_relative();
        while (true) {
            std::string op;
            if (peek().kind == TokenKind::op &&
                (peek().text == "<" || peek().text == ">" || peek().text == "<=" ||
                 peek().text == ">=" || peek().text == "==" || peek().text == "!=")) {
                op = peek().text;
            } else if (at_word("in")) {
                op = "in";
            } else {
                return lhs;
            }
            advance();
            Expr rhs = parse_relative();
            Span sp = join(lhs.loc.span, rhs.loc.span);
            lhs = make(ExprKind::binary, op, {std::move(lhs), std::move(rhs)}, sp);
        }
    }

    Expr parse_relative() {
        Expr lhs = parse_distance();
        while (at_word("relative") && at_word("to", 1)) {
            advance();
            advance();
            Expr rhs = parse_distance();
            Span sp = join(lhs.loc.span, rhs.loc.span);
            lhs = make(ExprKind::relative_to, "", {std::move(lhs), std::move(rhs)}, sp);
        }
        return lhs;
    }

    Expr parse_distance() {
        if (at_word("distance") && (at_word("to", 1) || at_word("from", 1))) {
            Span start = advance().span;
            if (at_word("to")) {
                advance();
                Expr target = parse_additive();
                Span sp = join(start, target.loc.span);
                return make(ExprKind::distance_to, "", {std::move(target)}, sp);
            }
            advance();  // from
            Expr from = parse_additive();
            expect_word("to");
            Expr to = parse_additive();
            Span sp = join(start, to.loc.span);
            return make(ExprKind::distance_from, "", {std::move(from), std::move(to)}, sp);
        }
        return parse_additive();
    }

    Expr parse_additive() {
        Expr lhs = parse_multiplicative();
        while (at_op("+") || at_op("-")) {
            std::string op = advance().text;
            Expr rhs = parse_multiplicative();
            Span sp = join(lhs.loc.span, rhs.loc.span);
            lhs = make(ExprKind::binary, op, {std::move(lhs), std::move(rhs)}, sp);
        }
        return lhs;
    }

    Expr parse_multiplicative() {
        Expr lhs = parse_factor();
        while (at_op("*") || at_op("/") || at_op("//") || at_op("%")) {
            std::string op = advance().text;
            Expr rhs = parse_factor();
            Span sp = join(lhs.loc.span, rhs.loc.span);
            lhs = make(ExprKind::binary, op, {std::move(lhs), std::move(rhs)}, sp);
        }
        return lhs;
    }

    Expr parse_factor() {
        Expr e;
        if (at_op("-") || at_op("+")) {
            const Token& op = advance();
            Span start = op.span;
            std::string text = op.text;
            Expr operand = parse_factor();
            Span sp = join(start, operand.loc.span);
            e = make(ExprKind::unary, text, {std::move(operand)}, sp);
        } else {
            e = parse_power();
        }
        while (at_word("deg")) {
            Span end = advance().span;
            Span sp = join(e.loc.span, end);
            e = make(ExprKind::degrees, "", {std::move(e)}, sp);
        }
        return e;
    }

    Expr parse_power() {
        Expr base = parse_postfix();
        if (at_op("**")) {
            advance();
            Expr exponent = parse_factor();
            Span sp = join(base.loc.span, exponent.loc.span);
            return make(ExprKind::binary, "**", {std::move(base), std::move(exponent)}, sp);
        }
        return base;
    }

    Expr parse_postfix() {
        Expr e = parse_primary();
        while (true) {
            if (at_op("(")) {
                advance();
                std::vector<Expr> args;
                args.push_back(std::move(e));
                while (!at_op(")")) {
                    args.push_back(call_argument());
                    if (!at_op(",")) break;
                    advance();
                }
                Span end = expect_op(")").span;
                Span sp = join(args.front().loc.span, end);
                e = make(ExprKind::call, "", std::move(args), sp);
            } else if (at_op(".")) {
                advance();
                const Token& attr = expect_name("an attribute name");
                Span sp = join(e.loc.span, attr.span);
                e = make(ExprKind::attribute, attr.text, {std::move(e)}, sp);
            } else if (at_op("[")) {
                advance();
                Expr index = expression();
                Span end = expect_op("]").span;
                Span sp = join(e.loc.span, end);
                e = make(ExprKind::subscript, "", {std::move(e), std::move(index)}, sp);
            } else {
                return e;
            }
        }
    }

    Expr call_argument() {
        if (at_op("*")) {
            Span start = advance().span;
            Expr v = expression();
            Span sp = join(start, v.loc.span);
            return make(ExprKind::star, "", {std::move(v)}, sp);
        }
        if (peek().kind == TokenKind::name && at_op("=", 1)) {
            const Token& name = advance();
            advance();
            Expr v = expression();
            Span sp = join(name.span, v.loc.span);
            return make(ExprKind::keyword, name.text, {std::move(v)}, sp);
        }
        return expression();
    }

    Expr parse_primary() {
        const Token& t = peek();
        switch (t.kind) {
            case TokenKind::number:
                advance();
                return make(ExprKind::number, t.text, {}, t.span);
            case TokenKind::string:
                advance();
                return make(ExprKind::string, t.text, {}, t.span);
            case TokenKind::name: {
                if (t.text == "True" || t.text == "False") {
                    advance();
                    return make(ExprKind::boolean, t.text, {}, t.span);
                }
                if (t.text == "None") {
                    advance();
                    return make(ExprKind::none, "", {}, t.span);
                }
                if (t.text == "new") {
                    fail(t.span, "objects can only be created at the top level",
                         "bind the object with `name = new <Class> ...` and reference the name");
                }
                advance();
                return make(ExprKind::name, t.text, {}, t.span);
            }
            case TokenKind::op:
                if (t.text == "(") return parenthesized();
                if (t.text == "[") {
                    Span start = advance().span;
                    std::vector<Expr> items;
                    while (!at_op("]")) {
                        items.push_back(expression());
                        if (!at_op(",")) break;
                        advance();
                    }
                    Span end = expect_op("]").span;
                    return make(ExprKind::list, "", std::move(items), join(start, end));
                }
                break;
            default:
                break;
        }
        unexpected("an expression");
    }

    Expr parenthesized() {
        Span start = advance().span;  // (
        if (at_op(")")) {
            Span end = advance().span;
            return make(ExprKind::tuple, "", {}, join(start, end));
        }
        Expr first = expression();
        if (at_op(")")) {
            advance();
            return first;
        }
        std::vector<Expr> items;
        items.push_back(std::move(first));
        while (at_op(",")) {
            advance();
            if (at_op(")")) break;
            items.push_back(expression());
        }
        Span end = expect_op(")").span;
        return make(ExprKind::tuple, "", std::move(items), join(start, end));
    }

    std::string_view source_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    int level_ = 0;
};

void structural_checks(std::string_view source, const ScenarioTree& tree,
                       std::vector<Diagnostic>& errors) {
    const ObjectDecl* ego = nullptr;
    for (const auto& obj : tree.objects) {
        if (obj.binding != "ego") continue;
        if (ego) {
            errors.push_back(Diagnostic{Severity::error, std::string(code::duplicate_ego), obj.loc.span,
                                        "the scenario binds `ego` more than once",
                                        std::string("keep a single ego vehicle")});
        } else {
            ego = &obj;
        }
    }
    if (!ego) {
        LineIndex index(source);
        std::size_t line_end = source.find('\n');
        if (line_end == std::string_view::npos || line_end == 0) line_end = source.size();
        errors.push_back(Diagnostic{Severity::error, std::string(code::missing_ego),
                                    index.span(0, line_end),
                                    "the scenario declares no ego vehicle",
                                    std::string("add `ego = new Car ...`")});
    }
}

}  // namespace

ScenicScript::ScenicScript(std::string source, ScenarioTree tree)
    : source_(std::move(source)), tree_(std::move(tree)), line_count_(count_nonblank_lines(source_)) {}

int count_nonblank_lines(std::string_view text) {
    int count = 0;
    bool content = false;
    for (char c : text) {
        if (c == '\n') {
            count += content ? 1 : 0;
            content = false;
        } else if (c != ' ' && c != '\t' && c != '\r' && c != '\f') {
            content = true;
        }
    }
    return count + (content ? 1 : 0);
}

ParseResult parse(std::string_view source) {
    LexResult lexed = lex(source);
    if (has_errors(lexed.diagnostics)) return ParseResult(std::move(lexed.diagnostics));
    std::vector<Diagnostic> errors;
    Parser parser(source, std::move(lexed.tokens));
    ScenarioTree tree = parser.run(errors);
    if (errors.empty()) structural_checks(source, tree, errors);
    if (!errors.empty()) return ParseResult(std::move(errors));
    return ParseResult(ScenicScript(std::string(source), std::move(tree)));
}

}  // namespace vid2scenic::scenic
