#include "vid2scenic/scenic/printer.hpp"

#include <fmt/format.h>

namespace vid2scenic::scenic {

namespace {

// Binding strength, loosest first. Mirrors the parser's descent order.
enum Prec : int {
    kOr = 1,
    kAnd,
    kNot,
    kCompare,
    kRelative,
    kDistance,
    kAdditive,
    kMultiplicative,
    kFactor,
    kPower,
    kPostfix,
};

int binary_prec(const std::string& op) {
    if (op == "or") return kOr;
    if (op == "and") return kAnd;
    if (op == "+" || op == "-") return kAdditive;
    if (op == "*" || op == "/" || op == "//" || op == "%") return kMultiplicative;
    if (op == "**") return kPower;
    return kCompare;
}

int prec_of(const Expr& e) {
    switch (e.kind) {
        case ExprKind::binary: return binary_prec(e.text);
        case ExprKind::unary: return e.text == "not" ? kNot : kFactor;
        case ExprKind::degrees: return kFactor;
        case ExprKind::relative_to: return kRelative;
        case ExprKind::distance_to:
        case ExprKind::distance_from: return kDistance;
        default: return kPostfix;
    }
}

std::string quote(const std::string& value) {
    std::string out = "'";
    for (char c : value) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\'': out += "\\'"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '\'';
    return out;
}

std::string expr(const Expr& e, int min_prec);

std::string join_exprs(const std::vector<Expr>& items, std::size_t from = 0) {
    std::string out;
    for (std::size_t i = from; i < items.size(); ++i) {
        if (i > from) out += ", ";
        out += expr(items[i], kOr);
    }
    return out;
}

std::string expr_raw(const Expr& e) {
    switch (e.kind) {
        case ExprKind::number:
        case ExprKind::name:
        case ExprKind::boolean: return e.text;
        case ExprKind::none: return "None";
        case ExprKind::string: return quote(e.text);
        case ExprKind::tuple:
            if (e.args.size() == 1) return "(" + expr(e.args[0], kOr) + ",)";
            return "(" + join_exprs(e.args) + ")";
        case ExprKind::list: return "[" + join_exprs(e.args) + "]";
        case ExprKind::call: return expr(e.args[0], kPostfix) + "(" + join_exprs(e.args, 1) + ")";
        case ExprKind::keyword: return e.text + "=" + expr(e.args[0], kOr);
        case ExprKind::star: return "*" + expr(e.args[0], kOr);
        case ExprKind::attribute: return expr(e.args[0], kPostfix) + "." + e.text;
        case ExprKind::subscript:
            return expr(e.args[0], kPostfix) + "[" + expr(e.args[1], kOr) + "]";
        case ExprKind::unary:
            if (e.text == "not") return "not " + expr(e.args[0], kNot);
            return e.text + expr(e.args[0], kFactor);
        case ExprKind::binary: {
            int p = binary_prec(e.text);
            if (e.text == "**") {
                return expr(e.args[0], kPostfix) + " ** " + expr(e.args[1], kFactor);
            }
            return expr(e.args[0], p) + " " + e.text + " " + expr(e.args[1], p + 1);
        }
        case ExprKind::degrees: return expr(e.args[0], kPower) + " deg";
        case ExprKind::relative_to:
            return expr(e.args[0], kRelative) + " relative to " + expr(e.args[1], kRelative + 1);
        case ExprKind::distance_to: return "distance to " + expr(e.args[0], kAdditive);
        case ExprKind::distance_from:
            return "distance from " + expr(e.args[0], kAdditive) + " to " +
                   expr(e.args[1], kAdditive);
    }
    return {};
}

std::string expr(const Expr& e, int min_prec) {
    std::string text = expr_raw(e);
    if (prec_of(e) < min_prec) return "(" + text + ")";
    return text;
}

void render_block(std::string& out, const std::vector<Stmt>& body, int indent);

void render_stmt(std::string& out, const Stmt& s, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
    switch (s.kind) {
        case StmtKind::do_:
            out += pad + "do " + expr(s.exprs[0], kOr);
            if (s.duration) out += " for " + expr(*s.duration, kOr) + " " + s.duration_unit;
            if (s.until) out += " until " + expr(*s.until, kOr);
            out += '\n';
            break;
        case StmtKind::take: out += pad + "take " + join_exprs(s.exprs) + "\n"; break;
        case StmtKind::wait: out += pad + "wait\n"; break;
        case StmtKind::terminate: out += pad + "terminate\n"; break;
        case StmtKind::pass: out += pad + "pass\n"; break;
        case StmtKind::assign: out += pad + s.target + " = " + expr(s.exprs[0], kOr) + "\n"; break;
        case StmtKind::try_:
            out += pad + "try:\n";
            render_block(out, s.body, indent + 1);
            for (const auto& h : s.handlers) {
                out += pad + "interrupt when " + expr(h.condition, kOr) + ":\n";
                render_block(out, h.body, indent + 1);
            }
            break;
        case StmtKind::while_:
            out += pad + "while " + expr(s.exprs[0], kOr) + ":\n";
            render_block(out, s.body, indent + 1);
            break;
        case StmtKind::if_:
            for (std::size_t i = 0; i < s.handlers.size(); ++i) {
                out += pad + (i == 0 ? "if " : "elif ") + expr(s.handlers[i].condition, kOr) + ":\n";
                render_block(out, s.handlers[i].body, indent + 1);
            }
            if (!s.orelse.empty()) {
                out += pad + "else:\n";
                render_block(out, s.orelse, indent + 1);
            }
            break;
    }
}

void render_block(std::string& out, const std::vector<Stmt>& body, int indent) {
    if (body.empty()) {
        out += std::string(static_cast<std::size_t>(indent) * 4, ' ') + "pass\n";
        return;
    }
    for (const auto& s : body) render_stmt(out, s, indent);
}

// Appends a blank line between non-empty groups.
void section(std::string& out, const std::string& group) {
    if (group.empty()) return;
    if (!out.empty()) out += '\n';
    out += group;
}

}  // namespace

std::string render(const Expr& e) { return expr(e, kOr); }

std::string render(const ObjectDecl& obj) {
    std::string out;
    if (!obj.binding.empty()) out += obj.binding + " = ";
    out += "new " + obj.object_class;
    bool first = true;
    auto sep = [&] {
        out += first ? " " : ", ";
        first = false;
    };
    for (const auto& s : obj.specifiers) {
        sep();
        out += s.kind + " " + expr(s.value, kOr);
        if (s.by) out += " by " + expr(*s.by, kOr);
    }
    for (const auto& p : obj.properties) {
        sep();
        out += "with " + p.name + " " + expr(p.value, kOr);
    }
    if (obj.behavior) {
        sep();
        out += "with behavior " + expr(*obj.behavior, kOr);
    }
    return out;
}

std::string render(const ScenarioTree& tree) {
    std::string out;

    std::string header;
    for (const auto& p : tree.params) header += "param " + p.name + " = " + render(p.value) + "\n";
    if (tree.model_import) header += "model " + *tree.model_import + "\n";
    section(out, header);

    std::string constants;
    for (const auto& c : tree.constants) constants += c.name + " = " + render(c.value) + "\n";
    section(out, constants);

    for (const auto& b : tree.behaviors) {
        std::string text = "behavior " + b.name + "(";
        for (std::size_t i = 0; i < b.params.size(); ++i) {
            if (i) text += ", ";
            text += b.params[i].name;
            if (b.params[i].default_value) text += "=" + render(*b.params[i].default_value);
        }
        text += "):\n";
        render_block(text, b.body, 1);
        section(out, text);
    }

    std::string objects;
    for (const auto& o : tree.objects) objects += render(o) + "\n";
    section(out, objects);

    std::string requirements;
    for (const auto& r : tree.requirements) requirements += "require " + render(r.condition) + "\n";
    section(out, requirements);

    std::string terminations;
    for (const auto& t : tree.terminations) {
        if (t.kind == Termination::Kind::when) {
            terminations += "terminate when " + render(t.value) + "\n";
        } else {
            terminations += "terminate after " + render(t.value) + " " + t.unit + "\n";
        }
    }
    section(out, terminations);
    return out;
}

std::string render(const ScenicScript& script) { return render(script.tree()); }

}  // namespace vid2scenic::scenic
