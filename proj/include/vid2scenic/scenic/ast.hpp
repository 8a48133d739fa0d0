#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vid2scenic/scenic/diagnostic.hpp"

namespace vid2scenic::scenic {

/// Source location attached to tree nodes. Locations are not part of a
/// node's structural identity: two trees that differ only in where their
/// nodes came from compare equal.
struct Loc {
    Span span;
    friend constexpr bool operator==(const Loc&, const Loc&) { return true; }
};

enum class ExprKind {
    number,     // text = literal as written
    string,     // text = unescaped value
    name,       // text = identifier
    boolean,    // text = "True" | "False"
    none,
    tuple,      // args = elements
    list,       // args = elements
    call,       // args[0] = callee, rest = arguments
    keyword,    // text = keyword name, args[0] = value (call arguments only)
    star,       // args[0] = splatted value (call arguments only)
    attribute,  // text = attribute name, args[0] = object
    subscript,  // args[0] = object, args[1] = index
    unary,      // text = "-" | "not", args[0] = operand
    binary,     // text = operator, args = {lhs, rhs}
    degrees,    // args[0] = angle
    relative_to,    // args = {value, reference}
    distance_to,    // args[0] = target ("distance to X")
    distance_from,  // args = {from, to} ("distance from X to Y")
};

struct Expr {
    ExprKind kind = ExprKind::none;
    std::string text;
    std::vector<Expr> args;
    Loc loc;

    friend bool operator==(const Expr&, const Expr&) = default;

    /// Callee name for `name(...)` calls, empty otherwise.
    const std::string& callee_name() const;
    /// Positional + keyword argument count of a call.
    std::size_t call_arity() const;
};

enum class StmtKind { do_, take, wait, try_, while_, if_, assign, terminate, pass };

struct Stmt;

struct Handler {
    Expr condition;
    std::vector<Stmt> body;
    Loc loc;
    friend bool operator==(const Handler&, const Handler&) = default;
};

struct Stmt {
    StmtKind kind = StmtKind::pass;
    // do_: exprs[0] = sub-behavior call; take: exprs = actions;
    // while_: exprs[0] = condition; assign: exprs[0] = value.
    std::vector<Expr> exprs;
    // do_ modifiers
    std::optional<Expr> duration;
    std::string duration_unit;  // "seconds" | "steps"
    std::optional<Expr> until;
    // assign target
    std::string target;
    // while_/try_ body
    std::vector<Stmt> body;
    std::vector<Handler> handlers;  // try_: interrupt clauses; if_: if/elif branches
    std::vector<Stmt> orelse;       // if_: else branch
    Loc loc;

    friend bool operator==(const Stmt&, const Stmt&) = default;
};

struct ParamDecl {
    std::string name;
    Expr value;
    Loc loc;
    friend bool operator==(const ParamDecl&, const ParamDecl&) = default;
};

struct ConstDecl {
    std::string name;
    Expr value;
    Loc loc;
    friend bool operator==(const ConstDecl&, const ConstDecl&) = default;
};

struct FormalParam {
    std::string name;
    std::optional<Expr> default_value;
    friend bool operator==(const FormalParam&, const FormalParam&) = default;
};

struct BehaviorDecl {
    std::string name;
    std::vector<FormalParam> params;
    std::vector<Stmt> body;
    Loc loc;
    friend bool operator==(const BehaviorDecl&, const BehaviorDecl&) = default;
};

struct Specifier {
    std::string kind;  // keyword words joined by a single space: "ahead of"
    Expr value;
    std::optional<Expr> by;
    Loc loc;
    friend bool operator==(const Specifier&, const Specifier&) = default;
};

struct Property {
    std::string name;
    Expr value;
    Loc loc;
    friend bool operator==(const Property&, const Property&) = default;
};

struct ObjectDecl {
    std::string binding;  // empty when the object is not bound to a name
    std::string object_class;
    std::vector<Specifier> specifiers;
    std::vector<Property> properties;
    std::optional<Expr> behavior;  // `with behavior X(...)`
    Loc loc;
    Loc class_loc;
    friend bool operator==(const ObjectDecl&, const ObjectDecl&) = default;
};

struct Termination {
    enum class Kind { when, after } kind = Kind::when;
    Expr value;
    std::string unit;  // after: "seconds" | "steps"
    Loc loc;
    friend bool operator==(const Termination&, const Termination&) = default;
};

struct Requirement {
    Expr condition;
    Loc loc;
    friend bool operator==(const Requirement&, const Requirement&) = default;
};

struct ScenarioTree {
    std::vector<ParamDecl> params;
    std::optional<std::string> model_import;
    std::vector<ConstDecl> constants;
    std::vector<BehaviorDecl> behaviors;
    std::vector<ObjectDecl> objects;
    std::vector<Requirement> requirements;
    std::vector<Termination> terminations;
    Loc model_loc;

    friend bool operator==(const ScenarioTree&, const ScenarioTree&) = default;

    const ObjectDecl* find_object(std::string_view binding) const;
    const BehaviorDecl* find_behavior(std::string_view name) const;
    const ParamDecl* find_param(std::string_view name) const;
};

}  // namespace vid2scenic::scenic
