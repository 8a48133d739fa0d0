#include "vid2scenic/scenic/ast.hpp"

#include <algorithm>

namespace vid2scenic::scenic {

const std::string& Expr::callee_name() const {
    static const std::string empty;
    if (kind != ExprKind::call || args.empty() || args[0].kind != ExprKind::name) return empty;
    return args[0].text;
}

std::size_t Expr::call_arity() const {
    return kind == ExprKind::call && !args.empty() ? args.size() - 1 : 0;
}

namespace {
template <class Range, class Key>
auto find_by(const Range& range, Key key, std::string_view value) -> decltype(&*range.begin()) {
    auto it = std::find_if(range.begin(), range.end(),
                           [&](const auto& item) { return item.*key == value; });
    return it == range.end() ? nullptr : &*it;
}
}  // namespace

const ObjectDecl* ScenarioTree::find_object(std::string_view binding) const {
    return find_by(objects, &ObjectDecl::binding, binding);
}

const BehaviorDecl* ScenarioTree::find_behavior(std::string_view name) const {
    return find_by(behaviors, &BehaviorDecl::name, name);
}

const ParamDecl* ScenarioTree::find_param(std::string_view name) const {
    return find_by(params, &ParamDecl::name, name);
}

}  // namespace vid2scenic::scenic
