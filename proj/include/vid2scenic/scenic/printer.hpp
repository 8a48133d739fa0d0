#pragma once

#include <string>

#include "vid2scenic/scenic/ast.hpp"
#include "vid2scenic/scenic/script.hpp"

namespace vid2scenic::scenic {

/// Canonical text for a tree: params and the model import first, then
/// constants, behaviors, objects, requirements and terminations, each group
/// in declaration order and separated by one blank line. Four-space
/// indentation, one declaration per line, single-quoted strings, minimal
/// parentheses. `parse(render(t)).tree() == t` for every parsed tree.
std::string render(const ScenarioTree& tree);
std::string render(const ScenicScript& script);

std::string render(const Expr& expr);
std::string render(const ObjectDecl& object);

}  // namespace vid2scenic::scenic
