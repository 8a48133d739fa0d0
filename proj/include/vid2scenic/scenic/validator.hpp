#pragma once

#include <vector>

#include "vid2scenic/scenic/catalog.hpp"
#include "vid2scenic/scenic/diagnostic.hpp"
#include "vid2scenic/scenic/script.hpp"

namespace vid2scenic::scenic {

/// Checks every class, behavior, weather literal, param name and specifier
/// kind against the catalog and resolves behavior references. Returns no
/// error diagnostics iff the script is runnable as far as static checks can
/// tell. Never throws for script content.
std::vector<Diagnostic> validate(const ScenicScript& script, const Catalog& catalog);

}  // namespace vid2scenic::scenic
