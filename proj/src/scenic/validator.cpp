#include "vid2scenic/scenic/validator.hpp"

#include <set>

#include <fmt/format.h>

namespace vid2scenic::scenic {

namespace {

void collect_strings(const Expr& e, std::vector<const Expr*>& out) {
    if (e.kind == ExprKind::string) out.push_back(&e);
    for (const auto& a : e.args) collect_strings(a, out);
}

std::optional<std::string> closest(const std::string& word, const std::set<std::string>& options) {
    std::optional<std::string> best;
    std::size_t best_score = 3;
    for (const auto& o : options) {
        // cheap similarity: shared prefix length and length difference
        std::size_t common = 0;
        while (common < word.size() && common < o.size() && word[common] == o[common]) ++common;
        std::size_t diff = (word.size() > o.size() ? word.size() - o.size() : o.size() - word.size());
        std::size_t score = std::max(word.size(), o.size()) - common + diff / 2;
        if (score < best_score) {
            best_score = score;
            best = o;
        }
    }
    return best;
}

std::optional<std::string> did_you_mean(const std::optional<std::string>& candidate) {
    if (!candidate) return std::nullopt;
    return fmt::format("did you mean '{}'?", *candidate);
}

class Validator {
public:
    Validator(const ScenarioTree& tree, const Catalog& catalog) : tree_(tree), catalog_(catalog) {}

    std::vector<Diagnostic> run() {
        for (const auto& p : tree_.params) check_param(p);
        for (const auto& b : tree_.behaviors) check_block(b.body);
        std::set<std::string> bindings;
        for (const auto& o : tree_.objects) {
            check_object(o);
            if (!o.binding.empty() && !bindings.insert(o.binding).second) {
                add(Severity::warning, code::duplicate_binding, o.loc.span,
                    fmt::format("'{}' is bound to more than one object", o.binding),
                    "later references resolve to the last object");
            }
        }
        return std::move(out_);
    }

private:
    void add(Severity sev, std::string_view code, const Span& span, std::string message,
             std::optional<std::string> hint = std::nullopt) {
        out_.push_back(Diagnostic{sev, std::string(code), span, std::move(message), std::move(hint)});
    }

    void check_param(const ParamDecl& p) {
        if (!catalog_.param_names.count(p.name)) {
            add(Severity::error, code::unknown_param, p.loc.span,
                fmt::format("unknown scenario parameter '{}'", p.name),
                did_you_mean(closest(p.name, catalog_.param_names)));
        }
        if (p.name != "weather") return;
        std::vector<const Expr*> literals;
        collect_strings(p.value, literals);
        for (const Expr* lit : literals) {
            if (!catalog_.weather_values.count(lit->text)) {
                auto hint = did_you_mean(closest(lit->text, catalog_.weather_values));
                add(Severity::error, code::unknown_weather, lit->loc.span,
                    fmt::format("unknown weather preset '{}'", lit->text),
                    hint ? hint : std::optional<std::string>("use one of the simulator's weather presets"));
            }
        }
    }

    void check_object(const ObjectDecl& o) {
        if (!catalog_.has_class(o.object_class)) {
            add(Severity::error, code::unknown_class, o.class_loc.span,
                fmt::format("object class '{}' is not available in the simulator", o.object_class),
                "substitute the closest supported class (for animals use Pedestrian)");
        }
        for (const auto& s : o.specifiers) {
            if (!catalog_.specifier_kinds.count(s.kind)) {
                add(Severity::error, code::unknown_specifier, s.loc.span,
                    fmt::format("unknown specifier '{}'", s.kind),
                    did_you_mean(closest(s.kind, catalog_.specifier_kinds)));
            }
        }
        if (o.behavior) check_behavior_ref(*o.behavior);
    }

    void check_block(const std::vector<Stmt>& body) {
        for (const auto& s : body) {
            if (s.kind == StmtKind::do_ && !s.exprs.empty()) check_behavior_ref(s.exprs[0]);
            check_block(s.body);
            for (const auto& h : s.handlers) check_block(h.body);
            check_block(s.orelse);
        }
    }

    void check_behavior_ref(const Expr& ref) {
        std::string name;
        std::size_t arity = 0;
        if (ref.kind == ExprKind::call && !ref.callee_name().empty()) {
            name = ref.callee_name();
            arity = ref.call_arity();
        } else if (ref.kind == ExprKind::name) {
            name = ref.text;
        } else {
            return;  // computed behavior expressions are not resolvable statically
        }
        if (const BehaviorDecl* decl = tree_.find_behavior(name)) {
            if (arity > decl->params.size()) {
                add(Severity::error, code::behavior_arity, ref.loc.span,
                    fmt::format("behavior '{}' takes at most {} argument(s), {} given", name,
                                decl->params.size(), arity));
            }
            return;
        }
        auto it = catalog_.builtin_behaviors.find(name);
        if (it == catalog_.builtin_behaviors.end()) {
            add(Severity::error, code::unknown_behavior, ref.loc.span,
                fmt::format("behavior '{}' is neither defined in the script nor a built-in", name),
                "define it with `behavior " + name + "(...):` or use a built-in behavior");
            return;
        }
        if (arity > static_cast<std::size_t>(it->second)) {
            add(Severity::error, code::behavior_arity, ref.loc.span,
                fmt::format("built-in behavior '{}' takes at most {} argument(s), {} given", name,
                            it->second, arity));
        }
    }

    const ScenarioTree& tree_;
    const Catalog& catalog_;
    std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> validate(const ScenicScript& script, const Catalog& catalog) {
    return Validator(script.tree(), catalog).run();
}

}  // namespace vid2scenic::scenic
