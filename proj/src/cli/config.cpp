#include "vid2scenic/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <variant>

#include <fmt/format.h>
#include <toml.hpp>

#include "vid2scenic/gateway/mock_backend.hpp"
#include "vid2scenic/util/fs.hpp"

extern char** environ;

namespace fs = std::filesystem;
using nlohmann::json;

namespace vid2scenic::cli {

namespace {

enum class Kind { integer, real, boolean, string, path };

using Value = std::variant<std::int64_t, double, bool, std::string>;

struct Key {
    Kind kind;
    std::function<void(const Value&)> set;
};

std::string_view kind_name(Kind k) {
    switch (k) {
        case Kind::integer: return "an integer";
        case Kind::real: return "a number";
        case Kind::boolean: return "a boolean";
        case Kind::string:
        case Kind::path: return "a string";
    }
    return "a value";
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

class Loader {
public:
    Loader(PipelineConfig& c, fs::path base) : c_(c), base_(std::move(base)) { build(); }

    bool known_section(const std::string& s) const {
        return s == "thresholds" || std::any_of(keys_.begin(), keys_.end(), [&](const auto& kv) {
                   return kv.first.rfind(s + ".", 0) == 0;
               });
    }

    // Thresholds take any key here; ThresholdConfig vets the ids later.
    const Key* find(const std::string& section, const std::string& key) {
        if (section == "thresholds") {
            threshold_key_ = Key{Kind::real, [this, key](const Value& v) { c_.thresholds[key] = std::get<double>(v); }};
            return &threshold_key_;
        }
        auto it = keys_.find(section + "." + key);
        return it == keys_.end() ? nullptr : &it->second;
    }

private:
    template <typename T>
    void add(const std::string& name, Kind kind, T& field) {
        keys_[name] = Key{kind, [&field, kind, this](const Value& v) {
                              if constexpr (std::is_same_v<T, int>) {
                                  field = static_cast<int>(std::get<std::int64_t>(v));
                              } else if constexpr (std::is_same_v<T, fs::path>) {
                                  fs::path p = std::get<std::string>(v);
                                  field = (p.is_relative() ? base_ / p : p).lexically_normal();
                              } else {
                                  field = std::get<T>(v);
                              }
                              (void)kind;
                          }};
    }

    void add_ms(const std::string& name, std::chrono::milliseconds& field) {
        keys_[name] = Key{Kind::integer, [&field](const Value& v) { field = std::chrono::milliseconds(std::get<std::int64_t>(v)); }};
    }

    void build() {
        auto& g = c_.gateway;
        add("gateway.backend", Kind::string, g.backend);
        add("gateway.mock_mode", Kind::string, g.mock_mode);
        add("gateway.endpoint", Kind::string, g.http.endpoint);
        add("gateway.script_model", Kind::string, g.http.script_model);
        add("gateway.feature_model", Kind::string, g.http.feature_model);
        add("gateway.credential_env", Kind::string, g.http.credential_env);
        add("gateway.script_temperature", Kind::real, g.http.script_temperature);
        add("gateway.feature_temperature", Kind::real, g.http.feature_temperature);
        add("gateway.retry_cap", Kind::integer, g.http.retry_cap);
        add_ms("gateway.deadline_ms", g.http.deadline);
        add_ms("gateway.backoff_ms", g.http.backoff_base);
        add("gateway.max_in_flight", Kind::integer, g.http.max_in_flight);

        auto& f = c_.frames;
        add("frames.n", Kind::integer, f.n);
        add("frames.max_dim", Kind::integer, f.max_dim);
        add("frames.jpeg_quality", Kind::integer, f.jpeg_quality);
        add("frames.probe_command", Kind::string, f.probe_command);
        add("frames.extract_command", Kind::string, f.extract_command);
        keys_["frames.tool_timeout_s"] =
            Key{Kind::integer, [&f](const Value& v) { f.tool_timeout = std::chrono::seconds(std::get<std::int64_t>(v)); }};

        add("loop.max_iterations", Kind::integer, c_.loop.max_iterations);
        add("loop.repair_attempts", Kind::integer, c_.loop.repair_attempts);
        add("loop.batch_parallelism", Kind::integer, c_.loop.batch_parallelism);
        add("loop.stop_on_stall", Kind::boolean, c_.loop.stop_on_stall);

        add("simulator.backend", Kind::string, c_.simulator.backend);
        add("simulator.shim_command", Kind::string, c_.simulator.shim_command);
        add("simulator.max_sim_seconds", Kind::real, c_.simulator.max_sim_seconds);
        add("simulator.timeout_s", Kind::real, c_.simulator.timeout_s);

        add("paths.fixtures_dir", Kind::path, c_.paths.fixtures_dir);
        add("paths.catalog", Kind::path, c_.paths.catalog);
        add("paths.runs_dir", Kind::path, c_.paths.runs_dir);
    }

    PipelineConfig& c_;
    fs::path base_;
    std::map<std::string, Key> keys_;
    Key threshold_key_;
};

Value from_toml(const toml::node& n, Kind kind, const std::string& name) {
    switch (kind) {
        case Kind::integer:
            if (auto v = n.value_exact<std::int64_t>()) return *v;
            break;
        case Kind::real:
            if (n.is_integer() || n.is_floating_point()) return *n.value<double>();
            break;
        case Kind::boolean:
            if (auto v = n.value_exact<bool>()) return *v;
            break;
        case Kind::string:
        case Kind::path:
            if (auto v = n.value_exact<std::string>()) return *v;
            break;
    }
    throw ConfigError(fmt::format("'{}' must be {}", name, kind_name(kind)));
}

Value from_text(const std::string& text, Kind kind, const std::string& name) {
    try {
        std::size_t used = 0;
        switch (kind) {
            case Kind::integer: {
                long long v = std::stoll(text, &used);
                if (used == text.size()) return static_cast<std::int64_t>(v);
                break;
            }
            case Kind::real: {
                double v = std::stod(text, &used);
                if (used == text.size()) return v;
                break;
            }
            case Kind::boolean:
                if (text == "true" || text == "1") return true;
                if (text == "false" || text == "0") return false;
                break;
            case Kind::string:
            case Kind::path: return text;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("'{}' must be {} (got '{}')", name, kind_name(kind), text));
}

void check(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(fmt::format("'{}' {}", key, what));
}

void validate(const PipelineConfig& c) {
    const auto& g = c.gateway;
    check(g.backend == "http" || g.backend == "mock", "gateway.backend", "must be \"http\" or \"mock\"");
    try {
        gateway::mock_mode_from_string(g.mock_mode);
    } catch (const std::exception&) {
        throw ConfigError("'gateway.mock_mode' must be one of faithful, one_at_a_time, stall");
    }
    check(g.http.endpoint.rfind("http://", 0) == 0 || g.http.endpoint.rfind("https://", 0) == 0, "gateway.endpoint",
          "must be an http:// or https:// URL");
    check(!g.http.credential_env.empty(), "gateway.credential_env", "must not be empty");
    check(g.http.script_temperature >= 0 && g.http.script_temperature <= 2, "gateway.script_temperature",
          "must be within [0, 2]");
    check(g.http.feature_temperature >= 0 && g.http.feature_temperature <= 2, "gateway.feature_temperature",
          "must be within [0, 2]");
    check(g.http.retry_cap >= 0, "gateway.retry_cap", "must not be negative");
    check(g.http.deadline.count() > 0, "gateway.deadline_ms", "must be positive");
    check(g.http.backoff_base.count() >= 0, "gateway.backoff_ms", "must not be negative");
    check(g.http.max_in_flight >= 1, "gateway.max_in_flight", "must be at least 1");

    check(c.frames.n >= 1, "frames.n", "must be at least 1");
    check(c.frames.max_dim >= 1, "frames.max_dim", "must be at least 1");
    check(c.frames.jpeg_quality >= 1 && c.frames.jpeg_quality <= 100, "frames.jpeg_quality", "must be within [1, 100]");
    check(c.frames.tool_timeout.count() > 0, "frames.tool_timeout_s", "must be positive");

    check(c.loop.max_iterations >= 1, "loop.max_iterations", "must be at least 1");
    check(c.loop.repair_attempts >= 0, "loop.repair_attempts", "must not be negative");
    check(c.loop.batch_parallelism >= 1, "loop.batch_parallelism", "must be at least 1");

    check(c.simulator.backend == "mock" || c.simulator.backend == "external", "simulator.backend",
          "must be \"mock\" or \"external\"");
    check(c.simulator.backend != "external" || !c.simulator.shim_command.empty(), "simulator.shim_command",
          "is required for the external backend");
    check(c.simulator.max_sim_seconds > 0, "simulator.max_sim_seconds", "must be positive");
    check(c.simulator.timeout_s > 0, "simulator.timeout_s", "must be positive");

    try {
        features::ThresholdConfig t(c.thresholds);
    } catch (const features::ContractViolation& e) {
        throw ConfigError(fmt::format("[thresholds]: {}", e.what()));
    }

    check(!c.paths.fixtures_dir.empty(), "paths.fixtures_dir", "is required");
    check(fs::is_directory(c.paths.fixtures_dir), "paths.fixtures_dir",
          "names a directory that does not exist: " + c.paths.fixtures_dir.string());
    check(!c.paths.catalog.empty(), "paths.catalog", "is required");
    check(fs::is_regular_file(c.paths.catalog), "paths.catalog",
          "names a file that does not exist: " + c.paths.catalog.string());
    // runs are created on demand, so only the parent has to be there
    check(fs::is_directory(c.paths.runs_dir) || fs::is_directory(c.paths.runs_dir.parent_path()), "paths.runs_dir",
          "has no existing parent directory: " + c.paths.runs_dir.string());
}

std::map<std::string, std::string> process_env() {
    std::map<std::string, std::string> env;
    for (char** e = environ; *e; ++e) {
        std::string entry(*e);
        auto eq = entry.find('=');
        if (eq != std::string::npos && entry.rfind(kEnvPrefix, 0) == 0) env[entry.substr(0, eq)] = entry.substr(eq + 1);
    }
    return env;
}

}  // namespace

PipelineConfig load_config(const fs::path& file) { return load_config(file, process_env()); }

PipelineConfig load_config(const fs::path& file, const std::map<std::string, std::string>& env) {
    PipelineConfig c;
    c.source = fs::absolute(file).lexically_normal();
    try {
        c.text = util::read_file(file);
    } catch (const util::IoError& e) {
        throw ConfigError(fmt::format("cannot read config {}: {}", file.string(), e.what()));
    }
    const fs::path base = c.source.parent_path();
    c.paths.runs_dir = base / "runs";
    Loader loader(c, base);

    toml::table doc;
    try {
        doc = toml::parse(c.text, c.source.string());
    } catch (const toml::parse_error& e) {
        const auto& where = e.source().begin;
        throw ConfigError(fmt::format("{}:{}:{}: {}", file.string(), where.line, where.column, e.description()));
    }
    try {
        for (const auto& [sk, snode] : doc) {
            const std::string section(sk.str());
            const auto* table = snode.as_table();
            if (!table) throw ConfigError(fmt::format("unknown top-level key '{}'", section));
            if (!loader.known_section(section)) throw ConfigError(fmt::format("unknown section [{}]", section));
            for (const auto& [kk, node] : *table) {
                const std::string name = section + "." + std::string(kk.str());
                const Key* key = loader.find(section, std::string(kk.str()));
                if (!key) throw ConfigError(fmt::format("unknown key '{}'", name));
                key->set(from_toml(node, key->kind, name));
            }
        }
        for (const auto& [var, value] : env) {
            if (var.rfind(kEnvPrefix, 0) != 0) continue;
            const std::string rest = var.substr(kEnvPrefix.size());
            auto sep = rest.find("__");
            if (sep == std::string::npos)
                throw ConfigError(fmt::format("environment override {} is not SECTION__KEY", var));
            const std::string section = lower(rest.substr(0, sep));
            const std::string key_name = lower(rest.substr(sep + 2));
            const std::string name = section + "." + key_name;
            const Key* key = loader.known_section(section) ? loader.find(section, key_name) : nullptr;
            if (!key) throw ConfigError(fmt::format("unknown key '{}' (from environment {})", name, var));
            key->set(from_text(value, key->kind, name));
            c.env_overrides[var] = value;
        }
        validate(c);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", file.string(), e.what()));
    }
    return c;
}

json snapshot(const PipelineConfig& c) {
    const auto& g = c.gateway;
    json resolved{
        {"gateway",
         {{"backend", g.backend},
          {"mock_mode", g.mock_mode},
          {"endpoint", g.http.endpoint},
          {"script_model", g.http.script_model},
          {"feature_model", g.http.feature_model},
          {"credential_env", g.http.credential_env},
          {"script_temperature", g.http.script_temperature},
          {"feature_temperature", g.http.feature_temperature},
          {"retry_cap", g.http.retry_cap},
          {"deadline_ms", g.http.deadline.count()},
          {"backoff_ms", g.http.backoff_base.count()},
          {"max_in_flight", g.http.max_in_flight}}},
        {"frames",
         {{"n", c.frames.n},
          {"max_dim", c.frames.max_dim},
          {"jpeg_quality", c.frames.jpeg_quality},
          {"probe_command", c.frames.probe_command},
          {"extract_command", c.frames.extract_command},
          {"tool_timeout_s", c.frames.tool_timeout.count()}}},
        {"thresholds", c.thresholds},
        {"loop",
         {{"max_iterations", c.loop.max_iterations},
          {"repair_attempts", c.loop.repair_attempts},
          {"batch_parallelism", c.loop.batch_parallelism},
          {"stop_on_stall", c.loop.stop_on_stall}}},
        {"simulator",
         {{"backend", c.simulator.backend},
          {"shim_command", c.simulator.shim_command},
          {"max_sim_seconds", c.simulator.max_sim_seconds},
          {"timeout_s", c.simulator.timeout_s}}},
        {"paths",
         {{"fixtures_dir", c.paths.fixtures_dir.string()},
          {"catalog", c.paths.catalog.string()},
          {"runs_dir", c.paths.runs_dir.string()}}}};
    return {{"source", c.source.string()}, {"text", c.text}, {"env_overrides", c.env_overrides}, {"resolved", resolved}};
}

std::unique_ptr<sim::SimulatorBackend> make_simulator(const PipelineConfig& c) {
    if (c.simulator.backend == "external") {
        sim::ExternalSimConfig ext;
        ext.command = c.simulator.shim_command;
        ext.wall_timeout = std::chrono::milliseconds(static_cast<long long>(c.simulator.timeout_s * 1000));
        return std::make_unique<sim::ExternalSimBackend>(ext);
    }
    return std::make_unique<sim::MockSimBackend>();
}

std::unique_ptr<Stack> make_stack(const PipelineConfig& c) {
    auto s = std::make_unique<Stack>();
    try {
        s->engine.catalog = scenic::load_catalog(c.paths.catalog);
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("paths.catalog: {}", e.what()));
    }
    // the live backend checks its credential before anything slow happens
    if (c.gateway.backend == "http") s->completion = std::make_unique<gateway::HttpBackend>(c.gateway.http);
    try {
        s->registry = gateway::FewShotRegistry::load(c.paths.fixtures_dir);
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("paths.fixtures_dir: {}", e.what()));
    }
    if (!s->completion) {
        s->completion = std::make_unique<gateway::MockBackend>(s->registry, s->engine.catalog,
                                                               gateway::mock_mode_from_string(c.gateway.mock_mode));
    }
    s->gateway = std::make_unique<gateway::Gateway>(*s->completion, s->registry);
    s->simulator = make_simulator(c);
    auto& e = s->engine;
    e.frames = c.frames;
    e.thresholds = features::ThresholdConfig(c.thresholds);
    e.max_iterations = c.loop.max_iterations;
    e.repair_attempts = c.loop.repair_attempts;
    e.stop_on_stall = c.loop.stop_on_stall;
    e.max_sim_seconds = c.simulator.max_sim_seconds;
    e.snapshot = snapshot(c);
    return s;
}

}  // namespace vid2scenic::cli
