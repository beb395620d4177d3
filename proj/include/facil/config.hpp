// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

// JSON run configuration. Parsing is strict: unknown keys and out-of-range
// values raise ConfigError naming the dotted field path.

#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "facil/analysis.hpp"

namespace facil {

/// A factor space given either by preset name or inline dimension specs.
struct SpaceSpec {
    std::string preset;  ///< empty for an inline space
    FactorSpace space;

    bool operator==(const SpaceSpec&) const = default;
};

struct RunConfig {
    SpaceSpec space;
    std::vector<SpaceSpec> stages;
    OracleParams oracle;
    FlywheelConfig flywheel;
    std::vector<std::string> strategies = strategy_names();
    GaussianOptions gaussian;
    std::vector<std::uint64_t> budgets = {500, 1000, 2000, 4000, 8000};
    std::vector<Composition> train;  ///< check-comp training support
    std::uint64_t train_count = 0;    ///< demos per training composition; 0 -> flywheel.unit_size
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string output_dir = "facil_out";

    [[nodiscard]] std::vector<FactorSpace> stage_spaces() const {
        std::vector<FactorSpace> out;
        for (const auto& s : stages) out.push_back(s.space);
        return out;
    }

    /// Oracle parameters with the run seed applied.
    [[nodiscard]] OracleParams seeded_oracle() const {
        OracleParams p = oracle;
        p.seed = seed;
        return p;
    }

    /// Flywheel configuration with the run thread count applied.
    [[nodiscard]] FlywheelConfig threaded_flywheel() const {
        FlywheelConfig c = flywheel;
        c.threads = threads;
        return c;
    }
};

namespace detail {

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!ok.count(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown field");
    }
}

template <typename T>
T get_field(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path, "wrong type");
    }
}

inline double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

inline std::uint64_t get_unsigned(const json& j, const std::string& path) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
        throw ConfigError(path, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

inline SpaceSpec parse_space(const json& j, const std::string& path) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        const auto& names = preset_names();
        if (std::find(names.begin(), names.end(), name) == names.end()) {
            throw ConfigError(path, "unknown preset '" + name + "'");
        }
        return {name, preset_space(name)};
    }
    check_keys(j, path, {"dims", "slot_ratios"});
    try {
        return {"", j.get<FactorSpace>()};
    } catch (const ConfigError& e) {
        throw ConfigError(path + "." + e.field(), e.what());
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    } catch (const json::exception&) {
        throw ConfigError(path, "malformed factor space");
    }
}

inline json space_to_json(const SpaceSpec& s) {
    if (!s.preset.empty()) return s.preset;
    return json(s.space);
}

inline Composition parse_composition(const json& j, const std::string& path) {
    return Composition(get_field<std::vector<std::size_t>>(j, path));
}

inline std::vector<SpaceSpec> default_stages(const SpaceSpec& first) {
    std::vector<SpaceSpec> out{first};
    if (first.preset == "pnp_object") {
        out.push_back({"pnp_action", preset_space("pnp_action")});
        out.push_back({"environment", preset_space("environment")});
    } else if (first.preset == "oc_object") {
        out.push_back({"oc_action", preset_space("oc_action")});
        out.push_back({"environment", preset_space("environment")});
    }
    return out;
}

}  // namespace detail

/// Validates a parsed JSON document and fills defaults.
inline RunConfig config_from_json(const json& j) {
    using namespace detail;
    check_keys(j, "", {"space", "stages", "oracle", "flywheel", "strategies", "gaussian", "budgets", "train",
                       "train_count", "seed", "threads", "output_dir"});
    RunConfig c;
    c.space = j.contains("space") ? parse_space(j.at("space"), "space") : SpaceSpec{"pnp_object", preset_space("pnp_object")};

    if (j.contains("stages")) {
        const auto& st = j.at("stages");
        if (!st.is_array() || st.empty()) throw ConfigError("stages", "expected a non-empty array");
        for (std::size_t i = 0; i < st.size(); ++i) c.stages.push_back(parse_space(st[i], "stages[" + std::to_string(i) + "]"));
    } else {
        c.stages = default_stages(c.space);
    }

    if (j.contains("oracle")) {
        const auto& o = j.at("oracle");
        check_keys(o, "oracle", {"kappa0", "beta", "p_max", "hard_level_weight", "level_weights", "blacklist"});
        if (o.contains("kappa0")) c.oracle.kappa0 = get_number(o.at("kappa0"), "oracle.kappa0");
        if (o.contains("beta")) c.oracle.beta = get_number(o.at("beta"), "oracle.beta");
        if (o.contains("p_max")) c.oracle.p_max = get_number(o.at("p_max"), "oracle.p_max");
        if (o.contains("hard_level_weight")) {
            c.oracle.hard_level_weight = get_number(o.at("hard_level_weight"), "oracle.hard_level_weight");
        }
        if (o.contains("level_weights")) {
            c.oracle.level_weights =
                get_field<std::map<std::string, std::vector<double>>>(o.at("level_weights"), "oracle.level_weights");
        }
        if (o.contains("blacklist")) {
            const auto& bl = o.at("blacklist");
            if (!bl.is_array()) throw ConfigError("oracle.blacklist", "expected an array");
            for (std::size_t i = 0; i < bl.size(); ++i) {
                const std::string path = "oracle.blacklist[" + std::to_string(i) + "]";
                check_keys(bl[i], path, {"dim_a", "level_a", "dim_b", "level_b"});
                c.oracle.blacklist.push_back(get_field<LevelPair>(bl[i], path));
            }
        }
        c.oracle.validate();
    }

    if (j.contains("flywheel")) {
        const auto& f = j.at("flywheel");
        check_keys(f, "flywheel", {"tau", "unit_size", "k", "max_iterations", "evaluation_mode", "initial_compositions",
                                   "threshold"});
        if (f.contains("tau")) c.flywheel.tau = get_number(f.at("tau"), "flywheel.tau");
        if (f.contains("unit_size")) c.flywheel.unit_size = get_unsigned(f.at("unit_size"), "flywheel.unit_size");
        if (f.contains("k")) {
            const auto k = get_unsigned(f.at("k"), "flywheel.k");
            if (k > 1'000'000) throw ConfigError("flywheel.k", "must be <= 1000000");
            c.flywheel.k = static_cast<std::uint32_t>(k);
        }
        if (f.contains("max_iterations")) {
            c.flywheel.max_iterations = get_unsigned(f.at("max_iterations"), "flywheel.max_iterations");
        }
        if (f.contains("evaluation_mode")) {
            c.flywheel.evaluation_mode =
                parse_evaluation_mode(get_field<std::string>(f.at("evaluation_mode"), "flywheel.evaluation_mode"));
        }
        if (f.contains("initial_compositions")) {
            const auto& init = f.at("initial_compositions");
            if (!init.is_array()) throw ConfigError("flywheel.initial_compositions", "expected an array");
            for (std::size_t i = 0; i < init.size(); ++i) {
                const std::string path = "flywheel.initial_compositions[" + std::to_string(i) + "]";
                Composition comp = parse_composition(init[i], path);
                if (!c.space.space.contains(comp)) throw ConfigError(path, "composition is outside the space");
                c.flywheel.initial_compositions.push_back(std::move(comp));
            }
        }
        if (f.contains("threshold")) {
            const auto t = get_field<std::string>(f.at("threshold"), "flywheel.threshold");
            if (t == "strict") c.flywheel.threshold = Threshold::strict;
            else if (t == "inclusive") c.flywheel.threshold = Threshold::inclusive;
            else throw ConfigError("flywheel.threshold", "expected 'strict' or 'inclusive'");
        }
    }
    c.flywheel.validate();

    if (j.contains("strategies")) {
        c.strategies = get_field<std::vector<std::string>>(j.at("strategies"), "strategies");
        for (const auto& s : c.strategies) {
            if (std::find(strategy_names().begin(), strategy_names().end(), s) == strategy_names().end()) {
                throw ConfigError("strategies", "unknown strategy '" + s + "'");
            }
        }
    }
    if (j.contains("gaussian")) {
        const auto& g = j.at("gaussian");
        check_keys(g, "gaussian", {"mode", "sigma"});
        if (g.contains("mode")) c.gaussian.mode = get_field<std::vector<std::size_t>>(g.at("mode"), "gaussian.mode");
        if (g.contains("sigma")) c.gaussian.sigma = get_number(g.at("sigma"), "gaussian.sigma");
        if (!(c.gaussian.sigma > 0.0)) throw ConfigError("gaussian.sigma", "must be > 0");
    }
    if (j.contains("budgets")) {
        const auto& b = j.at("budgets");
        if (!b.is_array()) throw ConfigError("budgets", "expected an array");
        c.budgets.clear();
        for (std::size_t i = 0; i < b.size(); ++i) c.budgets.push_back(get_unsigned(b[i], "budgets[" + std::to_string(i) + "]"));
        if (!std::is_sorted(c.budgets.begin(), c.budgets.end())) throw ConfigError("budgets", "must be sorted ascending");
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        if (!t.is_array()) throw ConfigError("train", "expected an array");
        for (std::size_t i = 0; i < t.size(); ++i) {
            const std::string path = "train[" + std::to_string(i) + "]";
            Composition comp = parse_composition(t[i], path);
            if (!c.space.space.contains(comp)) throw ConfigError(path, "composition is outside the space");
            c.train.push_back(std::move(comp));
        }
    }
    if (j.contains("train_count")) c.train_count = get_unsigned(j.at("train_count"), "train_count");
    if (j.contains("seed")) c.seed = get_unsigned(j.at("seed"), "seed");
    if (j.contains("threads")) {
        const auto t = get_unsigned(j.at("threads"), "threads");
        if (t < 1 || t > 1024) throw ConfigError("threads", "must lie in [1, 1024]");
        c.threads = static_cast<unsigned>(t);
    }
    if (j.contains("output_dir")) c.output_dir = get_field<std::string>(j.at("output_dir"), "output_dir");
    return c;
}

/// Fully expanded configuration (every default written out).
inline json config_to_json(const RunConfig& c) {
    json stages = json::array();
    for (const auto& s : c.stages) stages.push_back(detail::space_to_json(s));
    json oracle = c.oracle;
    oracle.erase("seed");
    json flywheel = c.flywheel;
    json train = json::array();
    for (const auto& t : c.train) train.push_back(t.indices());
    return {{"space", detail::space_to_json(c.space)},
            {"stages", stages},
            {"oracle", oracle},
            {"flywheel", flywheel},
            {"strategies", c.strategies},
            {"gaussian", {{"mode", c.gaussian.mode}, {"sigma", c.gaussian.sigma}}},
            {"budgets", c.budgets},
            {"train", train},
            {"train_count", c.train_count},
            {"seed", c.seed},
            {"threads", c.threads},
            {"output_dir", c.output_dir}};
}

inline RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline RunConfig parse_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("", "config file '" + path.string() + "' does not exist");
    return parse_config_text(io::read_file(path));
}

}  // namespace facil
