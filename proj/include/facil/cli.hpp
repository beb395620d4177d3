// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

// Command dispatch for the `facil` executable. Kept in a header so tests can
// drive commands in-process.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "facil/config.hpp"

namespace facil::cli {

enum ExitCode : int { kOk = 0, kNotConverged = 1, kError = 2 };

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out;
    std::string input;
    bool sampled = false;
    std::uint64_t grid = 0;
    std::uint64_t base = 0;
    std::uint64_t slots = 0;
    std::uint64_t k = 0;
};

/// --out wins over FACIL_OUT, which wins over the config's output_dir.
inline std::filesystem::path resolve_output_dir(const Flags& flags, const std::string& config_dir) {
    if (!flags.out.empty()) return flags.out;
    if (const char* env = std::getenv("FACIL_OUT"); env != nullptr && *env != '\0') return env;
    return config_dir;
}

inline RunConfig load_config(const Flags& flags) {
    if (flags.config.empty()) throw ConfigError("--config", "required for this command");
    RunConfig cfg = parse_config(flags.config);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.threads) {
        if (*flags.threads < 1) throw ConfigError("--threads", "must be >= 1");
        cfg.threads = *flags.threads;
    }
    return cfg;
}

inline json history_summary(const RunHistory& h) {
    const double rate = h.iterations.empty() ? 0.0 : h.iterations.back().overall();
    return {{"stage", h.stage},
            {"converged", h.converged},
            {"iterations", h.iterations.size()},
            {"total_demos", h.final_dataset.total()},
            {"support_size", h.final_dataset.support().size()},
            {"final_rate", rate},
            {"rollouts", h.total_rollouts()}};
}

inline void write_history(const std::filesystem::path& dir, const RunHistory& h) {
    io::write_file(dir / "history.json", history_to_json(h).dump(2) + "\n");
    io::write_file(dir / "iterations.csv", iterations_to_csv(h));
    io::write_file(dir / "dataset.csv", dataset_to_csv(h.final_dataset));
    io::write_file(dir / "dataset.json", dataset_to_json(h.final_dataset).dump(2) + "\n");
    for (const auto& it : h.iterations) {
        const std::string n = std::to_string(it.iteration);
        io::write_file(dir / ("rates_iter_" + n + ".csv"), report_to_csv(it.evaluation));
        if (!it.trace.empty()) io::write_file(dir / ("trace_iter_" + n + ".csv"), trace_to_csv(it.trace));
    }
}

inline int cmd_run(const Flags& flags, std::ostream& out) {
    const RunConfig cfg = load_config(flags);
    const auto dir = resolve_output_dir(flags, cfg.output_dir);
    const RunHistory h = run_flywheel(cfg.space.space, cfg.seeded_oracle(), cfg.threaded_flywheel());
    write_history(dir, h);
    const json summary = history_summary(h);
    io::write_file(dir / "summary.json", summary.dump(2) + "\n");
    out << summary.dump() << '\n';
    return h.converged ? kOk : kNotConverged;
}

inline int cmd_expand(const Flags& flags, std::ostream& out, std::ostream& err = std::cerr) {
    const RunConfig cfg = load_config(flags);
    const auto dir = resolve_output_dir(flags, cfg.output_dir);
    const auto stages = cfg.stage_spaces();
    const auto histories = sequential_expansion(stages, cfg.seeded_oracle(), cfg.threaded_flywheel());
    json summary = json::array();
    bool all = histories.size() == stages.size();
    for (std::size_t s = 0; s < histories.size(); ++s) {
        const RunHistory& h = histories[s];
        write_history(dir / ("stage_" + h.stage), h);
        json entry = history_summary(h);
        if (h.reduced_space) {
            const auto& prev = histories[s - 1].final_dataset;
            const auto b = rollout_budget(h.grid->cardinality(), prev.space().cardinality(),
                                          prev.support().size(), cfg.flywheel.k);
            entry["budget"] = budget_to_json(b);
        }
        summary.push_back(entry);
        all = all && h.converged;
    }
    io::write_file(dir / "summary.json", summary.dump(2) + "\n");
    out << summary.dump() << '\n';
    if (!all) err << "expansion stopped: stage " << histories.back().stage << " did not converge\n";
    return all ? kOk : kNotConverged;
}

inline int cmd_compare(const Flags& flags, std::ostream& out) {
    const RunConfig cfg = load_config(flags);
    const auto dir = resolve_output_dir(flags, cfg.output_dir);
    CompareOptions opt;
    opt.strategies = cfg.strategies;
    opt.gaussian = cfg.gaussian;
    const auto outcomes =
        compare_strategies(cfg.stage_spaces(), cfg.oracle, cfg.budgets, cfg.threaded_flywheel(), cfg.seed, opt);
    const std::string csv = comparison_to_csv(outcomes);
    io::write_file(dir / "comparison.csv", csv);
    out << csv;
    return kOk;
}

inline int cmd_fit(const Flags& flags, std::ostream& out, std::ostream& err = std::cerr) {
    if (flags.input.empty()) throw ConfigError("--input", "required for fit");
    const auto series = read_scaling_csv(io::read_file(flags.input));
    std::vector<std::pair<std::string, ScalingFit>> fits;
    for (const auto& [name, points] : series) {
        ScalingFit f = fit_power_law(points);
        for (const auto& d : f.diagnostics) err << name << ": " << d << '\n';
        fits.emplace_back(name, std::move(f));
    }
    const std::string csv = scaling_to_csv(fits);
    const char* env = std::getenv("FACIL_OUT");
    const std::filesystem::path dir = !flags.out.empty() ? std::filesystem::path(flags.out)
                                      : (env != nullptr && *env != '\0') ? std::filesystem::path(env)
                                                                         : std::filesystem::path(".");
    io::write_file(dir / "scaling.csv", csv);
    out << csv;
    return kOk;
}

inline int cmd_check_comp(const Flags& flags, std::ostream& out) {
    const RunConfig cfg = load_config(flags);
    if (cfg.train.empty()) throw ConfigError("train", "check-comp needs at least one training composition");
    const auto dir = resolve_output_dir(flags, cfg.output_dir);
    const SpacePtr space = share(cfg.space.space);
    const std::uint64_t per = cfg.train_count > 0 ? cfg.train_count : cfg.flywheel.unit_size;
    Dataset data(space);
    for (const auto& c : cfg.train) {
        if (data.count(c) == 0) data.add_in_place({c, per});
    }
    const OracleParams params = cfg.seeded_oracle();
    const Tensor rates = flags.sampled
                             ? simulate_evaluation(params, data, exact_benchmark(space), cfg.flywheel.k, 70 * kStageTagStride,
                                                   cfg.threads)
                                   .rates
                             : expected_rates(params, data, exact_benchmark(space));
    const CompositionSet train(cfg.train.begin(), cfg.train.end());
    const auto rep = compositionality_check(train, rates, cfg.flywheel.tau, cfg.flywheel.threshold);
    io::write_file(dir / "violations.csv", violations_to_csv(rep));
    json pairs = json::array();
    for (const auto& [dims, n] : rep.pair_violations) {
        pairs.push_back({{"dims", {space->dim(dims.first).name, space->dim(dims.second).name}},
                         {"violations", n}});
    }
    out << json{{"predicted_size", rep.predicted_size},
                {"empirical_size", rep.empirical_size},
                {"violations", rep.violations.size()},
                {"pair_violations", pairs}}
               .dump()
        << '\n';
    return kOk;
}

inline int cmd_budget(const Flags& flags, std::ostream& out) {
    const json j = budget_to_json(rollout_budget(flags.grid, flags.base, flags.slots, flags.k));
    const std::string text = j.dump(2) + "\n";
    const char* env = std::getenv("FACIL_OUT");
    if (!flags.out.empty()) io::write_file(std::filesystem::path(flags.out) / "budget.json", text);
    else if (env != nullptr && *env != '\0') io::write_file(std::filesystem::path(env) / "budget.json", text);
    out << text;
    return kOk;
}

/// Parses argv and runs one command. Diagnostics go to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"facil: factor-aware data flywheel simulator"};
    app.require_subcommand(1);
    Flags flags;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "JSON run configuration")->required();
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--threads", threads, "evaluation worker threads")->check(CLI::Range(1u, 1024u));
        sub->add_option("--out", flags.out, "output directory");
    };
    CLI::App* run_cmd = app.add_subcommand("run", "single-space flywheel");
    CLI::App* expand_cmd = app.add_subcommand("expand", "sequential factor expansion");
    CLI::App* compare_cmd = app.add_subcommand("compare", "data-efficiency comparison");
    CLI::App* check_cmd = app.add_subcommand("check-comp", "compositionality check");
    for (CLI::App* sub : {run_cmd, expand_cmd, compare_cmd, check_cmd}) add_common(sub);
    check_cmd->add_flag("--sampled", flags.sampled, "use sampled rates instead of exact probabilities");

    CLI::App* fit_cmd = app.add_subcommand("fit", "power-law fit of scaling data");
    fit_cmd->add_option("--input", flags.input, "CSV with columns benchmark,N,success")->required();
    fit_cmd->add_option("--out", flags.out, "output directory");

    CLI::App* budget_cmd = app.add_subcommand("budget", "rollout budget of one flywheel cycle");
    budget_cmd->add_option("--grid", flags.grid)->required();
    budget_cmd->add_option("--base", flags.base)->required();
    budget_cmd->add_option("--slots", flags.slots)->required();
    budget_cmd->add_option("--k", flags.k)->required();
    budget_cmd->add_option("--out", flags.out, "also write budget.json here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    }

    for (CLI::App* sub : app.get_subcommands()) {
        if (const auto* o = sub->get_option_no_throw("--seed"); o != nullptr && o->count() > 0) flags.seed = seed;
        if (const auto* o = sub->get_option_no_throw("--threads"); o != nullptr && o->count() > 0) flags.threads = threads;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(flags, out);
        if (expand_cmd->parsed()) return cmd_expand(flags, out, err);
        if (compare_cmd->parsed()) return cmd_compare(flags, out);
        if (check_cmd->parsed()) return cmd_check_comp(flags, out);
        if (fit_cmd->parsed()) return cmd_fit(flags, out, err);
        if (budget_cmd->parsed()) return cmd_budget(flags, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    }
    return kError;
}

}  // namespace facil::cli
