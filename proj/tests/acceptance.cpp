// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion with its runtime.
// Exit status is non-zero when any criterion fails, except those listed in
// kKnownFailing, which are still reported as FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "facil/cli.hpp"

namespace {

using namespace facil;
namespace fs = std::filesystem;

const std::set<int> kKnownFailing = {7};

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

// ---- 1 ----------------------------------------------------------------------

Outcome budget_arithmetic() {
    const auto b = rollout_budget(24, 16, 7, 5);
    const bool ok = b.full_possibilities == 384 && b.full_rollouts == 1920 && b.reduced_possibilities == 168 &&
                    b.sampled_rollouts == 120 && b.speedup == 16.0;
    return {ok, "speedup " + fmt(b.speedup) + ", full " + std::to_string(b.full_rollouts) + " vs sampled " +
                    std::to_string(b.sampled_rollouts)};
}

// ---- 2 ----------------------------------------------------------------------

SpacePtr random_space(std::mt19937_64& gen, std::size_t min_dims, std::size_t max_dims, std::size_t min_levels,
                      std::size_t max_levels) {
    const std::size_t n = min_dims + gen() % (max_dims - min_dims + 1);
    std::vector<FactorDimension> dims;
    for (std::size_t m = 0; m < n; ++m) {
        FactorDimension d{"d" + std::to_string(m), {}};
        const std::size_t l = min_levels + gen() % (max_levels - min_levels + 1);
        for (std::size_t i = 0; i < l; ++i) d.levels.push_back(std::to_string(i));
        dims.push_back(std::move(d));
    }
    return share(FactorSpace(std::move(dims)));
}

Tensor random_rates(std::mt19937_64& gen, const SpacePtr& s) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor r(s);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = u(gen);
    return r;
}

Outcome aggregated_equivalence() {
    std::mt19937_64 gen(2024);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const SpacePtr s = random_space(gen, 2, 4, 2, 6);
        const Tensor r = random_rates(gen, s);
        const Tensor fast = aggregated_tensor(r);
        const std::size_t n = s->rank();
        for (std::size_t i = 0; i < r.size(); ++i) {
            const Composition ci = s->decode(i);
            double ref = 0.0;
            for (std::size_t m = 0; m < n; ++m) {
                for (std::size_t j = 0; j < r.size(); ++j) {
                    if (s->decode(j)[m] == ci[m]) ref += r[j];
                }
            }
            ref -= static_cast<double>(n - 1) * r[i];
            worst = std::max(worst, std::abs(ref - fast[i]));
        }
    }
    return {worst <= 1e-12, "200 tensors, max abs error " + fmt(worst, 3)};
}

// ---- 3 ----------------------------------------------------------------------

// Replays a curation trace against a brute-force S and marking procedure.
bool trace_is_valid(const Tensor& r, const Dataset& d0, double tau, const CurationResult& res) {
    const FactorSpace& s = r.space();
    const std::size_t n = s.rank();
    std::vector<double> agg(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const Composition ci = s.decode(i);
        double v = 0.0;
        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t j = 0; j < r.size(); ++j)
                if (s.decode(j)[m] == ci[m]) v += r[j];
        agg[i] = v - static_cast<double>(n - 1) * r[i];
    }
    std::vector<bool> marked(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) marked[i] = r[i] > tau;
    std::set<std::size_t> support;
    for (const auto& [idx, c] : d0.counts()) support.insert(idx);
    for (const auto& step : res.trace) {
        const std::size_t sel = s.encode(step.selected);
        if (marked[sel]) return false;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (marked[i]) continue;
            // Unmarked cells before sel must be strictly worse; after sel, not better.
            if (i < sel && !(agg[i] - agg[sel] > 1e-9)) return false;
            if (i > sel && agg[i] < agg[sel] - 1e-9) return false;
        }
        marked[sel] = true;
        for (std::size_t d : support) {
            const Composition cd = s.decode(d);
            for (std::size_t v = 0; v < r.size(); ++v) {
                const Composition cv = s.decode(v);
                bool in = true;
                for (std::size_t m = 0; m < n && in; ++m) in = cv[m] == step.selected[m] || cv[m] == cd[m];
                if (in) marked[v] = true;
            }
        }
        support.insert(sel);
    }
    return std::all_of(marked.begin(), marked.end(), [](bool b) { return b; });
}

Outcome curation_correctness() {
    std::mt19937_64 gen(77);
    int valid = 0;
    std::size_t batches = 0;
    for (int t = 0; t < 100; ++t) {
        const SpacePtr s = random_space(gen, 2, 4, 2, 5);
        Tensor r = random_rates(gen, s);
        // Quantize some instances so the tie-break rule is exercised.
        if (t % 3 == 0) {
            for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::round(r[i] * 4.0) / 4.0;
        }
        const double tau = 0.3 + 0.6 * std::uniform_real_distribution<double>(0, 1)(gen);
        Dataset d(s);
        const std::size_t seeds = gen() % 4;
        for (std::size_t i = 0; i < seeds; ++i) d.add_in_place({s->decode(gen() % s->cardinality()), 1 + gen() % 9});
        const auto res = curate_expansion(r, d, tau, 1 + gen() % 50);
        valid += trace_is_valid(r, d, tau, res) ? 1 : 0;
        batches += res.batches.size();
    }
    return {valid == 100, std::to_string(valid) + "/100 traces valid, " + std::to_string(batches) + " batches"};
}

// ---- 4 ----------------------------------------------------------------------

CompositionSet span_closure(const CompositionSet& t) {
    CompositionSet closed;
    std::vector<Composition> work(t.begin(), t.end());
    while (!work.empty()) {
        const Composition x = work.back();
        work.pop_back();
        if (!closed.insert(x).second) continue;
        for (const auto& y : std::vector<Composition>(closed.begin(), closed.end())) {
            for (auto& v : hypercube_span(x, y)) {
                if (!closed.count(v)) work.push_back(std::move(v));
            }
        }
    }
    return closed;
}

Outcome closure_equivalence() {
    std::mt19937_64 gen(4096);
    int equal = 0;
    std::size_t largest = 0;
    for (int t = 0; t < 100; ++t) {
        SpacePtr s;
        do {
            s = random_space(gen, 1, 6, 1, 8);
        } while (s->cardinality() > 4096);
        CompositionSet train;
        const std::size_t n = 1 + gen() % 4;
        for (std::size_t i = 0; i < n; ++i) train.insert(s->decode(gen() % s->cardinality()));
        const auto fast = product_closure(*s, train);
        largest = std::max(largest, fast.size());
        equal += fast == span_closure(train) ? 1 : 0;
    }
    return {equal == 100, std::to_string(equal) + "/100 equal, largest closure " + std::to_string(largest)};
}

// ---- 5 ----------------------------------------------------------------------

Outcome scaling_fitter() {
    struct Row {
        const char* file;
        const char* bench;
        double alpha;
    };
    const Row rows[] = {{"scaling_pnp.csv", "O", 0.291},  {"scaling_pnp.csv", "OA", 0.315}, {"scaling_pnp.csv", "OAE", 0.101},
                        {"scaling_oc.csv", "O", 0.196},   {"scaling_oc.csv", "OA", 0.172},  {"scaling_oc.csv", "OAE", 0.087}};
    bool ok = true;
    std::string detail;
    for (const auto& row : rows) {
        const auto series = read_scaling_csv(io::read_file(std::string(FACIL_SOURCE_DIR) + "/data/" + row.file));
        for (const auto& [name, pts] : series) {
            if (name != row.bench) continue;
            const double a = fit_power_law(pts).alpha;
            ok = ok && std::abs(a - row.alpha) <= 0.02;
            detail += std::string(row.file).substr(7, 2) + "-" + name + " " + fmt(-a, 3) + " ";
        }
    }
    double synth_err = 0.0;
    double r2 = 1.0;
    for (double alpha : {0.05, 0.4, 1.0}) {
        std::vector<ScalingPoint> pts;
        for (double n : {500.0, 1000.0, 4000.0, 32000.0}) pts.push_back({n, 1.0 - 0.7 * std::pow(n, -alpha)});
        const auto f = fit_power_law(pts);
        synth_err = std::max(synth_err, std::abs(f.alpha - alpha));
        r2 = std::min(r2, f.r_squared);
    }
    ok = ok && synth_err <= 1e-9 && r2 == 1.0;
    return {ok, "slopes " + detail + "| synthetic err " + fmt(synth_err, 2)};
}

// ---- 6 ----------------------------------------------------------------------

OracleParams seeded(std::uint64_t seed) {
    OracleParams p;
    p.seed = seed;
    return p;
}

Outcome flywheel_minimality() {
    const FlywheelConfig cfg;
    const auto h = run_flywheel(preset_space("pnp_object"), seeded(7), cfg);
    const double rate = h.iterations.back().overall();
    const std::size_t support = h.final_dataset.support().size();
    return {h.converged && rate >= cfg.tau && support <= 7,
            "converged " + std::string(h.converged ? "yes" : "no") + " after " + std::to_string(h.iterations.size()) +
                " evaluations, rate " + fmt(rate, 3) + ", |f(D)| " + std::to_string(support)};
}

// ---- 7 ----------------------------------------------------------------------

Outcome data_efficiency() {
    std::vector<std::uint64_t> budgets;
    for (std::uint64_t b = 125; b <= 32000; b *= 2) budgets.push_back(b);
    const FlywheelConfig cfg;
    const double tau = cfg.tau;
    const std::vector<FactorSpace> stages{preset_space("pnp_object"), preset_space("pnp_action")};
    const auto outcomes = compare_strategies(stages, OracleParams{}, budgets, cfg, 7);
    bool ok = true;
    std::string detail;
    for (const char* bench : {"O", "OA"}) {
        const auto f = min_budget_reaching(outcomes, "facil_ratio", bench, tau);
        const auto m = min_budget_reaching(outcomes, "factors_mixture", bench, tau);
        const auto g = min_budget_reaching(outcomes, "gaussian", bench, tau);
        // Unreached budgets count as "beyond the largest budget".
        const double fb = f ? static_cast<double>(*f) : 2.0 * budgets.back();
        const double mb = m ? static_cast<double>(*m) : 2.0 * budgets.back();
        const double gb = g ? static_cast<double>(*g) : 2.0 * budgets.back();
        const std::uint64_t half = static_cast<std::uint64_t>(std::min(gb, static_cast<double>(budgets.back())) / 2);
        auto success_at = [&](const std::string& strategy) {
            double best = 0.0;
            std::uint64_t used = 0;
            for (const auto& o : outcomes) {
                if (o.strategy == strategy && o.benchmark == bench && o.budget <= half && o.budget >= used) {
                    used = o.budget;
                    best = o.success;
                }
            }
            return best;
        };
        const double lead = success_at("facil_ratio") - success_at("gaussian");
        const bool level_ok = f && fb * 3 <= mb && fb * 5 <= gb && lead >= 0.30;
        ok = ok && level_ok;
        detail += std::string(bench) + ": facil " + (f ? std::to_string(*f) : "-") + " mixture " +
                  (m ? std::to_string(*m) : "-") + " gaussian " + (g ? std::to_string(*g) : "-") + " lead@" +
                  std::to_string(half) + " " + fmt(100 * lead, 3) + "pp; ";
    }
    return {ok, detail};
}

// ---- 8 ----------------------------------------------------------------------

Outcome q1_gap() {
    const OracleParams p = seeded(7);
    const auto hs = sequential_expansion({preset_space("pnp_object"), preset_space("pnp_action")}, p, {});
    if (hs.size() != 2 || !hs[1].converged) return {false, "expansion did not converge"};
    const Dataset& d = hs[1].final_dataset;
    const auto clean = generalization_gap(p, d, *hs[1].reduced_space, d.space(), 5, 7);

    // Interaction injected on object compositions the O stage never collected.
    OracleParams broken = p;
    broken.blacklist = {{"Texture", 0, "Geometry", 1},
                        {"Texture", 1, "Geometry", 0},
                        {"Texture", 2, "Geometry", 3},
                        {"Texture", 3, "Geometry", 2}};
    const auto support = hs[0].final_dataset.support();
    for (const auto& b : broken.blacklist) {
        if (std::find(support.begin(), support.end(), Composition{b.level_a, b.level_b}) != support.end()) {
            return {false, "injected pair is inside f(D_O)"};
        }
    }
    const auto injected = generalization_gap(broken, d, *hs[1].reduced_space, d.space(), 5, 7);
    return {std::abs(clean.gap) <= 0.05 && injected.gap > 0.1,
            "clean gap " + fmt(clean.gap, 3) + " (reduced " + fmt(clean.rate_reduced, 3) + ", full " +
                fmt(clean.rate_full, 3) + "), injected gap " + fmt(injected.gap, 3)};
}

// ---- 9 ----------------------------------------------------------------------

Outcome compositionality() {
    const SpacePtr light = share(FactorSpace({{"Position", {"Left-side", "Right-side"}},
                                              {"Direction", {"Toward-left", "Toward-right"}}}));
    OracleParams p;
    p.blacklist = {{"Position", 0, "Direction", 0}, {"Position", 1, "Direction", 1}};
    Dataset dl(light);
    dl.add_in_place({{1, 0}, 200});
    dl.add_in_place({{0, 1}, 200});
    const auto rl = compositionality_check({{1, 0}, {0, 1}}, expected_rates(p, dl, exact_benchmark(light)), 0.8);

    const SpacePtr shadow =
        share(FactorSpace({{"X", {"Left", "Center", "Right"}}, {"Y", {"Top", "Middle", "Bottom"}}}));
    Dataset ds(shadow);
    ds.add_in_place({{2, 2}, 200});
    ds.add_in_place({{0, 1}, 200});
    const auto rs =
        compositionality_check({{2, 2}, {0, 1}}, expected_rates(OracleParams{}, ds, exact_benchmark(shadow)), 0.8);
    const bool ok = rl.violations == std::vector<Composition>{{0, 0}, {1, 1}} && rs.violations.empty() &&
                    rs.predicted_size == 4;
    return {ok, "light grid " + std::to_string(rl.violations.size()) + " violations, shadow grid " +
                    std::to_string(rs.violations.size())};
}

// ---- 10 ---------------------------------------------------------------------

int invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "facil");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
    std::set<fs::path> la;
    std::set<fs::path> lb;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) la.insert(fs::relative(e.path(), a));
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) lb.insert(fs::relative(e.path(), b));
    if (la != lb || la.empty()) return false;
    for (const auto& f : la) {
        if (io::read_file(a / f) != io::read_file(b / f)) return false;
    }
    files += la.size();
    return true;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "facil_acceptance_determinism";
    fs::remove_all(root);
    const std::string ex = std::string(FACIL_SOURCE_DIR) + "/docs/examples/";
    io::write_file(root / "compare.json",
                   R"({"space":"oc_object","stages":["oc_object","oc_action"],"budgets":[250,500,1000,2000],"seed":7})");
    const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
        {"run", {"run", "--config", ex + "minimal.json"}},
        {"expand", {"expand", "--config", ex + "expand_oc.json"}},
        {"compare", {"compare", "--config", (root / "compare.json").string()}},
        {"check-comp", {"check-comp", "--config", ex + "check_light.json", "--sampled"}},
        {"fit", {"fit", "--input", std::string(FACIL_SOURCE_DIR) + "/data/scaling_pnp.csv"}},
        {"budget", {"budget", "--grid", "24", "--base", "16", "--slots", "7", "--k", "5"}},
    };
    bool ok = true;
    std::size_t files = 0;
    std::string failed;
    for (const auto& [name, args] : commands) {
        std::vector<fs::path> dirs;
        int i = 0;
        for (const char* threads : {"1", "1", "4"}) {
            const fs::path dir = root / (name + "_" + std::to_string(i++));
            auto a = args;
            a.insert(a.end(), {"--out", dir.string()});
            if (name != "fit" && name != "budget") a.insert(a.end(), {"--threads", threads});
            if (invoke(a) > 1) ok = false;
            dirs.push_back(dir);
        }
        const bool same = same_tree(dirs[0], dirs[1], files) && same_tree(dirs[0], dirs[2], files);
        if (!same) failed += name + " ";
        ok = ok && same;
    }
    fs::remove_all(root);
    return {ok, failed.empty() ? "6 commands, " + std::to_string(files) + " file comparisons identical"
                               : "differences in: " + failed};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> criteria = {
        {1, "budget arithmetic", budget_arithmetic},
        {2, "aggregated tensor equivalence", aggregated_equivalence},
        {3, "curation loop correctness", curation_correctness},
        {4, "closure equivalence", closure_equivalence},
        {5, "scaling fitter", scaling_fitter},
        {6, "flywheel minimality", flywheel_minimality},
        {7, "data-efficiency ordering", data_efficiency},
        {8, "reduced/full gap", q1_gap},
        {9, "compositionality checker", compositionality},
        {10, "determinism", determinism},
    };
    int unexpected = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        const bool known = kKnownFailing.count(c.id) > 0;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << " [" << fmt(ms, 4) << " ms] "
                  << o.detail << (!o.pass && known ? " (known failure, see README)" : "") << std::endl;
        if (!o.pass && !known) ++unexpected;
    }
    return unexpected == 0 ? 0 : 1;
}
