// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "facil/flywheel.hpp"
#include "facil/orbit.hpp"

namespace facil {

// ---- scaling-law fit -------------------------------------------------------

struct ScalingPoint {
    double demos = 0.0;
    double success = 0.0;
};

/// Failure rate L = 1 - success modelled as L = c * N^(-alpha).
struct ScalingFit {
    double alpha = 0.0;
    double log_c = 0.0;
    double r_squared = 0.0;
    std::size_t n_points = 0;
    std::vector<std::string> diagnostics;  ///< one line per rejected point

    /// Slope of ln L against ln N, i.e. -alpha.
    [[nodiscard]] double exponent() const noexcept { return -alpha; }
};

/// Ordinary least squares of ln(1 - success) on ln(N), with intercept.
/// Points with zero failure are dropped with a diagnostic.
inline ScalingFit fit_power_law(const std::vector<ScalingPoint>& points) {
    ScalingFit fit;
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& p : points) {
        if (!(p.demos > 0.0)) throw Error("scaling point has non-positive demo count");
        if (!(p.success >= 0.0 && p.success <= 1.0)) throw Error("scaling point success must lie in [0, 1]");
        if (p.success >= 1.0) {
            fit.diagnostics.push_back("rejected N=" + io::format_double(p.demos) + ": zero failure rate");
            continue;
        }
        xs.push_back(std::log(p.demos));
        ys.push_back(std::log(1.0 - p.success));
    }
    if (xs.size() < 2) throw Error("power-law fit needs at least two usable points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw Error("power-law fit needs at least two distinct demo counts");
    const double slope = sxy / sxx;
    fit.alpha = -slope;
    fit.log_c = my - slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (fit.log_c + slope * xs[i]);
        ss_res += r * r;
    }
    fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    fit.n_points = xs.size();
    return fit;
}

/// Rows of a "benchmark,N,success" CSV grouped by benchmark, in first-seen order.
inline std::vector<std::pair<std::string, std::vector<ScalingPoint>>> read_scaling_csv(const std::string& text) {
    std::istringstream in(text);
    const auto lines = io::data_lines(in);
    if (lines.empty() || lines.front() != "benchmark,N,success") {
        throw Error("scaling input must start with header 'benchmark,N,success'");
    }
    std::vector<std::pair<std::string, std::vector<ScalingPoint>>> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cols = io::split(lines[i]);
        if (cols.size() != 3) throw Error("scaling row " + std::to_string(i) + " needs three columns");
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& g) { return g.first == cols[0]; });
        if (it == out.end()) {
            out.emplace_back(cols[0], std::vector<ScalingPoint>{});
            it = std::prev(out.end());
        }
        it->second.push_back({io::parse_double(cols[1]), io::parse_double(cols[2])});
    }
    return out;
}

inline std::string scaling_to_csv(const std::vector<std::pair<std::string, ScalingFit>>& fits) {
    std::string out = "benchmark,alpha,r2,points\n";
    for (const auto& [name, f] : fits) {
        out += name + ',' + io::format_double(f.alpha) + ',' + io::format_double(f.r_squared) + ',' +
               std::to_string(f.n_points) + '\n';
    }
    return out;
}

// ---- baseline samplers -----------------------------------------------------

enum class BaselineKind { gaussian, mixture };

struct GaussianOptions {
    std::vector<std::size_t> mode;  ///< empty -> index 0 in every dimension
    double sigma = 1.0;             ///< per-dimension standard deviation, index units
};

/// Probability of each composition under a baseline strategy.
inline std::vector<double> baseline_weights(BaselineKind kind, const FactorSpace& space, const GaussianOptions& opt) {
    std::vector<double> w(space.cardinality(), 1.0);
    if (kind == BaselineKind::mixture) return w;
    if (!(opt.sigma > 0.0)) throw Error("gaussian sigma must be > 0");
    std::vector<std::size_t> mode = opt.mode;
    if (mode.empty()) mode.assign(space.rank(), 0);
    if (!space.contains(Composition(mode))) throw Error("gaussian mode is outside the space");
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const Composition c = space.decode(i);
        double d2 = 0.0;
        for (std::size_t m = 0; m < c.size(); ++m) {
            const double d = static_cast<double>(c[m]) - static_cast<double>(mode[m]);
            d2 += d * d;
        }
        w[i] = std::exp(-d2 / (2.0 * opt.sigma * opt.sigma));
        total += w[i];
    }
    for (double& x : w) x /= total;
    return w;
}

/// N demos drawn i.i.d. from the strategy's distribution. Draw i only depends
/// on (seed, i), so smaller budgets are prefixes of larger ones.
inline Dataset baseline_sampler(BaselineKind kind, SpacePtr space, std::uint64_t n, const GaussianOptions& opt,
                                std::uint64_t seed) {
    const auto w = baseline_weights(kind, *space, opt);
    std::vector<double> cdf(w.size());
    std::partial_sum(w.begin(), w.end(), cdf.begin());
    const std::uint64_t stream = kind == BaselineKind::gaussian ? 1 : 2;
    std::vector<std::uint64_t> counts(w.size(), 0);
    for (std::uint64_t i = 0; i < n; ++i) {
        const double u = rng::uniform(rng::key({seed, rng::kSamplerSalt, stream, i})) * cdf.back();
        std::size_t c = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        ++counts[std::min(c, w.size() - 1)];
    }
    Dataset out(space);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] > 0) out.add_in_place({space->decode(i), counts[i]});
    }
    return out;
}

// ---- strategy comparison ---------------------------------------------------

inline const std::vector<std::string>& strategy_names() {
    static const std::vector<std::string> names = {"facil_ratio", "factors_mixture", "gaussian"};
    return names;
}

struct StrategyOutcome {
    std::string strategy;
    std::string benchmark;
    std::uint64_t budget = 0;
    double success = 0.0;
};

struct CompareOptions {
    std::vector<std::string> strategies = strategy_names();
    GaussianOptions gaussian;
};

/// Largest snapshot of a flywheel run that fits in `budget` demos: the
/// dataset of the last completed iteration whose cumulative demos <= budget.
inline Dataset truncate_history(const RunHistory& h, std::uint64_t budget) {
    Dataset best(h.final_dataset.space_ptr());
    for (const auto& it : h.iterations) {
        if (it.dataset.total() <= budget && it.dataset.total() >= best.total()) best = it.dataset;
    }
    if (!h.converged && h.final_dataset.total() <= budget) best = h.final_dataset;
    return best;
}

/// For every benchmark level (O, OA, OAE, ...), strategy and budget: build the
/// training set and evaluate it exactly on the full product grid of that level.
inline std::vector<StrategyOutcome> compare_strategies(const std::vector<FactorSpace>& stages, OracleParams params,
                                                       const std::vector<std::uint64_t>& budgets,
                                                       const FlywheelConfig& cfg, std::uint64_t seed,
                                                       const CompareOptions& opt = {}) {
    if (stages.empty()) throw Error("compare_strategies needs at least one stage");
    if (!std::is_sorted(budgets.begin(), budgets.end())) throw Error("budgets must be sorted ascending");
    for (const auto& s : opt.strategies) {
        if (std::find(strategy_names().begin(), strategy_names().end(), s) == strategy_names().end()) {
            throw ConfigError("strategies", "unknown strategy '" + s + "'");
        }
    }
    params.seed = seed;
    const bool want_facil =
        std::find(opt.strategies.begin(), opt.strategies.end(), "facil_ratio") != opt.strategies.end();
    std::vector<RunHistory> histories;
    if (want_facil) histories = sequential_expansion(stages, params, cfg);

    std::vector<StrategyOutcome> out;
    SpacePtr full = share(stages.front());
    for (std::size_t level = 0; level < stages.size(); ++level) {
        if (level > 0) full = share(product_space(*full, stages[level]));
        const std::string bench_label = stage_label(level);
        const Benchmark bench = exact_benchmark(full);
        for (std::size_t si = 0; si < opt.strategies.size(); ++si) {
            const std::string& strategy = opt.strategies[si];
            for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
                Dataset data(full);
                if (strategy == "facil_ratio") {
                    if (level < histories.size()) data = truncate_history(histories[level], budgets[bi]);
                } else {
                    const auto kind = strategy == "gaussian" ? BaselineKind::gaussian : BaselineKind::mixture;
                    GaussianOptions g = opt.gaussian;
                    if (kind == BaselineKind::gaussian && !g.mode.empty() && g.mode.size() != full->rank()) {
                        g.mode.resize(full->rank(), 0);
                    }
                    data = baseline_sampler(kind, full, budgets[bi], g, seed + level);
                }
                const std::uint64_t tag = 50 * kStageTagStride + (level * 16 + si) * 4096 + bi;
                const auto report = simulate_evaluation(params, data, bench, cfg.k, tag, cfg.threads);
                out.push_back({strategy, bench_label, budgets[bi], report.overall});
            }
        }
    }
    return out;
}

/// Smallest budget at which `strategy` reaches `tau` on `benchmark`.
inline std::optional<std::uint64_t> min_budget_reaching(const std::vector<StrategyOutcome>& outcomes,
                                                        const std::string& strategy, const std::string& benchmark,
                                                        double tau) {
    std::optional<std::uint64_t> best;
    for (const auto& o : outcomes) {
        if (o.strategy == strategy && o.benchmark == benchmark && o.success >= tau && (!best || o.budget < *best)) {
            best = o.budget;
        }
    }
    return best;
}

inline std::string comparison_to_csv(const std::vector<StrategyOutcome>& outcomes) {
    std::string out = "strategy,benchmark,budget,success\n";
    for (const auto& o : outcomes) {
        out += o.strategy + ',' + o.benchmark + ',' + std::to_string(o.budget) + ',' + io::format_double(o.success) + '\n';
    }
    return out;
}

// ---- generalization gap ----------------------------------------------------

struct GapResult {
    double rate_reduced = 0.0;
    double rate_full = 0.0;
    double gap = 0.0;  ///< rate_reduced - rate_full
};

/// Evaluates one product-space dataset on the reduced grid and on the full grid.
inline GapResult generalization_gap(OracleParams params, const Dataset& data, const FactorSpace& reduced,
                                    const FactorSpace& full, std::uint32_t k, std::uint64_t seed,
                                    unsigned threads = 1) {
    if (!(data.space() == full)) throw Error("dataset does not live in the full product space");
    params.seed = seed;
    const auto reduced_report =
        simulate_evaluation(params, data, reduced_benchmark(share(reduced), full), k, 60 * kStageTagStride, threads);
    const auto full_report =
        simulate_evaluation(params, data, exact_benchmark(data.space_ptr()), k, 61 * kStageTagStride, threads);
    return {reduced_report.overall, full_report.overall, reduced_report.overall - full_report.overall};
}

// ---- compositionality check -----------------------------------------------

struct CompositionalityReport {
    std::size_t predicted_size = 0;
    std::size_t empirical_size = 0;
    std::vector<Composition> violations;         ///< predicted \ empirical, linear order
    std::vector<double> violation_values;        ///< rate (or probability) at each violation
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_violations;  ///< (dim a, dim b), a < b
};

/// Compares the product closure of the training support with the empirical
/// orbit. A violation counts against dimension pair (a, b) when its (a, b)
/// level pair never co-occurs in the training set.
inline CompositionalityReport compositionality_check(const CompositionSet& train, const Tensor& rates, double tau,
                                                     Threshold mode = Threshold::strict) {
    if (train.empty()) throw Error("compositionality check needs a non-empty training set");
    const FactorSpace& space = rates.space();
    const CompositionSet predicted = product_closure(space, train);
    const CompositionSet empirical = empirical_orbit(rates, tau, mode);
    CompositionalityReport rep;
    rep.predicted_size = predicted.size();
    rep.empirical_size = empirical.size();
    for (const auto& c : predicted) {
        if (empirical.count(c)) continue;
        rep.violations.push_back(c);
        rep.violation_values.push_back(rates.at(c));
        for (std::size_t a = 0; a < space.rank(); ++a) {
            for (std::size_t b = a + 1; b < space.rank(); ++b) {
                const bool seen = std::any_of(train.begin(), train.end(),
                                              [&](const Composition& t) { return t[a] == c[a] && t[b] == c[b]; });
                if (!seen) ++rep.pair_violations[{a, b}];
            }
        }
    }
    return rep;
}

inline CompositionalityReport compositionality_check(const CompositionSet& train, const EvaluationReport& report,
                                                     double tau, Threshold mode = Threshold::strict) {
    return compositionality_check(train, report.rates, tau, mode);
}

inline std::string violations_to_csv(const CompositionalityReport& rep) {
    std::string out = "composition_indices,predicted_p_or_rate\n";
    for (std::size_t i = 0; i < rep.violations.size(); ++i) {
        out += rep.violations[i].to_string() + ',' + io::format_double(rep.violation_values[i]) + '\n';
    }
    return out;
}

}  // namespace facil
