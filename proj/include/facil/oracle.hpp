// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

// Synthetic success-rate oracle standing in for a trained policy. The
// success probability at a composition c saturates in the evidence E:
//
//   p(c) = min(p_max, 1 - exp(-E / kappa(c)))
//   E    = direct(c) + transfer(c)
//   transfer(c) = beta * min_m marginal_m(c[m]), or 0 when c holds a
//                 blacklisted level pair
//   kappa(c)    = kappa0 * prod_m w_m(c[m])
//
// Rollouts are Bernoulli draws from counter-keyed streams, see rng.hpp.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "facil/curation.hpp"
#include "facil/dataset.hpp"
#include "facil/rng.hpp"

namespace facil {

/// A pair of (dimension, level) assignments that breaks compositional
/// transfer when they co-occur. Dimensions are referenced by name so a single
/// parameter set applies to every product space containing them.
struct LevelPair {
    std::string dim_a;
    std::size_t level_a = 0;
    std::string dim_b;
    std::size_t level_b = 0;

    bool operator==(const LevelPair&) const = default;
};

struct OracleParams {
    double kappa0 = 50.0;
    double beta = 2.0;
    double p_max = 0.97;
    /// Multiplier for the last level of every dimension (with >= 2 levels)
    /// that has no explicit entry in `level_weights`.
    double hard_level_weight = 2.0;
    std::map<std::string, std::vector<double>> level_weights;
    std::vector<LevelPair> blacklist;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(kappa0 > 0.0)) throw ConfigError("oracle.kappa0", "must be > 0");
        if (!(beta >= 0.0)) throw ConfigError("oracle.beta", "must be >= 0");
        if (!(p_max > 0.0 && p_max <= 1.0)) throw ConfigError("oracle.p_max", "must lie in (0, 1]");
        if (!(hard_level_weight >= 1.0)) throw ConfigError("oracle.hard_level_weight", "must be >= 1");
        for (const auto& [name, w] : level_weights) {
            for (double x : w) {
                if (!(x >= 1.0)) throw ConfigError("oracle.level_weights." + name, "weights must be >= 1");
            }
        }
        for (const auto& p : blacklist) {
            if (p.dim_a == p.dim_b) throw ConfigError("oracle.blacklist", "pair must reference distinct dimensions");
        }
    }

    bool operator==(const OracleParams&) const = default;
};

/// Params bound to one dataset: marginals, weights and blacklist are resolved
/// once so repeated probability queries are cheap.
class SuccessModel {
public:
    SuccessModel(const OracleParams& params, const Dataset& data) : params_(params), data_(data) {
        params_.validate();
        const FactorSpace& space = data_.space();
        marginals_.resize(space.rank());
        weights_.resize(space.rank());
        for (std::size_t m = 0; m < space.rank(); ++m) {
            marginals_[m] = data_.marginal_counts(m);
            const auto& dim = space.dim(m);
            if (auto it = params_.level_weights.find(dim.name); it != params_.level_weights.end()) {
                if (it->second.size() != dim.size()) {
                    throw ConfigError("oracle.level_weights." + dim.name, "needs one weight per level");
                }
                weights_[m] = it->second;
            } else {
                weights_[m].assign(dim.size(), 1.0);
                if (dim.size() >= 2) weights_[m].back() = params_.hard_level_weight;
            }
        }
        for (const auto& p : params_.blacklist) {
            const auto a = space.find_dimension(p.dim_a);
            const auto b = space.find_dimension(p.dim_b);
            if (!a || !b) continue;  // pair lives outside this space
            if (p.level_a >= space.extent(*a) || p.level_b >= space.extent(*b)) {
                throw ConfigError("oracle.blacklist", "level index out of range for " + p.dim_a + "/" + p.dim_b);
            }
            blacklist_.push_back({*a, p.level_a, *b, p.level_b});
        }
    }

    [[nodiscard]] const FactorSpace& space() const { return data_.space(); }
    [[nodiscard]] const OracleParams& params() const noexcept { return params_; }

    [[nodiscard]] double kappa(const Composition& c) const {
        double k = params_.kappa0;
        for (std::size_t m = 0; m < c.size(); ++m) k *= weights_[m][c[m]];
        return k;
    }

    [[nodiscard]] bool blacklisted(const Composition& c) const {
        return std::any_of(blacklist_.begin(), blacklist_.end(),
                           [&](const Resolved& r) { return c[r.a] == r.level_a && c[r.b] == r.level_b; });
    }

    [[nodiscard]] double transfer(const Composition& c) const {
        if (blacklisted(c)) return 0.0;
        std::uint64_t weakest = std::numeric_limits<std::uint64_t>::max();
        for (std::size_t m = 0; m < c.size(); ++m) weakest = std::min(weakest, marginals_[m][c[m]]);
        return params_.beta * static_cast<double>(weakest);
    }

    [[nodiscard]] double probability(const Composition& c) const {
        if (!space().contains(c)) throw Error("composition " + c.to_string() + " is outside the oracle's space");
        const double evidence = static_cast<double>(data_.count(c)) + transfer(c);
        return std::min(params_.p_max, 1.0 - std::exp(-evidence / kappa(c)));
    }

    [[nodiscard]] double probability_at(std::size_t index) const { return probability(space().decode(index)); }

private:
    struct Resolved {
        std::size_t a;
        std::size_t level_a;
        std::size_t b;
        std::size_t level_b;
    };

    OracleParams params_;
    Dataset data_;
    std::vector<std::vector<std::uint64_t>> marginals_;
    std::vector<std::vector<double>> weights_;
    std::vector<Resolved> blacklist_;
};

inline double success_prob(const OracleParams& params, const Dataset& data, const Composition& c) {
    return SuccessModel(params, data).probability(c);
}

/// Evaluation grid plus, for every grid cell, the dataset-space compositions a
/// rollout may land on. With several options a rollout first draws one from
/// `option_weights` (the inherited slot ratios).
struct Benchmark {
    SpacePtr grid;
    std::size_t options = 1;
    std::vector<std::size_t> targets;   ///< targets[cell * options + option], linear in the data space
    std::vector<double> option_weights;  ///< one per option, empty when options == 1
};

/// Every composition of `space`, evaluated as itself.
inline Benchmark exact_benchmark(SpacePtr space) {
    Benchmark b{space, 1, {}, {}};
    b.targets.resize(space->cardinality());
    std::iota(b.targets.begin(), b.targets.end(), std::size_t{0});
    return b;
}

/// Every (slot, new-factor) cell of a reduced product, mapped to
/// concat(slot composition, new-factor composition) in `data_space`.
inline Benchmark reduced_benchmark(SpacePtr reduced, const FactorSpace& data_space) {
    const auto slots = slot_compositions(*reduced);
    Benchmark b{reduced, 1, {}, {}};
    b.targets.reserve(reduced->cardinality());
    for (std::size_t i = 0; i < reduced->cardinality(); ++i) {
        const Composition rc = reduced->decode(i);
        const Composition tail(std::vector<std::size_t>(rc.begin() + 1, rc.end()));
        b.targets.push_back(data_space.encode(concat(slots[rc[0]], tail)));
    }
    return b;
}

/// Only the new-factor grid; the slot of each rollout is sampled from the
/// frozen slot ratios.
inline Benchmark ratio_benchmark(const FactorSpace& reduced, const FactorSpace& data_space) {
    const auto slots = slot_compositions(reduced);
    Benchmark b{share(next_factor_space(reduced)), slots.size(), {}, reduced.slot_ratios()};
    b.targets.reserve(b.grid->cardinality() * slots.size());
    for (std::size_t i = 0; i < b.grid->cardinality(); ++i) {
        const Composition a = b.grid->decode(i);
        for (const auto& s : slots) b.targets.push_back(data_space.encode(concat(s, a)));
    }
    return b;
}

struct EvaluationReport {
    Tensor rates;
    std::vector<std::uint32_t> successes;
    std::uint32_t rollouts_per_composition = 0;
    std::uint64_t total_rollouts = 0;
    double overall = 0.0;

    [[nodiscard]] const FactorSpace& space() const { return rates.space(); }
};

/// k Bernoulli rollouts per grid cell. Draw (cell, rollout) uses the key
/// (seed, iteration_tag, cell, rollout); `threads` only changes scheduling.
inline EvaluationReport simulate_evaluation(const OracleParams& params, const Dataset& data, const Benchmark& bench,
                                            std::uint32_t k, std::uint64_t iteration_tag, unsigned threads = 1) {
    if (k == 0) throw Error("rollouts per composition must be at least 1");
    const SuccessModel model(params, data);
    const std::size_t cells = bench.grid->cardinality();
    if (bench.targets.size() != cells * bench.options) throw Error("benchmark target table has the wrong size");

    std::vector<double> option_cdf;
    if (bench.options > 1) {
        option_cdf.resize(bench.options);
        std::partial_sum(bench.option_weights.begin(), bench.option_weights.end(), option_cdf.begin());
    }

    std::vector<double> target_p(bench.targets.size());
    std::vector<std::uint32_t> successes(cells, 0);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin * bench.options; t < end * bench.options; ++t) {
            target_p[t] = model.probability_at(bench.targets[t]);
        }
        for (std::size_t i = begin; i < end; ++i) {
            std::uint32_t hits = 0;
            for (std::uint32_t r = 0; r < k; ++r) {
                std::size_t option = 0;
                if (bench.options > 1) {
                    const double u = rng::uniform(rng::key({params.seed, iteration_tag, i, r, rng::kSlotSalt}));
                    const double scaled = u * option_cdf.back();
                    option = static_cast<std::size_t>(std::upper_bound(option_cdf.begin(), option_cdf.end(), scaled) -
                                                      option_cdf.begin());
                    option = std::min(option, bench.options - 1);
                }
                const double p = target_p[i * bench.options + option];
                if (rng::uniform(rng::key({params.seed, iteration_tag, i, r, rng::kRolloutSalt})) < p) ++hits;
            }
            successes[i] = hits;
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells)));
    if (workers == 1) {
        work(0, cells);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (cells + workers - 1) / workers;
        for (std::size_t begin = 0; begin < cells; begin += chunk) {
            pool.emplace_back(work, begin, std::min(cells, begin + chunk));
        }
    }

    EvaluationReport report{Tensor(bench.grid), std::move(successes), k, static_cast<std::uint64_t>(cells) * k, 0.0};
    for (std::size_t i = 0; i < cells; ++i) report.rates[i] = static_cast<double>(report.successes[i]) / k;
    report.overall = overall_rate(report.rates);
    return report;
}

inline EvaluationReport simulate_evaluation(const OracleParams& params, const Dataset& data,
                                            const SpacePtr& bench_space, std::uint32_t k, std::uint64_t iteration_tag,
                                            unsigned threads = 1) {
    if (!same_space(bench_space, data.space_ptr())) {
        throw Error("benchmark space differs from the dataset space; use a mapped Benchmark");
    }
    return simulate_evaluation(params, data, exact_benchmark(data.space_ptr()), k, iteration_tag, threads);
}

/// Evaluates only the new-factor grid of `reduced`, drawing each rollout's
/// inherited slot from the slot ratios. `data` lives in the full product of
/// the slot compositions' space and the new-factor grid.
inline EvaluationReport ratio_guided_evaluation(const OracleParams& params, const Dataset& data,
                                                const FactorSpace& reduced, std::uint32_t k,
                                                std::uint64_t iteration_tag, unsigned threads = 1) {
    if (!reduced.has_slot_ratios()) throw Error("reduced space is missing slot ratios");
    return simulate_evaluation(params, data, ratio_benchmark(reduced, data.space()), k, iteration_tag, threads);
}

/// Noise-free counterpart of an evaluation: the expected success rate of each
/// grid cell (option probabilities averaged by their weights).
inline Tensor expected_rates(const OracleParams& params, const Dataset& data, const Benchmark& bench) {
    const SuccessModel model(params, data);
    Tensor out(bench.grid);
    double wsum = 0.0;
    for (double w : bench.option_weights) wsum += w;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (bench.options == 1) {
            out[i] = model.probability_at(bench.targets[i]);
            continue;
        }
        double p = 0.0;
        for (std::size_t o = 0; o < bench.options; ++o) {
            p += bench.option_weights[o] / wsum * model.probability_at(bench.targets[i * bench.options + o]);
        }
        out[i] = p;
    }
    return out;
}

inline std::string report_to_csv(const EvaluationReport& report) {
    std::string out = "composition_indices,successes,k,rate\n";
    for (std::size_t i = 0; i < report.rates.size(); ++i) {
        out += report.space().decode(i).to_string() + ',' + std::to_string(report.successes[i]) + ',' +
               std::to_string(report.rollouts_per_composition) + ',' + io::format_double(report.rates[i]) + '\n';
    }
    return out;
}

inline void to_json(json& j, const LevelPair& p) {
    j = {{"dim_a", p.dim_a}, {"level_a", p.level_a}, {"dim_b", p.dim_b}, {"level_b", p.level_b}};
}

inline void from_json(const json& j, LevelPair& p) {
    p.dim_a = j.at("dim_a").get<std::string>();
    p.level_a = j.at("level_a").get<std::size_t>();
    p.dim_b = j.at("dim_b").get<std::string>();
    p.level_b = j.at("level_b").get<std::size_t>();
}

inline void to_json(json& j, const OracleParams& p) {
    j = {{"kappa0", p.kappa0},
         {"beta", p.beta},
         {"p_max", p.p_max},
         {"hard_level_weight", p.hard_level_weight},
         {"level_weights", p.level_weights},
         {"blacklist", p.blacklist},
         {"seed", p.seed}};
}

inline void from_json(const json& j, OracleParams& p) {
    p = OracleParams{};
    if (j.contains("kappa0")) p.kappa0 = j.at("kappa0").get<double>();
    if (j.contains("beta")) p.beta = j.at("beta").get<double>();
    if (j.contains("p_max")) p.p_max = j.at("p_max").get<double>();
    if (j.contains("hard_level_weight")) p.hard_level_weight = j.at("hard_level_weight").get<double>();
    if (j.contains("level_weights")) p.level_weights = j.at("level_weights").get<std::map<std::string, std::vector<double>>>();
    if (j.contains("blacklist")) p.blacklist = j.at("blacklist").get<std::vector<LevelPair>>();
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
}

}  // namespace facil
