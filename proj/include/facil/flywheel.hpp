// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "facil/curation.hpp"
#include "facil/oracle.hpp"

namespace facil {

enum class EvaluationMode { exact, ratio_guided };

inline std::string to_string(EvaluationMode m) { return m == EvaluationMode::exact ? "exact" : "ratio_guided"; }

inline EvaluationMode parse_evaluation_mode(std::string_view s) {
    if (s == "exact") return EvaluationMode::exact;
    if (s == "ratio_guided") return EvaluationMode::ratio_guided;
    throw ConfigError("flywheel.evaluation_mode", "expected 'exact' or 'ratio_guided'");
}

struct FlywheelConfig {
    double tau = 0.8;
    std::uint64_t unit_size = 50;
    std::uint32_t k = 5;
    std::size_t max_iterations = 20;
    EvaluationMode evaluation_mode = EvaluationMode::ratio_guided;
    /// Replaces the hyper-diagonal seed set of the first stage when non-empty.
    std::vector<Composition> initial_compositions;
    Threshold threshold = Threshold::strict;
    unsigned threads = 1;

    void validate() const {
        if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("flywheel.tau", "must lie in (0, 1)");
        if (unit_size < 1) throw ConfigError("flywheel.unit_size", "must be >= 1");
        if (k < 1) throw ConfigError("flywheel.k", "must be >= 1");
        if (max_iterations < 1) throw ConfigError("flywheel.max_iterations", "must be >= 1");
        if (threads < 1) throw ConfigError("threads", "must be >= 1");
    }

    bool operator==(const FlywheelConfig&) const = default;
};

/// Splits `total` demos over slots proportionally to `ratios` using the
/// largest-remainder method (ties go to the lower slot index).
inline std::vector<std::uint64_t> apportion(std::uint64_t total, const std::vector<double>& ratios) {
    std::vector<std::uint64_t> out(ratios.size(), 0);
    if (ratios.empty()) return out;
    double sum = 0.0;
    for (double r : ratios) sum += r;
    std::vector<std::pair<double, std::size_t>> remainders;
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const double quota = static_cast<double>(total) * ratios[i] / sum;
        out[i] = static_cast<std::uint64_t>(std::floor(quota));
        assigned += out[i];
        remainders.emplace_back(quota - static_cast<double>(out[i]), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t j = 0; assigned < total; ++j, ++assigned) ++out[remainders[j % remainders.size()].second];
    return out;
}

/// How one flywheel stage relates the space where demonstrations live to the
/// grid that is evaluated and curated.
class StagePlan {
public:
    enum class Kind { plain, reduced_exact, reduced_ratio };

    static StagePlan plain(SpacePtr space) {
        StagePlan p;
        p.kind_ = Kind::plain;
        p.data_space_ = space;
        p.grid_ = space;
        p.bench_ = exact_benchmark(space);
        return p;
    }

    /// `reduced` = slot x new factors; demonstrations live in
    /// base-space x new factors.
    static StagePlan reduced(const FactorSpace& reduced, const FactorSpace& base_space, EvaluationMode mode) {
        StagePlan p;
        p.reduced_ = share(reduced);
        p.slots_ = slot_compositions(reduced);
        p.ratios_ = reduced.slot_ratios();
        p.next_ = share(next_factor_space(reduced));
        for (const auto& s : p.slots_) {
            if (!base_space.contains(s)) throw Error("slot composition " + s.to_string() + " is outside the base space");
        }
        p.data_space_ = share(product_space(base_space, *p.next_));
        if (mode == EvaluationMode::exact) {
            p.kind_ = Kind::reduced_exact;
            p.grid_ = p.reduced_;
            p.bench_ = reduced_benchmark(p.reduced_, *p.data_space_);
        } else {
            p.kind_ = Kind::reduced_ratio;
            p.bench_ = ratio_benchmark(reduced, *p.data_space_);
            p.grid_ = p.bench_.grid;
        }
        return p;
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] const SpacePtr& data_space() const noexcept { return data_space_; }
    [[nodiscard]] const SpacePtr& grid() const noexcept { return grid_; }
    [[nodiscard]] const SpacePtr& reduced_space() const noexcept { return reduced_; }
    [[nodiscard]] const Benchmark& benchmark() const noexcept { return bench_; }

    /// Grid on which initial compositions are chosen: the plain space, or the
    /// new-factor grid of a reduced product.
    [[nodiscard]] const SpacePtr& seed_grid() const noexcept { return kind_ == Kind::plain ? grid_ : next_; }

    /// Data-space dataset viewed on the curation grid.
    [[nodiscard]] Dataset project(const Dataset& data) const {
        if (kind_ == Kind::plain) return data;
        Dataset out(grid_);
        const std::size_t base_rank = data_space_->rank() - next_->rank();
        for (const auto& [idx, n] : data.counts()) {
            const Composition c = data_space_->decode(idx);
            const Composition head(std::vector<std::size_t>(c.begin(), c.begin() + base_rank));
            const Composition tail(std::vector<std::size_t>(c.begin() + base_rank, c.end()));
            if (kind_ == Kind::reduced_ratio) {
                out.add_in_place({tail, n});
                continue;
            }
            for (std::size_t s = 0; s < slots_.size(); ++s) {
                if (slots_[s] == head) {
                    out.add_in_place({concat(Composition{s}, tail), n});
                    break;
                }
            }
        }
        return out;
    }

    /// A grid batch expressed as data-space batches.
    [[nodiscard]] std::vector<DemoBatch> lift(const DemoBatch& batch) const {
        switch (kind_) {
            case Kind::plain:
                return {batch};
            case Kind::reduced_exact: {
                const Composition& c = batch.composition;
                const Composition tail(std::vector<std::size_t>(c.begin() + 1, c.end()));
                return {{concat(slots_.at(c[0]), tail), batch.count}};
            }
            case Kind::reduced_ratio:
                break;
        }
        return lift_seed(batch);
    }

    /// A seed-grid batch (new factors only for reduced products) spread over
    /// the slots by largest remainder.
    [[nodiscard]] std::vector<DemoBatch> lift_seed(const DemoBatch& batch) const {
        if (kind_ == Kind::plain) return {batch};
        std::vector<DemoBatch> out;
        const auto shares = apportion(batch.count, ratios_);
        for (std::size_t s = 0; s < slots_.size(); ++s) {
            if (shares[s] > 0) out.push_back({concat(slots_[s], batch.composition), shares[s]});
        }
        return out;
    }

private:
    Kind kind_ = Kind::plain;
    SpacePtr data_space_;
    SpacePtr grid_;
    SpacePtr reduced_;
    SpacePtr next_;
    Benchmark bench_;
    std::vector<Composition> slots_;
    std::vector<double> ratios_;
};

struct IterationRecord {
    std::size_t iteration = 0;
    std::uint64_t total_before = 0;
    std::uint64_t total_after = 0;
    std::size_t support_before = 0;
    std::size_t support_after = 0;
    Dataset dataset;  ///< the snapshot that was evaluated
    EvaluationReport evaluation;
    std::vector<DemoBatch> batches;  ///< curated batches, on the curation grid
    CurationTrace trace;
    std::uint64_t rollouts = 0;

    [[nodiscard]] double overall() const noexcept { return evaluation.overall; }
};

struct RunHistory {
    std::string stage;
    FlywheelConfig config;
    std::vector<IterationRecord> iterations;
    bool converged = false;
    Dataset final_dataset;
    SpacePtr grid;
    SpacePtr reduced_space;  ///< null for a plain stage

    [[nodiscard]] std::uint64_t total_rollouts() const {
        std::uint64_t n = 0;
        for (const auto& it : iterations) n += it.rollouts;
        return n;
    }
};

/// Iteration tags are offset per stage so every evaluation uses its own streams.
inline constexpr std::uint64_t kStageTagStride = 1'000'000;

/// Initial data of a stage: `unit_size` demos at each seed composition (the
/// hyper-diagonal of the seed grid unless `initial` is given), lifted to the
/// data space.
inline Dataset seed_dataset(const StagePlan& plan, std::uint64_t unit_size, const std::vector<Composition>& initial = {}) {
    Dataset data(plan.data_space());
    const auto seeds = initial.empty() ? diagonal_init(*plan.seed_grid()) : initial;
    for (const auto& c : seeds) {
        if (!plan.seed_grid()->contains(c)) {
            throw ConfigError("flywheel.initial_compositions", c.to_string() + " is outside the space");
        }
        for (const auto& b : plan.lift_seed({c, unit_size})) data.add_in_place(b);
    }
    return data;
}

/// Carries a finished stage's demonstrations into the next data space: the
/// demos of every base composition are split evenly (largest remainder) over
/// the hyper-diagonal of the new factors, so per-slot counts are unchanged.
inline Dataset carry_forward(const Dataset& prev, const FactorSpace& next) {
    const SpacePtr space = share(product_space(prev.space(), next));
    const auto seeds = diagonal_init(next);
    const std::vector<double> even(seeds.size(), 1.0);
    Dataset out(space);
    for (const auto& [idx, n] : prev.counts()) {
        const Composition base = prev.space().decode(idx);
        const auto shares = apportion(n, even);
        for (std::size_t j = 0; j < seeds.size(); ++j) {
            if (shares[j] > 0) out.add_in_place({concat(base, seeds[j]), shares[j]});
        }
    }
    return out;
}

inline RunHistory run_stage(const StagePlan& plan, const OracleParams& params, const FlywheelConfig& cfg,
                            std::string stage_label, std::uint64_t tag_base, Dataset data) {
    cfg.validate();
    params.validate();
    if (!(data.space() == *plan.data_space())) throw Error("initial dataset does not live in the stage's data space");
    RunHistory h;
    h.stage = std::move(stage_label);
    h.config = cfg;
    h.grid = plan.grid();
    h.reduced_space = plan.reduced_space();

    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
        IterationRecord rec;
        rec.iteration = it;
        rec.total_before = data.total();
        rec.support_before = data.counts().size();
        rec.dataset = data;
        rec.evaluation = simulate_evaluation(params, data, plan.benchmark(), cfg.k, tag_base + it, cfg.threads);
        rec.rollouts = rec.evaluation.total_rollouts;
        if (rec.evaluation.overall >= cfg.tau) {
            rec.total_after = rec.total_before;
            rec.support_after = rec.support_before;
            h.iterations.push_back(std::move(rec));
            h.converged = true;
            break;
        }
        const Dataset view = plan.project(data);
        auto curated = curate_expansion(rec.evaluation.rates, view, cfg.tau, cfg.unit_size, cfg.threshold);
        for (const auto& b : curated.batches) {
            for (const auto& lifted : plan.lift(b)) data.add_in_place(lifted);
        }
        rec.batches = std::move(curated.batches);
        rec.trace = std::move(curated.trace);
        rec.total_after = data.total();
        rec.support_after = data.counts().size();
        h.iterations.push_back(std::move(rec));
    }
    h.final_dataset = data;
    return h;
}

/// Iterative factor-based data expansion over a single factor space.
inline RunHistory run_flywheel(const FactorSpace& space, const OracleParams& params, const FlywheelConfig& cfg) {
    const StagePlan plan = StagePlan::plain(share(space));
    return run_stage(plan, params, cfg, "O", 0, seed_dataset(plan, cfg.unit_size, cfg.initial_compositions));
}

inline std::string stage_label(std::size_t stage) {
    static const char* letters[] = {"O", "A", "E"};
    std::string out;
    for (std::size_t i = 0; i <= stage; ++i) out += i < 3 ? letters[i] : "S" + std::to_string(i);
    return out;
}

/// O -> A -> E: the first stage runs on its own space, every later stage on
/// the reduced product of the previous support (with frozen ratios) and the
/// new factors, starting from the carried-forward previous dataset. Stops
/// after the first stage that fails to converge.
inline std::vector<RunHistory> sequential_expansion(const std::vector<FactorSpace>& stages, const OracleParams& params,
                                                    const FlywheelConfig& cfg) {
    if (stages.empty()) throw Error("sequential expansion needs at least one stage");
    std::vector<RunHistory> out;
    out.push_back(run_flywheel(stages.front(), params, cfg));
    out.back().stage = stage_label(0);
    for (std::size_t s = 1; s < stages.size() && out.back().converged; ++s) {
        const Dataset& prev = out.back().final_dataset;
        const FactorSpace reduced = reduced_product(support_and_ratios(prev).pairs(), stages[s]);
        const StagePlan plan = StagePlan::reduced(reduced, prev.space(), cfg.evaluation_mode);
        out.push_back(run_stage(plan, params, cfg, stage_label(s), s * kStageTagStride, carry_forward(prev, stages[s])));
    }
    return out;
}

struct BudgetReport {
    std::uint64_t full_possibilities = 0;
    std::uint64_t reduced_possibilities = 0;
    std::uint64_t sampled_rollouts = 0;
    std::uint64_t full_rollouts = 0;
    double speedup = 0.0;
};

/// Rollouts for one flywheel cycle: full product vs reduced vs ratio-sampled.
inline BudgetReport rollout_budget(std::uint64_t grid, std::uint64_t base, std::uint64_t slots, std::uint64_t k) {
    if (grid == 0 || base == 0 || slots == 0 || k == 0) throw Error("budget inputs must be positive");
    BudgetReport r;
    r.full_possibilities = grid * base;
    r.reduced_possibilities = grid * slots;
    r.sampled_rollouts = grid * k;
    r.full_rollouts = r.full_possibilities * k;
    r.speedup = static_cast<double>(r.full_rollouts) / static_cast<double>(r.sampled_rollouts);
    return r;
}

inline json budget_to_json(const BudgetReport& b) {
    return {{"full_possibilities", b.full_possibilities},
            {"reduced_possibilities", b.reduced_possibilities},
            {"sampled_rollouts", b.sampled_rollouts},
            {"full_rollouts", b.full_rollouts},
            {"speedup", b.speedup}};
}

// ---- history export --------------------------------------------------------

inline std::string iterations_to_csv(const RunHistory& h) {
    std::string out = "iteration,total_demos,support_size,overall_rate,rollouts_spent\n";
    for (const auto& it : h.iterations) {
        out += std::to_string(it.iteration) + ',' + std::to_string(it.total_before) + ',' +
               std::to_string(it.support_before) + ',' + io::format_double(it.overall()) + ',' +
               std::to_string(it.rollouts) + '\n';
    }
    return out;
}

inline void to_json(json& j, const FlywheelConfig& c) {
    json init = json::array();
    for (const auto& comp : c.initial_compositions) init.push_back(comp.indices());
    j = {{"tau", c.tau},
         {"unit_size", c.unit_size},
         {"k", c.k},
         {"max_iterations", c.max_iterations},
         {"evaluation_mode", to_string(c.evaluation_mode)},
         {"initial_compositions", init},
         {"threshold", c.threshold == Threshold::strict ? "strict" : "inclusive"}};
}

namespace detail {

inline json report_to_json(const EvaluationReport& r) {
    json rates = json::array();
    for (double v : r.rates.values()) rates.push_back(v);
    return {{"successes", r.successes}, {"rates", rates}, {"k", r.rollouts_per_composition},
            {"total_rollouts", r.total_rollouts}, {"overall", r.overall}};
}

inline EvaluationReport report_from_json(const SpacePtr& grid, const json& j) {
    EvaluationReport r;
    r.rates = Tensor(grid, j.at("rates").get<std::vector<double>>());
    r.successes = j.at("successes").get<std::vector<std::uint32_t>>();
    r.rollouts_per_composition = j.at("k").get<std::uint32_t>();
    r.total_rollouts = j.at("total_rollouts").get<std::uint64_t>();
    r.overall = j.at("overall").get<double>();
    return r;
}

inline json batches_to_json(const std::vector<DemoBatch>& batches) {
    json out = json::array();
    for (const auto& b : batches) out.push_back({{"composition", b.composition.indices()}, {"count", b.count}});
    return out;
}

}  // namespace detail

/// Complete history document; `history_from_json` inverts it exactly.
inline json history_to_json(const RunHistory& h) {
    json iters = json::array();
    for (const auto& it : h.iterations) {
        json trace = json::array();
        for (const auto& st : it.trace) {
            trace.push_back({{"composition", st.selected.indices()}, {"S_value", st.s_value},
                             {"newly_marked", st.newly_marked}, {"batch_size", st.batch_size}});
        }
        iters.push_back({{"iteration", it.iteration},
                         {"total_before", it.total_before},
                         {"total_after", it.total_after},
                         {"support_before", it.support_before},
                         {"support_after", it.support_after},
                         {"dataset", dataset_to_json(it.dataset)},
                         {"evaluation", detail::report_to_json(it.evaluation)},
                         {"batches", detail::batches_to_json(it.batches)},
                         {"trace", trace},
                         {"rollouts", it.rollouts}});
    }
    json j = {{"stage", h.stage},
              {"config", h.config},
              {"converged", h.converged},
              {"data_space", h.final_dataset.space()},
              {"grid", *h.grid},
              {"final_dataset", dataset_to_json(h.final_dataset)},
              {"iterations", iters}};
    if (h.reduced_space) j["reduced_space"] = *h.reduced_space;
    return j;
}

inline FlywheelConfig flywheel_config_from_json(const json& j) {
    FlywheelConfig c;
    if (j.contains("tau")) c.tau = j.at("tau").get<double>();
    if (j.contains("unit_size")) c.unit_size = j.at("unit_size").get<std::uint64_t>();
    if (j.contains("k")) c.k = j.at("k").get<std::uint32_t>();
    if (j.contains("max_iterations")) c.max_iterations = j.at("max_iterations").get<std::size_t>();
    if (j.contains("evaluation_mode")) c.evaluation_mode = parse_evaluation_mode(j.at("evaluation_mode").get<std::string>());
    if (j.contains("initial_compositions")) {
        for (const auto& c0 : j.at("initial_compositions")) c.initial_compositions.emplace_back(c0.get<std::vector<std::size_t>>());
    }
    if (j.contains("threshold")) {
        const auto t = j.at("threshold").get<std::string>();
        if (t == "strict") c.threshold = Threshold::strict;
        else if (t == "inclusive") c.threshold = Threshold::inclusive;
        else throw ConfigError("flywheel.threshold", "expected 'strict' or 'inclusive'");
    }
    return c;
}

inline RunHistory history_from_json(const json& j) {
    RunHistory h;
    h.stage = j.at("stage").get<std::string>();
    h.config = flywheel_config_from_json(j.at("config"));
    h.converged = j.at("converged").get<bool>();
    const SpacePtr data_space = share(j.at("data_space").get<FactorSpace>());
    h.grid = share(j.at("grid").get<FactorSpace>());
    if (j.contains("reduced_space")) h.reduced_space = share(j.at("reduced_space").get<FactorSpace>());
    h.final_dataset = dataset_from_json(data_space, j.at("final_dataset"));
    for (const auto& ij : j.at("iterations")) {
        IterationRecord rec;
        rec.iteration = ij.at("iteration").get<std::size_t>();
        rec.total_before = ij.at("total_before").get<std::uint64_t>();
        rec.total_after = ij.at("total_after").get<std::uint64_t>();
        rec.support_before = ij.at("support_before").get<std::size_t>();
        rec.support_after = ij.at("support_after").get<std::size_t>();
        rec.dataset = dataset_from_json(data_space, ij.at("dataset"));
        rec.evaluation = detail::report_from_json(h.grid, ij.at("evaluation"));
        for (const auto& b : ij.at("batches")) {
            rec.batches.push_back({Composition(b.at("composition").get<std::vector<std::size_t>>()),
                                   b.at("count").get<std::uint64_t>()});
        }
        for (const auto& st : ij.at("trace")) {
            rec.trace.push_back({Composition(st.at("composition").get<std::vector<std::size_t>>()),
                                 st.at("S_value").get<double>(), st.at("newly_marked").get<std::size_t>(),
                                 st.at("batch_size").get<std::uint64_t>()});
        }
        rec.rollouts = ij.at("rollouts").get<std::uint64_t>();
        h.iterations.push_back(std::move(rec));
    }
    return h;
}

}  // namespace facil
