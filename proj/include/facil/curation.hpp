// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "facil/dataset.hpp"
#include "facil/io.hpp"
#include "facil/orbit.hpp"

namespace facil {

/// S_i = sum over dims m of the axis-m slice sum through i, minus (n-1) R_i.
/// Each slice sum is computed once per level, so the cost is O(n * |R|).
inline Tensor aggregated_tensor(const Tensor& rates) {
    const FactorSpace& space = rates.space();
    const std::size_t n = space.rank();
    std::vector<std::vector<double>> slice(n);
    for (std::size_t m = 0; m < n; ++m) slice[m].assign(space.extent(m), 0.0);
    for (std::size_t i = 0; i < rates.size(); ++i) {
        for (std::size_t m = 0; m < n; ++m) slice[m][(i / space.stride(m)) % space.extent(m)] += rates[i];
    }
    Tensor s(rates.space_ptr());
    for (std::size_t i = 0; i < rates.size(); ++i) {
        double v = 0.0;
        for (std::size_t m = 0; m < n; ++m) v += slice[m][(i / space.stride(m)) % space.extent(m)];
        s[i] = v - static_cast<double>(n - 1) * rates[i];
    }
    return s;
}

/// Arithmetic mean over all compositions.
inline double overall_rate(const Tensor& rates) {
    if (rates.size() == 0) return 0.0;
    return std::accumulate(rates.values().begin(), rates.values().end(), 0.0) / static_cast<double>(rates.size());
}

struct CurationStep {
    Composition selected;
    double s_value = 0.0;
    std::size_t newly_marked = 0;  ///< includes the selected composition itself
    std::uint64_t batch_size = 0;
};

using CurationTrace = std::vector<CurationStep>;

struct CurationResult {
    std::vector<DemoBatch> batches;
    Dataset dataset;
    CurationTrace trace;
};

/// Factorization-and-composition data collection. S is computed once from R;
/// the marked set starts as the cells passing tau; each round marks the
/// unmarked cell with minimal S (ties -> smallest linear index), marks every
/// hypercube spanned with the current support, and emits a batch there.
inline CurationResult curate_expansion(const Tensor& rates, const Dataset& data, double tau, std::uint64_t unit_size,
                                       Threshold mode = Threshold::strict) {
    if (!same_space(rates.space_ptr(), data.space_ptr())) {
        throw Error("success tensor and dataset are over different factor spaces");
    }
    if (unit_size == 0) throw Error("unit_size must be at least 1");
    const FactorSpace& space = rates.space();
    const Tensor s = aggregated_tensor(rates);

    MarkTensor marks(rates.space_ptr());
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (passes(rates[i], tau, mode)) marks.mark(i);
    }

    CurationResult out{{}, data, {}};
    while (!marks.full()) {
        std::size_t best = std::numeric_limits<std::size_t>::max();
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!marks.is_marked(i) && (best == std::numeric_limits<std::size_t>::max() || s[i] < s[best])) best = i;
        }
        const Composition selected = space.decode(best);
        std::size_t newly = marks.mark(best) ? 1 : 0;
        for (const auto& [idx, n] : out.dataset.counts()) {
            for (const auto& v : hypercube_span(selected, space.decode(idx))) newly += marks.mark(v) ? 1 : 0;
        }
        DemoBatch batch{selected, unit_size};
        out.dataset.add_in_place(batch);
        out.trace.push_back({selected, s[best], newly, unit_size});
        out.batches.push_back(std::move(batch));
    }
    return out;
}

inline std::string trace_to_csv(const CurationTrace& trace) {
    std::string out = "step,composition,S_value,newly_marked,batch_size\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& st = trace[i];
        out += std::to_string(i) + ',' + st.selected.to_string() + ',' + io::format_double(st.s_value) + ',' +
               std::to_string(st.newly_marked) + ',' + std::to_string(st.batch_size) + '\n';
    }
    return out;
}

}  // namespace facil
