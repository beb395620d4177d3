// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "facil/factor_space.hpp"

namespace facil {

/// How a success rate is compared against the threshold tau.
enum class Threshold {
    strict,     ///< rate > tau
    inclusive,  ///< rate >= tau
};

inline bool passes(double rate, double tau, Threshold mode) {
    return mode == Threshold::strict ? rate > tau : rate >= tau;
}

/// One boolean per composition of a space.
class MarkTensor {
public:
    explicit MarkTensor(SpacePtr space) : space_(std::move(space)), marked_(space_->cardinality(), 0) {}

    [[nodiscard]] const FactorSpace& space() const { return *space_; }
    [[nodiscard]] bool is_marked(std::size_t i) const { return marked_[i] != 0; }
    [[nodiscard]] bool is_marked(const Composition& c) const { return is_marked(space_->encode(c)); }
    [[nodiscard]] std::size_t marked_count() const noexcept { return count_; }
    [[nodiscard]] bool full() const noexcept { return count_ == marked_.size(); }

    /// Returns true if `i` was previously unmarked.
    bool mark(std::size_t i) {
        if (marked_[i]) return false;
        marked_[i] = 1;
        ++count_;
        return true;
    }
    bool mark(const Composition& c) { return mark(space_->encode(c)); }

private:
    SpacePtr space_;
    std::vector<char> marked_;
    std::size_t count_ = 0;
};

/// All v with v[m] in {s[m], d[m]}; 2^(#differing dims) vertices in linear order.
inline std::vector<Composition> hypercube_span(const Composition& s, const Composition& d) {
    if (s.size() != d.size()) throw Error("hypercube span of compositions from different spaces");
    std::vector<std::size_t> differing;
    for (std::size_t m = 0; m < s.size(); ++m) {
        if (s[m] != d[m]) differing.push_back(m);
    }
    CompositionSet vertices;
    const std::size_t n = std::size_t{1} << differing.size();
    for (std::size_t mask = 0; mask < n; ++mask) {
        Composition v = s;
        for (std::size_t b = 0; b < differing.size(); ++b) {
            if (mask & (std::size_t{1} << b)) v[differing[b]] = d[differing[b]];
        }
        vertices.insert(std::move(v));
    }
    return {vertices.begin(), vertices.end()};
}

inline std::vector<Composition> hypercube_span(const FactorSpace& space, const Composition& s, const Composition& d) {
    if (!space.contains(s) || !space.contains(d)) throw Error("hypercube span endpoints are outside the space");
    return hypercube_span(s, d);
}

/// Thresholded success set {c : R[c] > tau}: the empirical orbit.
inline CompositionSet empirical_orbit(const Tensor& rates, double tau, Threshold mode = Threshold::strict) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw Error("tau must lie in [0, 1]");
    CompositionSet out;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (passes(rates[i], tau, mode)) out.insert(rates.space().decode(i));
    }
    return out;
}

/// Cartesian product of the per-dimension level sets observed in `train`.
inline CompositionSet product_closure(const FactorSpace& space, const CompositionSet& train) {
    if (train.empty()) throw Error("product closure of an empty set");
    std::vector<std::vector<std::size_t>> levels(space.rank());
    {
        std::vector<std::vector<char>> seen(space.rank());
        for (std::size_t m = 0; m < space.rank(); ++m) seen[m].assign(space.extent(m), 0);
        for (const auto& c : train) {
            if (!space.contains(c)) throw Error("composition " + c.to_string() + " is outside the space");
            for (std::size_t m = 0; m < space.rank(); ++m) seen[m][c[m]] = 1;
        }
        for (std::size_t m = 0; m < space.rank(); ++m) {
            for (std::size_t l = 0; l < space.extent(m); ++l) {
                if (seen[m][l]) levels[m].push_back(l);
            }
        }
    }
    CompositionSet out;
    std::vector<std::size_t> cursor(space.rank(), 0);
    while (true) {
        std::vector<std::size_t> idx(space.rank());
        for (std::size_t m = 0; m < space.rank(); ++m) idx[m] = levels[m][cursor[m]];
        out.emplace(std::move(idx));
        std::size_t m = space.rank();
        while (m-- > 0) {
            if (++cursor[m] < levels[m].size()) break;
            cursor[m] = 0;
        }
        if (m == static_cast<std::size_t>(-1)) break;
    }
    return out;
}

inline std::string orbit_to_csv(const CompositionSet& set) {
    std::string out = "composition_indices\n";
    for (const auto& c : set) out += c.to_string() + "\n";
    return out;
}

}  // namespace facil
