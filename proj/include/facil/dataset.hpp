// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "facil/factor_space.hpp"
#include "facil/io.hpp"

namespace facil {

/// `count` demonstrations collected at a single composition.
struct DemoBatch {
    Composition composition;
    std::uint64_t count = 0;

    bool operator==(const DemoBatch&) const = default;
};

/// Demonstration counts keyed by composition. Trajectory payloads are not
/// modelled; only composition frequencies matter. Mutators return a new
/// snapshot and leave the receiver untouched.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(SpacePtr space) : space_(std::move(space)) {
        if (!space_) throw Error("dataset requires a factor space");
    }

    [[nodiscard]] const FactorSpace& space() const { return *space_; }
    [[nodiscard]] const SpacePtr& space_ptr() const noexcept { return space_; }
    [[nodiscard]] std::uint64_t total() const noexcept { return total_; }
    [[nodiscard]] bool empty() const noexcept { return total_ == 0; }

    /// Linear index -> count, ascending, only strictly positive counts.
    [[nodiscard]] const std::map<std::size_t, std::uint64_t>& counts() const noexcept { return counts_; }

    [[nodiscard]] std::uint64_t count(const Composition& c) const { return count_at(space_->encode(c)); }
    [[nodiscard]] std::uint64_t count_at(std::size_t index) const {
        const auto it = counts_.find(index);
        return it == counts_.end() ? 0 : it->second;
    }

    [[nodiscard]] Dataset with(const DemoBatch& batch) const {
        Dataset next = *this;
        next.add_in_place(batch);
        return next;
    }

    /// Same as `with`, but mutates. Used while building a fresh snapshot.
    void add_in_place(const DemoBatch& batch) {
        if (batch.count == 0) throw Error("demo batch count must be at least 1");
        const std::size_t idx = space_->encode(batch.composition);
        counts_[idx] += batch.count;
        total_ += batch.count;
    }

    /// f(D): compositions with at least one demonstration, in linear order.
    [[nodiscard]] std::vector<Composition> support() const {
        std::vector<Composition> out;
        out.reserve(counts_.size());
        for (const auto& [idx, n] : counts_) out.push_back(space_->decode(idx));
        return out;
    }

    [[nodiscard]] std::vector<std::uint64_t> marginal_counts(std::size_t m) const {
        if (m >= space_->rank()) throw Error("dimension " + std::to_string(m) + " is out of range");
        std::vector<std::uint64_t> out(space_->extent(m), 0);
        for (const auto& [idx, n] : counts_) out[(idx / space_->stride(m)) % space_->extent(m)] += n;
        return out;
    }

    bool operator==(const Dataset& other) const {
        return same_space(space_, other.space_) && counts_ == other.counts_;
    }

private:
    SpacePtr space_;
    std::map<std::size_t, std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

inline Dataset add_demos(const Dataset& d, const DemoBatch& batch) { return d.with(batch); }

struct SupportRatios {
    std::vector<Composition> support;
    std::vector<double> ratios;  ///< parallel to `support`

    /// (composition, ratio) pairs, the input shape of `reduced_product`.
    [[nodiscard]] std::vector<std::pair<Composition, double>> pairs() const {
        std::vector<std::pair<Composition, double>> out;
        for (std::size_t i = 0; i < support.size(); ++i) out.emplace_back(support[i], ratios[i]);
        return out;
    }
};

inline SupportRatios support_and_ratios(const Dataset& d) {
    if (d.empty()) throw Error("empty dataset");
    SupportRatios out;
    for (const auto& [idx, n] : d.counts()) {
        out.support.push_back(d.space().decode(idx));
        out.ratios.push_back(static_cast<double>(n) / static_cast<double>(d.total()));
    }
    return out;
}

// ---- serialization -------------------------------------------------------

inline std::string dataset_to_csv(const Dataset& d) {
    std::string out = "composition_indices,count\n";
    for (const auto& [idx, n] : d.counts()) {
        out += d.space().decode(idx).to_string();
        out += ',';
        out += std::to_string(n);
        out += '\n';
    }
    return out;
}

inline Dataset dataset_from_csv(SpacePtr space, const std::string& text) {
    std::istringstream in(text);
    const auto lines = io::data_lines(in);
    if (lines.empty() || lines.front() != "composition_indices,count") {
        throw Error("dataset CSV must start with header 'composition_indices,count'");
    }
    Dataset d(std::move(space));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cols = io::split(lines[i]);
        if (cols.size() != 2) throw Error("dataset CSV row " + std::to_string(i) + " needs two columns");
        d.add_in_place({Composition::parse(cols[0]), io::parse_unsigned(cols[1])});
    }
    return d;
}

inline json dataset_to_json(const Dataset& d) {
    json rows = json::array();
    for (const auto& [idx, n] : d.counts()) rows.push_back({{"composition", d.space().decode(idx).indices()}, {"count", n}});
    return {{"total", d.total()}, {"counts", rows}};
}

inline Dataset dataset_from_json(SpacePtr space, const json& j) {
    Dataset d(std::move(space));
    for (const auto& row : j.at("counts")) {
        d.add_in_place({Composition(row.at("composition").get<std::vector<std::size_t>>()),
                        row.at("count").get<std::uint64_t>()});
    }
    if (j.contains("total") && j.at("total").get<std::uint64_t>() != d.total()) {
        throw Error("dataset JSON total does not match its counts");
    }
    return d;
}

}  // namespace facil
