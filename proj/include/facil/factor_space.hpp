// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "facil/error.hpp"

namespace facil {

using json = nlohmann::json;

/// One discrete factor axis, e.g. Texture {Transparent, Specular, ...}.
struct FactorDimension {
    std::string name;
    std::vector<std::string> levels;

    [[nodiscard]] std::size_t size() const noexcept { return levels.size(); }
    bool operator==(const FactorDimension&) const = default;
};

/// A full assignment of one level per dimension. Lexicographic order on the
/// index tuple coincides with row-major linear order, so ordered containers
/// of compositions iterate in linear-index order.
class Composition {
public:
    Composition() = default;
    explicit Composition(std::vector<std::size_t> indices) : indices_(std::move(indices)) {}
    Composition(std::initializer_list<std::size_t> indices) : indices_(indices) {}

    [[nodiscard]] std::size_t size() const noexcept { return indices_.size(); }
    [[nodiscard]] std::size_t operator[](std::size_t m) const { return indices_[m]; }
    [[nodiscard]] std::size_t& operator[](std::size_t m) { return indices_[m]; }
    [[nodiscard]] const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    [[nodiscard]] auto begin() const noexcept { return indices_.begin(); }
    [[nodiscard]] auto end() const noexcept { return indices_.end(); }

    auto operator<=>(const Composition&) const = default;
    bool operator==(const Composition&) const = default;

    /// '/'-joined index tuple, e.g. "1/2/0".
    [[nodiscard]] std::string to_string() const {
        std::string out;
        for (std::size_t m = 0; m < indices_.size(); ++m) {
            if (m > 0) out += '/';
            out += std::to_string(indices_[m]);
        }
        return out;
    }

    static Composition parse(std::string_view text) {
        std::vector<std::size_t> idx;
        std::size_t pos = 0;
        while (true) {
            const std::size_t slash = text.find('/', pos);
            const std::string_view part =
                text.substr(pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos);
            std::size_t value = 0;
            const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
            if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size()) {
                throw Error("malformed composition tuple '" + std::string(text) + "'");
            }
            idx.push_back(value);
            if (slash == std::string_view::npos) break;
            pos = slash + 1;
        }
        return Composition(std::move(idx));
    }

private:
    std::vector<std::size_t> indices_;
};

using CompositionSet = std::set<Composition>;

/// Ordered discrete dimensions whose Cartesian product indexes every
/// composition. A reduced-product space additionally carries one ratio per
/// level of its leading "slot" dimension.
class FactorSpace {
public:
    FactorSpace() = default;

    explicit FactorSpace(std::vector<FactorDimension> dims, std::vector<double> slot_ratios = {})
        : dims_(std::move(dims)), slot_ratios_(std::move(slot_ratios)) {
        if (dims_.empty()) throw Error("factor space needs at least one dimension");
        std::unordered_set<std::string> names;
        for (const auto& d : dims_) {
            if (d.name.empty()) throw Error("dimension name must be non-empty");
            if (!names.insert(d.name).second) throw Error("duplicate dimension name '" + d.name + "'");
            if (d.levels.empty()) throw Error("dimension '" + d.name + "' has an empty level list");
            std::unordered_set<std::string> labels(d.levels.begin(), d.levels.end());
            if (labels.size() != d.levels.size()) {
                throw Error("dimension '" + d.name + "' has duplicate level labels");
            }
        }
        if (!slot_ratios_.empty()) {
            if (slot_ratios_.size() != dims_.front().size()) {
                throw Error("slot_ratios must have one entry per level of the leading dimension");
            }
            double sum = 0.0;
            for (double r : slot_ratios_) {
                if (!(r > 0.0)) throw Error("slot ratios must be positive");
                sum += r;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw Error("slot ratios must sum to 1");
        }
        strides_.assign(dims_.size(), 1);
        cardinality_ = 1;
        for (std::size_t m = dims_.size(); m-- > 0;) {
            strides_[m] = cardinality_;
            cardinality_ *= dims_[m].size();
        }
    }

    [[nodiscard]] const std::vector<FactorDimension>& dims() const noexcept { return dims_; }
    [[nodiscard]] const FactorDimension& dim(std::size_t m) const { return dims_.at(m); }
    [[nodiscard]] std::size_t rank() const noexcept { return dims_.size(); }
    [[nodiscard]] std::size_t cardinality() const noexcept { return cardinality_; }
    [[nodiscard]] std::size_t extent(std::size_t m) const { return dims_.at(m).size(); }
    [[nodiscard]] std::size_t stride(std::size_t m) const { return strides_.at(m); }

    [[nodiscard]] bool has_slot_ratios() const noexcept { return !slot_ratios_.empty(); }
    [[nodiscard]] const std::vector<double>& slot_ratios() const noexcept { return slot_ratios_; }

    [[nodiscard]] std::optional<std::size_t> find_dimension(std::string_view name) const {
        for (std::size_t m = 0; m < dims_.size(); ++m) {
            if (dims_[m].name == name) return m;
        }
        return std::nullopt;
    }

    [[nodiscard]] std::size_t dimension_index(std::string_view name) const {
        if (auto m = find_dimension(name)) return *m;
        throw Error("unknown dimension '" + std::string(name) + "'");
    }

    [[nodiscard]] bool contains(const Composition& c) const noexcept {
        if (c.size() != dims_.size()) return false;
        for (std::size_t m = 0; m < dims_.size(); ++m) {
            if (c[m] >= dims_[m].size()) return false;
        }
        return true;
    }

    [[nodiscard]] std::size_t encode(const Composition& c) const {
        if (!contains(c)) throw Error("composition " + c.to_string() + " is outside the factor space");
        std::size_t idx = 0;
        for (std::size_t m = 0; m < dims_.size(); ++m) idx += c[m] * strides_[m];
        return idx;
    }

    [[nodiscard]] Composition decode(std::size_t index) const {
        if (index >= cardinality_ || dims_.empty()) {
            throw Error("linear index " + std::to_string(index) + " is outside the factor space");
        }
        std::vector<std::size_t> idx(dims_.size());
        for (std::size_t m = 0; m < dims_.size(); ++m) {
            idx[m] = index / strides_[m];
            index %= strides_[m];
        }
        return Composition(std::move(idx));
    }

    bool operator==(const FactorSpace& other) const {
        return dims_ == other.dims_ && slot_ratios_ == other.slot_ratios_;
    }

private:
    std::vector<FactorDimension> dims_;
    std::vector<double> slot_ratios_;
    std::vector<std::size_t> strides_;
    std::size_t cardinality_ = 0;
};

using SpacePtr = std::shared_ptr<const FactorSpace>;

inline SpacePtr share(FactorSpace space) { return std::make_shared<const FactorSpace>(std::move(space)); }

inline bool same_space(const SpacePtr& a, const SpacePtr& b) {
    return a && b && (a == b || *a == *b);
}

/// Dense real values over every composition of a space, row-major.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(SpacePtr space, double fill = 0.0)
        : space_(std::move(space)), values_(space_ ? space_->cardinality() : 0, fill) {
        if (!space_) throw Error("tensor requires a factor space");
    }
    Tensor(SpacePtr space, std::vector<double> values) : space_(std::move(space)), values_(std::move(values)) {
        if (!space_) throw Error("tensor requires a factor space");
        if (values_.size() != space_->cardinality()) {
            throw Error("tensor length " + std::to_string(values_.size()) + " does not match cardinality " +
                        std::to_string(space_->cardinality()));
        }
    }

    [[nodiscard]] const FactorSpace& space() const { return *space_; }
    [[nodiscard]] const SpacePtr& space_ptr() const noexcept { return space_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] double& operator[](std::size_t i) { return values_[i]; }
    [[nodiscard]] double at(const Composition& c) const { return values_[space_->encode(c)]; }
    [[nodiscard]] double& at(const Composition& c) { return values_[space_->encode(c)]; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    [[nodiscard]] bool is_rate_tensor() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
    }

private:
    SpacePtr space_;
    std::vector<double> values_;
};

using DimSpec = std::pair<std::string, std::vector<std::string>>;

inline FactorSpace build_space(const std::vector<DimSpec>& specs) {
    std::vector<FactorDimension> dims;
    dims.reserve(specs.size());
    for (const auto& [name, levels] : specs) dims.push_back({name, levels});
    return FactorSpace(std::move(dims));
}

/// Cyclic hyper-diagonal: c_k[m] = k mod |dims[m]| for k < max_m |dims[m]|.
/// Every level of every dimension appears at least once.
inline std::vector<Composition> diagonal_init(const FactorSpace& space) {
    std::size_t longest = 0;
    for (const auto& d : space.dims()) longest = std::max(longest, d.size());
    std::vector<Composition> out;
    out.reserve(longest);
    for (std::size_t k = 0; k < longest; ++k) {
        std::vector<std::size_t> idx(space.rank());
        for (std::size_t m = 0; m < space.rank(); ++m) idx[m] = k % space.extent(m);
        out.emplace_back(std::move(idx));
    }
    return out;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"pnp_object", "oc_object", "pnp_action", "oc_action",
                                                   "environment"};
    return names;
}

inline FactorSpace preset_space(std::string_view name) {
    const std::vector<std::string> texture = {"Transparent", "Specular", "Diffuse", "Absorptive"};
    const std::vector<std::string> geometry = {"Cylindrical", "Dish-like", "Rod-like", "Irregular"};
    const std::vector<std::string> size = {"Small", "Medium", "Large"};
    // Workspace bins; the continuous ranges survive only as labels.
    const std::vector<std::string> x = {"x0", "x1", "x2", "x3"};
    const std::vector<std::string> y = {"y0", "y1"};
    const std::vector<std::string> yaw = {"yaw[-180,-60)", "yaw[-60,60)", "yaw[60,180)"};
    const std::vector<std::string> shadow = {"Left", "Mid", "Right"};
    const std::vector<std::string> color = {"Warm", "Neutral", "Cool"};

    if (name == "pnp_object") return build_space({{"Texture", texture}, {"Geometry", geometry}});
    if (name == "oc_object") return build_space({{"Texture", texture}, {"Size", size}});
    if (name == "pnp_action") return build_space({{"X", x}, {"Y", y}, {"Yaw", yaw}});
    if (name == "oc_action") return build_space({{"X", x}, {"Y", y}});
    if (name == "environment") return build_space({{"ShadowDirection", shadow}, {"ColorTemperature", color}});
    throw Error("unknown preset '" + std::string(name) + "'");
}

/// Concatenates the dimensions of `a` and `b`; compositions concatenate in
/// the same order.
inline FactorSpace product_space(const FactorSpace& a, const FactorSpace& b) {
    std::vector<FactorDimension> dims = a.dims();
    dims.insert(dims.end(), b.dims().begin(), b.dims().end());
    return FactorSpace(std::move(dims));
}

inline Composition concat(const Composition& a, const Composition& b) {
    std::vector<std::size_t> idx = a.indices();
    idx.insert(idx.end(), b.begin(), b.end());
    return Composition(std::move(idx));
}

inline constexpr std::string_view kSlotDimension = "slot";

/// Space whose leading "slot" dimension enumerates the support compositions
/// (labelled by their index tuple, weighted by their ratio), followed by the
/// dimensions of `next_space`.
inline FactorSpace reduced_product(const std::vector<std::pair<Composition, double>>& support,
                                   const FactorSpace& next_space) {
    if (support.empty()) throw Error("reduced product needs a non-empty support");
    const std::size_t base_rank = support.front().first.size();
    double sum = 0.0;
    FactorDimension slot{std::string(kSlotDimension), {}};
    std::vector<double> ratios;
    for (const auto& [c, w] : support) {
        if (c.size() != base_rank) throw Error("support compositions come from different spaces");
        if (!(w > 0.0)) throw Error("support weights must be positive");
        sum += w;
        slot.levels.push_back(c.to_string());
        ratios.push_back(w);
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("support weights must sum to 1 (got " + std::to_string(sum) + ")");
    std::vector<FactorDimension> dims{std::move(slot)};
    dims.insert(dims.end(), next_space.dims().begin(), next_space.dims().end());
    return FactorSpace(std::move(dims), std::move(ratios));
}

/// Base compositions carried by the slot levels of a reduced-product space.
inline std::vector<Composition> slot_compositions(const FactorSpace& reduced) {
    if (!reduced.has_slot_ratios()) throw Error("space carries no slot ratios");
    std::vector<Composition> out;
    for (const auto& label : reduced.dim(0).levels) out.push_back(Composition::parse(label));
    return out;
}

/// The new-factor grid of a reduced-product space (everything after the slot).
inline FactorSpace next_factor_space(const FactorSpace& reduced) {
    if (!reduced.has_slot_ratios()) throw Error("space carries no slot ratios");
    return FactorSpace(std::vector<FactorDimension>(reduced.dims().begin() + 1, reduced.dims().end()));
}

inline void to_json(json& j, const FactorSpace& space) {
    j = json::object();
    j["dims"] = json::array();
    for (const auto& d : space.dims()) j["dims"].push_back({{"name", d.name}, {"levels", d.levels}});
    if (space.has_slot_ratios()) j["slot_ratios"] = space.slot_ratios();
}

inline void from_json(const json& j, FactorSpace& space) {
    if (!j.is_object() || !j.contains("dims") || !j.at("dims").is_array()) {
        throw ConfigError("dims", "factor space document requires a 'dims' array");
    }
    std::vector<FactorDimension> dims;
    for (const auto& d : j.at("dims")) {
        if (!d.is_object() || !d.contains("name") || !d.contains("levels")) {
            throw ConfigError("dims", "each dimension needs 'name' and 'levels'");
        }
        dims.push_back({d.at("name").get<std::string>(), d.at("levels").get<std::vector<std::string>>()});
    }
    std::vector<double> ratios;
    if (j.contains("slot_ratios")) ratios = j.at("slot_ratios").get<std::vector<double>>();
    space = FactorSpace(std::move(dims), std::move(ratios));
}

}  // namespace facil
