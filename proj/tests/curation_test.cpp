// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "facil/curation.hpp"

namespace facil {
namespace {

SpacePtr square(std::size_t n) {
    std::vector<std::string> lv;
    for (std::size_t i = 0; i < n; ++i) lv.push_back(std::to_string(i));
    return share(FactorSpace({{"a", lv}, {"b", lv}}));
}

TEST(AggregatedTensor, HandExamples) {
    const SpacePtr s = square(2);
    const Tensor r(s, std::vector<double>{1, 0, 0, 1});
    const Tensor agg = aggregated_tensor(r);
    EXPECT_DOUBLE_EQ(agg.at({0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(agg.at({0, 1}), 2.0);
}

TEST(AggregatedTensor, ConstantInput) {
    const SpacePtr s = share(preset_space("oc_object"));
    const Tensor agg = aggregated_tensor(Tensor(s, 0.3));
    for (std::size_t i = 0; i < agg.size(); ++i) EXPECT_NEAR(agg[i], 0.3 * (4 + 3 - 1), 1e-12);
}

TEST(OverallRate, Means) {
    EXPECT_DOUBLE_EQ(overall_rate(Tensor(square(2), std::vector<double>{1, 0, 0, 1})), 0.5);
    Tensor r(square(4), 1.0);
    r[5] = 0.2;
    EXPECT_NEAR(overall_rate(r), 0.95, 1e-15);
}

TEST(CurateExpansion, AlreadyComplete) {
    const SpacePtr s = square(3);
    Dataset d(s);
    d.add_in_place({{0, 0}, 5});
    const auto res = curate_expansion(Tensor(s, 0.95), d, 0.8, 50);
    EXPECT_TRUE(res.batches.empty());
    EXPECT_EQ(res.dataset, d);
}

TEST(CurateExpansion, SingleSpanCoversSquare) {
    const SpacePtr s = square(2);
    Dataset d(s);
    d.add_in_place({{0, 0}, 50});
    const auto res = curate_expansion(Tensor(s, std::vector<double>{0.9, 0, 0, 0}), d, 0.8, 50);
    ASSERT_EQ(res.batches.size(), 1u);
    EXPECT_EQ(res.batches[0], (DemoBatch{{1, 1}, 50}));
    EXPECT_EQ(res.trace[0].newly_marked, 3u);
    EXPECT_DOUBLE_EQ(res.trace[0].s_value, 0.0);
}

TEST(CurateExpansion, WeakRowAndColumn) {
    const SpacePtr s = square(4);
    Tensor r(s, 0.9);
    for (std::size_t i = 0; i < 4; ++i) {
        r.at({3, i}) = 0.2;
        r.at({i, 3}) = 0.2;
    }
    Dataset d(s);
    for (const auto& c : diagonal_init(*s)) d.add_in_place({c, 50});
    const auto res = curate_expansion(r, d, 0.8, 50);
    // The corner (3,3) has the smallest S; its spans with the diagonal cover row and column 3.
    ASSERT_EQ(res.batches.size(), 1u);
    EXPECT_EQ(res.batches[0].composition, (Composition{3, 3}));
    EXPECT_EQ(res.dataset.total(), 250u);
}

TEST(CurateExpansion, Validation) {
    const SpacePtr s = square(2);
    EXPECT_THROW(curate_expansion(Tensor(s, 0.0), Dataset(square(3)), 0.8, 1), Error);
    EXPECT_THROW(curate_expansion(Tensor(s, 0.0), Dataset(s), 0.8, 0), Error);
}

TEST(CurateExpansion, SelectionsFollowAscendingS) {
    // S is fixed for the call, so successive minima never decrease.
    const SpacePtr s = square(3);
    std::vector<double> v(9);
    for (std::size_t i = 0; i < 9; ++i) v[i] = 0.05 * static_cast<double>((i * 5) % 9);
    const auto res = curate_expansion(Tensor(s, v), Dataset(s), 0.8, 1);
    EXPECT_GE(res.batches.size(), 1u);
    EXPECT_LE(res.batches.size(), 9u);
    for (const auto& st : res.trace) EXPECT_GE(st.newly_marked, 1u);
    for (std::size_t i = 1; i < res.trace.size(); ++i) EXPECT_LE(res.trace[i - 1].s_value, res.trace[i].s_value);
}

TEST(CurateExpansion, PermutingDimensionsPermutesSelections) {
    std::mt19937_64 gen(17);
    const SpacePtr ab = share(FactorSpace({{"a", {"0", "1", "2"}}, {"b", {"0", "1", "2", "3"}}}));
    const SpacePtr ba = share(FactorSpace({{"b", {"0", "1", "2", "3"}}, {"a", {"0", "1", "2"}}}));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        Tensor r1(ab);
        Tensor r2(ba);
        for (std::size_t i = 0; i < r1.size(); ++i) {
            const Composition c = ab->decode(i);
            r1[i] = u(gen);
            r2.at({c[1], c[0]}) = r1[i];
        }
        Dataset d1(ab);
        Dataset d2(ba);
        const Composition seed{gen() % 3, gen() % 4};
        d1.add_in_place({seed, 1});
        d2.add_in_place({{seed[1], seed[0]}, 1});
        const auto x = curate_expansion(r1, d1, 0.8, 1);
        const auto y = curate_expansion(r2, d2, 0.8, 1);
        CompositionSet sx;
        CompositionSet sy;
        for (const auto& b : x.batches) sx.insert({b.composition[1], b.composition[0]});
        for (const auto& b : y.batches) sy.insert(b.composition);
        EXPECT_EQ(sx, sy);
    }
}

TEST(TraceCsv, Header) {
    const SpacePtr s = square(2);
    Dataset d(s);
    d.add_in_place({{0, 0}, 1});
    const auto res = curate_expansion(Tensor(s, std::vector<double>{0.9, 0, 0, 0}), d, 0.8, 7);
    EXPECT_EQ(trace_to_csv(res.trace), "step,composition,S_value,newly_marked,batch_size\n0,1/1,0,3,7\n");
}

}  // namespace
}  // namespace facil
