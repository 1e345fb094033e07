// SPDX-License-Identifier: Apache-2.0
//
// qsbf: quadratic-surface SVM digital beamformer simulation library
// Copyright (C) 2026 The qsbf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <gtest/gtest.h>

#include "bigint_oracle.hpp"
#include "qsbf/array_geometry.hpp"
#include "qsbf/fixed_datapath.hpp"

using namespace qsbf;

namespace
{
    FixedPointFormat fmt(const char *s, Rounding r = Rounding::half_even, Overflow o = Overflow::saturate)
    {
        auto f = FixedPointFormat::parse(s);
        f.rounding = r;
        f.overflow = o;
        return f;
    }

    std::vector<FxComplex> random_vec(Rng &rng, std::size_t n, const FixedPointFormat &f)
    {
        std::vector<FxComplex> v(n);
        for (auto &z : v)
            z = {oracle::random_raw(rng, f), oracle::random_raw(rng, f)};
        return v;
    }

    std::vector<FxComplex> random_unit_disc(Rng &rng, std::size_t n, const FixedPointFormat &f)
    {
        CVec v(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < v.size(); ++i)
            v[i] = std::polar(std::sqrt(rng.uniform()) / std::sqrt(static_cast<double>(n)), rng.uniform(0.0, 2.0 * pi));
        return quantize(v, f);
    }
}

TEST(FixedPointFormat, ParsesAndValidates)
{
    const auto f = FixedPointFormat::parse("18.12");
    EXPECT_EQ(f.word_bits, 18);
    EXPECT_EQ(f.frac_bits, 12);
    EXPECT_EQ(f.max_raw(), (1 << 17) - 1);
    EXPECT_EQ(f.min_raw(), -(1 << 17));
    EXPECT_THROW(FixedPointFormat::parse("18"), ConfigError);
    EXPECT_THROW(FixedPointFormat::parse("12.12"), ConfigError);
    EXPECT_THROW(FixedPointFormat::parse("65.10"), ConfigError);
    EXPECT_THROW(FixedPointFormat::parse("18.0"), ConfigError);
    EXPECT_THROW(FixedPointFormat::parse("a.b"), ConfigError);
}

TEST(FixedPoint, QuantizeRoundsHalfToEvenAndSaturates)
{
    const auto f = fmt("16.8");
    EXPECT_EQ(quantize(0.5 / 256.0, f), 0);       // tie -> even
    EXPECT_EQ(quantize(1.5 / 256.0, f), 2);
    EXPECT_EQ(quantize(-1.5 / 256.0, f), -2);
    EXPECT_EQ(quantize(1000.0, f), 32767);
    EXPECT_EQ(quantize(-1000.0, f), -32768);
    const auto t = fmt("16.8", Rounding::truncate);
    EXPECT_EQ(quantize(-0.1 / 256.0, t), -1); // floor
    const auto w = fmt("16.8", Rounding::half_even, Overflow::wrap);
    EXPECT_EQ(quantize(128.0, w), -32768);
}

TEST(FxComplexMul, IdentityAndImaginaryUnit)
{
    const auto f = fmt("18.12");
    const FxComplex one = quantize(cplx(1.0, 0.0), f), j = quantize(cplx(0.0, 1.0), f);
    const FxComplex x = quantize(cplx(0.3125, -1.75), f);
    EXPECT_EQ(fx_complex_mul(one, x, f), x);
    EXPECT_EQ(fx_complex_mul(j, j, f), quantize(cplx(-1.0, 0.0), f));
}

TEST(FxComplexMul, MatchesBigIntegerOracleAcrossPolicies)
{
    Rng rng(99);
    for (auto r : {Rounding::half_even, Rounding::truncate})
        for (auto o : {Overflow::saturate, Overflow::wrap})
        {
            const auto f = fmt("16.8", r, o);
            FxStats stats;
            oracle::Counter cnt;
            for (int t = 0; t < 100000; ++t)
            {
                const FxComplex a{oracle::random_raw(rng, f), oracle::random_raw(rng, f)};
                const FxComplex b{oracle::random_raw(rng, f), oracle::random_raw(rng, f)};
                ASSERT_EQ(fx_complex_mul(a, b, f, &stats), oracle::complex_mul(a, b, f, cnt)) << "trial " << t;
            }
            EXPECT_EQ(stats.overflow_events, cnt.overflows);
            EXPECT_GT(stats.overflow_events, 0u);
        }
}

TEST(FxComplexMul, SaturationStaysInRange)
{
    Rng rng(5);
    const auto f = fmt("16.8");
    for (int t = 0; t < 10000; ++t)
    {
        const FxComplex a{oracle::random_raw(rng, f), oracle::random_raw(rng, f)};
        const auto p = fx_complex_mul(a, a, f);
        ASSERT_LE(p.re, f.max_raw());
        ASSERT_GE(p.re, f.min_raw());
        ASSERT_LE(p.im, f.max_raw());
        ASSERT_GE(p.im, f.min_raw());
    }
}

TEST(FxHadamard, OnesZerosAndScalarLoop)
{
    Rng rng(3);
    const auto f = fmt("18.12");
    const auto u = random_unit_disc(rng, 33, f);
    const std::vector<FxComplex> ones(33, quantize(cplx(1.0, 0.0), f));
    EXPECT_EQ(fx_hadamard(u, ones, f), u);
    const std::vector<FxComplex> zeros(33);
    EXPECT_EQ(fx_hadamard(zeros, u, f), zeros);
    const auto v = random_vec(rng, 33, f);
    const auto h = fx_hadamard(u, v, f);
    for (std::size_t i = 0; i < u.size(); ++i)
        EXPECT_EQ(h[i], fx_complex_mul(u[i], v[i], f));
    EXPECT_THROW(fx_hadamard(u, std::vector<FxComplex>(3), f), ConfigError);
}

TEST(FxTreeSum, SingleElementAndZeros)
{
    const auto f = fmt("18.12");
    const std::vector<FxComplex> one{{123, -45}};
    const auto r = fx_tree_sum(one, f, {2, 2});
    EXPECT_EQ(r.value, one[0]);
    EXPECT_EQ(r.report.cycles_latency, 2);
    const std::vector<FxComplex> zeros(64);
    const auto z = fx_tree_sum(zeros, f, {3, 2});
    EXPECT_EQ(z.value, FxComplex{});
    EXPECT_EQ(z.report.overflow_events, 0u);
}

TEST(FxTreeSum, Length57MatchesOraclesAndReportIsConsistent)
{
    Rng rng(57);
    const auto f = fmt("18.10");
    for (int fanin : {2, 3, 4})
    {
        const auto v = random_unit_disc(rng, 57, f);
        const auto r = fx_tree_sum(v, f, {1, fanin});
        oracle::Counter cnt;
        EXPECT_EQ(r.value, oracle::tree_sum(v, f, fanin, cnt));
        cplx ref = 0.0;
        for (const auto &z : v)
            ref += to_complex(z, f);
        EXPECT_LE(std::abs(to_complex(r.value, f) - ref), 57 * f.lsb());
        EXPECT_DOUBLE_EQ(r.report.throughput, 1.0 / r.report.initiation_interval);
        EXPECT_EQ(r.report.tree_depth, tree_depth(57, fanin));
        EXPECT_GE(r.report.cycles_latency, r.report.stages);
    }
}

TEST(FxTreeSum, WrapAndSaturateMatchOracleBitForBit)
{
    Rng rng(11);
    for (auto o : {Overflow::saturate, Overflow::wrap})
    {
        const auto f = fmt("16.8", Rounding::half_even, o);
        for (int t = 0; t < 2000; ++t)
        {
            const auto n = static_cast<std::size_t>(1 + rng.below(140));
            const auto v = random_vec(rng, n, f);
            const int fanin = 2 + static_cast<int>(rng.below(3));
            oracle::Counter cnt;
            const auto r = fx_tree_sum(v, f, {0, fanin});
            ASSERT_EQ(r.value, oracle::tree_sum(v, f, fanin, cnt)) << "trial " << t;
            ASSERT_EQ(r.report.overflow_events, cnt.overflows);
        }
    }
}

TEST(FxInnerProduct, UnitVectorAndOrthogonalPatterns)
{
    const auto f = fmt("18.12");
    std::vector<FxComplex> e(16);
    e[5] = quantize(cplx(1.0, 0.0), f);
    EXPECT_EQ(fx_inner_product(e, e, f, {0, 2}).value, quantize(cplx(1.0, 0.0), f));

    std::vector<FxComplex> a(8), b(8);
    for (int i = 0; i < 8; ++i)
    {
        a[static_cast<std::size_t>(i)] = quantize(cplx(1.0, 0.0), f);
        b[static_cast<std::size_t>(i)] = quantize(cplx(i % 2 ? -1.0 : 1.0, 0.0), f);
    }
    for (auto mode : {Accumulation::full_precision, Accumulation::per_product})
        EXPECT_EQ(fx_inner_product(a, b, f, {0, 2}, mode).value, FxComplex{});
    EXPECT_THROW(fx_inner_product(a, std::vector<FxComplex>(3), f, {0, 2}), ConfigError);
}

TEST(FxInnerProduct, SteeringVectorSelfProductNearOne)
{
    const auto layout = build_hybrid_layout(ArrayParams{});
    const auto f = fmt("18.12");
    const auto a = quantize(steering_vector(layout, Direction::from_degrees(45, 45)).values, f);
    for (auto mode : {Accumulation::full_precision, Accumulation::per_product})
    {
        const auto r = fx_inner_product(a, a, f, {4, 2}, mode);
        EXPECT_LE(std::abs(to_complex(r.value, f) - 1.0), 2.0 * 140 * std::ldexp(1.0, -12));
    }
}

TEST(FxInnerProduct, PerProductModeIsTreeSumOfHadamard)
{
    Rng rng(8);
    const auto f = fmt("18.12");
    const auto u = random_unit_disc(rng, 140, f), v = random_unit_disc(rng, 140, f);
    std::vector<FxComplex> vc(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        vc[i] = fx_conj(v[i], f);
    EXPECT_EQ(fx_inner_product(u, v, f, {2, 2}, Accumulation::per_product).value, fx_tree_sum(fx_hadamard(u, vc, f), f, {2, 2}).value);
}

TEST(FxInnerProduct, FullPrecisionMatchesExactOracle)
{
    Rng rng(21);
    for (const char *s : {"16.8", "18.12", "32.16"})
    {
        const auto f = fmt(s);
        for (int t = 0; t < 300; ++t)
        {
            const auto u = random_unit_disc(rng, 140, f), v = random_unit_disc(rng, 140, f);
            oracle::Counter cnt;
            ASSERT_EQ(fx_inner_product(u, v, f, {0, 2}).value, oracle::exact_inner_product(u, v, f, cnt));
        }
    }
}

TEST(FxInnerProduct, ErrorBoundHoldsOverRandomVectors)
{
    Rng rng(140);
    const auto f = fmt("18.12");
    const double bound = inner_product_error_bound(140, f);
    EXPECT_DOUBLE_EQ(bound, 10 * f.lsb());
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t)
    {
        const auto u = random_unit_disc(rng, 140, f), v = random_unit_disc(rng, 140, f);
        worst = std::max(worst, fx_inner_product(u, v, f, {0, 2}).report.max_abs_error);
    }
    EXPECT_LE(worst, bound);
}

TEST(CycleModel, StagesTradeLatencyForThroughput)
{
    for (std::size_t len : {1u, 7u, 57u, 140u, 1024u})
        for (int fanin : {2, 3, 4})
        {
            const int d = tree_depth(len, fanin);
            DatapathReport prev = cycle_model(len, {0, fanin});
            for (int s = 1; s <= d + 2; ++s)
            {
                const auto r = cycle_model(len, {s, fanin});
                EXPECT_GE(r.throughput, prev.throughput);
                EXPECT_GE(r.cycles_latency, prev.cycles_latency);
                EXPECT_GE(r.cycles_latency, r.stages);
                EXPECT_DOUBLE_EQ(r.throughput, 1.0 / r.initiation_interval);
                prev = r;
            }
            EXPECT_EQ(prev.initiation_interval, 1);
            EXPECT_THROW(cycle_model(len, {d + 3, fanin}), ConfigError);
        }
    EXPECT_THROW(cycle_model(8, {0, 1}), ConfigError);
    EXPECT_EQ(tree_depth(140, 2), 8);
    EXPECT_EQ(tree_depth(1, 2), 0);
}

TEST(FxInnerProduct, DeterministicAcrossCalls)
{
    Rng rng(4);
    const auto f = fmt("18.12");
    const auto u = random_unit_disc(rng, 140, f), v = random_unit_disc(rng, 140, f);
    const auto a = fx_inner_product(u, v, f, {3, 2}), b = fx_inner_product(u, v, f, {3, 2});
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.report.max_abs_error, b.report.max_abs_error);
    EXPECT_EQ(a.report.cycles_latency, b.report.cycles_latency);
}
