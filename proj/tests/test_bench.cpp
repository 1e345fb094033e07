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

#include "qsbf/bench.hpp"

using namespace qsbf;

namespace
{
    Scenario small_scene()
    {
        Scenario sc = Scenario::three_source_scene();
        sc.classes = {20.0, 60.0, 5.0};
        sc.snapshots = 200;
        return sc;
    }

    TrainConfig small_train()
    {
        TrainConfig cfg;
        cfg.per_class = 8;
        return cfg;
    }

    struct Trained
    {
        Scenario sc = small_scene();
        ArrayLayout layout = scenario_layout(sc);
        QsSvmModel model = train_doa_model(sc, layout, small_train());
    };

    const Trained &trained()
    {
        static const Trained t;
        return t;
    }
}

TEST(Statistics, AverageRanksAndSpearman)
{
    EXPECT_EQ(average_ranks({10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
    EXPECT_DOUBLE_EQ(spearman_rho({1, 2, 3, 4}, {1, 3, 2, 4}), 0.8);
    EXPECT_DOUBLE_EQ(spearman_rho({1, 2, 3}, {3, 2, 1}), -1.0);
    EXPECT_TRUE(std::isnan(spearman_rho({1, 2, 3}, {1, 1, 1})));
    // ties: ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4)
    EXPECT_NEAR(spearman_rho({1, 2, 3, 4}, {0.1, 0.5, 0.5, 0.9}), 4.5 / std::sqrt(5.0 * 4.5), 1e-15);
    EXPECT_THROW(spearman_rho({1}, {1}), ConfigError);
}

TEST(Statistics, BinomialTailAndMcNemar)
{
    EXPECT_EQ(binomial_upper_tail_half(0, 5), 1.0);
    EXPECT_NEAR(binomial_upper_tail_half(5, 5), 1.0 / 32, 1e-15);
    EXPECT_NEAR(binomial_upper_tail_half(1, 2), 0.75, 1e-15);
    EXPECT_EQ(binomial_upper_tail_half(6, 5), 0.0);

    const auto r = mcnemar_exact({true, true, true, false, true}, {false, false, false, false, true});
    EXPECT_EQ(r.only_first, 3u);
    EXPECT_EQ(r.only_second, 0u);
    EXPECT_NEAR(r.p_greater, 0.125, 1e-15);
    EXPECT_NEAR(r.p_two_sided, 0.25, 1e-15);
    const auto same = mcnemar_exact({true, false}, {true, false});
    EXPECT_EQ(same.p_greater, 1.0);
    EXPECT_EQ(same.p_two_sided, 1.0);
    EXPECT_THROW(mcnemar_exact({true}, {true, false}), ConfigError);
}

TEST(Statistics, WilsonInterval)
{
    const auto a = wilson_interval(0, 10);
    EXPECT_EQ(a.lo, 0.0);
    EXPECT_NEAR(a.hi, 3.8416 / 13.8416, 1e-12);
    const auto b = wilson_interval(5, 10);
    EXPECT_NEAR(b.lo, 0.23659, 1e-5);
    EXPECT_NEAR(b.hi, 0.76341, 1e-5);
    EXPECT_THROW(wilson_interval(0, 0), ConfigError);
}

TEST(ThroughputVsSnr, NoiselessIsPerfectAndDeterministic)
{
    const auto &t = trained();
    const std::vector<double> snr{std::numeric_limits<double>::infinity(), 10.0};
    const auto a = throughput_vs_snr(t.sc, t.layout, t.model, snr, 20);
    EXPECT_EQ(a.metric.values[0], 1.0);
    EXPECT_EQ(a.sweep.values.size(), a.metric.values.size());
    EXPECT_EQ(a.extra[0].values.size(), 2u);
    for (double w : a.wall_times)
        EXPECT_GT(w, 0.0);
    EXPECT_NEAR(a.summary["chance_level"].get<double>(), 1.0 / 9, 1e-15);
    const auto b = throughput_vs_snr(t.sc, t.layout, t.model, snr, 20);
    EXPECT_EQ(a.metric.values, b.metric.values);
}

TEST(ThroughputVsSnr, FarBelowNoiseFloorApproachesChance)
{
    const auto &t = trained();
    Scenario sc = t.sc;
    sc.sources = {sc.sources[0]};
    const auto r = throughput_vs_snr(sc, t.layout, t.model, {-40.0}, 200, true);
    const auto k = static_cast<std::size_t>(std::lround(r.metric.values[0] * 200));
    const auto ci = wilson_interval(k, 200, 2.576);
    EXPECT_LE(ci.lo, 1.0 / 9);
    EXPECT_GE(ci.hi, 1.0 / 9);
}

TEST(LatencyVsBatch, RejectsBadBatchesAndKeepsLabelsDeterministic)
{
    const auto &t = trained();
    const RMat pool = feature_pool(t.sc, t.layout, t.model, 64);
    EXPECT_THROW(latency_vs_batch(t.model, pool, {0}), ConfigError);
    EXPECT_THROW(latency_vs_batch(t.model, pool, {65}), ConfigError);
    EXPECT_THROW(latency_vs_batch(t.model, pool, {}), ConfigError);

    const LatencyOptions opt{1, 256, 2};
    std::vector<std::vector<int>> l1, l2;
    const auto r = latency_vs_batch(t.model, pool, {1, 16, 64}, opt, &l1);
    latency_vs_batch(t.model, pool, {1, 16, 64}, opt, &l2);
    EXPECT_EQ(l1, l2);
    ASSERT_EQ(l1.size(), 3u);
    for (Eigen::Index i = 0; i < 64; ++i)
        EXPECT_EQ(l1[2][static_cast<std::size_t>(i)], classify(t.model, pool.row(i).transpose()).label);
    for (double v : r.metric.values)
        EXPECT_GT(v, 0.0);
    EXPECT_EQ(r.sweep.values, (std::vector<double>{1, 16, 64}));
}

TEST(EfficiencyCompare, IdenticalPatternsScoreEqually)
{
    Scenario sc = small_scene();
    sc.snr_db = 0;
    std::vector<EfficiencyEntry> entries;
    const auto r = efficiency_compare(sc, {"bowtie", "bowtie"}, 40, small_train(), &entries);
    EXPECT_EQ(r.metric.values[0], r.metric.values[1]);
    EXPECT_EQ(entries[0].outcomes, entries[1].outcomes);
    EXPECT_EQ(r.summary["p_two_sided"].get<double>(), 1.0);
}

TEST(EfficiencyCompare, HigherGainTowardSourcesScoresAtLeastAsWell)
{
    Scenario sc = small_scene();
    sc.snr_db = -10;
    const auto r = efficiency_compare(sc, {"isotropic", "cos4"}, 60, small_train());
    EXPECT_GE(r.metric.values[0], r.metric.values[1]);
}

TEST(EfficiencyCompare, RejectsBadPatternLists)
{
    EXPECT_THROW(efficiency_compare(small_scene(), {"bowtie"}, 10, small_train()), ConfigError);
    EXPECT_THROW(efficiency_compare(small_scene(), {"bowtie", "horn"}, 10, small_train()), ConfigError);
}

TEST(DatapathSweep, TradeOffAndErrorBound)
{
    const auto fmt = FixedPointFormat::parse("18.12");
    const std::vector<int> stages{0, 1, 2, 3, 4, 5, 6, 7, 8};
    const auto r = datapath_sweep(140, fmt, stages, 2, 200, 3);
    for (std::size_t i = 1; i < stages.size(); ++i)
    {
        EXPECT_GE(r.metric.values[i], r.metric.values[i - 1]);
        EXPECT_GE(r.extra[0].values[i], r.extra[0].values[i - 1]);
    }
    EXPECT_EQ(r.metric.values.back(), 1.0);
    for (std::size_t i = 0; i < stages.size(); ++i)
        EXPECT_LE(r.extra[2].values[i], r.extra[3].values[i]);
    const auto again = datapath_sweep(140, fmt, stages, 2, 200, 3);
    EXPECT_EQ(r.extra[2].values, again.extra[2].values);
    EXPECT_THROW(datapath_sweep(140, fmt, {11}, 2, 10, 3), ConfigError);
}
