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

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"

#include "qsbf/doa_pipeline.hpp"
#include "qsbf/fixed_datapath.hpp"

namespace qsbf
{
    struct Series
    {
        std::string name;
        std::vector<double> values;
    };

    struct BenchResult
    {
        std::string name;
        Series sweep;
        Series metric;
        std::vector<Series> extra; // same length as sweep
        std::size_t trials = 0;
        std::uint64_t seed = 0;
        std::vector<double> wall_times; // seconds spent per sweep point
        nlohmann::json config;
        nlohmann::json summary;
    };

    /// Ranks with ties replaced by their average rank (1-based).
    inline std::vector<double> average_ranks(const std::vector<double> &v)
    {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();)
        {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
                ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k)
                r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    }

    /// Pearson correlation of the average ranks. NaN when either series is constant.
    inline double spearman_rho(const std::vector<double> &x, const std::vector<double> &y)
    {
        require(x.size() == y.size() && x.size() >= 2, "spearman_rho: need two equal-length series of length >= 2");
        const auto rx = average_ranks(x), ry = average_ranks(y);
        const double n = static_cast<double>(x.size());
        const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
        const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < rx.size(); ++i)
        {
            sxy += (rx[i] - mx) * (ry[i] - my);
            sxx += (rx[i] - mx) * (rx[i] - mx);
            syy += (ry[i] - my) * (ry[i] - my);
        }
        if (sxx == 0.0 || syy == 0.0)
            return std::numeric_limits<double>::quiet_NaN();
        return sxy / std::sqrt(sxx * syy);
    }

    /// P(X >= k) for X ~ Binomial(n, 1/2), summed in log space.
    inline double binomial_upper_tail_half(std::size_t k, std::size_t n)
    {
        if (k == 0)
            return 1.0;
        if (k > n)
            return 0.0;
        double acc = 0.0;
        const double ln_half_n = static_cast<double>(n) * std::log(0.5);
        for (std::size_t i = k; i <= n; ++i)
        {
            const double lc = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(i) + 1.0) -
                              std::lgamma(static_cast<double>(n - i) + 1.0);
            acc += std::exp(lc + ln_half_n);
        }
        return std::min(acc, 1.0);
    }

    struct McNemarResult
    {
        std::size_t only_first = 0;  // first correct, second wrong
        std::size_t only_second = 0; // second correct, first wrong
        double p_greater = 1.0;      // one-sided: first better than second
        double p_two_sided = 1.0;
    };

    /// Exact (binomial) McNemar test on paired outcomes.
    inline McNemarResult mcnemar_exact(const std::vector<bool> &first, const std::vector<bool> &second)
    {
        require(first.size() == second.size(), "mcnemar_exact: outcome vectors differ in length");
        McNemarResult r;
        for (std::size_t i = 0; i < first.size(); ++i)
        {
            r.only_first += first[i] && !second[i];
            r.only_second += !first[i] && second[i];
        }
        const std::size_t n = r.only_first + r.only_second;
        r.p_greater = binomial_upper_tail_half(r.only_first, n);
        r.p_two_sided = std::min(1.0, 2.0 * binomial_upper_tail_half(std::max(r.only_first, r.only_second), n));
        if (n == 0)
            r.p_two_sided = 1.0;
        return r;
    }

    struct Interval
    {
        double lo = 0.0;
        double hi = 1.0;
    };

    /// Wilson score interval for a binomial proportion.
    inline Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.96)
    {
        require(n >= 1, "wilson_interval: need at least one trial");
        const double N = static_cast<double>(n), p = static_cast<double>(successes) / N;
        const double den = 1.0 + z * z / N;
        const double mid = (p + z * z / (2.0 * N)) / den;
        const double half = z * std::sqrt(p * (1.0 - p) / N + z * z / (4.0 * N * N)) / den;
        return {std::max(0.0, mid - half), std::min(1.0, mid + half)};
    }

    inline double seconds_since(std::chrono::steady_clock::time_point t0)
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    // Trial t of a bench run with base seed s uses stream_seed(s, bench_stream, t).
    inline constexpr std::uint64_t bench_stream = 101;

    inline std::size_t nearest_class(const std::vector<double> &classes_deg, double az_deg)
    {
        std::size_t best = 0;
        for (std::size_t i = 1; i < classes_deg.size(); ++i)
            if (std::abs(classes_deg[i] - az_deg) < std::abs(classes_deg[best] - az_deg))
                best = i;
        return best;
    }

    /// Per-trial outcome of the desired-source classification: the desired estimate lands on the
    /// class nearest the true desired azimuth. With `randomize_desired` the desired source is moved
    /// to a uniformly drawn class each trial, so a classifier that ignores its input scores 1/G.
    inline std::vector<bool> desired_outcomes(const Scenario &sc, const ArrayLayout &layout, const QsSvmModel &model,
                                              std::size_t trials, bool randomize_desired = false)
    {
        check_model(model, sc);
        const SpectrumFeatureMap fmap(layout, sc.elevation_deg, model.classes);
        std::vector<bool> ok(trials);
        Scenario trial = sc;
        for (std::size_t t = 0; t < trials; ++t)
        {
            const std::uint64_t s = stream_seed(sc.seed, bench_stream, t);
            if (randomize_desired)
            {
                Rng rng(stream_seed(s, 1));
                const double az = model.classes[static_cast<std::size_t>(rng.below(model.classes.size()))];
                trial.sources[sc.desired_index].direction = Direction::from_degrees(sc.elevation_deg, az);
            }
            const auto X = simulate(trial, layout, s);
            const auto cls = classify(model, fmap(X));
            const auto doa = doa_from_votes(model.classes, cls.votes, trial.sources.size(), trial.elevation_deg,
                                            trial.desired_direction());
            const auto truth = nearest_class(model.classes, rad2deg(trial.desired_direction().theta));
            ok[t] = static_cast<std::size_t>(doa.desired_estimate().class_index) == truth;
        }
        return ok;
    }

    /// Default scene of the throughput, latency and efficiency benches: the three-source scene with
    /// 16 snapshots and one Rayleigh channel draw per source and trial.
    inline Scenario bench_scene()
    {
        Scenario sc = Scenario::three_source_scene();
        sc.snapshots = 16;
        sc.rician_k = 0.0;
        return sc;
    }

    inline nlohmann::json scenario_summary(const Scenario &sc)
    {
        nlohmann::json src = nlohmann::json::array();
        for (const auto &s : sc.sources)
            src.push_back({{"el_deg", rad2deg(s.direction.phi)}, {"az_deg", rad2deg(s.direction.theta)},
                           {"power_db", 20.0 * std::log10(std::max(s.amplitude, 1e-300))}});
        nlohmann::json j = {{"gain", sc.gain},           {"sources", src},
                            {"desired_index", sc.desired_index}, {"snapshots", sc.snapshots},
                            {"seed", sc.seed},           {"elevation_deg", sc.elevation_deg},
                            {"classes", {sc.classes.start, sc.classes.stop, sc.classes.step}}};
        j["snr_db"] = std::isinf(sc.snr_db) ? nlohmann::json("inf") : nlohmann::json(sc.snr_db);
        j["rician_k"] = sc.rician_k ? nlohmann::json(*sc.rician_k) : nlohmann::json(nullptr);
        return j;
    }

    /// Success rate of the desired-source classification per SNR. The same trial seeds are reused at
    /// every SNR point.
    inline BenchResult throughput_vs_snr(const Scenario &sc, const ArrayLayout &layout, const QsSvmModel &model,
                                         const std::vector<double> &snr_list, std::size_t trials,
                                         bool randomize_desired = false)
    {
        require(!snr_list.empty(), "throughput: empty SNR list");
        require(trials >= 1, "throughput: trials must be >= 1");
        BenchResult r;
        r.name = "throughput";
        r.sweep = {"snr_db", snr_list};
        r.metric = {"success_rate", {}};
        r.extra = {{"ci_lo", {}}, {"ci_hi", {}}};
        r.trials = trials;
        r.seed = sc.seed;
        r.config = {{"scenario", scenario_summary(sc)}, {"trials", trials}, {"randomize_desired", randomize_desired}};
        Scenario point = sc;
        for (double snr : snr_list)
        {
            const auto t0 = std::chrono::steady_clock::now();
            point.snr_db = snr;
            const auto ok = desired_outcomes(point, layout, model, trials, randomize_desired);
            const auto k = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), true));
            const auto ci = wilson_interval(k, trials);
            r.metric.values.push_back(static_cast<double>(k) / static_cast<double>(trials));
            r.extra[0].values.push_back(ci.lo);
            r.extra[1].values.push_back(ci.hi);
            r.wall_times.push_back(std::max(seconds_since(t0), 1e-9));
        }
        std::vector<double> finite_x, finite_y;
        for (std::size_t i = 0; i < snr_list.size(); ++i)
            if (std::isfinite(snr_list[i]))
            {
                finite_x.push_back(snr_list[i]);
                finite_y.push_back(r.metric.values[i]);
            }
        const double rho = finite_x.size() >= 2 ? spearman_rho(finite_x, finite_y) : std::numeric_limits<double>::quiet_NaN();
        r.summary = {{"spearman_rho", std::isnan(rho) ? nlohmann::json(nullptr) : nlohmann::json(rho)},
                     {"chance_level", 1.0 / static_cast<double>(model.num_classes())}};
        return r;
    }

    /// Feature vectors of `count` simulated trials of `sc`, one per row.
    inline RMat feature_pool(const Scenario &sc, const ArrayLayout &layout, const QsSvmModel &model, std::size_t count)
    {
        check_model(model, sc);
        const SpectrumFeatureMap fmap(layout, sc.elevation_deg, model.classes);
        RMat F(static_cast<Eigen::Index>(count), fmap.dim());
        for (std::size_t t = 0; t < count; ++t)
            F.row(static_cast<Eigen::Index>(t)) = fmap(simulate(sc, layout, stream_seed(sc.seed, bench_stream, t))).transpose();
        return F;
    }

    struct LatencyOptions
    {
        std::size_t runs = 5;                  // median over runs
        std::size_t samples_per_run = 16384;   // each run classifies at least this many samples per size
        std::size_t rounds = 16;               // sizes are interleaved in this many rounds within a run
    };

    /// Per-sample wall-clock latency of batched classification, including loading the surfaces into
    /// the stacked layout once per batch. Within a run the batch sizes are visited in interleaved rounds,
    /// so slow drift of the machine affects each size alike; a run classifies about `samples_per_run`
    /// samples per size. One warm-up batch per size is discarded and the median over runs is reported.
    /// Labels of the warm-up pass are returned so callers can check determinism apart from timing.
    inline BenchResult latency_vs_batch(const QsSvmModel &model, const RMat &pool, const std::vector<std::size_t> &batch_sizes,
                                        const LatencyOptions &opt = {}, std::vector<std::vector<int>> *labels = nullptr)
    {
        require(!batch_sizes.empty(), "latency: empty batch-size list");
        require(opt.runs >= 1 && opt.rounds >= 1, "latency: runs and rounds must be >= 1");
        for (auto b : batch_sizes)
        {
            require(b >= 1, "latency: batch size must be >= 1");
            require(static_cast<Eigen::Index>(b) <= pool.rows(), "latency: batch size exceeds the feature pool");
        }
        BenchResult r;
        r.name = "latency";
        r.sweep = {"batch_size", {}};
        r.metric = {"per_sample_seconds", {}};
        r.extra = {{"per_batch_seconds", {}}};
        r.trials = opt.runs;
        r.config = {{"runs", opt.runs}, {"samples_per_run", opt.samples_per_run}, {"rounds", opt.rounds}, {"classes", model.num_classes()},
                    {"feature_dim", model.dim()}};
        if (labels)
            labels->clear();

        const std::size_t S = batch_sizes.size();
        std::vector<RMat> batches;
        for (auto b : batch_sizes)
        {
            batches.push_back(pool.topRows(static_cast<Eigen::Index>(b)));
            const auto first = classify_batch(model, batches.back());
            if (labels)
                labels->push_back(first);
        }
        std::vector<std::vector<double>> per_sample(S);
        std::vector<double> total(S, 0.0);
        volatile int sink = 0;
        for (std::size_t run = 0; run < opt.runs; ++run)
        {
            std::vector<double> elapsed(S, 0.0);
            std::vector<std::size_t> done(S, 0);
            for (std::size_t round = 0; round < opt.rounds; ++round)
                for (std::size_t i = 0; i < S; ++i)
                {
                    const std::size_t b = batch_sizes[i];
                    const std::size_t chunk = std::max<std::size_t>(1, opt.samples_per_run / opt.rounds);
                    const std::size_t reps = std::max<std::size_t>(1, (chunk + b - 1) / b);
                    const auto t0 = std::chrono::steady_clock::now();
                    for (std::size_t k = 0; k < reps; ++k)
                        sink = sink + classify_batch(model, batches[i]).front();
                    elapsed[i] += seconds_since(t0);
                    done[i] += reps * b;
                }
            for (std::size_t i = 0; i < S; ++i)
            {
                total[i] += elapsed[i];
                per_sample[i].push_back(std::max(elapsed[i], 1e-12) / static_cast<double>(done[i]));
            }
        }
        (void)sink;
        for (std::size_t i = 0; i < S; ++i)
        {
            auto &v = per_sample[i];
            std::sort(v.begin(), v.end());
            const double med = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
            r.sweep.values.push_back(static_cast<double>(batch_sizes[i]));
            r.metric.values.push_back(med);
            r.extra[0].values.push_back(med * static_cast<double>(batch_sizes[i]));
            r.wall_times.push_back(total[i]);
        }
        return r;
    }

    struct EfficiencyEntry
    {
        std::string gain;
        std::vector<bool> outcomes;
    };

    /// Desired-source accuracy per element gain pattern on identical seeds. A model is trained for each
    /// pattern on that pattern's array. The first two patterns are compared with an exact McNemar test.
    inline BenchResult efficiency_compare(const Scenario &sc, const std::vector<std::string> &gains, std::size_t trials,
                                          const TrainConfig &train, std::vector<EfficiencyEntry> *entries = nullptr)
    {
        require(gains.size() >= 2, "efficiency: at least two gain patterns are required");
        for (const auto &g : gains)
            (void)GainPattern::by_name(g);
        require(trials >= 1, "efficiency: trials must be >= 1");
        BenchResult r;
        r.name = "efficiency";
        r.sweep = {"pattern_index", {}};
        r.metric = {"accuracy", {}};
        r.trials = trials;
        r.seed = sc.seed;
        r.config = {{"scenario", scenario_summary(sc)}, {"trials", trials}, {"gains", gains},
                    {"train", {{"per_class", train.per_class}, {"snr_lo", train.snr_lo}, {"snr_hi", train.snr_hi},
                               {"snapshots", train.snapshots}, {"seed", train.seed},
                               {"eta", train.hyper.slack_penalty}, {"lambda", train.hyper.quad_regularizer}}}};
        std::vector<EfficiencyEntry> local;
        for (std::size_t i = 0; i < gains.size(); ++i)
        {
            const auto t0 = std::chrono::steady_clock::now();
            Scenario s = sc;
            s.gain = gains[i];
            const auto layout = scenario_layout(s);
            const auto model = train_doa_model(s, layout, train);
            auto ok = desired_outcomes(s, layout, model, trials);
            r.sweep.values.push_back(static_cast<double>(i));
            r.metric.values.push_back(static_cast<double>(std::count(ok.begin(), ok.end(), true)) / static_cast<double>(trials));
            r.wall_times.push_back(std::max(seconds_since(t0), 1e-9));
            local.push_back({gains[i], std::move(ok)});
        }
        const auto mc = mcnemar_exact(local[0].outcomes, local[1].outcomes);
        r.summary = {{"first", gains[0]},
                     {"second", gains[1]},
                     {"only_first_correct", mc.only_first},
                     {"only_second_correct", mc.only_second},
                     {"p_first_better", mc.p_greater},
                     {"p_two_sided", mc.p_two_sided},
                     {"note", "gain patterns are analytic proxies; absolute accuracies depend on the element models"}};
        if (entries)
            *entries = std::move(local);
        return r;
    }

    /// Cycle model and worst-case error of the fixed-point inner product over random unit-disc vectors
    /// scaled by 1/sqrt(len), for each pipeline depth.
    inline BenchResult datapath_sweep(std::size_t len, const FixedPointFormat &fmt, const std::vector<int> &stages, int fanin,
                                      std::size_t vectors, std::uint64_t seed,
                                      Accumulation mode = Accumulation::full_precision)
    {
        require(len >= 1, "datapath: length must be >= 1");
        require(!stages.empty(), "datapath: empty stage list");
        require(vectors >= 1, "datapath: need at least one test vector");
        fmt.validate();
        BenchResult r;
        r.name = "datapath";
        r.sweep = {"stages", {}};
        r.metric = {"throughput", {}};
        r.extra = {{"latency_cycles", {}}, {"initiation_interval", {}}, {"max_abs_error", {}}, {"error_bound", {}},
                   {"overflow_events", {}}};
        r.trials = vectors;
        r.seed = seed;
        r.config = {{"len", len}, {"fmt", fmt.to_string()}, {"fanin", fanin}, {"vectors", vectors},
                    {"accumulation", mode == Accumulation::full_precision ? "full_precision" : "per_product"}};

        std::vector<std::vector<FxComplex>> us(vectors), vs(vectors);
        const double scale = 1.0 / std::sqrt(static_cast<double>(len));
        for (std::size_t t = 0; t < vectors; ++t)
        {
            Rng rng(stream_seed(seed, bench_stream, t));
            CVec u(static_cast<Eigen::Index>(len)), v(static_cast<Eigen::Index>(len));
            for (Eigen::Index i = 0; i < u.size(); ++i)
            {
                u[i] = std::polar(std::sqrt(rng.uniform()) * scale, rng.uniform(0.0, 2.0 * pi));
                v[i] = std::polar(std::sqrt(rng.uniform()) * scale, rng.uniform(0.0, 2.0 * pi));
            }
            us[t] = quantize(u, fmt);
            vs[t] = quantize(v, fmt);
        }
        for (int s : stages)
        {
            const auto t0 = std::chrono::steady_clock::now();
            const PipelineConfig cfg{s, fanin};
            double worst = 0.0;
            std::uint64_t overflows = 0;
            DatapathReport rep;
            for (std::size_t t = 0; t < vectors; ++t)
            {
                const auto res = fx_inner_product(us[t], vs[t], fmt, cfg, mode);
                worst = std::max(worst, res.report.max_abs_error);
                overflows += res.report.overflow_events;
                rep = res.report;
            }
            r.sweep.values.push_back(s);
            r.metric.values.push_back(rep.throughput);
            r.extra[0].values.push_back(rep.cycles_latency);
            r.extra[1].values.push_back(rep.initiation_interval);
            r.extra[2].values.push_back(worst);
            r.extra[3].values.push_back(inner_product_error_bound(len, fmt));
            r.extra[4].values.push_back(static_cast<double>(overflows));
            r.wall_times.push_back(std::max(seconds_since(t0), 1e-9));
        }
        return r;
    }
}
