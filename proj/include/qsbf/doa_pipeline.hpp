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
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "qsbf/array_geometry.hpp"
#include "qsbf/beamformer.hpp"
#include "qsbf/common.hpp"
#include "qsbf/error.hpp"
#include "qsbf/qs_svm.hpp"
#include "qsbf/signal_sim.hpp"

namespace qsbf
{
    /// Inclusive start:stop:step grid in degrees.
    struct AngleGrid
    {
        double start = 0.0;
        double stop = 90.0;
        double step = 5.0;

        void validate(const std::string &what) const
        {
            require(std::isfinite(start) && std::isfinite(stop) && std::isfinite(step), what + ": grid must be finite");
            require(step > 0.0, what + ": grid step must be > 0");
            require(stop >= start, what + ": grid stop must be >= start");
        }

        std::vector<double> values() const
        {
            validate("angle grid");
            const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i)
                v[i] = start + step * static_cast<double>(i);
            return v;
        }

        /// Parses "start:stop:step".
        static AngleGrid parse(const std::string &s)
        {
            AngleGrid g;
            const auto a = s.find(':');
            const auto b = a == std::string::npos ? a : s.find(':', a + 1);
            require(a != std::string::npos && b != std::string::npos, "angle grid must look like start:stop:step, got '" + s + "'");
            try
            {
                g.start = std::stod(s.substr(0, a));
                g.stop = std::stod(s.substr(a + 1, b - a - 1));
                g.step = std::stod(s.substr(b + 1));
            }
            catch (const std::exception &)
            {
                throw ConfigError("angle grid must look like start:stop:step, got '" + s + "'");
            }
            g.validate("angle grid '" + s + "'");
            return g;
        }
    };

    /// One simulated scene. Noise is receiver-referred: sigma^2 = 10^(-snr_db / 10) relative to a
    /// unit-power source, so element gain patterns change the effective SNR.
    struct Scenario
    {
        ArrayParams array;
        std::string gain = "isotropic";
        std::vector<SourceSpec> sources;
        std::size_t desired_index = 0;
        double snr_db = 10.0;
        std::size_t snapshots = 1000;
        std::uint64_t seed = 7;
        double sample_rate = 1.0e6;
        double elevation_deg = 45.0; // the theta cut at fixed phi
        AngleGrid classes{0.0, 90.0, 5.0};
        AngleGrid pattern_grid{0.0, 90.0, 0.25};
        // Block fading: when set, every source gets one Rician channel gain per trial with this
        // K-factor (linear, 0 = Rayleigh) and unit mean power.
        std::optional<double> rician_k;

        double noise_variance() const
        {
            if (std::isinf(snr_db) && snr_db > 0.0)
                return 0.0;
            return std::pow(10.0, -snr_db / 10.0);
        }

        Direction desired_direction() const { return sources.at(desired_index).direction; }

        void validate() const
        {
            array.validate();
            require(!sources.empty(), "scenario: at least one source is required");
            require(desired_index < sources.size(), "scenario: desired_index " + std::to_string(desired_index) +
                                                        " is out of range for " + std::to_string(sources.size()) + " sources");
            require(!std::isnan(snr_db) && snr_db > -std::numeric_limits<double>::infinity(), "scenario: snr_db must be a number or +inf");
            require(snapshots >= 1, "scenario: snapshots must be >= 1");
            require(sample_rate > 0.0, "scenario: sample_rate must be > 0");
            require(elevation_deg >= 0.0 && elevation_deg <= 180.0, "scenario: elevation must be within [0, 180] degrees");
            classes.validate("scenario classes");
            pattern_grid.validate("scenario pattern grid");
            for (const auto &s : sources)
            {
                s.validate();
                const double az = rad2deg(s.direction.theta);
                require(az >= classes.start - 1e-9 && az <= classes.stop + 1e-9,
                        "scenario: source azimuth " + std::to_string(az) + " lies outside the class grid");
            }
            require(!rician_k || (std::isfinite(*rician_k) && *rician_k >= 0.0), "scenario: rician_k must be >= 0");
            (void)GainPattern::by_name(gain);
        }

        /// Source k at (elevation, az_deg) with power_db relative to the unit reference.
        static SourceSpec make_source(double el_deg, double az_deg, double power_db, std::size_t k, double sample_rate)
        {
            SourceSpec s;
            s.direction = Direction::from_degrees(el_deg, az_deg);
            s.amplitude = std::pow(10.0, power_db / 20.0);
            s.frequency = (0.05 + 0.11 * static_cast<double>(k)) * sample_rate;
            return s;
        }

        /// 45 deg desired with interferers at 30 and 50 deg, all at elevation 45 deg.
        static Scenario three_source_scene()
        {
            Scenario sc;
            for (double az : {45.0, 30.0, 50.0})
                sc.sources.push_back(make_source(45.0, az, 0.0, sc.sources.size(), sc.sample_rate));
            return sc;
        }
    };

    inline ArrayLayout scenario_layout(const Scenario &sc) { return build_hybrid_layout(sc.array, GainPattern::by_name(sc.gain)); }

    // Source k of trial `seed` draws its start phase and fading gain from stream source_stream + k.
    inline constexpr std::uint64_t source_stream = 16;

    inline cplx rician_gain(double k_factor, Rng &rng)
    {
        const double los = std::sqrt(k_factor / (k_factor + 1.0));
        return los + rng.complex_normal(1.0 / (k_factor + 1.0));
    }

    /// Each source gets a uniformly random start phase per seed on top of its configured phase,
    /// and a fading gain when the scenario asks for one.
    inline SnapshotMatrix simulate(const Scenario &sc, const ArrayLayout &layout, std::uint64_t seed)
    {
        std::vector<SourceSpec> src = sc.sources;
        for (std::size_t k = 0; k < src.size(); ++k)
        {
            Rng rng(stream_seed(seed, source_stream + k));
            src[k].phase += rng.uniform(0.0, 2.0 * pi);
            if (sc.rician_k)
                src[k].channel_gain *= rician_gain(*sc.rician_k, rng);
        }
        return collect_plane_waves(layout, src, sc.snapshots, {sc.noise_variance(), seed}, sc.sample_rate);
    }

    inline SnapshotMatrix simulate(const Scenario &sc, const ArrayLayout &layout) { return simulate(sc, layout, sc.seed); }

    /// Capon (MVDR) spatial spectrum 1 / (a^H R^-1 a) on the columns of `A`. R = X X^H / L + delta I with
    /// delta = loading_rel * trace / N, factored as the triangular factor of the stacked matrix
    /// [X^H / sqrt(L); sqrt(delta) I]; Q is never formed.
    inline RVec capon_spectrum(const SnapshotMatrix &X, const CMat &A, double loading_rel = 1e-3)
    {
        const Eigen::Index N = X.elements(), L = X.snapshots();
        require(A.rows() == N, "capon_spectrum: steering matrix has the wrong number of rows");
        const double tr = X.data.squaredNorm() / static_cast<double>(L);
        if (!(tr > 0.0))
            throw NumericalError("capon_spectrum: snapshot matrix has zero power");
        const double delta = loading_rel * tr / static_cast<double>(N);

        CMat S(L + N, N);
        S.topRows(L) = X.data.adjoint() / std::sqrt(static_cast<double>(L));
        S.bottomRows(N) = CMat::Identity(N, N) * std::sqrt(delta);
        Eigen::HouseholderQR<CMat> qr(std::move(S));
        const CMat R = qr.matrixQR().topRows(N).triangularView<Eigen::Upper>();
        detail::check_pivots(R);

        // a^H (R^H R)^-1 a = ||R^-H a||^2
        const CMat Y = R.adjoint().triangularView<Eigen::Lower>().solve(A);
        RVec p(A.cols());
        for (Eigen::Index g = 0; g < A.cols(); ++g)
            p[g] = 1.0 / Y.col(g).squaredNorm();
        return p;
    }

    /// Capon spectrum on the class grid in dB below its peak, clipped at floor_db and mapped to [0, 1].
    struct SpectrumFeatureMap
    {
        static constexpr const char *tag = "capon-spectrum-v1";
        std::vector<Direction> grid;
        CMat steering;
        double loading_rel = 1e-3;
        double floor_db = -30.0;

        SpectrumFeatureMap(const ArrayLayout &layout, double elevation_deg, const std::vector<double> &az_deg)
        {
            for (double az : az_deg)
                grid.push_back(Direction::from_degrees(elevation_deg, az));
            steering = steering_matrix(layout, grid);
        }

        Eigen::Index dim() const { return steering.cols(); }

        RVec operator()(const SnapshotMatrix &X) const
        {
            const RVec p = capon_spectrum(X, steering, loading_rel);
            const double peak = p.maxCoeff();
            RVec f(p.size());
            for (Eigen::Index g = 0; g < p.size(); ++g)
            {
                const double db = std::max(10.0 * std::log10(p[g] / peak), floor_db);
                f[g] = (db - floor_db) / -floor_db;
            }
            return f;
        }
    };

    /// Labeled simulations for DoA training: `per_class` single-source scenes per class angle, each at
    /// an SNR drawn uniformly from [snr_lo, snr_hi].
    struct TrainConfig
    {
        std::size_t per_class = 12;
        double snr_lo = -10.0;
        double snr_hi = 20.0;
        std::size_t snapshots = 200;
        std::uint64_t seed = 1;
        QsSvmHyperparams hyper{10.0, 1e-3};

        void validate() const
        {
            require(per_class >= 1, "train: per_class must be >= 1");
            require(snapshots >= 1, "train: snapshots must be >= 1");
            require(std::isfinite(snr_lo) && std::isfinite(snr_hi) && snr_lo <= snr_hi, "train: need finite snr_lo <= snr_hi");
            hyper.validate();
        }
    };

    // Training sample r of class g uses seed stream_seed(cfg.seed, training_stream, g * per_class + r).
    inline constexpr std::uint64_t training_stream = 11;

    struct TrainingSet
    {
        RMat X;
        std::vector<int> labels;
    };

    inline TrainingSet make_training_set(const Scenario &sc, const ArrayLayout &layout, const TrainConfig &cfg)
    {
        cfg.validate();
        const auto az = sc.classes.values();
        const SpectrumFeatureMap fmap(layout, sc.elevation_deg, az);
        Scenario one = sc;
        one.snapshots = cfg.snapshots;
        one.rician_k.reset();
        TrainingSet ts{RMat(static_cast<Eigen::Index>(az.size() * cfg.per_class), fmap.dim()), {}};
        Eigen::Index row = 0;
        for (std::size_t g = 0; g < az.size(); ++g)
            for (std::size_t r = 0; r < cfg.per_class; ++r, ++row)
            {
                const std::uint64_t s = stream_seed(cfg.seed, training_stream, g * cfg.per_class + r);
                Rng rng(s);
                one.snr_db = rng.uniform(cfg.snr_lo, cfg.snr_hi);
                one.sources = {Scenario::make_source(sc.elevation_deg, az[g], 0.0, 0, sc.sample_rate)};
                ts.X.row(row) = fmap(simulate(one, layout, s)).transpose();
                ts.labels.push_back(static_cast<int>(g));
            }
        return ts;
    }

    inline QsSvmModel train_doa_model(const Scenario &sc, const ArrayLayout &layout, const TrainConfig &cfg,
                                      const QpOptions &opt = {})
    {
        const TrainingSet ts = make_training_set(sc, layout, cfg);
        return train_multiclass(ts.X, ts.labels, sc.classes.values(), cfg.hyper, SpectrumFeatureMap::tag, opt);
    }

    struct DoaEstimate
    {
        Direction direction;
        int class_index = 0;
        int votes = 0;
    };

    struct DoaResult
    {
        std::vector<double> classes_deg; // azimuth per class
        std::vector<int> votes;          // tally per class
        std::vector<DoaEstimate> estimates;
        std::size_t desired = 0;            // index into estimates
        std::vector<std::size_t> interferers; // indices into estimates

        const DoaEstimate &desired_estimate() const { return estimates.at(desired); }
    };

    inline void check_model(const QsSvmModel &model, const Scenario &sc)
    {
        const auto az = sc.classes.values();
        bool same = model.feature_map == SpectrumFeatureMap::tag && model.classes.size() == az.size() &&
                    model.dim() == static_cast<Eigen::Index>(az.size());
        for (std::size_t i = 0; same && i < az.size(); ++i)
            same = std::abs(model.classes[i] - az[i]) < 1e-9;
        require(same, "doa: the model was not trained for this scenario's class grid (" + std::to_string(sc.classes.start) +
                          ":" + std::to_string(sc.classes.stop) + ":" + std::to_string(sc.classes.step) +
                          "); run `train` with a matching --classes first");
    }

    /// K estimates = the K classes with the most votes (ties to the lower class index); the desired
    /// estimate is the one closest in azimuth to `desired_dir`.
    inline DoaResult doa_from_votes(const std::vector<double> &classes_deg, std::vector<int> votes, std::size_t K,
                                    double elevation_deg, Direction desired_dir)
    {
        require(K >= 1 && K <= classes_deg.size(), "doa: number of sources must be between 1 and the class count");
        std::vector<int> order(classes_deg.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return votes[static_cast<std::size_t>(a)] > votes[static_cast<std::size_t>(b)]; });

        DoaResult r;
        r.classes_deg = classes_deg;
        for (std::size_t k = 0; k < K; ++k)
        {
            const int c = order[k];
            r.estimates.push_back({Direction::from_degrees(elevation_deg, classes_deg[static_cast<std::size_t>(c)]), c,
                                   votes[static_cast<std::size_t>(c)]});
        }
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k)
        {
            const double d = std::abs(r.estimates[k].direction.theta - desired_dir.theta);
            if (d < best)
            {
                best = d;
                r.desired = k;
            }
        }
        for (std::size_t k = 0; k < K; ++k)
            if (k != r.desired)
                r.interferers.push_back(k);
        r.votes = std::move(votes);
        return r;
    }

    inline DoaResult run_doa(const Scenario &sc, const ArrayLayout &layout, const QsSvmModel &model, const SnapshotMatrix &X)
    {
        check_model(model, sc);
        const SpectrumFeatureMap fmap(layout, sc.elevation_deg, model.classes);
        const auto cls = classify(model, fmap(X));
        return doa_from_votes(model.classes, cls.votes, sc.sources.size(), sc.elevation_deg, sc.desired_direction());
    }

    inline DoaResult run_doa(const Scenario &sc, const ArrayLayout &layout, const QsSvmModel &model)
    {
        return run_doa(sc, layout, model, simulate(sc, layout));
    }

    struct SynthesisResult
    {
        BeamWeights weights;
        LcmvConstraints constraints;
        BeamPattern pattern;
    };

    /// LCMV with unit response toward the desired estimate and nulls toward each distinct interferer
    /// estimate; MVDR when no interferer remains. The pattern is a theta cut at the scenario elevation,
    /// with 0 dB defined as the response toward the desired estimate.
    inline SynthesisResult synthesize_pattern(const Scenario &sc, const ArrayLayout &layout, const DoaResult &doa,
                                              const CovarianceMatrix &R, SolvePath path = SolvePath::qless_qr)
    {
        require(!doa.estimates.empty(), "synthesize_pattern: DoA result has no estimates");
        const Direction want = doa.desired_estimate().direction;
        SynthesisResult out;
        out.constraints.directions.push_back(want);
        std::vector<cplx> f{1.0};
        for (auto k : doa.interferers)
        {
            const Direction d = doa.estimates.at(k).direction;
            const bool dup = std::any_of(out.constraints.directions.begin(), out.constraints.directions.end(), [&](const Direction &e) {
                return std::abs(e.phi - d.phi) < 1e-12 && std::abs(e.theta - d.theta) < 1e-12;
            });
            if (!dup)
            {
                out.constraints.directions.push_back(d);
                f.push_back(0.0);
            }
        }
        out.constraints.responses = Eigen::Map<const CVec>(f.data(), static_cast<Eigen::Index>(f.size()));

        if (out.constraints.directions.size() == 1)
            out.weights = mvdr_weights(R, steering_vector(layout, want), path);
        else
            out.weights = lcmv_weights(R, layout, out.constraints, path);

        const auto grid = theta_sweep(sc.elevation_deg, sc.pattern_grid.start, sc.pattern_grid.stop, sc.pattern_grid.step);
        out.pattern = beam_pattern_referenced(out.weights, layout, grid, want);
        return out;
    }

    inline SynthesisResult synthesize_pattern(const Scenario &sc, const ArrayLayout &layout, const DoaResult &doa,
                                              const SnapshotMatrix &X)
    {
        return synthesize_pattern(sc, layout, doa, sample_covariance(X));
    }
}
