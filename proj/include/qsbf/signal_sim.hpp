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

#include <optional>
#include <span>
#include <vector>

#include "qsbf/array_geometry.hpp"
#include "qsbf/common.hpp"
#include "qsbf/error.hpp"

namespace qsbf
{
    /// Narrowband source. Without explicit samples the waveform is the complex baseband
    /// sinusoid amplitude * exp(j (2 pi f l / fs + phase)), scaled by an optional channel gain.
    struct SourceSpec
    {
        Direction direction;
        double amplitude = 1.0;
        double frequency = 1.0e5; // Hz
        double phase = 0.0;       // rad
        cplx channel_gain = 1.0;  // line-of-sight channel reduces to one complex gain
        std::optional<std::vector<cplx>> samples;

        double power() const { return amplitude * amplitude * std::norm(channel_gain); }

        void validate() const
        {
            require(std::isfinite(direction.phi) && std::isfinite(direction.theta), "source: direction must be finite");
            require(std::isfinite(amplitude) && amplitude >= 0.0, "source: amplitude must be >= 0");
            require(std::isfinite(frequency) && frequency > 0.0, "source: frequency must be > 0");
            require(std::isfinite(phase), "source: phase must be finite");
            require(std::isfinite(channel_gain.real()) && std::isfinite(channel_gain.imag()), "source: channel gain must be finite");
            if (samples)
                for (const auto &s : *samples)
                    require(std::isfinite(s.real()) && std::isfinite(s.imag()), "source: NaN or infinite sample");
        }

        cplx sample(std::size_t l, double sample_rate) const
        {
            if (samples)
            {
                require(l < samples->size(), "source: fewer samples than snapshots");
                return channel_gain * (*samples)[l];
            }
            const double arg = 2.0 * pi * frequency * static_cast<double>(l) / sample_rate + phase;
            return channel_gain * std::polar(amplitude, arg);
        }
    };

    struct NoiseSpec
    {
        double variance = 0.0; // sigma^2
        std::uint64_t seed = 0;
    };

    struct SnapshotMatrix
    {
        CMat data; // elements x snapshots
        double sample_rate = 1.0e6;
        std::uint64_t seed = 0;

        Eigen::Index elements() const { return data.rows(); }
        Eigen::Index snapshots() const { return data.cols(); }
    };

    struct CovarianceMatrix
    {
        CMat data;
        double loading = 0.0;

        Eigen::Index size() const { return data.rows(); }
    };

    // Stream identifiers for stream_seed(): noise for snapshot l uses (seed, noise_stream, l).
    inline constexpr std::uint64_t noise_stream = 0;
    inline constexpr std::uint64_t awgn_stream = 2;

    /// X[:, l] = sum_k a(dir_k) s_k[l] + n[l], with a the raw (gain-weighted, unnormalized) element
    /// response and n circular complex Gaussian with covariance sigma^2 I. The noise of column l is
    /// drawn from its own stream, so any column can be regenerated independently.
    inline SnapshotMatrix collect_plane_waves(const ArrayLayout &layout, std::span<const SourceSpec> sources,
                                              std::size_t n_snapshots, const NoiseSpec &noise,
                                              double sample_rate = 1.0e6)
    {
        require(n_snapshots >= 1, "collect_plane_waves: need at least one snapshot");
        require(noise.variance >= 0.0 && std::isfinite(noise.variance), "collect_plane_waves: noise variance must be >= 0");
        require(!sources.empty() || noise.variance > 0.0, "collect_plane_waves: no sources and no noise");
        require(sample_rate > 0.0, "collect_plane_waves: sample rate must be positive");
        for (const auto &s : sources)
            s.validate();

        const auto N = static_cast<Eigen::Index>(layout.size());
        const auto L = static_cast<Eigen::Index>(n_snapshots);
        SnapshotMatrix X{CMat::Zero(N, L), sample_rate, noise.seed};

        for (const auto &src : sources)
        {
            const CVec a = element_response(layout, src.direction);
            CVec s(L);
            for (Eigen::Index l = 0; l < L; ++l)
                s[l] = src.sample(static_cast<std::size_t>(l), sample_rate);
            X.data.noalias() += a * s.transpose();
        }

        if (noise.variance > 0.0)
        {
            for (Eigen::Index l = 0; l < L; ++l)
            {
                Rng rng(stream_seed(noise.seed, noise_stream, static_cast<std::uint64_t>(l)));
                for (Eigen::Index n = 0; n < N; ++n)
                    X.data(n, l) += rng.complex_normal(noise.variance);
            }
        }
        return X;
    }

    /// 1e-6 * trace(X X^H / L) / N
    inline double default_loading(const SnapshotMatrix &X)
    {
        if (X.data.size() == 0)
            return 0.0;
        const double tr = X.data.squaredNorm() / static_cast<double>(X.snapshots());
        return 1.0e-6 * tr / static_cast<double>(X.elements());
    }

    /// R = X X^H / L + loading I, symmetrized so that R == R^H exactly.
    inline CovarianceMatrix sample_covariance(const SnapshotMatrix &X, double loading)
    {
        require(X.snapshots() >= 1, "sample_covariance: need at least one snapshot");
        require(loading >= 0.0 && std::isfinite(loading), "sample_covariance: loading must be >= 0");
        const auto N = X.elements();
        CMat R = (X.data * X.data.adjoint()) / static_cast<double>(X.snapshots());
        CMat H = 0.5 * (R + R.adjoint());
        for (Eigen::Index i = 0; i < N; ++i)
            H(i, i) = cplx(H(i, i).real() + loading, 0.0);
        return {std::move(H), loading};
    }

    inline CovarianceMatrix sample_covariance(const SnapshotMatrix &X) { return sample_covariance(X, default_loading(X)); }

    /// Adds white noise at `snr_db` below the empirical mean power of X. +inf returns X unchanged.
    inline SnapshotMatrix apply_awgn(const SnapshotMatrix &X, double snr_db, std::uint64_t seed)
    {
        require(!std::isnan(snr_db), "apply_awgn: snr_db is NaN");
        if (std::isinf(snr_db) && snr_db > 0.0)
            return X;
        require(X.data.size() > 0, "apply_awgn: empty snapshot matrix");
        const double p = X.data.squaredNorm() / static_cast<double>(X.data.size());
        require(p > 0.0, "apply_awgn: signal has zero power, SNR is undefined");
        const double var = p / std::pow(10.0, snr_db / 10.0);

        SnapshotMatrix out = X;
        out.seed = seed;
        for (Eigen::Index l = 0; l < X.snapshots(); ++l)
        {
            Rng rng(stream_seed(seed, awgn_stream, static_cast<std::uint64_t>(l)));
            for (Eigen::Index n = 0; n < X.elements(); ++n)
                out.data(n, l) += rng.complex_normal(var);
        }
        return out;
    }
}
