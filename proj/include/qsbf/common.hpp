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

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Dense>

namespace qsbf
{
    using cplx = std::complex<double>;
    using CVec = Eigen::VectorXcd;
    using CMat = Eigen::MatrixXcd;
    using RVec = Eigen::VectorXd;
    using RMat = Eigen::MatrixXd;
    using Vec3 = Eigen::Vector3d;

    inline constexpr double pi = std::numbers::pi;
    inline constexpr double speed_of_light = 299792458.0;

    inline constexpr double deg2rad(double deg) { return deg * pi / 180.0; }
    inline constexpr double rad2deg(double rad) { return rad * 180.0 / pi; }

    // phi is measured from the z-axis, theta is the azimuth. Radians.
    struct Direction
    {
        double phi = 0.0;
        double theta = 0.0;

        static Direction from_degrees(double el_deg, double az_deg) { return {deg2rad(el_deg), deg2rad(az_deg)}; }
        bool operator==(const Direction &) const = default;
    };

    // SplitMix64 finalizer; used to derive independent stream seeds from (seed, stream, index).
    inline constexpr std::uint64_t mix64(std::uint64_t z)
    {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    inline constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0)
    {
        return mix64(mix64(mix64(seed) ^ stream) ^ index);
    }

    // Seedable generator with a fully specified output sequence. std::mt19937_64 is defined
    // bit-for-bit by the standard; the distributions below avoid the implementation-defined
    // std::*_distribution classes so that streams do not depend on the standard library.
    class Rng
    {
    public:
        explicit Rng(std::uint64_t seed) : engine_(seed) {}

        std::uint64_t next_u64() { return engine_(); }

        // Uniform on [0, 1) with 53 random bits.
        double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

        // Standard normal via Box-Muller (one value per pair, no caching).
        double normal()
        {
            double u1 = uniform();
            double u2 = uniform();
            if (u1 <= 0.0)
                u1 = 0x1.0p-53;
            return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
        }

        // Circular complex Gaussian with E|z|^2 = variance.
        cplx complex_normal(double variance)
        {
            const double s = std::sqrt(variance / 2.0);
            const double re = normal();
            const double im = normal();
            return {s * re, s * im};
        }

        // Uniform integer in [0, n).
        std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

    private:
        std::mt19937_64 engine_;
    };
}
