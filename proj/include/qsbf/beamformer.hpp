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
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qsbf/array_geometry.hpp"
#include "qsbf/qr_solver.hpp"
#include "qsbf/signal_sim.hpp"

namespace qsbf
{
    enum class BeamMethod
    {
        mvdr,
        lcmv
    };

    inline const char *to_string(BeamMethod m) { return m == BeamMethod::mvdr ? "mvdr" : "lcmv"; }

    struct BeamWeights
    {
        CVec values;
        BeamMethod method = BeamMethod::mvdr;
        Direction steer;
    };

    /// Linear response constraints C^H w = f, one steering direction per column of C.
    struct LcmvConstraints
    {
        std::vector<Direction> directions;
        CVec responses;
    };

    enum class SolvePath
    {
        qless_qr, // streaming Q-less QR with semi-normal refinement (hardware path)
        cholesky  // dense LL^H, kept as an independent cross-check
    };

    namespace detail
    {
        inline CMat hermitian_solve(const CovarianceMatrix &R, const CMat &B, SolvePath path)
        {
            require(R.data.rows() == R.data.cols(), "covariance must be square");
            require(B.rows() == R.data.rows(), "steering vector length " + std::to_string(B.rows()) +
                                                   " does not match covariance size " + std::to_string(R.data.rows()));
            if (path == SolvePath::cholesky)
            {
                Eigen::LLT<CMat> llt(R.data);
                if (llt.info() != Eigen::Success)
                    throw NumericalError("covariance is not positive definite; increase the diagonal loading");
                return llt.solve(B);
            }
            try
            {
                return qr_solve_hermitian(R.data, B);
            }
            catch (const NumericalError &e)
            {
                throw NumericalError(std::string(e.what()) + "; the covariance is singular, increase the diagonal loading");
            }
        }
    }

    /// Exponentially weighted covariance formed through the streaming factor, snapshots absorbed
    /// in time order: R = sum_l lambda^(L-1-l) x_l x_l^H / sum_l lambda^l + loading I.
    /// lambda = 1 reproduces sample_covariance().
    inline CovarianceMatrix streaming_covariance(const SnapshotMatrix &X, double forgetting, double loading)
    {
        require(X.snapshots() >= 1, "streaming_covariance: need at least one snapshot");
        require(loading >= 0.0 && std::isfinite(loading), "streaming_covariance: loading must be >= 0");
        QlessQrState st(X.elements(), forgetting);
        double weight = 0.0;
        for (Eigen::Index l = 0; l < X.snapshots(); ++l)
        {
            st.absorb(X.data.col(l).conjugate());
            weight = forgetting * weight + 1.0;
        }
        CMat R = st.R.adjoint() * st.R / weight;
        CMat H = 0.5 * (R + R.adjoint());
        for (Eigen::Index i = 0; i < H.rows(); ++i)
            H(i, i) = cplx(H(i, i).real() + loading, 0.0);
        return {std::move(H), loading};
    }

    /// w = R^-1 a0 / (a0^H R^-1 a0). The normalization makes w^H a0 = 1.
    inline BeamWeights mvdr_weights(const CovarianceMatrix &R, const SteeringVector &a0, SolvePath path = SolvePath::qless_qr)
    {
        require(std::abs(a0.values.norm() - 1.0) < 1e-9, "mvdr_weights: steering vector must have unit norm");
        const CVec y = detail::hermitian_solve(R, a0.values, path).col(0);
        const cplx denom = a0.values.dot(y); // a0^H R^-1 a0
        if (!std::isfinite(denom.real()) || !(denom.real() > 0.0))
            throw NumericalError("mvdr_weights: a0^H R^-1 a0 is not positive; the covariance is singular, increase the diagonal loading");
        return {y / denom, BeamMethod::mvdr, a0.direction};
    }

    inline CMat constraint_matrix(const ArrayLayout &layout, const LcmvConstraints &cons)
    {
        return steering_matrix(layout, cons.directions);
    }

    /// w = R^-1 C (C^H R^-1 C)^-1 f
    inline BeamWeights lcmv_weights(const CovarianceMatrix &R, const ArrayLayout &layout, const LcmvConstraints &cons,
                                    SolvePath path = SolvePath::qless_qr)
    {
        const auto K = static_cast<Eigen::Index>(cons.directions.size());
        require(K >= 1, "lcmv_weights: no constraints");
        require(cons.responses.size() == K, "lcmv_weights: one response per constraint direction is required");
        require(static_cast<std::size_t>(K) < layout.size(), "lcmv_weights: need fewer constraints than elements");

        const CMat C = constraint_matrix(layout, cons);
        Eigen::JacobiSVD<CMat> svd(C);
        const auto &sv = svd.singularValues();
        if (sv[K - 1] <= 1e-8 * sv[0])
        {
            std::ostringstream msg;
            msg << "lcmv_weights: constraint matrix is rank deficient; near-collinear directions:";
            for (Eigen::Index i = 0; i < K; ++i)
                for (Eigen::Index j = i + 1; j < K; ++j)
                    if (std::abs(C.col(i).dot(C.col(j))) > 1.0 - 1e-6)
                        msg << " (az " << rad2deg(cons.directions[i].theta) << ", el " << rad2deg(cons.directions[i].phi)
                            << ") ~ (az " << rad2deg(cons.directions[j].theta) << ", el " << rad2deg(cons.directions[j].phi) << ")";
            throw NumericalError(msg.str());
        }

        const CMat Y = detail::hermitian_solve(R, C, path);
        const CMat G = C.adjoint() * Y;
        Eigen::PartialPivLU<CMat> lu(G);
        CVec g = lu.solve(cons.responses);
        g += lu.solve(CVec(cons.responses - G * g));
        CVec w = Y * g;
        if (!w.allFinite())
            throw NumericalError("lcmv_weights: non-finite weights; increase the diagonal loading");
        return {std::move(w), BeamMethod::lcmv, cons.directions.front()};
    }

    struct BeamPattern
    {
        std::vector<Direction> angles;
        std::vector<double> power_db;
        double reference_db = 0.0; // 20 log10 of the response that maps to 0 dB
    };

    // Responses below this floor are reported as the floor so patterns stay finite.
    inline constexpr double pattern_floor_db = -300.0;

    inline double response_db(const CVec &w, const CVec &a)
    {
        const double mag = std::abs(w.dot(a));
        return mag > 0.0 ? std::max(20.0 * std::log10(mag), pattern_floor_db) : pattern_floor_db;
    }

    /// 20 log10 |w^H a(dir)| relative to the maximum over the grid.
    inline BeamPattern beam_pattern(const BeamWeights &w, const ArrayLayout &layout, std::span<const Direction> grid)
    {
        require(!grid.empty(), "beam_pattern: empty angle grid");
        require(w.values.size() == static_cast<Eigen::Index>(layout.size()), "beam_pattern: weight length does not match layout");
        BeamPattern p;
        p.angles.assign(grid.begin(), grid.end());
        p.power_db.reserve(grid.size());
        for (const auto &dir : grid)
            p.power_db.push_back(response_db(w.values, steering_vector(layout, dir).values));
        p.reference_db = *std::max_element(p.power_db.begin(), p.power_db.end());
        for (auto &v : p.power_db)
            v -= p.reference_db;
        return p;
    }

    /// Same as beam_pattern but 0 dB is the response toward `reference` instead of the grid maximum.
    inline BeamPattern beam_pattern_referenced(const BeamWeights &w, const ArrayLayout &layout,
                                               std::span<const Direction> grid, Direction reference)
    {
        BeamPattern p = beam_pattern(w, layout, grid);
        const double shift = response_db(w.values, steering_vector(layout, reference).values) - p.reference_db;
        for (auto &v : p.power_db)
            v -= shift;
        p.reference_db += shift;
        return p;
    }

    /// Worst (highest) pattern level within +-halfwidth of `theta` along the pattern's azimuth cut.
    inline double null_depth_db(const BeamPattern &p, double theta, double halfwidth = deg2rad(0.5))
    {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < p.angles.size(); ++i)
            if (std::abs(p.angles[i].theta - theta) <= halfwidth + 1e-12)
                worst = std::max(worst, p.power_db[i]);
        require(std::isfinite(worst), "null_depth_db: no grid point near the requested angle");
        return worst;
    }

    inline double pattern_at(const BeamPattern &p, Direction dir)
    {
        for (std::size_t i = 0; i < p.angles.size(); ++i)
            if (std::abs(p.angles[i].theta - dir.theta) < 1e-9 && std::abs(p.angles[i].phi - dir.phi) < 1e-9)
                return p.power_db[i];
        throw ConfigError("pattern_at: direction is not on the pattern grid");
    }

    /// 10 log10 (w^H Rs w / w^H Rin w)
    inline double output_sinr_db(const CVec &w, const CMat &signal_cov, const CMat &interference_plus_noise_cov)
    {
        const double num = w.dot(signal_cov * w).real();
        const double den = w.dot(interference_plus_noise_cov * w).real();
        if (!(den > 0.0))
            throw NumericalError("output_sinr: interference-plus-noise power is zero");
        return 10.0 * std::log10(num / den);
    }

    inline double output_sinr_db(const BeamWeights &w, const CMat &signal_cov, const CMat &interference_plus_noise_cov)
    {
        return output_sinr_db(w.values, signal_cov, interference_plus_noise_cov);
    }

    /// Azimuth sweep at fixed elevation, endpoints inclusive.
    inline std::vector<Direction> theta_sweep(double el_deg, double start_deg, double stop_deg, double step_deg)
    {
        require(step_deg > 0.0, "angle grid: step must be positive");
        require(stop_deg >= start_deg, "angle grid: stop must be >= start");
        std::vector<Direction> out;
        const auto n = static_cast<long>(std::floor((stop_deg - start_deg) / step_deg + 1e-9));
        for (long i = 0; i <= n; ++i)
            out.push_back(Direction::from_degrees(el_deg, start_deg + static_cast<double>(i) * step_deg));
        return out;
    }
}
