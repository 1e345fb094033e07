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
#include <tuple>

#include "qsbf/common.hpp"
#include "qsbf/error.hpp"

namespace qsbf
{
    /// Dense convex QP:  minimize 1/2 z^T H z + f^T z  subject to  A z >= b.
    struct QpProblem
    {
        RMat H;
        RVec f;
        RMat A;
        RVec b;
    };

    struct QpOptions
    {
        double tolerance = 1e-8; // relative KKT tolerance
        int max_iterations = 0;  // 0: 10 * (variables + constraints)
    };

    struct QpResidual
    {
        double primal = 0.0;          // ||A z - s - b||_inf, relative
        double dual = 0.0;            // ||H z + f - A^T lambda||_inf, relative
        double complementarity = 0.0; // s^T lambda / (1 + |objective|)
    };

    struct QpSolution
    {
        RVec z;
        RVec multipliers; // lambda >= 0, one per row of A
        RVec slack;       // s = A z - b
        double objective = 0.0;
        int iterations = 0;
        QpResidual residual;
    };

    /// Thrown when the iteration cap is hit; carries the best iterate and its KKT residuals.
    class QpNotConverged : public NumericalError
    {
    public:
        QpNotConverged(const std::string &msg, QpSolution best) : NumericalError(msg), best_iterate(std::move(best)) {}
        QpSolution best_iterate;
    };

    inline double qp_objective(const QpProblem &qp, const RVec &z) { return 0.5 * z.dot(qp.H * z) + qp.f.dot(z); }

    /// Mehrotra predictor-corrector primal-dual interior point method. The Newton system is
    /// reduced to the normal matrix H + A^T (Lambda / S) A and factored with LDL^T.
    inline QpSolution solve_qp(const QpProblem &qp, const QpOptions &opt = {})
    {
        const Eigen::Index nv = qp.H.rows();
        const Eigen::Index nc = qp.A.rows();
        require(qp.H.cols() == nv && qp.f.size() == nv, "solve_qp: H and f dimensions disagree");
        require(qp.A.cols() == nv && qp.b.size() == nc, "solve_qp: A and b dimensions disagree");
        require(nc >= 1, "solve_qp: at least one inequality is required");
        const int max_it = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(10 * (nv + nc));

        const double scale_f = 1.0 + qp.f.lpNorm<Eigen::Infinity>();
        const double scale_b = 1.0 + qp.b.lpNorm<Eigen::Infinity>();
        const double scale_h = 1.0 + qp.H.lpNorm<Eigen::Infinity>();
        const double reg = 1e-13 * scale_h;
        const RMat AtA = qp.A.transpose() * qp.A;

        auto factor = [&](const RVec &d) {
            RMat N = qp.H;
            N.noalias() += qp.A.transpose() * d.asDiagonal() * qp.A;
            N.diagonal().array() += reg;
            Eigen::LDLT<RMat> ldlt(N);
            if (ldlt.info() != Eigen::Success)
                throw NumericalError("solve_qp: normal matrix factorization failed");
            return ldlt;
        };

        // Starting point: least-squares fit of A z ~ b regularized by H, then shift s and lambda
        // into the interior.
        QpSolution it;
        {
            RMat N0 = qp.H + AtA;
            N0.diagonal().array() += 1e-8 * scale_h;
            it.z = Eigen::LDLT<RMat>(N0).solve(RVec(qp.A.transpose() * qp.b - qp.f));
            it.slack = qp.A * it.z - qp.b;
            it.multipliers = RVec::Ones(nc);
            const double ds = std::max(-1.5 * it.slack.minCoeff(), 0.0);
            it.slack.array() += ds;
            it.slack = it.slack.cwiseMax(1.0);
        }

        RVec &z = it.z;
        RVec &s = it.slack;
        RVec &lam = it.multipliers;

        QpSolution best = it;
        double best_merit = std::numeric_limits<double>::infinity();

        auto max_step = [](const RVec &v, const RVec &dv) {
            double a = 1.0;
            for (Eigen::Index i = 0; i < v.size(); ++i)
                if (dv[i] < 0.0)
                    a = std::min(a, -v[i] / dv[i]);
            return a;
        };

        for (int k = 0; k <= max_it; ++k)
        {
            const RVec Hz = qp.H * z;
            const RVec Atl = qp.A.transpose() * lam;
            const RVec rd = Hz + qp.f - Atl;
            const RVec rp = qp.A * z - s - qp.b;
            const double mu = s.dot(lam) / static_cast<double>(nc);
            const double obj = 0.5 * z.dot(Hz) + qp.f.dot(z);

            it.objective = obj;
            it.iterations = k;
            const double dscale = std::max({scale_f, Hz.lpNorm<Eigen::Infinity>(), Atl.lpNorm<Eigen::Infinity>()});
            it.residual.primal = rp.lpNorm<Eigen::Infinity>() / scale_b;
            it.residual.dual = rd.lpNorm<Eigen::Infinity>() / dscale;
            it.residual.complementarity = s.dot(lam) / (1.0 + std::abs(obj));

            const double merit = std::max({it.residual.primal, it.residual.dual, it.residual.complementarity});
            if (merit < best_merit)
            {
                best_merit = merit;
                best = it;
            }
            if (it.residual.primal <= opt.tolerance && it.residual.dual <= opt.tolerance &&
                it.residual.complementarity <= opt.tolerance * 1e-1)
                return it;
            if (k == max_it)
                break;

            const RVec d = lam.cwiseQuotient(s);
            const auto ldlt = factor(d);

            // Affine (predictor) direction.
            auto direction = [&](const RVec &comp_target) {
                // comp_target = desired S*Lambda*e - correction; solve for (dz, ds, dl)
                const RVec rhs = -rd + qp.A.transpose() * (comp_target.cwiseQuotient(s) - lam - d.cwiseProduct(rp));
                RVec dz = ldlt.solve(rhs);
                RVec ds = qp.A * dz + rp;
                RVec dl = comp_target.cwiseQuotient(s) - lam - d.cwiseProduct(ds);
                return std::tuple{dz, ds, dl};
            };

            auto [dz_a, ds_a, dl_a] = direction(RVec::Zero(nc));
            const double a_aff = std::min(max_step(s, ds_a), max_step(lam, dl_a));
            const double mu_aff = (s + a_aff * ds_a).dot(lam + a_aff * dl_a) / static_cast<double>(nc);
            const double sigma = std::pow(mu_aff / mu, 3.0);

            const RVec target = RVec::Constant(nc, sigma * mu) - ds_a.cwiseProduct(dl_a);
            auto [dz, ds, dl] = direction(target);
            const double alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(lam, dl)));

            z += alpha * dz;
            s += alpha * ds;
            lam += alpha * dl;
        }

        std::ostringstream msg;
        msg << "solve_qp: no convergence after " << max_it << " iterations (best KKT residuals: primal "
            << best.residual.primal << ", dual " << best.residual.dual << ", complementarity "
            << best.residual.complementarity << ")";
        throw QpNotConverged(msg.str(), best);
    }
}
