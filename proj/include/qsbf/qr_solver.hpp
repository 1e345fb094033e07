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

#include <span>
#include <string>
#include <vector>

#include "qsbf/common.hpp"
#include "qsbf/error.hpp"

namespace qsbf
{
    /// Streaming Q-less QR factor. After absorbing rows x_1..x_k with forgetting factor lambda,
    /// R^H R = sum_i lambda^(k-i) x_i^H x_i. Only the upper triangle of R is ever written, and
    /// the diagonal is kept real and non-negative.
    struct QlessQrState
    {
        CMat R;
        CVec rhs; // lambda-weighted sum of x_i^H * target_i, see absorb()
        double forgetting = 0.99;
        std::size_t rows_absorbed = 0;

        QlessQrState() = default;
        explicit QlessQrState(Eigen::Index n, double forgetting_factor = 0.99)
            : R(CMat::Zero(n, n)), rhs(CVec::Zero(n)), forgetting(forgetting_factor)
        {
            require(n >= 1, "QlessQrState: dimension must be >= 1");
            require(forgetting_factor > 0.0 && forgetting_factor <= 1.0, "QlessQrState: forgetting factor must be in (0, 1]");
        }

        Eigen::Index size() const { return R.rows(); }

        /// In-place Givens update of [sqrt(lambda) R; row]. `target` feeds the right-hand-side
        /// accumulator with the same forgetting: rhs <- lambda rhs + row^H target.
        void absorb(const CVec &row, cplx target = 0.0)
        {
            const Eigen::Index n = size();
            require(row.size() == n, "qless_update: row length " + std::to_string(row.size()) + " != " + std::to_string(n));

            if (forgetting != 1.0)
            {
                const double s = std::sqrt(forgetting);
                for (Eigen::Index j = 0; j < n; ++j)
                    for (Eigen::Index i = 0; i <= j; ++i)
                        R(i, j) *= s;
                rhs *= forgetting;
            }
            rhs += row.conjugate() * target;

            CVec x = row;
            for (Eigen::Index k = 0; k < n; ++k)
            {
                const cplx b = x[k];
                if (b == cplx(0.0))
                    continue;
                const double a = R(k, k).real();
                const double r = std::hypot(a, std::abs(b));
                const double c = a / r;
                const cplx s = b / r;
                R(k, k) = r;
                x[k] = 0.0;
                for (Eigen::Index j = k + 1; j < n; ++j)
                {
                    const cplx rkj = R(k, j);
                    R(k, j) = c * rkj + std::conj(s) * x[j];
                    x[j] = -s * rkj + c * x[j];
                }
            }
            ++rows_absorbed;
        }
    };

    inline QlessQrState qless_update(QlessQrState state, const CVec &row)
    {
        state.absorb(row);
        return state;
    }

    namespace detail
    {
        inline void check_pivots(const CMat &R)
        {
            double dmax = 0.0;
            for (Eigen::Index i = 0; i < R.rows(); ++i)
                dmax = std::max(dmax, std::abs(R(i, i)));
            const double tol = 1e-12 * dmax;
            for (Eigen::Index i = 0; i < R.rows(); ++i)
                if (!(std::abs(R(i, i)) > tol))
                    throw NumericalError("Q-less QR: pivot " + std::to_string(i) + " is below 1e-12 * max|diag|; "
                                         "the factor is (nearly) singular");
        }
    }

    /// Solves R^H y = b (forward substitution).
    inline CVec forward_substitute(const CMat &R, const CVec &b)
    {
        const Eigen::Index n = R.rows();
        CVec y(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            cplx acc = b[i];
            for (Eigen::Index k = 0; k < i; ++k)
                acc -= std::conj(R(k, i)) * y[k];
            y[i] = acc / std::conj(R(i, i));
        }
        return y;
    }

    /// Solves R z = y (backward substitution).
    inline CVec backward_substitute(const CMat &R, const CVec &y)
    {
        const Eigen::Index n = R.rows();
        CVec z(n);
        for (Eigen::Index i = n - 1; i >= 0; --i)
        {
            cplx acc = y[i];
            for (Eigen::Index k = i + 1; k < n; ++k)
                acc -= R(i, k) * z[k];
            z[i] = acc / R(i, i);
        }
        return z;
    }

    /// Solves (R^H R) z = rhs by forward then backward substitution.
    inline CVec solve_normal(const QlessQrState &state, const CVec &rhs)
    {
        require(rhs.size() == state.size(), "solve_normal: rhs length mismatch");
        detail::check_pivots(state.R);
        return backward_substitute(state.R, forward_substitute(state.R, rhs));
    }

    /// Solves A Z = B for Hermitian positive definite A through the Q-less QR path only:
    /// the rows of A are streamed into a QR factor T (T^H T = A^H A) and each column is solved
    /// with the semi-normal equations plus `refinements` correction steps.
    inline CMat qr_solve_hermitian(const CMat &A, const CMat &B, int refinements = 2)
    {
        require(A.rows() == A.cols(), "qr_solve_hermitian: matrix must be square");
        require(B.rows() == A.rows(), "qr_solve_hermitian: right-hand side size mismatch");
        QlessQrState st(A.rows(), 1.0);
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            st.absorb(A.row(i).transpose());
        detail::check_pivots(st.R);

        CMat Z(B.rows(), B.cols());
        for (Eigen::Index c = 0; c < B.cols(); ++c)
        {
            const CVec b = B.col(c);
            CVec z = solve_normal(st, A.adjoint() * b);
            for (int it = 0; it < refinements; ++it)
            {
                const CVec r = b - A * z;
                z += solve_normal(st, A.adjoint() * r);
            }
            Z.col(c) = z;
        }
        return Z;
    }

    struct RiskEstimate
    {
        double value = 0.0;
        std::vector<double> weights;
        std::vector<double> losses;
    };

    /// Quadrature approximation of the expected loss: sum_i w_i L_i.
    inline RiskEstimate empirical_risk(std::span<const double> losses, std::span<const double> weights)
    {
        require(losses.size() == weights.size(), "empirical_risk: " + std::to_string(losses.size()) + " losses but " +
                                                     std::to_string(weights.size()) + " weights");
        RiskEstimate out{0.0, {weights.begin(), weights.end()}, {losses.begin(), losses.end()}};
        for (std::size_t i = 0; i < losses.size(); ++i)
        {
            require(std::isfinite(weights[i]), "empirical_risk: non-finite weight");
            out.value += weights[i] * losses[i];
        }
        return out;
    }

    /// Uniform weights 1/N.
    inline RiskEstimate empirical_risk(std::span<const double> losses)
    {
        std::vector<double> w(losses.size(), losses.empty() ? 0.0 : 1.0 / static_cast<double>(losses.size()));
        return empirical_risk(losses, w);
    }
}
