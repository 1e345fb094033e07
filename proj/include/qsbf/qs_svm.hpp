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
#include <span>
#include <string>
#include <vector>

#include "qsbf/common.hpp"
#include "qsbf/error.hpp"
#include "qsbf/qp.hpp"
#include "qsbf/signal_sim.hpp"

namespace qsbf
{
    /// Number of upper-triangle entries of a symmetric m x m matrix.
    inline constexpr Eigen::Index vech_size(Eigen::Index m) { return m * (m + 1) / 2; }

    /// f(x) = 1/2 x^T W x + b^T x + c with W symmetric. W is stored as its upper triangle in
    /// row-major order: (0,0), (0,1), ..., (0,m-1), (1,1), ...
    struct QuadraticSurface
    {
        RVec w_upper;
        RVec b;
        double c = 0.0;

        Eigen::Index dim() const { return b.size(); }

        static QuadraticSurface zero(Eigen::Index m) { return {RVec::Zero(vech_size(m)), RVec::Zero(m), 0.0}; }

        static QuadraticSurface from_matrix(const RMat &W, RVec b, double c)
        {
            require(W.rows() == W.cols() && W.rows() == b.size(), "QuadraticSurface: W must be m x m with m = dim(b)");
            const Eigen::Index m = W.rows();
            RVec u(vech_size(m));
            Eigen::Index t = 0;
            for (Eigen::Index j = 0; j < m; ++j)
                for (Eigen::Index k = j; k < m; ++k)
                    u[t++] = W(j, k);
            return {std::move(u), std::move(b), c};
        }

        RMat W() const
        {
            const Eigen::Index m = dim();
            RMat out(m, m);
            Eigen::Index t = 0;
            for (Eigen::Index j = 0; j < m; ++j)
                for (Eigen::Index k = j; k < m; ++k)
                {
                    out(j, k) = w_upper[t];
                    out(k, j) = w_upper[t];
                    ++t;
                }
            return out;
        }

        double frobenius_w() const
        {
            double acc = 0.0;
            Eigen::Index t = 0;
            for (Eigen::Index j = 0; j < dim(); ++j)
                for (Eigen::Index k = j; k < dim(); ++k, ++t)
                    acc += (j == k ? 1.0 : 2.0) * w_upper[t] * w_upper[t];
            return std::sqrt(acc);
        }
    };

    /// Monomials q(x) such that 1/2 x^T W x = vech(W) . q(x): x_j^2 / 2 on the diagonal, x_j x_k off it.
    inline RVec quadratic_monomials(const RVec &x)
    {
        const Eigen::Index m = x.size();
        RVec q(vech_size(m));
        Eigen::Index t = 0;
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index k = j; k < m; ++k)
                q[t++] = (j == k ? 0.5 : 1.0) * x[j] * x[k];
        return q;
    }

    inline double decide_pair(const QuadraticSurface &s, const RVec &x)
    {
        require(x.size() == s.dim(), "decide_pair: point has dimension " + std::to_string(x.size()) +
                                         ", surface expects " + std::to_string(s.dim()));
        return s.w_upper.dot(quadratic_monomials(x)) + s.b.dot(x) + s.c;
    }

    struct QsSvmHyperparams
    {
        double slack_penalty = 10.0;     // eta
        double quad_regularizer = 1e-3;  // lambda, weight of ||W||_F^2

        void validate() const
        {
            require(slack_penalty > 0.0 && std::isfinite(slack_penalty), "QS-SVM: slack penalty must be > 0");
            require(quad_regularizer >= 0.0 && std::isfinite(quad_regularizer), "QS-SVM: regularizer must be >= 0");
        }
    };

    struct BinaryTrainResult
    {
        QuadraticSurface surface;
        RVec slacks;
        double objective = 0.0;
        int iterations = 0;
        QpResidual residual;
    };

    namespace detail
    {
        inline void check_binary(const RMat &X, const RVec &y)
        {
            require(X.rows() == y.size(), "train_binary: one label per point is required");
            require(X.rows() >= 2, "train_binary: need at least two points");
            require(X.cols() >= 1, "train_binary: points must have dimension >= 1");
            bool pos = false, neg = false;
            for (Eigen::Index i = 0; i < y.size(); ++i)
            {
                require(y[i] == 1.0 || y[i] == -1.0, "train_binary: labels must be -1 or +1");
                pos = pos || y[i] > 0.0;
                neg = neg || y[i] < 0.0;
            }
            require(pos && neg, "train_binary: both classes must be present");
            require(X.allFinite(), "train_binary: non-finite feature value");
        }
    }

    /// Assembles the training QP over z = (vech(W), b, c, xi):
    ///   minimize  sum_i ||W x_i + b||^2 + lambda ||W||_F^2 + eta sum_i xi_i
    ///   s.t.      y_i (1/2 x_i^T W x_i + b^T x_i + c) + xi_i >= 1,  xi_i >= 0.
    inline QpProblem assemble_qs_svm_qp(const RMat &X, const RVec &y, const QsSvmHyperparams &hp)
    {
        detail::check_binary(X, y);
        hp.validate();
        const Eigen::Index n = X.rows(), m = X.cols();
        const Eigen::Index p = vech_size(m);
        const Eigen::Index P = p + m; // (vech(W), b)
        const Eigen::Index nv = P + 1 + n;

        // W x + b = B_i theta, accumulated as sum_i B_i^T B_i.
        RMat M = RMat::Zero(P, P);
        RMat B(m, P);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            B.setZero();
            Eigen::Index t = 0;
            for (Eigen::Index j = 0; j < m; ++j)
                for (Eigen::Index k = j; k < m; ++k, ++t)
                {
                    B(j, t) += X(i, k);
                    if (j != k)
                        B(k, t) += X(i, j);
                }
            B.rightCols(m).setIdentity();
            M.selfadjointView<Eigen::Lower>().rankUpdate(B.transpose());
        }
        M = M.selfadjointView<Eigen::Lower>();
        {
            Eigen::Index t = 0;
            for (Eigen::Index j = 0; j < m; ++j)
                for (Eigen::Index k = j; k < m; ++k, ++t)
                    M(t, t) += hp.quad_regularizer * (j == k ? 1.0 : 2.0);
        }

        QpProblem qp;
        qp.H = RMat::Zero(nv, nv);
        qp.H.topLeftCorner(P, P) = 2.0 * M;
        qp.f = RVec::Zero(nv);
        qp.f.tail(n).setConstant(hp.slack_penalty);
        qp.A = RMat::Zero(2 * n, nv);
        qp.b = RVec::Zero(2 * n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const RVec xi = X.row(i).transpose();
            qp.A.block(i, 0, 1, p) = y[i] * quadratic_monomials(xi).transpose();
            qp.A.block(i, p, 1, m) = y[i] * xi.transpose();
            qp.A(i, P) = y[i];
            qp.A(i, P + 1 + i) = 1.0;
            qp.b[i] = 1.0;
            qp.A(n + i, P + 1 + i) = 1.0;
        }
        return qp;
    }

    inline BinaryTrainResult train_binary(const RMat &X, const RVec &y, const QsSvmHyperparams &hp,
                                          const QpOptions &opt = {})
    {
        const QpProblem qp = assemble_qs_svm_qp(X, y, hp);
        const Eigen::Index n = X.rows(), m = X.cols(), p = vech_size(m);
        const QpSolution sol = solve_qp(qp, opt);

        BinaryTrainResult out;
        out.surface = {sol.z.head(p), sol.z.segment(p, m), sol.z[p + m]};
        out.slacks = sol.z.tail(n).cwiseMax(0.0);
        out.objective = sol.objective;
        out.iterations = sol.iterations;
        out.residual = sol.residual;
        return out;
    }

    struct SeparabilityViolation
    {
        Eigen::Index index = 0;
        double label = 0.0;
        double value = 0.0; // f(x_i)
    };

    /// Points with y = -1 but f(x) > -1, or y = +1 but f(x) < +1.
    inline std::vector<SeparabilityViolation> separability_report(const RMat &X, const RVec &y, const QuadraticSurface &s)
    {
        require(X.rows() == y.size(), "separability_report: one label per point is required");
        std::vector<SeparabilityViolation> out;
        for (Eigen::Index i = 0; i < X.rows(); ++i)
        {
            const double v = decide_pair(s, X.row(i).transpose());
            if ((y[i] < 0.0 && v > -1.0) || (y[i] > 0.0 && v < 1.0))
                out.push_back({i, y[i], v});
        }
        return out;
    }

    struct PairSurface
    {
        int i = 0; // class index, i < j; D_ij(x) = surface(x), D_ji = -D_ij
        int j = 0;
        QuadraticSurface surface;
        RVec slacks;
    };

    struct QsSvmModel
    {
        std::vector<double> classes; // class values (e.g. azimuth in degrees), index = class id
        std::vector<PairSurface> pairs;
        QsSvmHyperparams hyper;
        std::string feature_map;

        int num_classes() const { return static_cast<int>(classes.size()); }
        Eigen::Index dim() const { return pairs.empty() ? 0 : pairs.front().surface.dim(); }

        const PairSurface &pair(int i, int j) const
        {
            const int G = num_classes();
            const int a = std::min(i, j), b = std::max(i, j);
            // pairs are stored in lexicographic (i, j) order
            const std::size_t idx = static_cast<std::size_t>(a * (2 * G - a - 1) / 2 + (b - a - 1));
            return pairs.at(idx);
        }

        double decision(int i, int j, const RVec &x) const
        {
            const double v = decide_pair(pair(i, j).surface, x);
            return i < j ? v : -v;
        }
    };

    /// One-vs-one training over all G(G-1)/2 class pairs. `labels` holds class ids 0..G-1.
    inline QsSvmModel train_multiclass(const RMat &X, std::span<const int> labels, std::vector<double> classes,
                                       const QsSvmHyperparams &hp, std::string feature_map = "raw",
                                       const QpOptions &opt = {})
    {
        require(static_cast<Eigen::Index>(labels.size()) == X.rows(), "train_multiclass: one label per point is required");
        const int G = static_cast<int>(classes.size());
        require(G >= 2, "train_multiclass: need at least two classes");
        std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(G));
        for (std::size_t r = 0; r < labels.size(); ++r)
        {
            require(labels[r] >= 0 && labels[r] < G, "train_multiclass: label out of range");
            members[static_cast<std::size_t>(labels[r])].push_back(static_cast<Eigen::Index>(r));
        }
        for (int g = 0; g < G; ++g)
            require(!members[static_cast<std::size_t>(g)].empty(), "train_multiclass: class " + std::to_string(g) + " has no samples");

        QsSvmModel model{std::move(classes), {}, hp, std::move(feature_map)};
        for (int i = 0; i < G; ++i)
            for (int j = i + 1; j < G; ++j)
            {
                const auto &mi = members[static_cast<std::size_t>(i)];
                const auto &mj = members[static_cast<std::size_t>(j)];
                const auto n = static_cast<Eigen::Index>(mi.size() + mj.size());
                RMat Xp(n, X.cols());
                RVec yp(n);
                Eigen::Index r = 0;
                for (auto idx : mi)
                {
                    Xp.row(r) = X.row(idx);
                    yp[r++] = 1.0;
                }
                for (auto idx : mj)
                {
                    Xp.row(r) = X.row(idx);
                    yp[r++] = -1.0;
                }
                auto res = train_binary(Xp, yp, hp, opt);
                model.pairs.push_back({i, j, std::move(res.surface), std::move(res.slacks)});
            }
        return model;
    }

    struct Classification
    {
        int label = 0;          // winning class id
        std::vector<int> votes; // pairwise wins per class, sign(0) counts as a win
    };

    /// Votes sum_{j != i} [D_ij(x) >= 0]; the maximum wins and ties go to the lowest class id.
    inline Classification classify(const QsSvmModel &model, const RVec &x)
    {
        const int G = model.num_classes();
        require(G >= 2 && !model.pairs.empty(), "classify: model is not trained");
        require(x.size() == model.dim(), "classify: point has dimension " + std::to_string(x.size()) +
                                             ", model expects " + std::to_string(model.dim()));
        Classification out{0, std::vector<int>(static_cast<std::size_t>(G), 0)};
        for (const auto &p : model.pairs)
        {
            const double d = decide_pair(p.surface, x);
            if (d >= 0.0)
                ++out.votes[static_cast<std::size_t>(p.i)];
            if (-d >= 0.0)
                ++out.votes[static_cast<std::size_t>(p.j)];
        }
        out.label = static_cast<int>(std::max_element(out.votes.begin(), out.votes.end()) - out.votes.begin());
        return out;
    }

    /// All pairwise surfaces stacked into one matrix so a batch is scored with a single GEMM.
    struct PackedQsSvm
    {
        int num_classes = 0;
        Eigen::Index dim = 0;
        RMat coeffs; // (vech + m + 1) x pairs
        std::vector<std::pair<int, int>> index;
    };

    inline PackedQsSvm pack(const QsSvmModel &model)
    {
        PackedQsSvm out;
        out.num_classes = model.num_classes();
        out.dim = model.dim();
        const Eigen::Index p = vech_size(out.dim);
        out.coeffs.resize(p + out.dim + 1, static_cast<Eigen::Index>(model.pairs.size()));
        for (std::size_t k = 0; k < model.pairs.size(); ++k)
        {
            const auto &s = model.pairs[k].surface;
            const auto col = static_cast<Eigen::Index>(k);
            out.coeffs.col(col).head(p) = s.w_upper;
            out.coeffs.col(col).segment(p, out.dim) = s.b;
            out.coeffs(p + out.dim, col) = s.c;
            out.index.emplace_back(model.pairs[k].i, model.pairs[k].j);
        }
        return out;
    }

    /// Classifies each row of `X`; identical labels to calling classify() per row. Rows are lifted and
    /// scored in tiles of `tile` rows so the working set stays small for any batch size.
    inline std::vector<int> classify_batch(const PackedQsSvm &model, const RMat &X, Eigen::Index tile = 64)
    {
        require(X.cols() == model.dim, "classify_batch: feature dimension mismatch");
        require(tile >= 1, "classify_batch: tile must be >= 1");
        const Eigen::Index p = vech_size(model.dim);
        const Eigen::Index rows = std::min(tile, X.rows());
        RMat lifted(rows, p + model.dim + 1);
        RMat D(rows, model.coeffs.cols());
        std::vector<int> labels(static_cast<std::size_t>(X.rows()));
        std::vector<int> votes(static_cast<std::size_t>(model.num_classes));

        for (Eigen::Index r0 = 0; r0 < X.rows(); r0 += rows)
        {
            const Eigen::Index n = std::min(rows, X.rows() - r0);
            for (Eigen::Index r = 0; r < n; ++r)
            {
                Eigen::Index t = 0;
                for (Eigen::Index j = 0; j < model.dim; ++j)
                {
                    const double xj = X(r0 + r, j);
                    lifted(r, t++) = 0.5 * xj * xj;
                    for (Eigen::Index k = j + 1; k < model.dim; ++k)
                        lifted(r, t++) = xj * X(r0 + r, k);
                }
                lifted.block(r, p, 1, model.dim) = X.row(r0 + r);
                lifted(r, p + model.dim) = 1.0;
            }
            D.topRows(n).noalias() = lifted.topRows(n) * model.coeffs;

            for (Eigen::Index r = 0; r < n; ++r)
            {
                std::fill(votes.begin(), votes.end(), 0);
                // branch-free so timing does not depend on the decision signs
                for (Eigen::Index k = 0; k < D.cols(); ++k)
                {
                    const double d = D(r, k);
                    const auto [i, j] = model.index[static_cast<std::size_t>(k)];
                    votes[static_cast<std::size_t>(i)] += d >= 0.0;
                    votes[static_cast<std::size_t>(j)] += -d >= 0.0;
                }
                labels[static_cast<std::size_t>(r0 + r)] =
                    static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
            }
        }
        return labels;
    }

    /// Batch entry point that loads the surfaces into the stacked layout once per call.
    inline std::vector<int> classify_batch(const QsSvmModel &model, const RMat &X) { return classify_batch(pack(model), X); }

    /// Real parts of the upper triangle (row-major, j <= k), then imaginary parts of the strictly upper entries.
    inline RVec featurize_covariance(const CMat &R)
    {
        const Eigen::Index N = R.rows();
        RVec f(N * N);
        Eigen::Index t = 0;
        for (Eigen::Index j = 0; j < N; ++j)
            for (Eigen::Index k = j; k < N; ++k)
                f[t++] = R(j, k).real();
        for (Eigen::Index j = 0; j < N; ++j)
            for (Eigen::Index k = j + 1; k < N; ++k)
                f[t++] = R(j, k).imag();
        return f;
    }

    /// Sample covariance scaled to trace N, flattened by featurize_covariance. Dimension N^2.
    inline RVec featurize_snapshots(const SnapshotMatrix &X)
    {
        require(X.snapshots() >= 1, "featurize_snapshots: need at least one snapshot");
        const CMat R = (X.data * X.data.adjoint()) / static_cast<double>(X.snapshots());
        const double tr = R.diagonal().real().sum();
        if (!(tr > 0.0))
            throw NumericalError("featurize_snapshots: covariance trace is zero, normalization is undefined");
        return featurize_covariance(R * (static_cast<double>(R.rows()) / tr));
    }
}
