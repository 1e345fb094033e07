#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
#
# Reference optima for the QS-SVM training QP, solved with cvxpy (Clarabel, cross-checked with OSQP).
# Writes ../data/qp_reference.json. Re-run only when the instance set changes.
#
#   minimize  sum_i ||W x_i + b||^2 + lam ||W||_F^2 + eta sum_i xi_i
#   s.t.      y_i (x_i^T W x_i / 2 + b^T x_i + c) >= 1 - xi_i,  xi >= 0,  W = W^T

import json
import os

import cvxpy as cp
import numpy as np


def problem(X, y, eta, lam):
    n, m = X.shape
    # symmetry as an explicit constraint: the conic path of cvxpy 1.7 returned
    # suboptimal values for symmetric=True variables on some of these instances
    W = cp.Variable((m, m))
    b = cp.Variable(m)
    c = cp.Variable()
    xi = cp.Variable(n)
    fit = sum(cp.sum_squares(W @ X[i] + b) for i in range(n))
    margin = [y[i] * (0.5 * X[i] @ W @ X[i] + b @ X[i] + c) >= 1 - xi[i] for i in range(n)]
    return cp.Problem(cp.Minimize(fit + lam * cp.sum_squares(W) + eta * cp.sum(xi)), margin + [xi >= 0, W == W.T])


def solve(X, y, eta, lam):
    prob = problem(X, y, eta, lam)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    assert prob.status == cp.OPTIMAL, prob.status
    check = problem(X, y, eta, lam)
    check.solve(solver=cp.OSQP, eps_abs=1e-11, eps_rel=1e-11, max_iter=500000, polish=True)
    assert abs(check.value - prob.value) <= 1e-7 * abs(prob.value), (check.value, prob.value)
    return prob.value


def instance(rng, k):
    m = int(rng.integers(1, 5))
    n = int(rng.integers(4, 51))
    kind = k % 4
    if kind == 0:  # two Gaussian blobs
        y = np.where(np.arange(n) < n // 2, 1.0, -1.0)
        X = rng.normal(size=(n, m)) + 1.5 * y[:, None] * rng.normal(size=m)
    elif kind == 1:  # ball inside a shell
        y = np.where(np.arange(n) < n // 2, 1.0, -1.0)
        d = rng.normal(size=(n, m))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        X = d * np.where(y > 0, rng.uniform(0, 1, n), rng.uniform(1.5, 2.5, n))[:, None]
    elif kind == 2:  # random labels, heavy overlap
        X = rng.uniform(-1, 1, size=(n, m))
        y = rng.choice([-1.0, 1.0], size=n)
        y[0], y[1] = 1.0, -1.0
    else:  # XOR-like sign of a product
        X = rng.uniform(-1, 1, size=(n, m))
        y = np.sign(X[:, 0] * X[:, -1] + 1e-9)
        y[0], y[1] = 1.0, -1.0
    eta = float(10 ** rng.uniform(-1, 2))
    lam = float(10 ** rng.uniform(-4, 1))
    return X, y, eta, lam


def main():
    rng = np.random.default_rng(20260)
    cases = []
    for k in range(20):
        X, y, eta, lam = instance(rng, k)
        cases.append({"X": X.tolist(), "y": y.tolist(), "eta": eta, "lambda": lam, "objective": solve(X, y, eta, lam)})
    xor_X = np.array([[1, 1], [-1, -1], [1, -1], [-1, 1]], float)
    xor_y = np.array([1, 1, -1, -1], float)
    named = {"xor": {"X": xor_X.tolist(), "y": xor_y.tolist(), "eta": 10.0, "lambda": 1e-3,
                     "objective": solve(xor_X, xor_y, 10.0, 1e-3)}}
    out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data", "qp_reference.json")
    with open(out, "w") as f:
        json.dump({"solver": "cvxpy/clarabel+osqp", "cases": cases, "named": named}, f, indent=1)
    print("wrote", out)


if __name__ == "__main__":
    main()
