"""Independent brute-force oracles shared by the test modules.

Everything here deliberately avoids the library's own solution paths:
vertex enumeration for LPs, scalar loops for network evaluation, and dense
grid search for the nonconvex certification optimum.
"""

import itertools

import numpy as np


def as_inequalities(problem):
    """Collect every constraint (rows, senses, bounds) as G x <= h plus A x = b."""
    G, h, A, b = [], [], [], []
    for row, sense, rhs in zip(problem.rows, problem.senses, problem.rhs):
        if sense == "<=":
            G.append(row), h.append(rhs)
        elif sense == ">=":
            G.append(-row), h.append(-rhs)
        else:
            A.append(row), b.append(rhs)
    n = problem.num_vars
    for j, (lo, hi) in enumerate(problem.bounds):
        e = np.zeros(n)
        e[j] = 1.0
        if hi is not None:
            G.append(e.copy()), h.append(hi)
        if lo is not None:
            G.append(-e), h.append(-lo)
    G = np.array(G).reshape(-1, n)
    A = np.array(A).reshape(-1, n)
    return G, np.array(h), A, np.array(b)


def vertex_enumeration_max(problem, feas_tol=1e-7):
    """Max objective over all basic feasible points; None if no vertex is feasible.

    Enumerates every choice of active constraints that pins down a point
    (equalities always active) and keeps the feasible ones.
    """
    G, h, A, b = as_inequalities(problem)
    n = problem.num_vars
    n_eq = A.shape[0]
    best = None
    for combo in itertools.combinations(range(G.shape[0]), n - n_eq):
        M = np.vstack([A, G[list(combo)]]) if n_eq else G[list(combo)]
        rhs = np.concatenate([b, h[list(combo)]]) if n_eq else h[list(combo)]
        if np.linalg.matrix_rank(M, tol=1e-10) < n:
            continue
        x, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        if G.shape[0] and np.max(G @ x - h) > feas_tol:
            continue
        if n_eq and np.max(np.abs(A @ x - b)) > feas_tol:
            continue
        val = problem.objective @ x
        if best is None or val > best:
            best = val
    return best


def naive_forward(net, x):
    """Scalar-loop network evaluation, independent of the library's forward."""
    h = list(x)
    for W, b in net.layers:
        out = []
        for i in range(W.shape[0]):
            acc = b[i]
            for j in range(W.shape[1]):
                acc += W[i, j] * h[j]
            out.append(max(acc, 0.0))
        h = out
    return np.array(h)


def batch_outputs(net, X):
    """Vectorized forward pass over rows of X (oracle-side convenience)."""
    H = np.asarray(X, dtype=float)
    for W, b in net.layers:
        H = np.maximum(H @ W.T + b, 0.0)
    return H


def grid_search_max(net, region, c, per_axis=101, refinements=3, top_k=40, refine_axis=None):
    """Dense-grid maximum of c @ f(x) over a box, with local refinement.

    Zooms a fresh grid into a window around each of the best coarse points;
    for piecewise-linear objectives the value converges to the optimum as
    the windows shrink (factor ~(refine_axis-1)/2 per level).
    """
    c = np.asarray(c, dtype=float)
    n = region.lower.shape[0]
    refine_axis = per_axis if refine_axis is None else refine_axis

    def evaluate(lo_, hi_, axis_points):
        axes = [np.linspace(lo_[j], hi_[j], axis_points) for j in range(n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        X = np.stack([m.ravel() for m in mesh], axis=1)
        return X, batch_outputs(net, X) @ c

    X, vals = evaluate(region.lower, region.upper, per_axis)
    order = np.argsort(vals)
    best_val = float(vals[order[-1]])
    centers = X[order[-top_k:]]
    half = (region.upper - region.lower) / (per_axis - 1)
    for _ in range(refinements):
        new_centers = []
        for center in centers:
            lo_ = np.maximum(center - half, region.lower)
            hi_ = np.minimum(center + half, region.upper)
            Xr, valsr = evaluate(lo_, hi_, refine_axis)
            i = int(np.argmax(valsr))
            best_val = max(best_val, float(valsr[i]))
            new_centers.append(Xr[i])
        centers = np.array(new_centers)
        half = 2.0 * half / (refine_axis - 1)
    return best_val
