"""Lifted moment-matrix (SDP) relaxation of one-layer certification.

The decision variable is the symmetric matrix P indexed by (1, x, z); rank-1
feasible points P = (1, x, z)(1, x, z)^T with z = relu(Wx) correspond to
exact network evaluations, so the SDP optimum upper-bounds the nonconvex
one.  Solved approximately by operator-splitting ADMM: alternate projection
onto the linear constraints (prefactored least squares with nonnegative
slacks) and onto the PSD cone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from relucert.eigen import jacobi_eigh
from relucert.network import Network
from relucert.regions import InputRegion

__all__ = [
    "SdpProblem",
    "SdpResult",
    "SdpSettings",
    "SdpResiduals",
    "build_sdp",
    "lift_point",
    "solve_sdp",
    "sdp_feasibility_residuals",
    "geo_gap",
]

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SdpProblem:
    """Data of the lifted relaxation sup c @ P[z] over the moment matrix P.

    ``input_lower``/``input_upper`` bound the input block of P (not the
    preactivations).  When the network has a bias, the input is augmented
    with a constant coordinate pinned to [1, 1] and the bias becomes an
    extra weight column, so the constraint structure stays bias-free.
    """

    W: np.ndarray
    input_lower: np.ndarray
    input_upper: np.ndarray
    c: np.ndarray
    augmented: bool = False

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        l = np.atleast_1d(np.asarray(self.input_lower, dtype=float))
        u = np.atleast_1d(np.asarray(self.input_upper, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if l.shape != u.shape or l.shape[0] != W.shape[1]:
            raise ValueError("input bounds must match weight columns")
        if np.any(l > u):
            raise ValueError("need input_lower <= input_upper")
        if c.shape[0] != W.shape[0]:
            raise ValueError("objective length must match weight rows")
        for arr in (W, l, u, c):
            arr.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "input_lower", l)
        object.__setattr__(self, "input_upper", u)
        object.__setattr__(self, "c", c)

    @property
    def n_x(self) -> int:
        return self.W.shape[1]

    @property
    def n_z(self) -> int:
        return self.W.shape[0]

    @property
    def m(self) -> int:
        return 1 + self.n_x + self.n_z

    def x_index(self, i: int) -> int:
        return 1 + i

    def z_index(self, i: int) -> int:
        return 1 + self.n_x + i

    def lift_input(self, x) -> np.ndarray:
        """Map a network input to this problem's input block (adds the
        constant coordinate when the bias was folded in)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.append(x, 1.0) if self.augmented else x

    def constraint_group_sizes(self) -> tuple[int, int, int, int, int]:
        """Scalar row counts of the five linear constraint groups:
        z >= 0, z >= W x, relu diagonal equality, input box quadratic, unit."""
        return (self.n_z, self.n_z, self.n_z, self.n_x, 1)


@dataclass(frozen=True)
class SdpSettings:
    eps: float = 1e-5
    max_iters: int = 50_000
    rho: float = 1.0
    over_relaxation: float = 1.6
    # keep iterating below eps by this factor: the objective error of a
    # first-order method at residual eps can be several times eps, and the
    # extra iterations are cheap at desk scale
    polish_factor: float = 0.05


@dataclass(frozen=True)
class SdpResiduals:
    """Max violation per constraint group of the lifted program."""

    z_nonneg: float
    relu_linear: float
    relu_diag: float
    input_box: float
    unit: float
    min_eig: float

    @property
    def max_violation(self) -> float:
        return max(
            self.z_nonneg,
            self.relu_linear,
            self.relu_diag,
            self.input_box,
            self.unit,
            -min(self.min_eig, 0.0),
        )


@dataclass(frozen=True)
class SolverResiduals:
    primal: float
    dual: float
    min_eig: float


@dataclass(frozen=True)
class SdpResult:
    P: np.ndarray
    objective: float
    status: str  # "converged" | "max_iters"
    residuals: SolverResiduals
    eps: float
    iterations: int


def build_sdp(net: Network, region: InputRegion, c) -> SdpProblem:
    """Lifted relaxation data for a one-layer network over a pure box."""
    if net.num_layers != 1:
        raise ValueError("the lifted relaxation is defined for one-layer networks")
    if region.cuts:
        raise ValueError("lifted relaxation needs a pure box region; partition by sub-boxes")
    W, b = net.layers[0]
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if c.shape[0] != net.output_dim:
        raise ValueError("objective length must match network output")
    if np.any(b != 0.0):
        W_aug = np.hstack([W, b[:, None]])
        lower = np.append(region.lower, 1.0)
        upper = np.append(region.upper, 1.0)
        return SdpProblem(W_aug, lower, upper, c, augmented=True)
    return SdpProblem(W, region.lower, region.upper, c, augmented=False)


def lift_point(x, z) -> np.ndarray:
    """Rank-1 lift P = v v^T with v = (1, x, z)."""
    v = np.concatenate([[1.0], np.atleast_1d(x), np.atleast_1d(z)]).astype(float)
    return np.outer(v, v)


def sdp_feasibility_residuals(P, problem: SdpProblem, eigh=jacobi_eigh) -> SdpResiduals:
    """Violation of each constraint group of the lifted program at P."""
    P = np.asarray(P, dtype=float)
    m = problem.m
    if P.shape != (m, m):
        raise ValueError(f"P must be {m}x{m}, got {P.shape}")
    W = problem.W
    l, u = problem.input_lower, problem.input_upper
    px = P[1 : 1 + problem.n_x, 0]
    pz = P[1 + problem.n_x :, 0]
    Pxx = P[1 : 1 + problem.n_x, 1 : 1 + problem.n_x]
    Pxz = P[1 : 1 + problem.n_x, 1 + problem.n_x :]
    Pzz = P[1 + problem.n_x :, 1 + problem.n_x :]

    z_nonneg = float(np.max(np.maximum(-pz, 0.0), initial=0.0))
    relu_linear = float(np.max(np.maximum(W @ px - pz, 0.0), initial=0.0))
    relu_diag = float(np.max(np.abs(np.diag(Pzz) - np.diag(W @ Pxz)), initial=0.0))
    input_box = float(np.max(np.maximum(np.diag(Pxx) - (l + u) * px + l * u, 0.0), initial=0.0))
    unit = float(abs(P[0, 0] - 1.0))
    w, _ = eigh(0.5 * (P + P.T))
    return SdpResiduals(z_nonneg, relu_linear, relu_diag, input_box, unit, float(w[0]))


def _svec_pairs(m: int):
    return [(i, j) for i in range(m) for j in range(i, m)]


def _svec(S: np.ndarray, pairs) -> np.ndarray:
    out = np.empty(len(pairs))
    for k, (i, j) in enumerate(pairs):
        out[k] = S[i, i] if i == j else SQRT2 * S[i, j]
    return out


def _smat(v: np.ndarray, m: int, pairs) -> np.ndarray:
    S = np.zeros((m, m))
    for k, (i, j) in enumerate(pairs):
        if i == j:
            S[i, i] = v[k]
        else:
            S[i, j] = S[j, i] = v[k] / SQRT2
    return S


def _constraint_rows(problem: SdpProblem, pairs):
    """Equality and inequality rows of the lifted program in svec coordinates."""
    m = problem.m
    W, l, u = problem.W, problem.input_lower, problem.input_upper

    def sym_entry(S, i, j, val):
        S[i, j] += 0.5 * val
        S[j, i] += 0.5 * val

    eq_rows, eq_rhs = [], []
    for i in range(problem.n_z):
        zi = problem.z_index(i)
        S = np.zeros((m, m))
        S[zi, zi] = 1.0
        for j in range(problem.n_x):
            sym_entry(S, problem.x_index(j), zi, -W[i, j])
        eq_rows.append(_svec(S, pairs))
        eq_rhs.append(0.0)
    S = np.zeros((m, m))
    S[0, 0] = 1.0
    eq_rows.append(_svec(S, pairs))
    eq_rhs.append(1.0)

    in_rows, in_rhs = [], []
    for i in range(problem.n_z):
        S = np.zeros((m, m))
        sym_entry(S, 0, problem.z_index(i), -1.0)
        in_rows.append(_svec(S, pairs))
        in_rhs.append(0.0)
    for i in range(problem.n_z):
        S = np.zeros((m, m))
        sym_entry(S, 0, problem.z_index(i), -1.0)
        for j in range(problem.n_x):
            sym_entry(S, 0, problem.x_index(j), W[i, j])
        in_rows.append(_svec(S, pairs))
        in_rhs.append(0.0)
    for i in range(problem.n_x):
        xi = problem.x_index(i)
        S = np.zeros((m, m))
        S[xi, xi] = 1.0
        sym_entry(S, 0, xi, -(l[i] + u[i]))
        in_rows.append(_svec(S, pairs))
        in_rhs.append(-l[i] * u[i])

    # Redundant acceleration rows: l <= P[x] <= u is implied by the quadratic
    # input constraint together with PSD, but pinning the input block in the
    # affine projection keeps ADMM fast when the box degenerates.
    for i in range(problem.n_x):
        xi = problem.x_index(i)
        S = np.zeros((m, m))
        sym_entry(S, 0, xi, 1.0)
        row = _svec(S, pairs)
        in_rows.append(row)
        in_rhs.append(u[i])
        in_rows.append(-row)
        in_rhs.append(-l[i])

    return np.array(eq_rows), np.array(eq_rhs), np.array(in_rows), np.array(in_rhs)


def solve_sdp(problem: SdpProblem, settings: SdpSettings | None = None) -> SdpResult:
    """Approximately maximize c @ P[z] over the lifted constraint set.

    Consensus ADMM: the affine step projects onto the linear constraints
    (with slack variables for inequalities) through a prefactored normal
    system; the cone step projects the matrix block onto the PSD cone and
    clips slacks at zero.  Residuals below ``settings.eps`` flag
    convergence; the returned objective carries that eps as its accuracy
    margin and all downstream assertions should allow 2*eps.
    """
    if settings is None:
        settings = SdpSettings()
    m = problem.m
    pairs = _svec_pairs(m)
    n_s = len(pairs)

    A_eq, b_eq, G, h = _constraint_rows(problem, pairs)
    p = G.shape[0]
    N = n_s + p
    A_tilde = np.zeros((A_eq.shape[0] + p, N))
    A_tilde[: A_eq.shape[0], :n_s] = A_eq
    A_tilde[A_eq.shape[0] :, :n_s] = G
    A_tilde[A_eq.shape[0] :, n_s:] = np.eye(p)
    b_tilde = np.concatenate([b_eq, h])

    factor = cho_factor(A_tilde @ A_tilde.T + 1e-12 * np.eye(A_tilde.shape[0]))

    # Normalize the objective magnitude: ADMM resolves the optimal value only
    # to a fraction of the step scale, so a near-zero c would otherwise leave
    # the optimum on a numerically flat face.  The argmax is unchanged and the
    # reported value is computed from the final P with the original c.
    obj_scale = float(np.max(np.abs(problem.c)))
    if obj_scale <= 1e-12:
        obj_scale = 1.0
    C = np.zeros((m, m))
    for i in range(problem.n_z):
        C[0, problem.z_index(i)] += 0.5 * problem.c[i] / obj_scale
        C[problem.z_index(i), 0] += 0.5 * problem.c[i] / obj_scale
    q = np.concatenate([-_svec(C, pairs), np.zeros(p)])

    alpha = settings.over_relaxation
    rho = settings.rho
    z = np.zeros(N)
    z[: n_s] = _svec(np.eye(m), pairs)  # identity start: PSD and unit-feasible
    uvar = np.zeros(N)

    status = "max_iters"
    primal = dual = np.inf
    target = settings.eps * settings.polish_factor
    it = 0
    deadline = settings.max_iters
    for it in range(1, settings.max_iters + 1):
        v = z - uvar - q / rho
        y = v - A_tilde.T @ cho_solve(factor, A_tilde @ v - b_tilde)
        y_hat = alpha * y + (1.0 - alpha) * z
        w = y_hat + uvar
        X = _smat(w[:n_s], m, pairs)
        eigval, eigvec = np.linalg.eigh(0.5 * (X + X.T))
        X_psd = (eigvec * np.maximum(eigval, 0.0)) @ eigvec.T
        z_new = np.concatenate([_svec(X_psd, pairs), np.maximum(w[n_s:], 0.0)])
        uvar = uvar + y_hat - z_new
        primal = float(np.linalg.norm(y - z_new))
        dual = float(rho * np.linalg.norm(z_new - z))
        z = z_new
        if primal <= settings.eps and dual <= settings.eps:
            if deadline == settings.max_iters:
                # converged; keep polishing a bounded while for value accuracy
                deadline = min(settings.max_iters, 3 * it + 2000)
            if primal <= target and dual <= target:
                break
        if it >= deadline:
            break
        if it % 100 == 0:
            if primal > 10.0 * dual:
                rho *= 2.0
                uvar /= 2.0
            elif dual > 10.0 * primal:
                rho /= 2.0
                uvar *= 2.0

    # status reflects the returned iterate, never a bygone best
    if primal <= settings.eps and dual <= settings.eps:
        status = "converged"
    P = _smat(z[:n_s], m, pairs)
    P = 0.5 * (P + P.T)
    objective = float(problem.c @ P[1 + problem.n_x :, 0])
    w_min, _ = jacobi_eigh(P)
    return SdpResult(
        P=P,
        objective=objective,
        status=status,
        residuals=SolverResiduals(primal=primal, dual=dual, min_eig=float(w_min[0])),
        eps=settings.eps,
        iterations=it,
    )


def geo_gap(h: float, theta: float) -> float:
    """Largest lift of a coordinate over its preactivation ray: (h/2)(1-cos t)/cos t.

    ``h`` is the ray's projection on the unit direction and ``theta`` its
    angle; degree-1 homogeneous in h, zero iff theta is zero.
    """
    if h < 0:
        raise ValueError("h must be nonnegative")
    if not abs(theta) < math.pi / 2:
        raise ValueError("theta must satisfy |theta| < pi/2")
    cos = math.cos(theta)
    return (h / 2.0) * (1.0 - cos) / cos
