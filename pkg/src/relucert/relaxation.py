"""LP relaxation of ReLU certification, exact enumeration oracle, and gap bounds.

The certification problem maximizes c @ z over network outputs z reachable
from an input region.  Each unstable ReLU is relaxed to its triangle
envelope z >= 0, z >= zhat, z <= u (zhat - l) / (u - l); stable neurons get
exact linear constraints instead, which is both sound and tighter than the
degenerate envelope.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from relucert.lp import FAILED, INFEASIBLE, UNBOUNDED, LpProblem, LpResult, solve_lp
from relucert.network import Network, forward
from relucert.regions import (
    STABLE_ACTIVE,
    STABLE_INACTIVE,
    UNSTABLE,
    BlockRow,
    EmptyRegionError,
    InputRegion,
    LayerBounds,
    LpBackendError,
    PreactBounds,
    preact_bounds,
    sample_points,
)

__all__ = [
    "SafetySpec",
    "Certificate",
    "GapDiagnostics",
    "build_relaxed_lp",
    "certify_lp",
    "exact_value",
    "worst_case_gap_bound",
    "estimate_lipschitz",
    "load_safety",
    "ENUMERATION_BUDGET",
]

KIND_LP = "lp_relaxed"
KIND_SDP = "sdp_relaxed"
KIND_EXACT = "exact"

ENUMERATION_BUDGET = 24


@dataclass(frozen=True)
class SafetySpec:
    """Polyhedral safe set {z : C z <= d}; certification bounds each row."""

    C: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        if C.shape[0] != d.shape[0]:
            raise ValueError("C row count must match length of d")
        if not (np.all(np.isfinite(C)) and np.all(np.isfinite(d))):
            raise ValueError("safety spec entries must be finite")
        C.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "d", d)

    @property
    def num_rows(self) -> int:
        return self.C.shape[0]

    def rows(self):
        for i in range(self.num_rows):
            yield self.C[i], float(self.d[i])


def load_safety(data: bytes | str) -> SafetySpec:
    """Parse the safety spec JSON: {"C": [[...]], "d": [...]} or {"c": [...]}."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")

    def reject(token):
        raise ValueError(f"non-finite token {token!r} in safety document")

    doc = json.loads(data, parse_constant=reject)
    if "c" in doc:
        c = np.atleast_1d(np.asarray(doc["c"], dtype=float))
        return SafetySpec(c[None, :], np.zeros(1))
    return SafetySpec(doc["C"], doc["d"])


@dataclass(frozen=True)
class Certificate:
    """Upper bound on max c @ z with provenance and optional witness."""

    bound: float
    kind: str
    witness_x: np.ndarray | None = None
    witness_z: np.ndarray | None = None

    @property
    def safe(self) -> bool:
        return self.bound <= 0.0


@dataclass(frozen=True)
class GapDiagnostics:
    """Worst-case relaxation error decomposition plus empirical extras.

    ``per_neuron_terms[i]`` is the (nonpositive) contribution
    relu(c_i) * u_i * l_i / (u_i - l_i) of an unstable output neuron;
    ``worst_case_bound`` is minus their sum.
    """

    worst_case_bound: float
    per_neuron_terms: np.ndarray
    max_diameter: float = 0.0
    empirical_lipschitz: float = 0.0


def _var_layout(net: Network, upto: int):
    sizes = [net.input_dim] + [net.layers[k][0].shape[0] for k in range(upto)]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])

    def block(k: int) -> slice:
        return slice(int(offsets[k]), int(offsets[k + 1]))

    return total, block


def prefix_lp(
    net: Network,
    region: InputRegion,
    layer_bounds: list[LayerBounds] | tuple[LayerBounds, ...],
    upto: int,
    objective_block: np.ndarray,
    block_rows: tuple[BlockRow, ...] = (),
) -> LpProblem:
    """LP over (x, x1..x_upto) with relaxed constraints for layers 1..upto.

    The objective acts on the last variable block (the input itself when
    upto == 0).  Used both for bound tightening and the full relaxation.
    """
    total, block = _var_layout(net, upto)
    bounds: list[tuple[float | None, float | None]] = [
        (float(lo), float(hi)) for lo, hi in zip(region.lower, region.upper)
    ]
    bounds += [(0.0, None)] * (total - net.input_dim)

    rows, senses, rhs = [], [], []

    def add(row, sense, r):
        rows.append(row)
        senses.append(sense)
        rhs.append(r)

    for normal, sense, offset in region.cut_rows():
        row = np.zeros(total)
        row[block(0)] = normal
        add(row, sense, offset)

    for extra in block_rows:
        if extra.block > upto:
            raise ValueError(f"block row targets block {extra.block} beyond prefix {upto}")
        row = np.zeros(total)
        row[block(extra.block)] = extra.coeffs
        add(row, extra.sense, extra.rhs)

    for k in range(upto):
        W, b = net.layers[k]
        lb = layer_bounds[k]
        h = block(k)
        z0 = block(k + 1).start
        for i in range(W.shape[0]):
            flag = lb.stability[i]
            w = W[i]
            if flag == STABLE_ACTIVE:
                row = np.zeros(total)
                row[z0 + i] = 1.0
                row[h] = -w
                add(row, "=", b[i])
            elif flag == STABLE_INACTIVE:
                row = np.zeros(total)
                row[z0 + i] = 1.0
                add(row, "=", 0.0)
            else:
                l, u = lb.lower[i], lb.upper[i]
                assert u - l >= 1e-12, "unstable neuron with degenerate width"
                row = np.zeros(total)
                row[z0 + i] = 1.0
                row[h] = -w
                add(row, ">=", b[i])
                row = np.zeros(total)
                row[z0 + i] = u - l
                row[h] = -u * w
                add(row, "<=", u * (b[i] - l))

    objective = np.zeros(total)
    objective[block(upto)] = objective_block
    return LpProblem(
        objective,
        np.array(rows).reshape(-1, total),
        tuple(senses),
        np.array(rhs),
        bounds=tuple(bounds),
    )


def build_relaxed_lp(
    net: Network,
    region: InputRegion,
    bounds: PreactBounds,
    c,
    block_rows: tuple[BlockRow, ...] = (),
) -> LpProblem:
    """Full relaxed certification LP: max c @ z over the relaxed constraint set."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if c.shape[0] != net.output_dim:
        raise ValueError("objective length must equal network output dimension")
    if len(bounds.layers) != net.num_layers:
        raise ValueError("bounds must cover every layer")
    return prefix_lp(net, region, bounds.layers, net.num_layers, c, block_rows=block_rows)


def _solved_or_raise(result: LpResult, context: str) -> LpResult:
    if result.status == INFEASIBLE:
        raise EmptyRegionError(f"{context}: empty part (LP infeasible)")
    if result.status in (UNBOUNDED, FAILED):
        raise LpBackendError(f"{context}: LP status {result.status}")
    return result


def certify_lp(
    net: Network,
    region: InputRegion,
    c,
    mode: str = "lp_tight",
    bounds: PreactBounds | None = None,
    block_rows: tuple[BlockRow, ...] = (),
) -> Certificate:
    """Upper-bound max c @ z by solving the relaxed LP over the region.

    Always sound: the relaxed feasible set contains every true input-output
    pair, so the returned bound dominates the nonconvex optimum.
    """
    if bounds is None:
        bounds = preact_bounds(net, region, mode, block_rows=block_rows)
    problem = build_relaxed_lp(net, region, bounds, c, block_rows=block_rows)
    result = _solved_or_raise(solve_lp(problem), "relaxed certification")
    total, block = _var_layout(net, net.num_layers)
    return Certificate(
        bound=float(result.value),
        kind=KIND_LP,
        witness_x=result.point[block(0)].copy(),
        witness_z=result.point[block(net.num_layers)].copy(),
    )


def _pattern_lp(
    net: Network, region: InputRegion, pattern: np.ndarray, c: np.ndarray
) -> LpProblem:
    """LP restricted to one activation pattern: z = zhat where on, z = 0 where off."""
    K = net.num_layers
    total, block = _var_layout(net, K)
    bounds: list[tuple[float | None, float | None]] = [
        (float(lo), float(hi)) for lo, hi in zip(region.lower, region.upper)
    ]
    bounds += [(0.0, None)] * (total - net.input_dim)

    rows, senses, rhs = [], [], []

    def add(row, sense, r):
        rows.append(row)
        senses.append(sense)
        rhs.append(r)

    for normal, sense, offset in region.cut_rows():
        row = np.zeros(total)
        row[block(0)] = normal
        add(row, sense, offset)

    pos = 0
    for k in range(K):
        W, b = net.layers[k]
        h = block(k)
        z0 = block(k + 1).start
        for i in range(W.shape[0]):
            w = W[i]
            if pattern[pos]:
                # zhat >= 0 and z = zhat
                row = np.zeros(total)
                row[h] = w
                add(row, ">=", -b[i])
                row = np.zeros(total)
                row[z0 + i] = 1.0
                row[h] = -w
                add(row, "=", b[i])
            else:
                # zhat <= 0 and z = 0
                row = np.zeros(total)
                row[h] = w
                add(row, "<=", -b[i])
                row = np.zeros(total)
                row[z0 + i] = 1.0
                add(row, "=", 0.0)
            pos += 1

    objective = np.zeros(total)
    objective[block(K)] = c
    return LpProblem(
        objective,
        np.array(rows).reshape(-1, total),
        tuple(senses),
        np.array(rhs),
        bounds=tuple(bounds),
    )


def exact_value(
    net: Network,
    region: InputRegion,
    c,
    bounds: PreactBounds | None = None,
) -> Certificate:
    """Exact nonconvex optimum via activation-pattern enumeration.

    Each of the 2^N sign patterns yields an LP whose constraints force
    z = relu(zhat) coordinatewise; the maximum over feasible patterns is
    the true optimum.  Neurons whose preactivation sign is fixed by the
    bounds are pinned instead of enumerated (lossless pruning).
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    n_total = sum(net.layer_dims)
    if n_total > ENUMERATION_BUDGET:
        raise ValueError(
            f"{n_total} neurons exceeds the enumeration budget of {ENUMERATION_BUDGET}"
        )
    if bounds is None:
        bounds = preact_bounds(net, region, "lp_tight")

    flags = [f for lb in bounds.layers for f in lb.stability]
    base = np.array([f == STABLE_ACTIVE for f in flags], dtype=bool)
    free = [i for i, f in enumerate(flags) if f == UNSTABLE]

    K = net.num_layers
    total, block = _var_layout(net, K)
    best: tuple[float, np.ndarray] | None = None
    for mask in range(1 << len(free)):
        pattern = base.copy()
        for bit, idx in enumerate(free):
            pattern[idx] = bool((mask >> bit) & 1)
        result = solve_lp(_pattern_lp(net, region, pattern, c))
        if result.status == INFEASIBLE:
            continue
        if result.status in (UNBOUNDED, FAILED):
            raise LpBackendError(f"pattern LP status {result.status}")
        if best is None or result.value > best[0]:
            best = (result.value, result.point)
    if best is None:
        raise EmptyRegionError("all activation patterns infeasible; region is empty")
    value, point = best
    return Certificate(
        bound=float(value),
        kind=KIND_EXACT,
        witness_x=point[block(0)].copy(),
        witness_z=point[block(K)].copy(),
    )


def worst_case_gap_bound(
    c,
    l,
    u,
    alpha: float = 1.0,
    max_diameter: float = 0.0,
    empirical_lipschitz: float = 0.0,
) -> GapDiagnostics:
    """Worst-case relaxation error bound -sum_i relu(c_i) u_i l_i / (u_i - l_i).

    ``alpha`` in (0, 1] scales the preactivation bounds inward; the bound
    scales linearly with it.  Stable coordinates contribute nothing.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    l = np.atleast_1d(np.asarray(l, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(l > u):
        raise ValueError("need l <= u")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    terms = np.zeros(c.shape[0])
    for i in range(c.shape[0]):
        if l[i] < 0.0 < u[i] and u[i] - l[i] >= 1e-12:
            terms[i] = alpha * max(c[i], 0.0) * u[i] * l[i] / (u[i] - l[i])
    return GapDiagnostics(
        worst_case_bound=float(-np.sum(terms)),
        per_neuron_terms=terms,
        max_diameter=max_diameter,
        empirical_lipschitz=empirical_lipschitz,
    )


def forward_gap_rows(net: Network, x, z) -> np.ndarray:
    """Per-output overshoot z_k - relu(zhat_k) of a relaxed witness over the
    true activation at the same input."""
    trace = forward(net, np.asarray(x, dtype=float))
    return np.asarray(z, dtype=float) - np.maximum(trace.preactivations[-1], 0.0)


def relaxed_output_value(
    net: Network, region: InputRegion, bounds: PreactBounds, c, x
) -> float:
    """sup c @ z over the relaxed constraint set with the input pinned to x."""
    x = np.asarray(x, dtype=float)
    pinned = InputRegion(np.maximum(region.lower, x), np.minimum(region.upper, x), region.cuts)
    problem = build_relaxed_lp(net, pinned, bounds, c)
    result = _solved_or_raise(solve_lp(problem), "pinned-input relaxation")
    return float(result.value)


def estimate_lipschitz(
    net: Network,
    region: InputRegion,
    c,
    bounds: PreactBounds | None = None,
    n_pairs: int = 1000,
    seed: int = 0,
) -> float:
    """Empirical Lipschitz constant of x -> sup{c @ z : (x, z) relaxed-feasible}.

    Finite for every network by LP stability theory; this estimates it by
    sampling point pairs, as a diagnostic rather than a certified constant.
    """
    if bounds is None:
        bounds = preact_bounds(net, region, "lp_tight")
    rng = np.random.default_rng(seed)
    pts = sample_points(region, 2 * n_pairs, rng)
    worst = 0.0
    for x1, x2 in zip(pts[:n_pairs], pts[n_pairs:]):
        gap = np.linalg.norm(x1 - x2)
        if gap < 1e-9:
            continue
        v1 = relaxed_output_value(net, region, bounds, c, x1)
        v2 = relaxed_output_value(net, region, bounds, c, x2)
        worst = max(worst, abs(v1 - v2) / gap)
    return worst
