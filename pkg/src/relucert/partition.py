"""Partition schemes for tightening the relaxed certification bound.

Splitting the input region along sign hyperplanes of final-layer rows makes
those ReLU constraints exact per part; the certified bound is the max over
parts and never exceeds the unpartitioned bound.  The full sign-cell
partition (one cell per output sign vector) recovers the nonconvex optimum
exactly; the two-part split along the best-scoring row minimizes the
worst-case relaxation error among single-row splits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from relucert.lp import INFEASIBLE, OPTIMAL, LpProblem, solve_lp
from relucert.network import Network
from relucert.regions import (
    UNSTABLE,
    BlockRow,
    EmptyRegionError,
    InputRegion,
    LayerBounds,
    LpBackendError,
    PreactBounds,
    add_halfspace,
    preact_bounds,
)
from relucert.relaxation import Certificate, certify_lp, forward_gap_rows

__all__ = [
    "PartitionPlan",
    "PartNode",
    "PartitionedCertificate",
    "partition_scores",
    "select_optimal_row",
    "rank_rows",
    "split_by_row",
    "motivating_partition",
    "grid_partition",
    "certify_partitioned",
    "refine_recursive",
    "solution_guided_row",
    "SCHEME_NONE",
    "SCHEME_ROW",
    "SCHEME_ROWS",
    "SCHEME_MOTIVATING",
    "SCHEME_GRID",
    "SCHEME_RECURSIVE",
    "SCHEME_HEURISTIC",
]

SCHEME_NONE = "none"
SCHEME_ROW = "row"
SCHEME_ROWS = "rows"
SCHEME_MOTIVATING = "motivating"
SCHEME_GRID = "grid"
SCHEME_RECURSIVE = "recursive"
SCHEME_HEURISTIC = "heuristic_solution_guided"

# gaps below this are treated as "already exact" by the witness-guided pick
GAP_EPS = 1e-9


@dataclass(frozen=True)
class PartitionPlan:
    """Which partition to apply; resolved plans also carry the row scores."""

    scheme: str
    chosen_rows: tuple[int, ...] = ()
    n_rows: int = 1
    divisions: int = 2
    depth: int = 1
    rationale_scores: np.ndarray | None = None

    @classmethod
    def none(cls) -> "PartitionPlan":
        return cls(SCHEME_NONE)

    @classmethod
    def row(cls, index: int | None = None) -> "PartitionPlan":
        """Two-part split along one row; auto-selects the best row if omitted."""
        return cls(SCHEME_ROW, chosen_rows=() if index is None else (int(index),))

    @classmethod
    def best_rows(cls, count: int) -> "PartitionPlan":
        return cls(SCHEME_ROWS, n_rows=int(count))

    @classmethod
    def motivating(cls) -> "PartitionPlan":
        return cls(SCHEME_MOTIVATING)

    @classmethod
    def grid(cls, divisions: int) -> "PartitionPlan":
        return cls(SCHEME_GRID, divisions=int(divisions))

    @classmethod
    def recursive(cls, depth: int) -> "PartitionPlan":
        return cls(SCHEME_RECURSIVE, depth=int(depth))

    @classmethod
    def heuristic(cls) -> "PartitionPlan":
        return cls(SCHEME_HEURISTIC)


@dataclass
class PartNode:
    """One node of the partition tree; leaves carry certificates."""

    region: InputRegion
    block_rows: tuple[BlockRow, ...] = ()
    certificate: Certificate | None = None
    bounds: PreactBounds | None = None
    status: str = "pending"  # certified | empty
    split_row: int | None = None
    children: list["PartNode"] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            for child in self.children:
                yield from child.leaves()


@dataclass(frozen=True)
class PartitionedCertificate:
    """Per-part certificates plus the overall (max) certified bound."""

    root: PartNode
    plan: PartitionPlan
    overall_bound: float
    level_bounds: tuple[float, ...]
    note: str = ""

    @property
    def parts(self) -> list[PartNode]:
        return list(self.root.leaves())

    @property
    def safe(self) -> bool:
        return self.overall_bound <= 0.0

    @property
    def nonempty_parts(self) -> list[PartNode]:
        return [p for p in self.parts if p.status == "certified"]


def partition_scores(c, final_bounds: LayerBounds) -> np.ndarray:
    """Per-row worst-case error terms relu(c_i) u_i l_i / (u_i - l_i) (<= 0).

    Zero for stable rows; the most negative score marks the row whose split
    removes the largest worst-case relaxation error.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    scores = np.zeros(final_bounds.size)
    for i in range(final_bounds.size):
        if final_bounds.stability[i] == UNSTABLE:
            l, u = final_bounds.lower[i], final_bounds.upper[i]
            scores[i] = max(c[i], 0.0) * u * l / (u - l)
    return scores


def select_optimal_row(c, bounds: PreactBounds) -> int | None:
    """Index minimizing the score (ties to the lowest index); None if no row gains."""
    scores = partition_scores(c, bounds.final)
    best = int(np.argmin(scores))  # np.argmin already takes the first minimum
    if scores[best] >= 0.0:
        return None
    return best


def rank_rows(c, bounds: PreactBounds, n_p: int) -> list[int]:
    """Up to n_p row indices with negative scores, most negative first."""
    if n_p < 1:
        raise ValueError("n_p must be >= 1")
    scores = partition_scores(c, bounds.final)
    order = [i for i in np.argsort(scores, kind="stable") if scores[i] < 0.0]
    return [int(i) for i in order[:n_p]]


def _row_cut(net: Network, i: int, sense: str):
    """Half-space data for sign(w_i @ h + b_i): returns (normal, offset, sense)."""
    W, b = net.layers[-1]
    if not 0 <= i < W.shape[0]:
        raise ValueError(f"row index {i} out of range for {W.shape[0]} output neurons")
    return W[i], -b[i], sense


def split_by_row(region: InputRegion, net: Network, i: int) -> tuple[InputRegion, InputRegion]:
    """Two-part split of a one-layer network's input along output row i.

    Part 1 keeps w_i @ x + b_i >= 0, part 2 the complement; both parts are
    closed, sharing the boundary hyperplane, so their union covers the region.
    """
    if net.num_layers != 1:
        raise ValueError("split_by_row partitions input space; needs a one-layer network")
    normal, offset, _ = _row_cut(net, i, ">=")
    pos = add_halfspace(region, normal, offset, ">=")
    neg = add_halfspace(region, normal, offset, "<")
    return pos, neg


def _sign_cell_parts(net: Network, region: InputRegion, rows: list[int]):
    """All sign-assignment parts over the given final-layer rows.

    One-layer networks get genuine input-space cuts; deeper networks carry
    the cuts as linear rows on the last hidden activation block.
    """
    K = net.num_layers
    W, b = net.layers[-1]
    for i in rows:
        if not 0 <= i < W.shape[0]:
            raise ValueError(f"row index {i} out of range for {W.shape[0]} output neurons")
    parts = []
    for signs in itertools.product((1, -1), repeat=len(rows)):
        if K == 1:
            part_region = region
            for i, s in zip(rows, signs):
                part_region = add_halfspace(part_region, W[i], -b[i], ">=" if s > 0 else "<")
            parts.append(PartNode(part_region))
        else:
            cut_rows = tuple(
                BlockRow(K - 1, W[i], ">=" if s > 0 else "<=", -b[i])
                for i, s in zip(rows, signs)
            )
            parts.append(PartNode(region, block_rows=cut_rows))
    return parts


def _region_feasible(region: InputRegion) -> bool:
    rows = region.cut_rows()
    if not rows:
        return True
    problem = LpProblem(
        np.zeros(region.dim),
        np.array([r[0] for r in rows]),
        tuple(r[1] for r in rows),
        np.array([r[2] for r in rows]),
        bounds=tuple((float(lo), float(hi)) for lo, hi in zip(region.lower, region.upper)),
    )
    result = solve_lp(problem)
    if result.status == INFEASIBLE:
        return False
    if result.status != OPTIMAL:
        raise LpBackendError(f"feasibility LP status {result.status}")
    return True


def motivating_partition(net: Network, region: InputRegion, max_outputs: int = 20):
    """The 2^{n_z} sign-cell partition of a one-layer network's input.

    Every part fixes the sign of every output preactivation, making each
    per-part relaxation exact.  Empty cells are dropped.
    """
    if net.num_layers != 1:
        raise ValueError("motivating partition is defined for one-layer networks")
    n_z = net.output_dim
    if n_z > max_outputs:
        raise ValueError(f"{n_z} outputs exceed the 2^n_z enumeration budget ({max_outputs})")
    parts = _sign_cell_parts(net, region, list(range(n_z)))
    return [p.region for p in parts if _region_feasible(p.region)]


def grid_partition(region: InputRegion, n: int) -> list[InputRegion]:
    """n^dim axis-aligned sub-boxes tiling a pure box region."""
    if region.cuts:
        raise ValueError("grid partition requires a pure box region")
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return [region]
    width = region.upper - region.lower
    edges = [region.lower + width * k / n for k in range(n + 1)]
    boxes = []
    for idx in itertools.product(range(n), repeat=region.dim):
        lo = np.array([edges[k][j] for j, k in enumerate(idx)])
        hi = np.array([edges[k + 1][j] for j, k in enumerate(idx)])
        boxes.append(InputRegion(lo, hi))
    return boxes


def _certify_part(net: Network, c, part: PartNode) -> PartNode:
    """Certify one part in place; marks empty parts instead of raising.

    Parts are always bounded in lp_tight mode: interval bounds cannot see
    the partition cuts, which would void the split entirely.
    """
    try:
        part.bounds = preact_bounds(net, part.region, "lp_tight", block_rows=part.block_rows)
        part.certificate = certify_lp(
            net, part.region, c, bounds=part.bounds, block_rows=part.block_rows
        )
        part.status = "certified"
    except EmptyRegionError:
        part.certificate = None
        part.status = "empty"
    return part


def _overall(parts) -> float:
    bounds = [p.certificate.bound for p in parts if p.status == "certified"]
    if not bounds:
        raise AssertionError("every part came back empty for a nonempty region")
    return max(bounds)


def certify_partitioned(
    net: Network,
    region: InputRegion,
    c,
    plan: PartitionPlan,
) -> PartitionedCertificate:
    """Certify the region part by part under the given plan.

    The overall bound is the max over nonempty parts; per-part bounds use
    part-specific lp_tight preactivation bounds, so the result never exceeds
    the unpartitioned bound for row or grid partitions of one-layer networks.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if plan.scheme == SCHEME_RECURSIVE:
        return refine_recursive(net, region, c, plan.depth)

    root = PartNode(region)
    note = ""
    resolved = plan

    if plan.scheme == SCHEME_NONE:
        children = []
    elif plan.scheme == SCHEME_ROW:
        bounds = preact_bounds(net, region)
        scores = partition_scores(c, bounds.final)
        if plan.chosen_rows:
            rows = [plan.chosen_rows[0]]
        else:
            picked = select_optimal_row(c, bounds)
            if picked is None:
                rows = []
                note = "no_gain"
            else:
                rows = [picked]
        resolved = replace(plan, chosen_rows=tuple(rows), rationale_scores=scores)
        children = _sign_cell_parts(net, region, rows) if rows else []
    elif plan.scheme == SCHEME_ROWS:
        bounds = preact_bounds(net, region)
        scores = partition_scores(c, bounds.final)
        rows = list(plan.chosen_rows) or rank_rows(c, bounds, plan.n_rows)
        if not rows:
            note = "no_gain"
        resolved = replace(plan, chosen_rows=tuple(rows), rationale_scores=scores)
        children = _sign_cell_parts(net, region, rows) if rows else []
    elif plan.scheme == SCHEME_MOTIVATING:
        regions = motivating_partition(net, region)
        children = [PartNode(r) for r in regions]
        resolved = replace(plan, chosen_rows=tuple(range(net.output_dim)))
    elif plan.scheme == SCHEME_GRID:
        children = [PartNode(r) for r in grid_partition(region, plan.divisions)]
    elif plan.scheme == SCHEME_HEURISTIC:
        bounds = preact_bounds(net, region)
        cert = certify_lp(net, region, c, bounds=bounds)
        picked = solution_guided_row(cert, net, c, bounds)
        if picked is None:
            children = []
            note = "no_gain"
        else:
            children = _sign_cell_parts(net, region, [picked])
            resolved = replace(plan, chosen_rows=(picked,))
    else:
        raise ValueError(f"unknown partition scheme {plan.scheme!r}")

    if not children:
        _certify_part(net, c, root)
        if root.status != "certified":
            raise EmptyRegionError("region is empty")
        overall = root.certificate.bound
        return PartitionedCertificate(root, resolved, overall, (overall,), note)

    root.children = [_certify_part(net, c, child) for child in children]
    overall = _overall(root.children)
    return PartitionedCertificate(root, resolved, overall, (overall,), note)


def _split_leaf(net: Network, leaf: PartNode, row: int) -> list[PartNode]:
    K = net.num_layers
    W, b = net.layers[-1]
    if K == 1:
        pos = add_halfspace(leaf.region, W[row], -b[row], ">=")
        neg = add_halfspace(leaf.region, W[row], -b[row], "<")
        return [PartNode(pos), PartNode(neg)]
    pos_rows = leaf.block_rows + (BlockRow(K - 1, W[row], ">=", -b[row]),)
    neg_rows = leaf.block_rows + (BlockRow(K - 1, W[row], "<=", -b[row]),)
    return [
        PartNode(leaf.region, block_rows=pos_rows),
        PartNode(leaf.region, block_rows=neg_rows),
    ]


def refine_recursive(
    net: Network,
    region: InputRegion,
    c,
    depth: int,
) -> PartitionedCertificate:
    """Nested two-part refinement of the part holding the current max bound.

    At each level the binding part is split along its own optimal row (scores
    recomputed from that part's bounds), so the overall bound is nonincreasing
    level to level.  Stops early with note "no_gain" when no row can help.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    c = np.atleast_1d(np.asarray(c, dtype=float))
    root = _certify_part(net, c, PartNode(region))
    if root.status != "certified":
        raise EmptyRegionError("region is empty")
    levels = [root.certificate.bound]
    note = ""
    for _ in range(depth):
        leaves = [p for p in root.leaves() if p.status == "certified"]
        binding = max(leaves, key=lambda p: p.certificate.bound)
        row = select_optimal_row(c, binding.bounds)
        if row is None:
            note = "no_gain"
            levels.append(levels[-1])
            break
        binding.split_row = row
        binding.children = [
            _certify_part(net, c, child) for child in _split_leaf(net, binding, row)
        ]
        levels.append(_overall(list(root.leaves())))
    plan = PartitionPlan(SCHEME_RECURSIVE, depth=depth)
    return PartitionedCertificate(root, plan, levels[-1], tuple(levels), note)


def solution_guided_row(
    cert: Certificate, net: Network, c, bounds: PreactBounds | None = None
) -> int | None:
    """Pick the row whose relaxed witness overshoots relu the most (experimental).

    Scores c_k (z*_k - relu(zhat_k at the witness input)) and returns the
    argmax, or None when every gap is below tolerance.  Unlike the
    score-based rule this needs a solved relaxation; it is a heuristic
    without a tightness guarantee.
    """
    if cert.witness_x is None or cert.witness_z is None:
        raise ValueError("certificate carries no witness")
    c = np.atleast_1d(np.asarray(c, dtype=float))
    gaps = c * forward_gap_rows(net, cert.witness_x, cert.witness_z)
    if bounds is not None:
        for i, flag in enumerate(bounds.final.stability):
            if flag != UNSTABLE:
                gaps[i] = 0.0
    best = int(np.argmax(gaps))
    if gaps[best] <= GAP_EPS:
        return None
    return best
