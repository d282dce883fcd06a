"""Input uncertainty regions (box + half-space cuts) and preactivation bounds."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from relucert.lp import FAILED, INFEASIBLE, UNBOUNDED, solve_lp
from relucert.network import Network

__all__ = [
    "InputRegion",
    "Halfspace",
    "PreactBounds",
    "LayerBounds",
    "EmptyRegionError",
    "LpBackendError",
    "box_from_center",
    "add_halfspace",
    "preact_bounds",
    "diameter",
    "sample_points",
    "load_region",
    "save_region",
    "STABLE_ACTIVE",
    "STABLE_INACTIVE",
    "UNSTABLE",
]

STABLE_ACTIVE = "stable_active"
STABLE_INACTIVE = "stable_inactive"
UNSTABLE = "unstable"

GE, LT = ">=", "<"

# below this preactivation width a neuron is treated as constant
DEGENERATE_WIDTH = 1e-12


class EmptyRegionError(ValueError):
    """Raised when an operation requires a nonempty region but finds none."""


class LpBackendError(RuntimeError):
    """Raised when the LP engine reports numerical breakdown or an
    unexpected status (e.g. unbounded bound computation)."""


@dataclass(frozen=True)
class Halfspace:
    """One cut `normal @ x (sense) offset` with sense in {">=", "<"}.

    LPs treat both senses as closed; the strict side only matters for
    bookkeeping symmetry of two-part splits.
    """

    normal: np.ndarray
    offset: float
    sense: str = GE

    def __post_init__(self):
        normal = np.atleast_1d(np.asarray(self.normal, dtype=float))
        if normal.ndim != 1 or not np.all(np.isfinite(normal)):
            raise ValueError("cut normal must be a finite vector")
        if np.all(normal == 0.0):
            raise ValueError("cut normal must be nonzero")
        if self.sense not in (GE, LT):
            raise ValueError(f"cut sense must be '>=' or '<', got {self.sense!r}")
        normal.setflags(write=False)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    def satisfied(self, x, tol: float = 1e-9) -> bool:
        v = float(self.normal @ x)
        return v >= self.offset - tol if self.sense == GE else v <= self.offset + tol


@dataclass(frozen=True)
class BlockRow:
    """Linear constraint on one activation block of the certification LP.

    ``block`` 0 is the input x, block k >= 1 the postactivations of layer k.
    Used for partition cuts that act on hidden layers, where an input-space
    half-space cannot express the split.
    """

    block: int
    coeffs: np.ndarray
    sense: str  # "<=", "=", ">="
    rhs: float

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "rhs", float(self.rhs))


@dataclass(frozen=True)
class InputRegion:
    """Box [lower, upper] intersected with optional half-space cuts."""

    lower: np.ndarray
    upper: np.ndarray
    cuts: tuple[Halfspace, ...] = field(default=())

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower/upper must be vectors of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("region bounds must be finite")
        if np.any(lower > upper):
            raise EmptyRegionError("box has lower > upper")
        for cut in self.cuts:
            if cut.normal.shape != lower.shape:
                raise ValueError("cut normal dimension mismatch")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "cuts", tuple(self.cuts))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lower - tol) or np.any(x > self.upper + tol):
            return False
        return all(cut.satisfied(x, tol) for cut in self.cuts)

    def cut_rows(self):
        """Cuts as LP rows (row, sense, rhs); '<' is emitted closed."""
        rows = []
        for cut in self.cuts:
            sense = ">=" if cut.sense == GE else "<="
            rows.append((cut.normal, sense, cut.offset))
        return rows


def box_from_center(center, epsilon: float) -> InputRegion:
    """Epsilon-ball in the max norm around a nominal input."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if not np.all(np.isfinite(center)):
        raise ValueError("center must be finite")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return InputRegion(center - epsilon, center + epsilon)


def add_halfspace(region: InputRegion, normal, offset: float, sense: str = GE) -> InputRegion:
    """Intersect the region with {x : normal @ x (sense) offset}; the input is unchanged."""
    cut = Halfspace(np.asarray(normal, dtype=float), float(offset), sense)
    if cut.normal.shape[0] != region.dim:
        raise ValueError("cut normal dimension mismatch")
    return InputRegion(region.lower, region.upper, region.cuts + (cut,))


def diameter(region: InputRegion) -> float:
    """Euclidean diameter of the bounding box.

    Exact for a pure box; a valid upper bound when cuts are present.
    """
    return float(np.linalg.norm(region.upper - region.lower))


def sample_points(region: InputRegion, n: int, rng) -> np.ndarray:
    """Rejection-sample n points uniformly from the region."""
    out = []
    tries = 0
    while len(out) < n:
        batch = rng.uniform(region.lower, region.upper, size=(max(n, 64), region.dim))
        for x in batch:
            if region.contains(x):
                out.append(x)
                if len(out) == n:
                    break
        tries += 1
        if tries > 1000:
            raise EmptyRegionError("rejection sampling failed; region looks empty")
    return np.array(out)


@dataclass(frozen=True)
class LayerBounds:
    """Valid preactivation interval [lower, upper] with per-neuron stability."""

    lower: np.ndarray
    upper: np.ndarray
    stability: tuple[str, ...]

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if np.any(lower > upper):
            raise ValueError("preactivation bounds must satisfy lower <= upper")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "stability", tuple(self.stability))

    @property
    def size(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class PreactBounds:
    layers: tuple[LayerBounds, ...]

    @property
    def final(self) -> LayerBounds:
        return self.layers[-1]


def stability_flags(lower: np.ndarray, upper: np.ndarray) -> tuple[str, ...]:
    """Classify neurons; near-degenerate unstable intervals collapse to stable."""
    flags = []
    for l, u in zip(lower, upper):
        if l >= 0.0:
            flags.append(STABLE_ACTIVE)
        elif u <= 0.0:
            flags.append(STABLE_INACTIVE)
        elif u - l < DEGENERATE_WIDTH:
            flags.append(STABLE_INACTIVE)
        else:
            flags.append(UNSTABLE)
    return tuple(flags)


def _interval_bounds(net: Network, region: InputRegion) -> PreactBounds:
    center = 0.5 * (region.lower + region.upper)
    radius = 0.5 * (region.upper - region.lower)
    layers = []
    for W, b in net.layers:
        mid = W @ center + b
        rad = np.abs(W) @ radius
        lower, upper = mid - rad, mid + rad
        layers.append(LayerBounds(lower, upper, stability_flags(lower, upper)))
        # postactivation interval feeds the next affine map
        center = 0.5 * (np.maximum(lower, 0.0) + np.maximum(upper, 0.0))
        radius = 0.5 * (np.maximum(upper, 0.0) - np.maximum(lower, 0.0))
    return PreactBounds(tuple(layers))


def _lp_tight_bounds(net: Network, region: InputRegion, block_rows) -> PreactBounds:
    # local import: the envelope builder needs LayerBounds from this module
    from relucert.relaxation import prefix_lp

    layers: list[LayerBounds] = []
    for k, (W, b) in enumerate(net.layers):
        lower = np.empty(W.shape[0])
        upper = np.empty(W.shape[0])
        rows_k = tuple(r for r in block_rows if r.block <= k)
        for i in range(W.shape[0]):
            for sign, dest in ((1.0, upper), (-1.0, lower)):
                problem = prefix_lp(net, region, layers, k, sign * W[i], block_rows=rows_k)
                result = solve_lp(problem)
                if result.status == INFEASIBLE:
                    raise EmptyRegionError("region is empty (bound LP infeasible)")
                if result.status in (UNBOUNDED, FAILED):
                    raise LpBackendError(f"bound LP ended with status {result.status}")
                dest[i] = sign * result.value + b[i]
        upper = np.maximum(upper, lower)  # guard against 1e-9-scale LP noise
        layers.append(LayerBounds(lower, upper, stability_flags(lower, upper)))
    return PreactBounds(tuple(layers))


def preact_bounds(
    net: Network,
    region: InputRegion,
    mode: str = "lp_tight",
    block_rows: tuple[BlockRow, ...] = (),
) -> PreactBounds:
    """Valid per-layer preactivation bounds over the region.

    ``interval`` propagates the box through |W| (cuts ignored, still valid);
    ``lp_tight`` solves 2 LPs per neuron against the relaxed constraints of
    all preceding layers, which is exact for layer 1 and detects emptiness.
    ``block_rows`` restrict the feasible set further (partition cuts on
    hidden activations); interval mode cannot honor them and rejects them.
    """
    if region.dim != net.input_dim:
        raise ValueError("region dimension does not match network input")
    if mode == "interval":
        if block_rows:
            raise ValueError("interval mode does not support block rows")
        return _interval_bounds(net, region)
    if mode == "lp_tight":
        return _lp_tight_bounds(net, region, block_rows)
    raise ValueError(f"unknown bounds mode {mode!r}")


def load_region(data: bytes | str) -> InputRegion:
    """Parse the region spec JSON (center/epsilon or lower/upper, plus cuts)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")

    def reject(token):
        raise ValueError(f"non-finite token {token!r} in region document")

    doc = json.loads(data, parse_constant=reject)
    if "center" in doc:
        region = box_from_center(doc["center"], float(doc["epsilon"]))
    elif "lower" in doc:
        region = InputRegion(doc["lower"], doc["upper"])
    else:
        raise ValueError("region document needs center/epsilon or lower/upper")
    for cut in doc.get("cuts", ()):
        region = add_halfspace(region, cut["normal"], cut["offset"], cut.get("sense", GE))
    return region


def save_region(region: InputRegion) -> bytes:
    doc = {"lower": region.lower.tolist(), "upper": region.upper.tolist()}
    if region.cuts:
        doc["cuts"] = [
            {"normal": c.normal.tolist(), "offset": c.offset, "sense": c.sense}
            for c in region.cuts
        ]
    return json.dumps(doc, indent=1).encode("utf-8")
