"""Certification run orchestration: strategy strings, reports, experiments.

A run evaluates one or more partition strategies against one or more
(region, safety) instances and collects per-strategy bounds and verdicts
into a machine-readable report.  The Iris experiment drives the same
machinery over trained-classifier nominal points.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field

import numpy as np

from relucert.data import ingest_iris
from relucert.network import Network, save_network
from relucert.partition import (
    PartitionPlan,
    certify_partitioned,
    partition_scores,
)
from relucert.regions import InputRegion, box_from_center, preact_bounds
from relucert.relaxation import SafetySpec, certify_lp, exact_value
from relucert.sdp import SdpSettings, build_sdp, solve_sdp
from relucert.training import TrainConfig, make_safety_specs, train_one_layer

__all__ = [
    "STRATEGY_GRAMMAR",
    "parse_strategy",
    "network_hash",
    "StrategyEntry",
    "RunRecord",
    "RunReport",
    "certify_record",
    "figure_series",
    "iris_experiment",
    "IrisExperiment",
]

STRATEGY_GRAMMAR = "none | optimal-row | rows:<k> | motivating | grid:<n> | recursive:<d> | heuristic | exact"

ORDERING_TOL = 1e-7


class StrategyError(ValueError):
    """Raised for strategy strings outside the grammar."""


def parse_strategy(text: str):
    """Map a strategy string to a PartitionPlan, or "exact" for the oracle."""
    text = text.strip()
    if text == "exact":
        return "exact"
    if text == "none":
        return PartitionPlan.none()
    if text == "optimal-row":
        return PartitionPlan.row()
    if text == "motivating":
        return PartitionPlan.motivating()
    if text == "heuristic":
        return PartitionPlan.heuristic()
    for prefix, factory in (
        ("rows:", PartitionPlan.best_rows),
        ("grid:", PartitionPlan.grid),
        ("recursive:", PartitionPlan.recursive),
    ):
        if text.startswith(prefix):
            arg = text[len(prefix) :]
            try:
                value = int(arg)
            except ValueError:
                raise StrategyError(f"strategy {text!r}: expected an integer after the colon")
            if value < 1:
                raise StrategyError(f"strategy {text!r}: parameter must be >= 1")
            return factory(value)
    raise StrategyError(f"unknown strategy {text!r}; grammar: {STRATEGY_GRAMMAR}")


def network_hash(net: Network) -> str:
    return hashlib.sha256(save_network(net)).hexdigest()[:16]


@dataclass
class StrategyEntry:
    strategy: str
    bound: float
    safe: bool
    margin: float
    row_bounds: tuple[float, ...]
    wall_time: float

    def to_dict(self):
        return {
            "strategy": self.strategy,
            "bound": self.bound,
            "margin": self.margin,
            "safe": self.safe,
            "row_bounds": list(self.row_bounds),
            "wall_time": self.wall_time,
        }


@dataclass
class RunRecord:
    region: InputRegion
    entries: list[StrategyEntry]
    nominal: np.ndarray | None = None
    epsilon: float | None = None
    label: int | None = None
    point_index: int | None = None

    def entry(self, strategy: str) -> StrategyEntry:
        for e in self.entries:
            if e.strategy == strategy:
                return e
        raise KeyError(strategy)

    def to_dict(self):
        doc = {
            "region": {"lower": self.region.lower.tolist(), "upper": self.region.upper.tolist()},
            "entries": [e.to_dict() for e in self.entries],
        }
        if self.nominal is not None:
            doc["nominal"] = self.nominal.tolist()
        if self.epsilon is not None:
            doc["epsilon"] = self.epsilon
        if self.label is not None:
            doc["label"] = int(self.label)
        if self.point_index is not None:
            doc["point_index"] = int(self.point_index)
        return doc


@dataclass
class RunReport:
    records: list[RunRecord]
    network_hash: str
    strategies: tuple[str, ...]
    solver: str
    tolerances: dict = field(default_factory=dict)

    @property
    def all_safe(self) -> bool:
        return all(e.safe for r in self.records for e in r.entries)

    def to_json(self, include_wall_times: bool = True) -> bytes:
        doc = {
            "metadata": {
                "network_hash": self.network_hash,
                "strategies": list(self.strategies),
                "solver": self.solver,
                "tolerances": self.tolerances,
            },
            "records": [r.to_dict() for r in self.records],
        }
        if not include_wall_times:
            for rec in doc["records"]:
                for e in rec["entries"]:
                    e.pop("wall_time")
        return json.dumps(doc, indent=1, sort_keys=True).encode("utf-8")


def _strategy_bound_lp(net, region, c, strategy) -> float:
    plan = parse_strategy(strategy)
    if plan == "exact":
        return exact_value(net, region, c).bound
    return certify_partitioned(net, region, c, plan).overall_bound


def _strategy_bound_sdp(net, region, c, strategy, settings: SdpSettings) -> float:
    plan = parse_strategy(strategy)
    if plan == "exact":
        return exact_value(net, region, c).bound
    if plan.scheme == "none":
        return solve_sdp(build_sdp(net, region, c), settings).objective
    if plan.scheme == "grid":
        from relucert.partition import grid_partition

        best = -np.inf
        for part in grid_partition(region, plan.divisions):
            best = max(best, solve_sdp(build_sdp(net, part, c), settings).objective)
        return best
    raise StrategyError(
        f"strategy {strategy!r} is not available with the sdp solver (use none or grid:<n>)"
    )


def certify_record(
    net: Network,
    region: InputRegion,
    safety: SafetySpec,
    strategies: list[str],
    solver: str = "lp",
    sdp_settings: SdpSettings | None = None,
    **record_fields,
) -> RunRecord:
    """Evaluate each strategy on every safety row; bound = max shifted row bound."""
    if solver not in ("lp", "sdp"):
        raise ValueError(f"unknown solver {solver!r}")
    if sdp_settings is None:
        sdp_settings = SdpSettings()
    entries = []
    for strategy in strategies:
        started = time.perf_counter()
        row_bounds = []
        for c, d in safety.rows():
            if solver == "lp":
                bound = _strategy_bound_lp(net, region, c, strategy)
            else:
                bound = _strategy_bound_sdp(net, region, c, strategy, sdp_settings)
            row_bounds.append(bound - d)
        margin = 0.0 if (solver == "lp" or strategy == "exact") else sdp_settings.eps
        worst = float(max(row_bounds))
        entries.append(
            StrategyEntry(
                strategy=strategy,
                bound=worst,
                safe=bool(worst + margin <= 0.0),
                margin=margin,
                row_bounds=tuple(float(v) for v in row_bounds),
                wall_time=time.perf_counter() - started,
            )
        )
    return RunRecord(region=region, entries=entries, **record_fields)


FIGURE_COLUMNS = (
    "point_index",
    "epsilon",
    "label",
    "exact",
    "unpartitioned_lp",
    "optimal_row_lp",
    "suboptimal_row_1_lp",
    "suboptimal_row_2_lp",
    "optimal_row_worst_case_upper",
)


def _full_row_ranking(c, bounds) -> list[int]:
    """All final-layer rows ordered by partition score (best split first)."""
    scores = partition_scores(c, bounds.final)
    return [int(i) for i in np.argsort(scores, kind="stable")]


def figure_series(net: Network, region: InputRegion, safety: SafetySpec) -> dict:
    """The comparison series: exact, plain LP, and row splits ranked by score.

    Values aggregate over safety rows by max (the binding certification
    value).  The worst-case upper series adds the post-split error bound of
    the best row to the exact value.
    """
    per_series: dict[str, float] = {k: -np.inf for k in FIGURE_COLUMNS[3:]}
    bounds = preact_bounds(net, region)
    for c, d in safety.rows():
        exact = exact_value(net, region, c, bounds=bounds).bound - d
        plain = certify_lp(net, region, c, bounds=bounds).bound - d
        ranking = _full_row_ranking(c, bounds)
        row_vals = []
        for k in range(3):
            row = ranking[min(k, len(ranking) - 1)]
            cert = certify_partitioned(net, region, c, PartitionPlan.row(row))
            row_vals.append(cert.overall_bound - d)
        scores = partition_scores(c, bounds.final)
        error_after_best = -float(np.sum(scores) - np.min(scores, initial=0.0))
        upper = exact + error_after_best
        per_series["exact"] = max(per_series["exact"], exact)
        per_series["unpartitioned_lp"] = max(per_series["unpartitioned_lp"], plain)
        per_series["optimal_row_lp"] = max(per_series["optimal_row_lp"], row_vals[0])
        per_series["suboptimal_row_1_lp"] = max(per_series["suboptimal_row_1_lp"], row_vals[1])
        per_series["suboptimal_row_2_lp"] = max(per_series["suboptimal_row_2_lp"], row_vals[2])
        per_series["optimal_row_worst_case_upper"] = max(
            per_series["optimal_row_worst_case_upper"], upper
        )
    return per_series


def write_figure_csv(path, rows: list[dict]):
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=FIGURE_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in FIGURE_COLUMNS})


IRIS_STRATEGIES = ("exact", "motivating", "optimal-row", "none")


@dataclass
class IrisExperiment:
    report: RunReport
    figure_rows: list[dict]
    point_indices: list[int]
    flip: tuple[int, float] | None  # (point index, epsilon) where optimal-row
    # certifies and the plain LP does not
    train_accuracy: float
    test_accuracy: float
    network: Network


def _pick_nominals(net, X, y, count):
    """Round-robin across classes over correctly classified test points."""
    preds = np.argmax(_batch_forward(net, X), axis=1)
    byclass: dict[int, list[int]] = {}
    for i in np.flatnonzero(preds == y):
        byclass.setdefault(int(y[i]), []).append(int(i))
    picks = []
    depth = 0
    while len(picks) < count:
        added = False
        for k in sorted(byclass):
            members = byclass[k]
            if depth < len(members):
                picks.append(members[depth])
                added = True
                if len(picks) == count:
                    break
        if not added:
            break
        depth += 1
    return picks


def _batch_forward(net, X):
    H = np.asarray(X, dtype=float)
    for W, b in net.layers:
        H = np.maximum(H @ W.T + b, 0.0)
    return H


def _record_for_point(net, x, y, eps, strategies, index):
    region = box_from_center(x, eps)
    safety = _safety_for(net, x, y)
    return certify_record(
        net,
        region,
        safety,
        list(strategies),
        nominal=x,
        epsilon=eps,
        label=int(y),
        point_index=index,
    )


def _safety_for(net, x, y) -> SafetySpec:
    rows = make_safety_specs(net, x, int(y))
    return SafetySpec(np.vstack(rows), np.zeros(len(rows)))


def _plain_bound(net, x, y, eps) -> float:
    region = box_from_center(x, eps)
    bounds = preact_bounds(net, region)
    return max(
        certify_lp(net, region, c, bounds=bounds).bound for c in make_safety_specs(net, x, int(y))
    )


def _search_flip_epsilon(net, x, y, lo=0.02, hi=1.5, steps=14):
    """Bisect the plain-LP certification threshold and test the optimal split
    just above it; returns an epsilon exhibiting the flip, or None."""
    if _plain_bound(net, x, y, lo) > 0 or _plain_bound(net, x, y, hi) < 0:
        return None
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if _plain_bound(net, x, y, mid) > 0:
            hi = mid
        else:
            lo = mid
    for bump in (1.0005, 1.005, 1.02):
        eps = hi * bump
        region = box_from_center(x, eps)
        plain = _plain_bound(net, x, y, eps)
        opt = max(
            certify_partitioned(net, region, c, PartitionPlan.row()).overall_bound
            for c in make_safety_specs(net, x, int(y))
        )
        if plain > 0 >= opt:
            return eps
    return None


def iris_experiment(
    csv_path,
    eps_values=(0.05, 0.1, 0.2),
    n_points: int = 10,
    seed: int = 42,
    config: TrainConfig | None = None,
    strategies=IRIS_STRATEGIES,
    extend_search: bool = True,
) -> IrisExperiment:
    """Train the classifier, certify nominal test points across the eps sweep,
    and locate a (point, eps) where the optimal split certifies but the plain
    LP does not (extending the sweep per point if the base sweep has none)."""
    data = ingest_iris(csv_path, seed=seed)
    result = train_one_layer(data, config or TrainConfig(seed=seed))
    net = result.network
    X, y = data.split("test")
    picks = _pick_nominals(net, X, y, n_points)

    records = []
    figure_rows = []
    flip = None
    for eps in eps_values:
        for idx in picks:
            rec = _record_for_point(net, X[idx], y[idx], eps, strategies, idx)
            records.append(rec)
            if flip is None:
                none_e = rec.entry("none")
                opt_e = rec.entry("optimal-row")
                if none_e.bound > 0 >= opt_e.bound:
                    flip = (idx, eps)
    smallest = min(eps_values)
    for idx in picks:
        series = figure_series(net, box_from_center(X[idx], smallest), _safety_for(net, X[idx], y[idx]))
        series.update(point_index=idx, epsilon=smallest, label=int(y[idx]))
        figure_rows.append(series)

    if flip is None and extend_search:
        for idx in picks:
            eps = _search_flip_epsilon(net, X[idx], y[idx])
            if eps is not None:
                rec = _record_for_point(net, X[idx], y[idx], eps, strategies, idx)
                records.append(rec)
                flip = (idx, eps)
                break

    report = RunReport(
        records=records,
        network_hash=network_hash(net),
        strategies=tuple(strategies),
        solver="lp",
        tolerances={"ordering": ORDERING_TOL, "motivating_exactness": 1e-6},
    )
    return IrisExperiment(
        report=report,
        figure_rows=figure_rows,
        point_indices=picks,
        flip=flip,
        train_accuracy=result.train_accuracy,
        test_accuracy=result.test_accuracy,
        network=net,
    )
