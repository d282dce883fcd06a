"""Partition-based robustness certification for ReLU networks.

Sound upper bounds on max c @ f(x) over box-shaped input regions via LP and
SDP convex relaxations, tightened by input partitioning: the optimal
two-part split along a weight row, the exact sign-cell partition, grids,
and recursive refinement, all validated against a brute-force enumeration
oracle.
"""

from relucert.network import ActivationTrace, Network, forward, load_network, save_network
from relucert.lp import LpProblem, LpResult, solve_lp
from relucert.regions import (
    InputRegion,
    Halfspace,
    LayerBounds,
    PreactBounds,
    EmptyRegionError,
    add_halfspace,
    box_from_center,
    diameter,
    load_region,
    preact_bounds,
    save_region,
)
from relucert.relaxation import (
    Certificate,
    GapDiagnostics,
    SafetySpec,
    build_relaxed_lp,
    certify_lp,
    estimate_lipschitz,
    exact_value,
    load_safety,
    worst_case_gap_bound,
)
from relucert.partition import (
    PartitionPlan,
    PartitionedCertificate,
    certify_partitioned,
    grid_partition,
    motivating_partition,
    rank_rows,
    refine_recursive,
    select_optimal_row,
    solution_guided_row,
    split_by_row,
)
from relucert.eigen import jacobi_eigh, psd_project
from relucert.sdp import (
    SdpProblem,
    SdpResult,
    SdpSettings,
    build_sdp,
    geo_gap,
    lift_point,
    sdp_feasibility_residuals,
    solve_sdp,
)
from relucert.data import Dataset, ingest_iris
from relucert.training import TrainConfig, TrainResult, make_safety_specs, train_one_layer
from relucert.runner import RunReport, certify_record, iris_experiment, parse_strategy

__all__ = [
    "ActivationTrace",
    "Network",
    "forward",
    "load_network",
    "save_network",
    "LpProblem",
    "LpResult",
    "solve_lp",
    "InputRegion",
    "Halfspace",
    "LayerBounds",
    "PreactBounds",
    "EmptyRegionError",
    "add_halfspace",
    "box_from_center",
    "diameter",
    "load_region",
    "preact_bounds",
    "save_region",
    "Certificate",
    "GapDiagnostics",
    "SafetySpec",
    "build_relaxed_lp",
    "certify_lp",
    "estimate_lipschitz",
    "exact_value",
    "load_safety",
    "worst_case_gap_bound",
    "PartitionPlan",
    "PartitionedCertificate",
    "certify_partitioned",
    "grid_partition",
    "motivating_partition",
    "rank_rows",
    "refine_recursive",
    "select_optimal_row",
    "solution_guided_row",
    "split_by_row",
    "jacobi_eigh",
    "psd_project",
    "SdpProblem",
    "SdpResult",
    "SdpSettings",
    "build_sdp",
    "geo_gap",
    "lift_point",
    "sdp_feasibility_residuals",
    "solve_sdp",
    "Dataset",
    "ingest_iris",
    "TrainConfig",
    "TrainResult",
    "make_safety_specs",
    "train_one_layer",
    "RunReport",
    "certify_record",
    "iris_experiment",
    "parse_strategy",
]
