"""Partition schemes: splitting, scoring, orchestration, recursive refinement."""

import numpy as np
import pytest

from relucert.network import Network
from relucert.regions import box_from_center, diameter, preact_bounds, sample_points
from relucert.relaxation import Certificate, certify_lp, exact_value
from relucert.partition import (
    PartitionPlan,
    certify_partitioned,
    grid_partition,
    motivating_partition,
    partition_scores,
    rank_rows,
    refine_recursive,
    select_optimal_row,
    solution_guided_row,
    split_by_row,
)


def one_layer(W, b=None):
    W = np.asarray(W, dtype=float)
    return Network(((W, np.zeros(W.shape[0]) if b is None else np.asarray(b, float)),))


WORKED_NET = one_layer([[1, 1], [1, -1]])
WORKED_REGION = box_from_center([0, 0], 1.0)
WORKED_C = [1.0, 1.0]


def bounds_from(l, u):
    """PreactBounds stand-in for score functions (single layer)."""
    from relucert.regions import LayerBounds, PreactBounds, stability_flags

    l = np.asarray(l, float)
    u = np.asarray(u, float)
    return PreactBounds((LayerBounds(l, u, stability_flags(l, u)),))


class TestSplitByRow:
    def test_cut_definition(self):
        pos, neg = split_by_row(WORKED_REGION, WORKED_NET, 0)
        np.testing.assert_allclose(pos.cuts[0].normal, [1, 1])
        assert pos.cuts[0].offset == 0.0
        assert pos.cuts[0].sense == ">="
        assert neg.cuts[0].sense == "<"

    def test_union_covers_region(self):
        rng = np.random.default_rng(4)
        pos, neg = split_by_row(WORKED_REGION, WORKED_NET, 1)
        for x in sample_points(WORKED_REGION, 500, rng):
            assert pos.contains(x) or neg.contains(x)

    def test_stable_row_gives_one_empty_part(self):
        net = one_layer([[1.0, 0.0]], [5.0])  # zhat = x1 + 5 > 0 on the box
        cert = certify_partitioned(net, WORKED_REGION, [1.0], PartitionPlan.row(0))
        statuses = sorted(p.status for p in cert.parts)
        assert statuses == ["certified", "empty"]

    def test_invalid_index(self):
        with pytest.raises(ValueError):
            split_by_row(WORKED_REGION, WORKED_NET, 5)

    def test_multi_layer_rejected(self):
        deep = Network(((np.eye(2), np.zeros(2)), (np.eye(2), np.zeros(2))))
        with pytest.raises(ValueError):
            split_by_row(WORKED_REGION, deep, 0)


class TestRowSelection:
    def test_argmin_score(self):
        assert select_optimal_row([1.0, 0.5], bounds_from([-2, -1], [2, 1])) == 0

    def test_tie_breaks_to_lowest_index(self):
        assert select_optimal_row([1.0, 1.0], bounds_from([-2, -2], [2, 2])) == 0

    def test_no_gain_when_relu_kills_everything(self):
        assert select_optimal_row([-1.0, -1.0], bounds_from([-2, -2], [2, 2])) is None

    def test_scores_formula(self):
        scores = partition_scores([1.0, 0.5, 1.0], bounds_from([-2, -1, 1], [2, 1, 3]).final)
        np.testing.assert_allclose(scores, [-1.0, -0.25, 0.0])

    def test_rank_rows(self):
        b = bounds_from([-2, -1, 1], [2, 1, 3])
        assert rank_rows([1.0, 0.5, 1.0], b, 2) == [0, 1]
        assert rank_rows([-1.0, -1.0, -1.0], b, 2) == []
        assert rank_rows([1.0, 0.5, 1.0], b, 10) == [0, 1]

    def test_matches_independent_argmin_on_random_scores(self):
        rng = np.random.default_rng(12)
        for _ in range(500):
            n = int(rng.integers(1, 6))
            l = -rng.uniform(0.1, 2, n)
            u = rng.uniform(0.1, 2, n)
            c = rng.uniform(-1, 1, n)
            scores = np.array(
                [max(ci, 0.0) * ui * li / (ui - li) for ci, li, ui in zip(c, l, u)]
            )
            expected = int(np.argmin(scores)) if scores.min() < 0 else None
            assert select_optimal_row(c, bounds_from(l, u)) == expected


class TestMotivatingPartition:
    def test_generic_rows_give_four_parts(self):
        parts = motivating_partition(WORKED_NET, WORKED_REGION)
        assert len(parts) == 4

    def test_stable_row_halves_cell_count(self):
        net = one_layer([[1.0, 0.0], [0.0, 1.0]], [5.0, 0.0])
        parts = motivating_partition(net, WORKED_REGION)
        assert len(parts) <= 2

    def test_union_covers_region(self):
        rng = np.random.default_rng(9)
        net = one_layer(rng.uniform(-1, 1, size=(3, 2)), rng.uniform(-0.2, 0.2, 3))
        parts = motivating_partition(net, WORKED_REGION)
        for x in sample_points(WORKED_REGION, 10_000, rng):
            assert any(p.contains(x) for p in parts)

    def test_interior_points_land_in_one_part(self):
        rng = np.random.default_rng(10)
        W, b = WORKED_NET.layers[0]
        parts = motivating_partition(WORKED_NET, WORKED_REGION)
        for x in sample_points(WORKED_REGION, 2000, rng):
            if np.min(np.abs(W @ x + b)) < 1e-6:
                continue  # on a cell boundary
            assert sum(p.contains(x, tol=0.0) for p in parts) == 1

    def test_budget(self):
        big = one_layer(np.ones((21, 2)))
        with pytest.raises(ValueError):
            motivating_partition(big, WORKED_REGION)


class TestGridPartition:
    def test_two_by_two(self):
        parts = grid_partition(WORKED_REGION, 2)
        assert len(parts) == 4
        widths = {tuple(np.round(p.upper - p.lower, 12)) for p in parts}
        assert widths == {(1.0, 1.0)}

    def test_identity_for_one(self):
        assert grid_partition(WORKED_REGION, 1) == [WORKED_REGION]

    def test_max_diameter_scaling(self):
        for n in (2, 4):
            parts = grid_partition(WORKED_REGION, n)
            worst = max(diameter(p) for p in parts)
            assert worst == pytest.approx(diameter(WORKED_REGION) / n, abs=1e-12)

    def test_cut_region_rejected(self):
        from relucert.regions import add_halfspace

        cut = add_halfspace(WORKED_REGION, [1, 0], 0.0)
        with pytest.raises(ValueError):
            grid_partition(cut, 2)


class TestCertifyPartitioned:
    def test_worked_instance_motivating_is_exact(self):
        cert = certify_partitioned(WORKED_NET, WORKED_REGION, WORKED_C, PartitionPlan.motivating())
        assert cert.overall_bound == pytest.approx(2.0, abs=1e-9)

    def test_worked_instance_unpartitioned(self):
        cert = certify_partitioned(WORKED_NET, WORKED_REGION, WORKED_C, PartitionPlan.none())
        assert cert.overall_bound == pytest.approx(3.0, abs=1e-9)

    def test_redundant_cut_matches_unpartitioned(self):
        net = one_layer([[1.0, 0.0], [0.0, 1.0]], [5.0, 0.0])  # row 0 stable
        c = [1.0, 1.0]
        plain = certify_lp(net, WORKED_REGION, c).bound
        cert = certify_partitioned(net, WORKED_REGION, c, PartitionPlan.row(0))
        assert cert.overall_bound == pytest.approx(plain, abs=1e-8)

    def test_soundness_and_tightening_sweep(self):
        rng = np.random.default_rng(99)
        for _ in range(40):
            n_x = int(rng.integers(1, 4))
            n_z = int(rng.integers(1, 4))
            net = one_layer(rng.uniform(-1, 1, size=(n_z, n_x)))
            region = box_from_center(rng.uniform(-0.5, 0.5, size=n_x), 1.0)
            c = rng.uniform(-1, 1, size=n_z)
            exact = exact_value(net, region, c).bound
            plain = certify_lp(net, region, c).bound
            for plan in (
                PartitionPlan.row(),
                PartitionPlan.best_rows(2),
                PartitionPlan.motivating(),
                PartitionPlan.grid(2),
            ):
                cert = certify_partitioned(net, region, c, plan)
                assert exact <= cert.overall_bound + 1e-7
                assert cert.overall_bound <= plain + 1e-7

    def test_resolved_plan_records_scores(self):
        cert = certify_partitioned(WORKED_NET, WORKED_REGION, WORKED_C, PartitionPlan.row())
        assert cert.plan.chosen_rows == (0,)
        np.testing.assert_allclose(cert.plan.rationale_scores, [-1.0, -1.0])


class TestRefineRecursive:
    def test_depth_one_equals_optimal_row_scheme(self):
        ref = refine_recursive(WORKED_NET, WORKED_REGION, WORKED_C, 1)
        row = certify_partitioned(WORKED_NET, WORKED_REGION, WORKED_C, PartitionPlan.row())
        assert ref.overall_bound == pytest.approx(row.overall_bound, abs=1e-9)

    def test_nonincreasing_levels_on_random_instances(self):
        rng = np.random.default_rng(55)
        for _ in range(50):
            n_x = int(rng.integers(1, 4))
            n_z = int(rng.integers(1, 4))
            net = one_layer(rng.uniform(-1, 1, size=(n_z, n_x)))
            region = box_from_center(rng.uniform(-0.5, 0.5, size=n_x), 1.0)
            c = rng.uniform(-1, 1, size=n_z)
            cert = refine_recursive(net, region, c, 3)
            levels = np.array(cert.level_bounds)
            assert np.all(np.diff(levels) <= 1e-9)
            assert exact_value(net, region, c).bound <= cert.overall_bound + 1e-7

    def test_no_gain_repeats_previous_level(self):
        # all-negative objective: no row can gain, refinement stops at once
        cert = refine_recursive(WORKED_NET, WORKED_REGION, [-1.0, -1.0], 3)
        assert cert.note == "no_gain"
        assert cert.level_bounds[-1] == cert.level_bounds[0]


class TestSolutionGuidedRow:
    def test_exact_witness_gives_no_gain(self):
        exact = exact_value(WORKED_NET, WORKED_REGION, WORKED_C)
        cert = Certificate(
            bound=exact.bound,
            kind="lp_relaxed",
            witness_x=exact.witness_x,
            witness_z=exact.witness_z,
        )
        assert solution_guided_row(cert, WORKED_NET, WORKED_C) is None

    def test_worked_witness_tie_breaks_low(self):
        cert = Certificate(
            bound=3.0,
            kind="lp_relaxed",
            witness_x=np.array([1.0, 0.0]),
            witness_z=np.array([1.5, 1.5]),
        )
        # gaps are (0.5, 0.5): argmax ties break to the first index
        assert solution_guided_row(cert, WORKED_NET, WORKED_C) == 0

    def test_single_neuron_exact_instance(self):
        net = one_layer([[1.0]], [2.0])  # stable active; relaxation already exact
        cert = certify_lp(net, box_from_center([0.0], 1.0), [1.0])
        assert solution_guided_row(cert, net, [1.0]) is None

    def test_missing_witness_rejected(self):
        with pytest.raises(ValueError):
            solution_guided_row(Certificate(1.0, "lp_relaxed"), WORKED_NET, WORKED_C)

    def test_heuristic_scheme_tightens_worked_instance(self):
        cert = certify_partitioned(
            WORKED_NET, WORKED_REGION, WORKED_C, PartitionPlan.heuristic()
        )
        plain = certify_lp(WORKED_NET, WORKED_REGION, WORKED_C).bound
        assert cert.overall_bound <= plain + 1e-9


class TestDeepNetworks:
    """Row splits constrain the last hidden block on multi-layer networks."""

    def random_three_layer(self, rng):
        dims = [int(rng.integers(2, 4)) for _ in range(4)]
        layers = []
        prev = dims[0]
        for d in dims[1:]:
            layers.append((rng.uniform(-1, 1, (d, prev)), rng.uniform(-0.3, 0.3, d)))
            prev = d
        net = Network(tuple(layers))
        region = box_from_center(rng.uniform(-0.3, 0.3, dims[0]), 0.8)
        c = rng.uniform(-1, 1, dims[-1])
        return net, region, c

    def test_row_split_sound_and_never_worse(self):
        rng = np.random.default_rng(909)
        for _ in range(8):
            net, region, c = self.random_three_layer(rng)
            exact = exact_value(net, region, c).bound
            plain = certify_lp(net, region, c).bound
            cert = certify_partitioned(net, region, c, PartitionPlan.row())
            assert exact <= cert.overall_bound + 1e-7
            assert cert.overall_bound <= plain + 1e-7

    def test_deep_recursion_monotone_and_sound(self):
        rng = np.random.default_rng(910)
        for _ in range(5):
            net, region, c = self.random_three_layer(rng)
            ref = refine_recursive(net, region, c, 6)
            levels = np.array(ref.level_bounds)
            assert np.all(np.diff(levels) <= 1e-8)
            assert exact_value(net, region, c).bound <= ref.overall_bound + 1e-7


class TestGridConvergence:
    def test_gap_shrinks_with_grid(self):
        rng = np.random.default_rng(1234)
        net = one_layer(rng.uniform(-1, 1, size=(2, 2)))
        region = box_from_center([0.1, -0.2], 1.0)
        c = np.abs(rng.uniform(0.2, 1, size=2))
        exact = exact_value(net, region, c).bound
        gaps = []
        for n in (1, 2, 4):
            cert = certify_partitioned(net, region, c, PartitionPlan.grid(n))
            gaps.append(cert.overall_bound - exact)
        assert all(g >= -1e-7 for g in gaps)
        assert all(gaps[i + 1] <= gaps[i] + 1e-9 for i in range(len(gaps) - 1))
