import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from seqdoe.design import (
    Bounds,
    DesignMatrix,
    crowding_distance,
    interval_index,
    intersite_distance,
    lhs_fraction,
    metric_report,
    phi_p,
    projected_distance,
    read_design,
    scale_from_unit,
    scale_to_unit,
    voronoi_cell_areas,
    write_design,
)
from seqdoe.exceptions import (
    DesignParseError,
    OutOfBoundsError,
    PhiPOverflowError,
    UndefinedMetricError,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


def designs(min_n=2, max_n=8, max_d=4):
    return st.integers(1, max_d).flatmap(
        lambda d: arrays(float, st.tuples(st.integers(min_n, max_n), st.just(d)), elements=unit)
    )


class TestDesignMatrix:
    def test_rejects_out_of_range(self):
        with pytest.raises(OutOfBoundsError, match="coordinate 1 of point 0"):
            DesignMatrix([[0.5, 1.2]])

    def test_empty_needs_dim(self):
        assert DesignMatrix.empty(3).size == 0
        with pytest.raises(ValueError):
            DesignMatrix([])

    def test_append_preserves_order_and_is_immutable(self):
        d = DesignMatrix([[0.1, 0.2]])
        d2 = d.append([0.3, 0.4])
        assert d.size == 1 and d2.size == 2
        np.testing.assert_array_equal(d2.points[-1], [0.3, 0.4])
        with pytest.raises(ValueError):
            d2.points[0, 0] = 0.9

    def test_duplicates_are_legal(self):
        d = DesignMatrix([[0.2, 0.2], [0.2, 0.2]])
        assert intersite_distance(d) == 0.0
        assert projected_distance(d) == 0.0


class TestIntersite:
    def test_diagonal(self):
        assert intersite_distance([[0, 0], [1, 1]]) == pytest.approx(math.sqrt(2))

    def test_three_four_five(self):
        assert intersite_distance([[0, 0], [0.3, 0.4]]) == pytest.approx(0.5)

    def test_three_points_brute_force(self):
        pts = [[0, 0], [0.3, 0.4], [1, 1]]
        assert oracles.intersite(pts) == pytest.approx(0.5)
        assert intersite_distance(pts) == pytest.approx(0.5)

    def test_single_point_undefined(self):
        with pytest.raises(UndefinedMetricError):
            intersite_distance([[0.5, 0.5]])


class TestPhiP:
    def test_single_pair_p1(self):
        assert phi_p([[0, 0], [1, 1]], 1) == pytest.approx(0.5)

    def test_single_pair_p2(self):
        assert phi_p([[0, 0], [0.3, 0.4]], 2) == pytest.approx(4.0)

    def test_collinear_p1(self):
        pts = [[0, 0], [0.5, 0], [1, 0]]
        expected = oracles.phi_p(pts, 1)
        assert expected == pytest.approx(9.0)
        assert phi_p(pts, 1) == pytest.approx(expected, rel=1e-12)

    def test_coincident_points_raise(self):
        with pytest.raises(PhiPOverflowError):
            phi_p([[0.1, 0.1], [0.1, 0.1], [0.5, 0.5]], 2)

    def test_large_p_does_not_overflow(self):
        pts = [[0, 0], [1e-3, 0], [1, 1]]
        value = phi_p(pts, 200)
        assert math.isfinite(value)
        # dominated by the closest pair
        assert value == pytest.approx(1e6, rel=1e-6)


class TestProjected:
    def test_min_of_coordinates(self):
        assert projected_distance([[0, 0], [0.3, 0.4]]) == pytest.approx(0.3)

    def test_collapsing_pair(self):
        assert projected_distance([[0, 0.5], [1, 0.5]]) == 0.0

    def test_three_points_brute_force(self):
        pts = [[0, 0], [0.4, 0.9], [0.8, 0.1]]
        assert oracles.projected(pts) == pytest.approx(0.1)
        assert projected_distance(pts) == pytest.approx(0.1)


class TestCrowding:
    def test_squared_diagonal(self):
        assert crowding_distance([[0, 0]], [1, 1]) == pytest.approx(2.0)

    def test_empty_design(self):
        assert crowding_distance(DesignMatrix.empty(2), [0.3, 0.3]) == 0.0

    def test_midpoint(self):
        assert crowding_distance([[0, 0], [1, 1]], [0.5, 0.5]) == pytest.approx(1.0)


class TestLhsFraction:
    def test_midpoint_lhs(self):
        pts = [[0.125, 0.625], [0.375, 0.125], [0.625, 0.875], [0.875, 0.375]]
        assert lhs_fraction(pts) == 1.0

    def test_all_in_first_interval(self):
        pts = [[0.1, 0.2], [0.05, 0.3], [0.3, 0.0]]
        assert lhs_fraction(pts) == pytest.approx(1 / 3)

    def test_two_points_sharing_intervals(self):
        # 0.1 and 0.3 share [0, 1/2); 0.6 and 0.7 share [1/2, 1]
        pts = [[0.1, 0.6], [0.3, 0.7]]
        assert oracles.lhs_fraction(pts) == pytest.approx(0.5)
        assert lhs_fraction(pts) == pytest.approx(0.5)

    def test_two_points_one_axis_covered(self):
        pts = [[0.1, 0.6], [0.7, 0.65]]
        assert oracles.lhs_fraction(pts) == pytest.approx(0.75)
        assert lhs_fraction(pts) == pytest.approx(0.75)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 50), st.integers(0, 50))
    def test_edges_belong_to_upper_interval(self, m, q):
        q = min(q, m - 1)
        assert interval_index(q / m, m) == q
        assert interval_index(np.nextafter(q / m, -1.0), m) == max(q - 1, 0)

    def test_boundary_convention(self):
        assert interval_index([0.0, 0.5, 1.0], 2).tolist() == [0, 1, 1]
        assert lhs_fraction([[0.5], [1.0]]) == 0.5

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_exhaustive_grid(self, n):
        # every 2-D design on a grid of interval midpoints and edges
        levels = sorted({i / (2 * n) for i in range(2 * n + 1)})
        cells = list(itertools.product(levels, repeat=2))
        rng = np.random.default_rng(n)
        combos = itertools.combinations(cells, n)
        if n == 4:
            combos = (tuple(cells[i] for i in rng.choice(len(cells), n, replace=False)) for _ in range(3000))
        for pts in combos:
            pts = [list(p) for p in pts]
            is_lhs = all(
                len({oracles.interval_of(p[k], n) for p in pts}) == n for k in range(2)
            )
            assert (lhs_fraction(pts) == 1.0) == is_lhs
            assert lhs_fraction(pts) == pytest.approx(oracles.lhs_fraction(pts))


class TestVoronoi:
    def test_single_point(self):
        assert voronoi_cell_areas([[0.3, 0.7]], probes=1000, seed=1).tolist() == [1.0]

    def test_symmetric_pair(self):
        areas = voronoi_cell_areas([[0.25, 0.5], [0.75, 0.5]], probes=10 ** 6, seed=2)
        assert areas == pytest.approx([0.5, 0.5], abs=0.01)

    def test_collinear_against_bisectors(self):
        pts = [[0.25, 0.5], [0.5, 0.5], [0.75, 0.5]]
        # cells are vertical strips split at x = 0.375 and x = 0.625
        exact = [0.375, 0.25, 0.375]
        areas = voronoi_cell_areas(pts, probes=10 ** 6, seed=3)
        assert areas == pytest.approx(exact, abs=0.005)

    def test_reproducible_and_normalized(self, rng):
        pts = rng.random((7, 3))
        a = voronoi_cell_areas(pts, probes=20000, seed=9)
        b = voronoi_cell_areas(pts, probes=20000, seed=9)
        np.testing.assert_array_equal(a, b)
        assert a.sum() == pytest.approx(1.0, abs=1e-9)

    def test_ties_go_to_lowest_index(self):
        areas = voronoi_cell_areas([[0.5, 0.5], [0.5, 0.5]], probes=5000, seed=0)
        assert areas.tolist() == [1.0, 0.0]


class TestScaling:
    def test_midpoint(self):
        b = Bounds.uniform(-5, 5, 1)
        assert scale_to_unit([[0.0]], b).points[0, 0] == 0.5

    def test_endpoints(self):
        b = Bounds([-2, 0], [2, 4])
        u = scale_to_unit([[-2, 0], [2, 4]], b).points
        np.testing.assert_array_equal(u, [[0, 0], [1, 1]])

    def test_affine(self):
        assert scale_to_unit([[1.0]], Bounds.uniform(-2, 2, 1)).points[0, 0] == 0.75

    def test_out_of_bounds_names_coordinate(self):
        with pytest.raises(OutOfBoundsError, match="coordinate 1 of point 0"):
            scale_to_unit([[0.0, 3.0]], Bounds.uniform(-2, 2, 2))

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            Bounds([0, 1], [1, 1])

    @given(arrays(float, (5, 3), elements=st.floats(-7, 11)))
    def test_round_trip(self, x):
        b = Bounds([-7, -7, -7], [11, 11, 11])
        back = scale_from_unit(scale_to_unit(x, b), b)
        np.testing.assert_allclose(back, x, rtol=0, atol=1e-12)


class TestDesignFiles:
    def test_round_trip(self, tmp_path, rng):
        d = DesignMatrix(rng.random((6, 3)))
        p = tmp_path / "d.csv"
        write_design(d, p)
        raw = p.read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n") and b"e" not in raw
        assert read_design(p) == d

    def test_tiny_values_written_positionally(self, tmp_path):
        p = tmp_path / "d.csv"
        write_design([[1e-7, 1.0]], p)
        assert p.read_text() == "0.0000001,1\n"

    def test_empty_file(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("")
        with pytest.raises(DesignParseError, match="empty"):
            read_design(p)

    def test_ragged_row_names_line(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("0.1,0.2\n0.3,0.4,0.5\n")
        with pytest.raises(DesignParseError) as info:
            read_design(p)
        assert info.value.line == 2
        assert "row 2" in str(info.value)

    def test_out_of_range(self, tmp_path):
        p = tmp_path / "o.csv"
        p.write_text("0.1,0.2\n0.3,1.5\n")
        with pytest.raises(DesignParseError) as info:
            read_design(p)
        assert info.value.line == 2

    def test_malformed_number(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("0.1,abc\n")
        with pytest.raises(DesignParseError, match="line 1|:1"):
            read_design(p)


@settings(max_examples=60, deadline=None)
@given(designs())
def test_metrics_permutation_invariant(x):
    perm = np.random.default_rng(0).permutation(x.shape[0])
    assert intersite_distance(x) == intersite_distance(x[perm])
    assert projected_distance(x) == projected_distance(x[perm])


@settings(max_examples=100, deadline=None)
@given(designs())
def test_projected_never_exceeds_intersite(x):
    assert projected_distance(x) <= intersite_distance(x) + 1e-15


@settings(max_examples=60, deadline=None)
@given(designs(min_n=1))
def test_lhs_fraction_range(x):
    n = x.shape[0]
    f = lhs_fraction(x)
    assert 1 / n - 1e-12 <= f <= 1.0


def test_metric_report_fields(rng):
    rep = metric_report(rng.random((5, 2)))
    assert all(math.isfinite(v) for v in (rep.intersite, rep.projected, rep.phi_p, rep.lhs_fraction))
    assert 1 / 5 <= rep.lhs_fraction <= 1
