import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from paretopilot import pareto

point_lists = st.lists(
    st.tuples(st.floats(-10, 10, allow_nan=False),
              st.floats(-10, 10, allow_nan=False)),
    min_size=1, max_size=40)


class TestNondominated:
    def test_known_set(self):
        pts = [(1, 5), (2, 4), (3, 1), (2, 2)]
        assert pareto.nondominated(pts) == oracles.brute_force_nondominated(pts)
        assert pareto.nondominated(pts) == [0, 1, 2]

    def test_single_point(self):
        assert pareto.nondominated([(3.0, 4.0)]) == [0]

    def test_all_identical_points_retained(self):
        pts = [(1.0, 1.0)] * 4
        assert pareto.nondominated(pts) == [0, 1, 2, 3]

    def test_duplicates_on_front_retained(self):
        pts = [(1, 5), (1, 5), (3, 1), (0, 0)]
        assert pareto.nondominated(pts) == [0, 1, 2]

    def test_matches_brute_force_on_random_sets(self):
        rng = np.random.default_rng(0)
        for n in (2, 10, 100, 500):
            pts = rng.normal(size=(n, 2))
            assert pareto.nondominated(pts) == oracles.brute_force_nondominated(pts)

    def test_matches_brute_force_with_ties(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            pts = rng.integers(0, 4, size=(20, 2)).astype(float)
            assert pareto.nondominated(pts) == oracles.brute_force_nondominated(pts)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            pareto.nondominated([(np.nan, 1.0)])

    @settings(max_examples=100, deadline=None)
    @given(pts=point_lists)
    def test_property_matches_brute_force(self, pts):
        assert pareto.nondominated(pts) == oracles.brute_force_nondominated(pts)


class TestHypervolume:
    def test_empty_set(self):
        assert pareto.hypervolume_2d(np.empty((0, 2)), (0, 0)) == 0.0

    def test_single_rectangle(self):
        assert pareto.hypervolume_2d([(1, 1)], (0, 0)) == pytest.approx(1.0)

    def test_two_point_staircase(self):
        hv = pareto.hypervolume_2d([(1, 2), (2, 1)], (0, 0))
        assert hv == pytest.approx(3.0)
        grid = oracles.grid_hypervolume([(1, 2), (2, 1)], (0, 0))
        assert hv == pytest.approx(grid, rel=2e-3)

    def test_points_below_ref_contribute_zero(self):
        hv = pareto.hypervolume_2d([(1, 1), (-5, 9), (0.2, -3)], (0, 0))
        assert hv == pytest.approx(1.0)

    def test_matches_exact_union_oracle_on_random_sets(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            pts = rng.uniform(-1, 5, size=(rng.integers(1, 15), 2))
            ref = rng.uniform(-2, 0, size=2)
            assert pareto.hypervolume_2d(pts, ref) == pytest.approx(
                oracles.exact_union_area(pts, ref), abs=1e-10)

    def test_dominated_points_add_nothing(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            pts = rng.uniform(0, 4, size=(12, 2))
            nd = pts[pareto.nondominated(pts)]
            assert pareto.hypervolume_2d(pts, (0, 0)) == pytest.approx(
                pareto.hypervolume_2d(nd, (0, 0)))

    def test_monotone_under_addition(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            pts = rng.uniform(0, 4, size=(6, 2))
            extra = rng.uniform(-1, 5, size=2)
            hv0 = pareto.hypervolume_2d(pts, (0, 0))
            hv1 = pareto.hypervolume_2d(np.vstack([pts, extra]), (0, 0))
            assert hv1 >= hv0 - 1e-12

    def test_translation_invariance(self):
        rng = np.random.default_rng(5)
        pts = rng.uniform(0, 4, size=(8, 2))
        shift = np.array([2.7, -1.3])
        hv0 = pareto.hypervolume_2d(pts, (0, 0))
        hv1 = pareto.hypervolume_2d(pts + shift, shift)
        assert hv1 == pytest.approx(hv0, rel=1e-12)

    def test_order_independence(self):
        rng = np.random.default_rng(6)
        pts = rng.uniform(0, 4, size=(10, 2))
        hv = pareto.hypervolume_2d(pts, (0, 0))
        for _ in range(5):
            rng.shuffle(pts)
            assert pareto.hypervolume_2d(pts, (0, 0)) == pytest.approx(hv)


class TestGreedySubset:
    def test_q1_is_single_point_argmax(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            pts = rng.uniform(-0.5, 3, size=(rng.integers(2, 30), 2))
            ref = (0.0, 0.0)
            picked = pareto.greedy_hv_subset(pts, ref, 1)
            areas = [oracles.exact_union_area([p], ref) for p in pts]
            assert picked[0] == int(np.argmax(areas))

    def test_selecting_all_nondominated_recovers_full_hv(self):
        rng = np.random.default_rng(8)
        pts = rng.uniform(0, 3, size=(12, 2))
        nd = pareto.nondominated(pts)
        sel = pareto.greedy_hv_subset(pts, (0, 0), q=len(nd))
        assert pareto.hypervolume_2d(pts[sel], (0, 0)) == pytest.approx(
            pareto.hypervolume_2d(pts, (0, 0)))

    def test_matches_independent_greedy(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            pts = rng.uniform(-0.5, 3, size=(10, 2))
            assert pareto.greedy_hv_subset(pts, (0, 0), 4) == \
                oracles.exhaustive_greedy_hv(pts, (0, 0), 4)

    def test_greedy_approximation_bound(self):
        # submodular coverage: greedy is within (1 - 1/e) of the optimum
        rng = np.random.default_rng(10)
        for _ in range(25):
            pts = rng.uniform(0, 3, size=(8, 2))
            q = int(rng.integers(1, 4))
            sel = pareto.greedy_hv_subset(pts, (0, 0), q)
            greedy_hv = pareto.hypervolume_2d(pts[sel], (0, 0))
            best = oracles.best_subset_hv(pts, (0, 0), q)
            assert greedy_hv >= (1 - 1 / np.e) * best - 1e-12

    def test_tie_breaks_to_lowest_index(self):
        pts = [(2.0, 1.0), (1.0, 2.0), (2.0, 1.0)]
        sel = pareto.greedy_hv_subset(pts, (0, 0), 2)
        assert sel[0] == 0  # same area as index 2; lowest index wins
