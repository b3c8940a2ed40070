import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evobench.core import Population, RngStream
from evobench.metrics import (best_fitness, diversity, hypervolume,
                              hypervolume_mc, igd, speedup, throughput)


def _pop(x, f=None):
    x = np.asarray(x, dtype=float)
    if f is None:
        f = np.zeros((len(x), 1))
    return Population(x, np.asarray(f, dtype=float))


class TestBestFitness:
    def test_single_individual(self):
        assert best_fitness(_pop([[0.0]], [[3.5]])) == 3.5

    def test_ties_give_common_value(self):
        assert best_fitness(_pop(np.zeros((3, 1)), [[2.0], [2.0], [2.0]])) == 2.0

    def test_matches_scan_oracle(self):
        rng = RngStream(4).generator()
        f = rng.uniform(size=(50, 1))
        lowest = f[0, 0]
        for v in f[:, 0]:
            if v < lowest:
                lowest = v
        assert best_fitness(_pop(np.zeros((50, 1)), f)) == lowest


class TestIgd:
    def test_reference_equal_to_solutions_is_zero(self):
        pts = np.array([[0.1, 0.9], [0.5, 0.5], [0.9, 0.1]])
        assert igd(pts, pts) == 0.0

    def test_three_four_five(self):
        assert igd(np.array([[3.0, 4.0]]), np.array([[0.0, 0.0]])) == \
            pytest.approx(5.0)

    def test_matches_bruteforce(self):
        rng = RngStream(8).generator()
        sols = rng.uniform(size=(23, 3))
        ref = rng.uniform(size=(41, 3))
        brute = np.mean([min(np.linalg.norm(r - s) for s in sols)
                         for r in ref])
        assert igd(sols, ref) == pytest.approx(brute, rel=1e-12)

    def test_zero_iff_every_reference_point_is_present(self):
        rng = RngStream(9).generator()
        ref = rng.uniform(size=(6, 2))
        sols = np.vstack([ref, rng.uniform(size=(4, 2))])
        assert igd(sols, ref) <= 1e-12
        assert igd(sols[:-1][::-1][:4], ref) > 1e-12


class TestHypervolumeExact:
    def test_single_point_square(self):
        assert hypervolume(np.array([[1.0, 1.0]]), np.array([2.0, 2.0])) == \
            pytest.approx(1.0)

    def test_rectangle_union(self):
        pts = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert hypervolume(pts, np.array([2.0, 2.0])) == pytest.approx(3.0)

    def test_point_beyond_reference_contributes_nothing(self):
        pts = np.array([[1.0, 1.0], [3.0, 0.0]])
        assert hypervolume(pts, np.array([2.0, 2.0])) == pytest.approx(1.0)

    def test_cube_in_three_objectives(self):
        pts = np.array([[0.5, 0.5, 0.5]])
        assert hypervolume(pts, np.ones(3)) == pytest.approx(0.125)

    def test_dominated_point_changes_nothing(self):
        ref = np.array([2.0, 2.0])
        pts = np.array([[0.5, 0.5]])
        with_dom = np.vstack([pts, [[1.0, 1.0]]])
        assert hypervolume(with_dom, ref) == hypervolume(pts, ref)

    def test_adding_a_point_never_decreases(self):
        rng = RngStream(14).generator()
        ref = np.full(3, 1.0)
        pts = rng.uniform(size=(6, 3))
        base = hypervolume(pts, ref)
        for extra in rng.uniform(size=(10, 3)):
            grown = hypervolume(np.vstack([pts, extra[None, :]]), ref)
            assert grown >= base - 1e-12

    def test_four_objectives_unsupported(self):
        with pytest.raises(ValueError):
            hypervolume(np.zeros((2, 4)), np.ones(4))

    @pytest.mark.parametrize("m", [2, 3])
    def test_exact_matches_monte_carlo_on_fixtures(self, m):
        # acceptance oracle: 20 random fixtures, 1e6 samples, 3 sigma
        rng = RngStream(1234 + m).generator()
        samples = 1_000_000
        for _ in range(10):
            n = int(rng.integers(1, 9))
            pts = rng.uniform(0.0, 1.0, size=(n, m))
            ref = np.full(m, 1.0)
            exact = hypervolume(pts, ref)
            est = hypervolume_mc(pts, ref, samples, rng)
            box = np.prod(ref - pts.min(axis=0))
            frac = exact / box if box > 0 else 0.0
            sigma = box * math.sqrt(max(frac * (1 - frac), 1e-12) / samples)
            assert abs(est - exact) <= 3.0 * sigma + 1e-12


class TestHypervolumeMonteCarlo:
    def test_empty_set(self):
        assert hypervolume_mc(np.zeros((0, 2)), np.ones(2), 1000,
                              RngStream(0)) == 0.0

    def test_singleton_rectangle(self):
        pts = np.array([[0.25, 0.5]])
        ref = np.array([1.0, 1.0])
        exact = 0.75 * 0.5
        est = hypervolume_mc(pts, ref, 200_000, RngStream(3))
        sigma = exact * math.sqrt(1.0 / 200_000)  # loose binomial bound
        assert abs(est - exact) <= 5 * sigma + 1e-3

    def test_error_shrinks_with_hundredfold_samples(self):
        rng = RngStream(6).generator()
        pts = rng.uniform(size=(5, 2))
        ref = np.full(2, 1.0)
        exact = hypervolume(pts, ref)
        coarse = abs(hypervolume_mc(pts, ref, 1_000, RngStream(77)) - exact)
        fine = abs(hypervolume_mc(pts, ref, 100_000, RngStream(77)) - exact)
        assert fine <= coarse + 1e-3

    def test_deterministic_given_stream(self):
        pts = np.array([[0.3, 0.7], [0.6, 0.2]])
        a = hypervolume_mc(pts, np.ones(2), 5000, RngStream(42))
        b = hypervolume_mc(pts, np.ones(2), 5000, RngStream(42))
        assert a == b


class TestDiversity:
    def test_identical_population_is_zero(self):
        assert diversity(_pop(np.ones((5, 3)))) == 0.0

    def test_two_points_give_their_distance(self):
        assert diversity(_pop([[0.0, 0.0], [3.0, 4.0]])) == pytest.approx(5.0)

    def test_matches_pairwise_oracle(self):
        rng = RngStream(10).generator()
        x = rng.uniform(size=(20, 4))
        dists = [np.linalg.norm(x[i] - x[j])
                 for i in range(20) for j in range(i + 1, 20)]
        assert diversity(_pop(x)) == pytest.approx(np.mean(dists), rel=1e-12)

    def test_translation_invariant(self):
        rng = RngStream(11).generator()
        x = rng.uniform(size=(12, 3))
        assert diversity(_pop(x + 100.0)) == pytest.approx(diversity(_pop(x)))

    @given(st.floats(0.1, 50.0))
    @settings(max_examples=20, deadline=None)
    def test_scales_linearly(self, c):
        rng = RngStream(12).generator()
        x = rng.uniform(size=(10, 3))
        assert diversity(_pop(c * x)) == pytest.approx(c * diversity(_pop(x)),
                                                       rel=1e-9)


class TestEfficiencyIndicators:
    def test_speedup_reference_ratio(self):
        assert speedup(14.34, 8.36) == pytest.approx(1.715, abs=5e-4)

    def test_speedup_equal_times(self):
        assert speedup(2.5, 2.5) == 1.0

    def test_speedup_slower_test(self):
        assert speedup(1.0, 2.0) == 0.5

    def test_throughput_zero(self):
        assert throughput(0, 30.0).per_second == 0.0

    def test_throughput_rate(self):
        t = throughput(3_000_000, 30.0)
        assert t.per_second == pytest.approx(1e5)
        assert t.nfe == 3_000_000
