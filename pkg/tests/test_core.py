import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from evobench.core import (Bounds, Budget, Population, RngStream,
                           VirtualClock, budget_exhausted, clamp_to_bounds,
                           split_stream)


class TestClamp:
    def test_out_of_range_entry_is_clipped(self):
        out = clamp_to_bounds(np.array([[5.0]]), Bounds.cube(-1, 1, 1))
        assert out.tolist() == [[1.0]]

    def test_inside_entry_passes_through_bit_identical(self):
        x = np.array([[0.3]])
        out = clamp_to_bounds(x, Bounds.cube(-1, 1, 1))
        assert out[0, 0] == x[0, 0]

    def test_random_matrix_lands_in_bounds(self):
        rng = RngStream(123).generator()
        b = Bounds.cube(-1.0, 1.0, 10)
        x = rng.uniform(-2.0, 2.0, size=(100, 10))
        out = clamp_to_bounds(x, b)
        # exhaustive scan, not a vectorized shortcut
        for row in out:
            for i, v in enumerate(row):
                assert b.lower[i] <= v <= b.upper[i]

    def test_column_mismatch_raises(self):
        with pytest.raises(ValueError):
            clamp_to_bounds(np.zeros((3, 4)), Bounds.cube(0, 1, 5))

    @given(hnp.arrays(np.float64, (7, 3),
                      elements=st.floats(-1e9, 1e9, allow_nan=False)))
    def test_idempotent(self, x):
        b = Bounds.cube(-2.0, 3.0, 3)
        once = clamp_to_bounds(x, b)
        assert np.array_equal(clamp_to_bounds(once, b), once)


class TestBounds:
    def test_rejects_inverted_interval(self):
        with pytest.raises(ValueError):
            Bounds(np.array([0.0, 1.0]), np.array([1.0, 1.0]))

    def test_sample_inside_box(self):
        b = Bounds.cube(-5.0, 2.0, 8)
        x = b.sample(64, RngStream(9).generator())
        assert x.shape == (64, 8) and b.contains(x)


class TestBudget:
    def test_generations_boundary_is_inclusive(self):
        assert budget_exhausted(Budget.generations(100), 100, 0, 0.0)

    def test_evaluations_one_short_is_not_exhausted(self):
        assert not budget_exhausted(Budget.evaluations(1_000_000),
                                    0, 999_999, 0.0)

    def test_walltime_boundary_is_inclusive(self):
        clock = VirtualClock(0.0)
        clock.advance(30.0)
        assert budget_exhausted(Budget.walltime(30.0), 0, 0, clock())

    def test_other_axes_are_ignored(self):
        b = Budget.generations(10)
        assert not budget_exhausted(b, 9, 10**9, 10**9)

    def test_zero_generation_budget_is_legal(self):
        assert budget_exhausted(Budget.generations(0), 0, 0, 0.0)

    @pytest.mark.parametrize("bad", [
        lambda: Budget("generations", -1),
        lambda: Budget.evaluations(0),
        lambda: Budget.walltime(0.0),
        lambda: Budget("epochs", 5),
    ])
    def test_invalid_budgets_raise(self, bad):
        with pytest.raises(ValueError):
            bad()

    def test_negative_progress_raises(self):
        with pytest.raises(ValueError):
            budget_exhausted(Budget.generations(1), -1, 0, 0.0)

    @given(st.sampled_from(["generations", "evaluations", "walltime"]),
           st.integers(1, 50),
           st.lists(st.integers(0, 10), min_size=1, max_size=20))
    def test_monotone_once_true_stays_true(self, kind, limit, increments):
        b = Budget(kind, limit)
        gen = nfe = 0
        elapsed = 0.0
        seen_true = False
        for inc in increments:
            gen += inc
            nfe += 3 * inc
            elapsed += 0.5 * inc
            now = budget_exhausted(b, gen, nfe, elapsed)
            if seen_true:
                assert now
            seen_true = seen_true or now


class TestSplitStream:
    def test_split_is_reproducible(self):
        a = split_stream(RngStream(1), 2)
        b = split_stream(RngStream(1), 2)
        assert a == b
        for sa, sb in zip(a, b):
            da = sa.generator().uniform(size=100)
            db = sb.generator().uniform(size=100)
            assert np.array_equal(da, db)

    def test_children_draw_different_sequences(self):
        c0, c1 = split_stream(RngStream(1), 2)
        d0 = c0.generator().uniform(size=1000)
        d1 = c1.generator().uniform(size=1000)
        assert not np.array_equal(d0, d1)

    def test_different_seeds_give_disjoint_first_draws(self):
        firsts_1 = {s.generator().uniform() for s in split_stream(RngStream(1), 4)}
        firsts_2 = {s.generator().uniform() for s in split_stream(RngStream(2), 4)}
        assert firsts_1.isdisjoint(firsts_2)

    def test_children_are_pairwise_distinct(self):
        ids = [s.stream_id for s in split_stream(RngStream(7, 42), 64)]
        assert len(set(ids)) == 64

    def test_zero_children_rejected(self):
        with pytest.raises(ValueError):
            split_stream(RngStream(0), 0)

    def test_same_key_same_sequence(self):
        a = RngStream(5, 6).generator().standard_normal(32)
        b = RngStream(5, 6).generator().standard_normal(32)
        assert np.array_equal(a, b)


class TestPopulation:
    def test_objective_vector_is_promoted_to_column(self):
        pop = Population(np.zeros((3, 2)), np.arange(3.0))
        assert pop.f.shape == (3, 1) and pop.n == 3 and pop.m == 1

    def test_row_count_mismatch_raises(self):
        with pytest.raises(ValueError):
            Population(np.zeros((3, 2)), np.zeros((4, 1)))

    def test_empty_population_rejected(self):
        with pytest.raises(ValueError):
            Population(np.zeros((0, 2)), np.zeros((0, 1)))


class TestVirtualClock:
    def test_tick_advances_per_reading(self):
        clock = VirtualClock(10.0, tick=2.0)
        assert clock() == 10.0
        assert clock() == 12.0

    def test_cannot_move_backwards(self):
        with pytest.raises(ValueError):
            VirtualClock().advance(-1.0)
