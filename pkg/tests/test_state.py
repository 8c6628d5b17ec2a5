import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monosync.coupling import TWO_PI
from monosync.state import (
    AbsoluteState,
    ClusterState,
    EmptyDecompositionError,
    ExtremumKind,
    ReducedState,
    alternating_sum,
    cluster_from_absolute,
    cluster_from_reduced,
    cone_location,
    critical_decomposition,
    reduce,
    splay_state,
    to_reduced,
    tv_distance,
)

MIN, MAX = ExtremumKind.MIN, ExtremumKind.MAX


def states_with_difference(d):
    """Embed a difference vector into an actual pair of reduced states.

    Scales the vector down and adds it to a widely spaced base state so that
    both states stay sorted inside [0, 2*pi]; the metric and decomposition
    are homogeneous, so conclusions transfer back by the scale factor.
    """
    d = np.asarray(d, dtype=float)
    n = d.size
    base = splay_state(n + 1).diffs
    min_gap = TWO_PI / (n + 1)
    scale = 0.2 * min_gap / max(1.0, np.max(np.abs(np.diff(np.concatenate(([0.0], d, [0.0]))))))
    return ReducedState(base + scale * d), ReducedState(base), scale


def difference_vectors(max_n=12):
    # entries large enough to survive float absorption when embedded on a
    # base state of magnitude ~pi
    entry = st.one_of(
        st.just(0.0),
        st.floats(min_value=1e-6, max_value=1.0, width=64),
        st.floats(min_value=-1.0, max_value=-1e-6, width=64),
    )
    return st.lists(entry, min_size=1, max_size=max_n).filter(
        lambda v: any(x != 0.0 for x in v)
    )


class TestReduce:
    def test_two_oscillators(self):
        s = AbsoluteState(np.array([0.0, math.pi]))
        assert np.allclose(reduce(s).diffs, [math.pi])

    def test_splay_configuration(self):
        s = AbsoluteState(np.array([0.0, math.pi / 2, math.pi, 3 * math.pi / 2]))
        assert np.allclose(reduce(s).diffs, [math.pi / 2, math.pi, 3 * math.pi / 2])

    def test_sorting_and_wrapping(self):
        s = AbsoluteState(np.array([1.0, 0.5, 2.0]))
        assert np.allclose(reduce(s).diffs, [1.0, TWO_PI - 0.5])

    @given(
        st.lists(
            st.floats(min_value=0.0, max_value=6.28, width=64), min_size=2, max_size=8
        ).filter(
            # well-separated phases keep the sorted order stable under the
            # float rounding a rigid rotation introduces
            lambda p: min(
                min(abs(a - b), TWO_PI - abs(a - b))
                for i, a in enumerate(p)
                for b in p[i + 1 :]
            )
            > 1e-6
        ),
        st.floats(min_value=-10.0, max_value=10.0, allow_nan=False),
    )
    @settings(deadline=None)
    def test_rotation_invariance(self, phases, c):
        s = AbsoluteState(np.asarray(phases))
        wrapped = np.mod(s.phases + c, TWO_PI)
        wrapped[wrapped >= TWO_PI] = 0.0  # np.mod may round up to the modulus
        rotated = AbsoluteState(wrapped)
        assert np.allclose(reduce(s).diffs, reduce(rotated).diffs, atol=1e-9)

    @given(st.permutations(list(range(1, 6))))
    def test_permutation_invariance_of_tail(self, perm):
        phases = np.array([0.3, 1.0, 2.0, 3.0, 4.0, 5.0])
        shuffled = np.concatenate(([phases[0]], phases[1:][np.argsort(perm)]))
        assert np.array_equal(
            reduce(AbsoluteState(phases)).diffs, reduce(AbsoluteState(shuffled)).diffs
        )


class TestTvDistance:
    def test_zero_on_identical(self):
        x = splay_state(5)
        assert tv_distance(x, x) == 0.0

    def test_hand_computed_three_entry_vector(self):
        # difference (-1, 2, -1): 1 + 3 + 3 + 1 = 8
        y = ReducedState(np.array([1.1, 3.2, 6.2]))
        x = ReducedState(np.array([0.1, 5.2, 5.2]))
        assert tv_distance(x, y) == pytest.approx(8.0, abs=1e-12)

    def test_two_hump_example(self):
        # difference (3, -2): twice the rise plus twice the fall = 10
        y = ReducedState(np.array([0.2, 6.0]))
        x = ReducedState(np.array([3.2, 4.0]))
        assert tv_distance(x, y) == pytest.approx(10.0, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            tv_distance(splay_state(4), splay_state(5))

    @given(difference_vectors(max_n=8))
    @settings(deadline=None, max_examples=200)
    def test_symmetry(self, d):
        x, y, _ = states_with_difference(d)
        assert tv_distance(x, y) == tv_distance(y, x)

    @given(difference_vectors(max_n=6), difference_vectors(max_n=6))
    @settings(deadline=None, max_examples=200)
    def test_triangle_inequality(self, d1, d2):
        n = min(len(d1), len(d2))
        d1, d2 = d1[:n], d2[:n]
        base = splay_state(n + 1).diffs
        scale = 0.05 * TWO_PI / (n + 1)
        x = ReducedState(base + scale * np.asarray(d1))
        y = ReducedState(base)
        z = ReducedState(base + scale * np.asarray(d2))
        assert tv_distance(x, z) <= tv_distance(x, y) + tv_distance(y, z) + 1e-12


class TestCriticalDecomposition:
    def test_valley_peak_valley(self):
        y = ReducedState(np.array([1.1, 3.2, 6.2]))
        x = ReducedState(np.array([0.1, 5.2, 5.2]))  # difference (-1, 2, -1)
        cs = critical_decomposition(x, y)
        assert cs.indices == (1, 2, 3)
        assert cs.kinds == (MIN, MAX, MIN)
        assert cs.n_c == 3

    def test_single_entry(self):
        x = ReducedState(np.array([1.0]))
        y = ReducedState(np.array([1.7]))
        cs = critical_decomposition(x, y)  # difference (-0.7)
        assert cs.indices == (1,)
        assert cs.kinds == (MIN,)

    def test_negative_valued_maximum(self):
        # difference (-3, -1, -2): extended diffs (-3, 2, -1, 2) change sign thrice
        y = ReducedState(np.array([3.2, 5.0, 6.1]))
        x = ReducedState(np.array([0.2, 4.0, 4.1]))
        cs = critical_decomposition(x, y)
        assert cs.indices == (1, 2, 3)
        assert cs.kinds == (MIN, MAX, MIN)

    def test_plateau_collapses_to_smallest_index(self):
        # dyadic values keep the tie exact under subtraction
        y = ReducedState(np.array([1.0, 2.0, 3.0]))
        x = ReducedState(np.array([0.75, 1.75, 3.5]))  # difference (-.25, -.25, .5)
        cs = critical_decomposition(x, y)
        assert cs.indices == (1, 3)
        assert cs.kinds == (MIN, MAX)
        assert tv_distance(x, y) == 2.0 * alternating_sum(x, y, cs)

    def test_identical_states_rejected(self):
        x = splay_state(5)
        with pytest.raises(EmptyDecompositionError):
            critical_decomposition(x, x)

    @given(difference_vectors())
    @settings(deadline=None, max_examples=300)
    def test_kinds_alternate_and_extrema_are_ordered(self, d):
        x, y, scale = states_with_difference(d)
        cs = critical_decomposition(x, y)
        dv = x.diffs - y.diffs
        values = [dv[i - 1] for i in cs.indices]
        for k in range(cs.n_c - 1):
            assert cs.kinds[k] != cs.kinds[k + 1]
        # minima sit strictly below both neighbors, maxima strictly above
        # (virtual extrema of value 0 bracket the list)
        padded = [0.0] + values + [0.0]
        for k, kind in enumerate(cs.kinds, start=1):
            if kind is MIN:
                assert padded[k] < padded[k - 1] and padded[k] < padded[k + 1]
            else:
                assert padded[k] > padded[k - 1] and padded[k] > padded[k + 1]


class TestAlternatingSum:
    def test_valley_peak_valley_sums_to_half_distance(self):
        y = ReducedState(np.array([1.1, 3.2, 6.2]))
        x = ReducedState(np.array([0.1, 5.2, 5.2]))
        cs = critical_decomposition(x, y)
        alt = alternating_sum(x, y, cs)
        assert alt == pytest.approx(4.0, abs=1e-12)
        assert tv_distance(x, y) == pytest.approx(2.0 * alt, abs=1e-12)

    def test_single_minimum(self):
        x = ReducedState(np.array([1.0]))
        y = ReducedState(np.array([1.7]))
        cs = critical_decomposition(x, y)
        assert alternating_sum(x, y, cs) == pytest.approx(0.7, abs=1e-15)
        assert tv_distance(x, y) == pytest.approx(1.4, abs=1e-15)

    def test_inconsistent_critical_set_rejected(self):
        y = ReducedState(np.array([1.1, 3.2, 6.2]))
        x = ReducedState(np.array([0.1, 5.2, 5.2]))
        other = critical_decomposition(
            ReducedState(np.array([1.0])), ReducedState(np.array([2.0]))
        )
        with pytest.raises(ValueError):
            alternating_sum(x, y, other)

    @given(difference_vectors())
    @settings(deadline=None, max_examples=500)
    def test_factor_two_identity(self, d):
        """Total variation equals twice the alternating extremum sum."""
        x, y, _ = states_with_difference(d)
        cs = critical_decomposition(x, y)
        assert tv_distance(x, y) == pytest.approx(
            2.0 * alternating_sum(x, y, cs), abs=1e-12
        )

    def test_factor_two_identity_with_injected_ties(self):
        rng = np.random.default_rng(1234)
        for _ in range(500):
            n = int(rng.integers(2, 13))
            d = np.round(rng.uniform(-1, 1, n), 1)  # coarse grid forces ties
            if np.all(d == 0.0):
                continue
            x, y, _ = states_with_difference(d)
            cs = critical_decomposition(x, y)
            assert tv_distance(x, y) == pytest.approx(
                2.0 * alternating_sum(x, y, cs), abs=1e-12
            )


class TestConeLocation:
    def test_splay_is_interior(self):
        assert cone_location(splay_state(10), eps=1e-9).is_interior

    def test_zero_first_difference(self):
        loc = cone_location(ReducedState(np.array([0.0, 1.0, 2.0])), eps=0.0)
        assert loc.kind == "boundary"
        assert loc.active_constraints == {1}

    def test_equal_adjacent_differences(self):
        loc = cone_location(ReducedState(np.array([1.0, 1.0, 2.0])), eps=0.0)
        assert loc.active_constraints == {2}

    def test_full_turn_last_difference(self):
        loc = cone_location(ReducedState(np.array([1.0, 2.0, TWO_PI])), eps=0.0)
        assert loc.active_constraints == {4}

    def test_eps_margin(self):
        loc = cone_location(ReducedState(np.array([1e-12, 1.0, 2.0])), eps=1e-9)
        assert loc.active_constraints == {1}


class TestSplayState:
    @pytest.mark.parametrize("n", [2, 4, 10])
    def test_equispaced(self, n):
        diffs = splay_state(n).diffs
        assert np.allclose(diffs, np.arange(1, n) * TWO_PI / n)

    def test_two_oscillators(self):
        assert np.allclose(splay_state(2).diffs, [math.pi])


class TestClusterState:
    def test_full_sync_expands_to_zeros(self):
        c = ClusterState(reps=np.array([1.3]), mults=np.array([3]))
        assert np.array_equal(to_reduced(c).diffs, [0.0, 0.0])

    def test_unit_multiplicities_reproduce_splay(self):
        n = 6
        c = ClusterState(
            reps=np.concatenate(([0.0], splay_state(n).diffs)),
            mults=np.ones(n, dtype=int),
        )
        assert np.allclose(to_reduced(c).diffs, splay_state(n).diffs)

    def test_one_merged_pair(self):
        c = ClusterState(reps=np.array([0.0, math.pi]), mults=np.array([2, 1]))
        assert np.allclose(to_reduced(c).diffs, [0.0, math.pi])

    def test_rejects_decreasing_reps(self):
        with pytest.raises(ValueError):
            ClusterState(reps=np.array([1.0, 0.5]), mults=np.array([1, 1]))

    def test_rejects_full_turn_span(self):
        with pytest.raises(ValueError):
            ClusterState(reps=np.array([0.0, TWO_PI]), mults=np.array([1, 1]))

    def test_member_bookkeeping_validated(self):
        with pytest.raises(ValueError):
            ClusterState(
                reps=np.array([0.0, 1.0]),
                mults=np.array([2, 1]),
                members=((1,), (2, 3)),
            )


class TestClustering:
    def test_distinct_diffs_stay_singletons(self):
        x = splay_state(5)
        c = cluster_from_reduced(x, merge_eps=0.0)
        assert c.m == 5
        assert np.array_equal(c.mults, np.ones(5, dtype=int))
        assert np.allclose(to_reduced(c).diffs, x.diffs)

    def test_exact_duplicates_merge(self):
        x = ReducedState(np.array([1.0, 1.0, 2.0]))
        c = cluster_from_reduced(x, merge_eps=0.0)
        assert c.m == 3
        assert list(c.mults) == [1, 2, 1]
        assert c.members == ((1,), (2, 3), (4,))

    def test_zero_diff_joins_reference(self):
        x = ReducedState(np.array([0.0, 2.0]))
        c = cluster_from_reduced(x, merge_eps=0.0)
        assert list(c.mults) == [2, 1]
        assert c.members[0] == (1, 2)

    def test_wraparound_joins_reference(self):
        x = ReducedState(np.array([2.0, TWO_PI - 1e-12]))
        c = cluster_from_reduced(x, merge_eps=1e-9)
        assert list(c.mults) == [2, 1]
        assert c.members[0] == (1, 3)
        assert c.reps[0] == 0.0

    def test_cluster_from_absolute_keeps_original_labels(self):
        s = AbsoluteState(np.array([1.0, 0.5, 2.0, 1.0]))
        anchor, c = cluster_from_absolute(s, merge_eps=0.0)
        assert anchor == 1.0
        # oscillator 4 shares oscillator 1's phase; oscillator 2 sits 2pi-0.5 ahead
        assert c.members == ((1, 4), (3,), (2,))
        assert list(c.mults) == [2, 1, 1]
        assert np.allclose(c.reps, [0.0, 1.0, TWO_PI - 0.5])
