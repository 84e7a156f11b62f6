import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from overlapkit.inequalities import (
    InequalitySpec,
    OverlapSet,
    ValidationError,
    classify,
    edge_order,
    evaluate,
    evaluate_states,
    hn_plus,
    make_h3_robust,
    make_h_mzi,
    make_hn,
    qubit_h4_gap,
)
from overlapkit.mesh import pentagon_qubit_set, qutrit_h4_set, ququart_h5_set
from overlapkit.states import basis_state, haar_random_pure, make_rng, qubit_state

from _oracles import brute_force_h4_qubit, pentagon_exact

SEEDS = [0, 1, 2]


class TestOverlapSet:
    def test_symmetry_is_exact(self):
        o = OverlapSet.from_upper(3, [0.2, 0.4, 0.6])
        assert np.array_equal(o.r, o.r.T)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            OverlapSet.from_upper(3, [0.2, 1.4, 0.6])

    def test_diagonal_fixed_to_one(self):
        o = OverlapSet.from_states([basis_state(2, 0), basis_state(2, 1)])
        assert o.r[0, 0] == 1.0 and o.r[1, 1] == 1.0

    def test_edge_order(self):
        assert edge_order(4) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]

    def test_restrict_relabels(self):
        o = OverlapSet.from_upper(4, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
        sub = o.restrict([1, 2, 3])
        assert sub.r[0, 1] == o.r[1, 2]
        assert sub.r[0, 2] == o.r[1, 3]


class TestMakeHn:
    def test_h3_weights(self):
        spec = make_hn(3)
        assert spec.weights == {(0, 1): 1.0, (0, 2): 1.0, (1, 2): -1.0}
        assert spec.classical_bound == 1.0

    def test_h4_weights(self):
        spec = make_hn(4)
        assert spec.weights == {(0, 1): 1.0, (0, 2): 1.0, (0, 3): 1.0,
                                (1, 2): -1.0, (1, 3): -1.0, (2, 3): -1.0}

    def test_h5_star_pattern(self):
        spec = make_hn(5)
        for k in range(1, 5):
            assert spec.weights[(0, k)] == 1.0
        for i, j in itertools.combinations(range(1, 5), 2):
            assert spec.weights[(i, j)] == -1.0

    def test_rejects_small_n(self):
        with pytest.raises(ValidationError):
            make_hn(2)

    @pytest.mark.parametrize("n", range(4, 13))
    def test_recursion_consistency(self, n):
        # weights of h_n extend h_{n-1} by +1 on (0, n-1), -1 on (i, n-1)
        cur, prev = make_hn(n), make_hn(n - 1)
        for edge, w in prev.weights.items():
            assert cur.weights[edge] == w
        assert cur.weights[(0, n - 1)] == 1.0
        for i in range(1, n - 1):
            assert cur.weights[(i, n - 1)] == -1.0


class TestHmzi:
    def test_uniform_overlaps_cancel(self):
        spec = make_h_mzi()
        assert evaluate(spec, OverlapSet.from_upper(5, [1.0] * 10)) == pytest.approx(0.0)
        assert evaluate(spec, OverlapSet.from_upper(5, [0.0] * 10)) == 0.0
        assert spec.classical_bound == 2.0

    def test_pentagon_maximum(self):
        value = evaluate_states(make_h_mzi(), pentagon_qubit_set())
        assert value == pytest.approx(pentagon_exact(), abs=1e-9)


class TestEvaluate:
    def test_hypercube_vertex(self):
        assert evaluate(make_hn(3), OverlapSet.from_upper(3, [1.0, 1.0, 0.0])) == 2.0

    def test_size_mismatch(self):
        with pytest.raises(ValidationError):
            evaluate(make_hn(4), OverlapSet.from_upper(3, [0.5] * 3))

    def test_qutrit_set_h4(self):
        assert evaluate_states(make_hn(4), qutrit_h4_set()) == pytest.approx(4.0 / 3.0, abs=1e-9)

    def test_ququart_set_h5(self):
        assert evaluate_states(make_hn(5), ququart_h5_set()) == pytest.approx(1.375, abs=1e-9)

    def test_printed_ququart_amplitudes(self):
        # two-decimal published amplitudes (two sign slips corrected),
        # normalized; lands within 1e-2 of the exact maximum 1.375
        raw = [
            [0.61, 0.16, 0.41, -0.65],
            [0.13, 0.12, 0.95, -0.26],
            [-0.99, 0.01, -0.12, 0.01],
            [-0.23, 0.43, -0.05, 0.87],
            [0.26, 0.76, -0.03, -0.59],
        ]
        from overlapkit.states import PureState
        states = [PureState.normalized(np.array(v, dtype=complex)) for v in raw]
        assert evaluate_states(make_hn(5), states) == pytest.approx(1.375, abs=1e-2)

    def test_identical_states_saturate_h3(self):
        s = basis_state(2, 0)
        assert evaluate_states(make_hn(3), [s, s, s]) == pytest.approx(1.0)

    def test_h4_on_orthogonal_basis(self):
        states = [basis_state(4, k) for k in range(4)]
        assert evaluate_states(make_hn(4), states) == 0.0

    def test_h3_rebit_triple(self):
        theta = 5 * np.pi / 6
        states = [qubit_state(0.0), qubit_state(theta), qubit_state(-theta)]
        assert evaluate_states(make_hn(3), states) == pytest.approx(1.25, abs=1e-12)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_linearity(self, seed):
        rng = make_rng(seed)
        spec = make_hn(4)
        r1 = OverlapSet.from_upper(4, rng.uniform(0, 1, 6))
        r2 = OverlapSet.from_upper(4, rng.uniform(0, 1, 6))
        lam = rng.uniform()
        mix = OverlapSet.from_upper(4, lam * r1.upper() + (1 - lam) * r2.upper())
        assert evaluate(spec, mix) == pytest.approx(
            lam * evaluate(spec, r1) + (1 - lam) * evaluate(spec, r2), abs=1e-12)


class TestHnPlus:
    def test_zero(self):
        assert hn_plus(OverlapSet.from_upper(3, [0.0] * 3)) == 0.0

    @pytest.mark.parametrize("seed", SEEDS)
    @pytest.mark.parametrize("n,d", [(4, 2), (5, 3), (6, 4)])
    def test_mean_projector_identity(self, seed, n, d):
        # sum of overlaps equals (n^2/2) Tr(X^2) - n/2 for the mean projector X
        rng = make_rng(seed * 97 + n)
        states = [haar_random_pure(d, rng) for _ in range(n)]
        o = OverlapSet.from_states(states)
        x = sum(s.density().entries for s in states) / n
        expected = (n**2 / 2.0) * float(np.vdot(x, x).real) - n / 2.0
        assert hn_plus(o) == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("seed", SEEDS)
    @pytest.mark.parametrize("n", [4, 5, 6, 7, 8])
    def test_hn_decomposition(self, seed, n):
        # h_n = (sum over all pairs) - 2 (sum over pairs excluding the star node 0)
        rng = make_rng(seed * 31 + n)
        states = [haar_random_pure(3, rng) for _ in range(n)]
        o = OverlapSet.from_states(states)
        value = evaluate_states(make_hn(n), states)
        assert value == pytest.approx(
            hn_plus(o) - 2.0 * hn_plus(o.restrict(range(1, n))), abs=1e-10)


class TestMixedStateReduction:
    @pytest.mark.parametrize("n", [3, 4])
    @pytest.mark.parametrize("seed", SEEDS)
    def test_mixture_below_best_pure_tuple(self, n, seed):
        # two-component mixtures: functional value never exceeds the best
        # tuple of pure components (multilinearity makes it an average)
        rng = make_rng(seed * 11 + n)
        spec = make_hn(n)
        comps, lams = [], []
        for _ in range(n):
            comps.append([haar_random_pure(3, rng) for _ in range(2)])
            lam = rng.uniform(0.2, 0.8)
            lams.append((lam, 1 - lam))
        from overlapkit.states import DensityMatrix
        mixed = [
            DensityMatrix(l0 * c[0].density().entries + l1 * c[1].density().entries)
            for c, (l0, l1) in zip(comps, lams)
        ]
        mixture_value = evaluate_states(spec, mixed)
        combo_values, combo_weights = [], []
        for picks in itertools.product(range(2), repeat=n):
            combo_values.append(evaluate_states(spec, [comps[i][p] for i, p in enumerate(picks)]))
            combo_weights.append(np.prod([lams[i][p] for i, p in enumerate(picks)]))
        assert mixture_value <= max(combo_values) + 1e-10
        # multilinearity: the mixture is exactly the convex combination
        assert mixture_value == pytest.approx(
            float(np.dot(combo_weights, combo_values)), abs=1e-10)


class TestQubitH4Bound:
    def test_gap_nonpositive_on_grid(self):
        t = np.linspace(0, np.pi / 2, 40)
        a = np.linspace(0, np.pi / 2, 40)
        p = np.linspace(0, 2 * np.pi, 40, endpoint=False)
        tt, aa, pp = np.meshgrid(t, a, p, indexing="ij")
        assert float(qubit_h4_gap(tt, aa, pp).max()) <= 1e-12

    def test_gap_matches_numeric_optimum(self):
        rng = make_rng(3)
        for _ in range(100):
            t, a = rng.uniform(0, np.pi / 2, 2)
            p = rng.uniform(0, 2 * np.pi)
            assert float(qubit_h4_gap(t, a, p)) == pytest.approx(
                brute_force_h4_qubit(t, a, p), abs=1e-8)


class TestClassify:
    def test_witness_and_dimension(self):
        v = classify(make_hn(4), 1.31, [(2, 1.000), (3, 4.0 / 3.0)])
        assert v.coherence_witnessed and v.min_dimension == 3

    def test_subthreshold_value_still_informative(self):
        # 0.36 is no coherence witness but exceeds the d=2 maximum 0.25
        v = classify(make_hn(5), 0.36, [(2, 0.250), (3, 1.000), (4, 1.375)])
        assert not v.coherence_witnessed
        assert v.min_dimension == 3

    def test_boundary_is_not_witnessing(self):
        v = classify(make_hn(3), 1.0, [(2, 1.25)])
        assert not v.coherence_witnessed

    def test_empty_thresholds_flagged(self):
        v = classify(make_hn(3), 1.2, [])
        assert v.min_dimension == 1 and not v.min_dimension_known

    def test_slack(self):
        thresholds = [(2, 1.0)]
        assert classify(make_hn(4), 1.005, thresholds, slack=0.01).min_dimension == 1
        assert classify(make_hn(4), 1.005, thresholds, slack=0.0).min_dimension == 3

    def test_unsorted_thresholds_rejected(self):
        with pytest.raises(ValidationError):
            classify(make_hn(4), 1.0, [(3, 1.3), (2, 1.0)])


class TestRobustH3Spec:
    def test_weights(self):
        spec = make_h3_robust()
        assert spec.n == 6
        assert spec.weights == {(0, 1): 1.0, (0, 2): 1.0, (1, 2): -1.0,
                                (0, 3): -1.0, (1, 4): -1.0, (2, 5): -1.0}


@settings(max_examples=50, deadline=None, derandomize=True)
@given(st.integers(min_value=3, max_value=8), st.integers(min_value=0, max_value=2**20))
def test_evaluate_states_matches_overlap_route(n, seed):
    rng = make_rng(seed)
    states = [haar_random_pure(3, rng) for _ in range(n)]
    spec = make_hn(n)
    assert evaluate_states(spec, states) == pytest.approx(
        evaluate(spec, OverlapSet.from_states(states)), abs=1e-12)
