import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from overlapkit import serialize as ser
from overlapkit.inequalities import evaluate_states, make_h_mzi, make_hn
from overlapkit.optimize import (
    dimension_thresholds,
    haar_experiment,
    maximize_pure,
    project_density,
    project_simplex,
    sdp_upper_bound,
    uniform_pure_ensemble,
)
from overlapkit.states import DensityMatrix, ValidationError, make_rng

from _oracles import quadratic_optimum, simplex_projection_grid

SEEDS = [0, 1, 2]


class TestMaximizePure:
    @pytest.mark.parametrize("n,d,target", [(3, 2, 1.250), (5, 4, 1.375), (6, 4, 1.000)])
    def test_reference_maxima(self, n, d, target):
        res = maximize_pure(make_hn(n), d, restarts=80, seed=11)
        assert res.value == pytest.approx(target, abs=1e-3)

    def test_value_matches_states(self):
        res = maximize_pure(make_hn(4), 3, restarts=40, seed=2)
        assert res.value == pytest.approx(evaluate_states(make_hn(4), list(res.states)), abs=1e-8)
        assert res.converged

    def test_d1_degenerate(self):
        # all overlaps are 1 in dimension 1: h_n value is fixed
        res = maximize_pure(make_hn(4), 1, restarts=3, seed=0)
        assert res.value == pytest.approx(3 - 3, abs=1e-12)

    def test_deterministic_at_json_level(self):
        a = maximize_pure(make_h_mzi(), 2, restarts=25, seed=42)
        b = maximize_pure(make_h_mzi(), 2, restarts=25, seed=42)
        assert ser.dumps(ser.maximization_to_dict(a)) == ser.dumps(ser.maximization_to_dict(b))

    def test_pentagon_maximum(self):
        res = maximize_pure(make_h_mzi(), 2, restarts=60, seed=5)
        assert res.value == pytest.approx(5 * np.sqrt(5) / 4, abs=1e-6)

    def test_input_validation(self):
        with pytest.raises(ValidationError):
            maximize_pure(make_hn(3), 0)
        with pytest.raises(ValidationError):
            maximize_pure(make_hn(3), 2, restarts=0)


class TestSimplexProjection:
    def test_already_on_simplex(self):
        v = np.array([0.2, 0.3, 0.5])
        assert np.allclose(project_simplex(v), v, atol=1e-14)

    def test_matches_grid_search_2d(self):
        rng = make_rng(8)
        for _ in range(50):
            v = rng.uniform(-2, 2, 2)
            got = project_simplex(v)
            ref = simplex_projection_grid(v, steps=4000)
            assert np.linalg.norm(got - ref) < 1e-3

    @pytest.mark.parametrize("seed", SEEDS)
    def test_output_is_distribution(self, seed):
        rng = make_rng(seed)
        for _ in range(50):
            p = project_simplex(rng.standard_normal(6))
            assert np.all(p >= 0)
            assert np.sum(p) == pytest.approx(1.0, abs=1e-12)

    def test_projection_is_idempotent_and_nearest(self):
        rng = make_rng(3)
        for _ in range(30):
            v = rng.standard_normal(4)
            p = project_simplex(v)
            assert np.allclose(project_simplex(p), p, atol=1e-12)
            # any random feasible point is no closer
            q = rng.dirichlet(np.ones(4))
            assert np.linalg.norm(v - p) <= np.linalg.norm(v - q) + 1e-12


class TestProjectDensity:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_valid_output(self, seed):
        rng = make_rng(seed)
        h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = h + h.conj().T
        rho = project_density(h)
        assert isinstance(rho, DensityMatrix)

    def test_nearest_in_2x2_case(self):
        # exhaustive check over diagonal 2x2 matrices
        rng = make_rng(4)
        for _ in range(40):
            v = rng.uniform(-2, 2, 2)
            rho = project_density(np.diag(v).astype(complex))
            ref = simplex_projection_grid(v, steps=4000)
            assert np.linalg.norm(np.diag(rho.entries).real - ref) < 1e-3

    def test_fixes_density_matrix(self):
        rho = DensityMatrix(np.diag([0.6, 0.4]).astype(complex))
        out = project_density(rho.entries)
        assert np.allclose(out.entries, rho.entries, atol=1e-12)


class TestSdpUpperBound:
    @pytest.mark.parametrize("n,d", [(5, 4), (6, 4), (6, 5), (8, 7), (10, 9), (12, 6)])
    def test_matches_closed_form(self, n, d):
        res = sdp_upper_bound(n, d)
        assert res.value == pytest.approx(quadratic_optimum(n, d), abs=1e-9)

    def test_d_n_minus_2_is_one(self):
        for n in (5, 7, 9, 20):
            assert sdp_upper_bound(n, n - 2).value == pytest.approx(1.0, abs=1e-6)

    def test_large_n_saturation(self):
        v64 = sdp_upper_bound(64, 63).value
        assert 1.4 < v64 < 1.5

    def test_objective_identity_with_explicit_states(self):
        # assemble a feasible mean operator from explicit pure states plus
        # the reference state; the quadratic objective must equal h_n
        n = 6
        res = sdp_upper_bound(n, n - 1)
        ensemble = uniform_pure_ensemble(res.x_star, n - 1)
        from overlapkit.states import basis_state
        states = [basis_state(n - 1, 0)] + ensemble
        assert evaluate_states(make_hn(n), states) == pytest.approx(res.value, abs=1e-10)

    def test_domain_validation(self):
        with pytest.raises(ValidationError):
            sdp_upper_bound(3, 2)
        with pytest.raises(ValidationError):
            sdp_upper_bound(6, 6)
        with pytest.raises(ValidationError):
            sdp_upper_bound(6, 1)

    def test_value_consistent_with_x_star(self):
        res = sdp_upper_bound(7, 5)
        x = res.x_star.entries
        a, b, c = -(36 / 2), 6.0, 3.0
        obj = a * float(np.vdot(x, x).real) + b * float(x[0, 0].real) + c
        assert abs(obj - res.value) <= max(res.gap_estimate, 1e-12)

    @pytest.mark.parametrize("n", [5, 8, 12])
    def test_dimension_monotonicity(self, n):
        vals = [sdp_upper_bound(n, d).value for d in range(2, n)]
        for lo, hi in zip(vals, vals[1:]):
            assert lo <= hi + 1e-8


class TestSandwich:
    @pytest.mark.parametrize("n", [4, 5, 6, 7])
    def test_ascent_below_bound(self, n):
        for d in range(2, n):
            lower = maximize_pure(make_hn(n), d, restarts=40, seed=n * 10 + d).value
            upper = sdp_upper_bound(n, d).value
            assert lower <= upper + 1e-6


class TestUniformEnsemble:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_reconstructs_density(self, seed):
        rng = make_rng(seed)
        z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        rho = DensityMatrix((z @ z.conj().T) / np.trace(z @ z.conj().T).real)
        for m in (3, 5):
            ens = uniform_pure_ensemble(rho, m)
            recon = sum(s.density().entries for s in ens) / m
            assert np.max(np.abs(recon - rho.entries)) < 1e-10

    def test_rank_requirement(self):
        rho = DensityMatrix(np.diag([0.5, 0.3, 0.2]).astype(complex))
        with pytest.raises(ValidationError):
            uniform_pure_ensemble(rho, 2)


class TestHaarExperiment:
    def test_qubit_h4_never_violates(self):
        rep = haar_experiment(make_hn(4), 2, 30_000, seed=1)
        assert rep.violation_count == 0
        assert rep.max_value <= 1.0 + 1e-9

    def test_d1_all_values_fixed(self):
        rep = haar_experiment(make_hn(3), 1, 512, seed=0)
        assert np.allclose(rep.values, 1.0, atol=1e-12)

    def test_qutrit_h4_straddles_bound(self):
        rep = haar_experiment(make_hn(4), 3, 30_000, seed=2)
        assert rep.values.min() < 1.0 < rep.max_value
        assert rep.max_value <= 4.0 / 3.0 + 1e-9
        assert rep.violation_count > 0

    def test_report_invariants(self):
        rep = haar_experiment(make_hn(5), 3, 5000, seed=3)
        assert rep.max_value == float(rep.values.max())
        assert rep.violation_count == int(np.sum(rep.values > 1.0))
        assert rep.num_sets == rep.values.size == 5000

    def test_deterministic_and_chunk_invariant(self):
        a = haar_experiment(make_hn(4), 3, 5000, seed=9)
        b = haar_experiment(make_hn(4), 3, 5000, seed=9)
        assert np.array_equal(a.values, b.values)
        assert ser.dumps(ser.sampling_to_dict(a)) == ser.dumps(ser.sampling_to_dict(b))

    def test_threads_do_not_change_results(self, monkeypatch):
        a = haar_experiment(make_hn(4), 3, 9000, seed=4)
        monkeypatch.setenv("OVERLAPKIT_THREADS", "4")
        b = haar_experiment(make_hn(4), 3, 9000, seed=4)
        assert np.array_equal(a.values, b.values)


class TestDimensionThresholds:
    def test_small_table(self):
        cells = dimension_thresholds(5, restarts=40, seed=6)
        lookup = {(c.n, c.d): c for c in cells}
        assert lookup[(4, 2)].max_value == pytest.approx(1.000, abs=1e-3)
        assert lookup[(4, 3)].max_value == pytest.approx(4 / 3, abs=1e-3)
        assert lookup[(5, 4)].max_value == pytest.approx(1.375, abs=1e-3)
        # h3 has no quadratic bound; comes from ascent alone
        assert lookup[(3, 2)].method == "ascent"
        assert lookup[(4, 2)].method == "both"
        for cell in cells:
            if cell.agree is not None:
                assert cell.agree

    def test_methods_recorded(self):
        cells = dimension_thresholds(4, restarts=30, seed=1)
        assert {c.method for c in cells} <= {"ascent", "both", "quadratic-bound"}


@settings(max_examples=60, deadline=None, derandomize=True)
@given(st.lists(st.floats(min_value=-5, max_value=5), min_size=1, max_size=8))
def test_simplex_projection_properties(vals):
    p = project_simplex(np.array(vals))
    assert np.all(p >= 0)
    assert np.sum(p) == pytest.approx(1.0, abs=1e-9)
