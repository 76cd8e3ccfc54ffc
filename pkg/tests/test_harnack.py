"""Tests for the pointwise Harnack numerics and the shrinking-sphere checks."""

import dataclasses

import numpy as np
import pytest

from harnack_verify.core.harnack import (
    CurvaturePoint,
    SphereFamily,
    brute_force_minimizer,
    build_PM,
    frame_decomposition,
    harnack_quadratic,
    harnack_state,
    identity_on_forms,
    invert_curvature_operator,
    k_tensor,
    minimizing_U,
    mt_residual,
    parse_t_grid,
    quadratic_report,
    relative_max,
    sphere_curvature,
    sphere_point,
    sphere_row,
    sphere_sweep,
    trace_from_quadratic,
    trace_harnack_minimum,
    trace_harnack_vector,
    trace_z,
)
from harnack_verify.errors import (
    FrameConstructionError,
    IntervalError,
    SingularCurvatureOperator,
    SingularRicci,
)
from harnack_verify.numeric.oracle import gen_curvature, induced_tensors, sample_point


def _sphere(n=3, K=1.0, t=1.0) -> CurvaturePoint:
    return CurvaturePoint.from_derivatives(sphere_curvature(n, K), t)


def _sphere_z(n: int, K: float, t: float) -> float:
    return (n - 1) ** 2 * K**2 + (n - 1) * K / (2 * t)


class TestPointwise:
    """Tests for P, M, S and Z at a single point."""

    def test_sphere_inverse(self):
        """Test S = 1/4 (dd - dd) for the unit sphere."""
        S = invert_curvature_operator(sphere_curvature(3, 1.0))

        assert np.allclose(S, 0.5 * identity_on_forms(3))

    def test_sphere_z(self):
        """Test Z = 5 d and trace 15 for n = 3, K = 1, t = 1."""
        pt = _sphere()
        state = harnack_state(pt)

        assert np.allclose(state.P, 0.0)
        assert np.allclose(state.Z, 5.0 * np.eye(3))
        direct, formula = trace_z(state, pt)
        assert direct == pytest.approx(15.0)
        assert formula == pytest.approx(15.0)

    def test_sphere_minimizer(self):
        """Test that U* vanishes on the sphere and Z(U*, e1) = 5."""
        pt = _sphere()
        state = harnack_state(pt)
        W = np.array([1.0, 0.0, 0.0])
        U = minimizing_U(state, W)

        assert np.allclose(U, 0.0)
        assert harnack_quadratic(state, pt.Rm, U, W) == pytest.approx(5.0)

    @pytest.mark.parametrize("n, seed", [(3, 0), (4, 1), (5, 2)])
    def test_quadratic_report_on_random_point(self, n, seed):
        """Test the minimizer against the brute-force solve and Z itself."""
        pt = sample_point(n, seed=seed)
        W = np.random.default_rng(seed).standard_normal(n)
        report = quadratic_report(pt, W)

        assert report.inverse_residual < 1e-10
        assert report.brute_force_match
        assert report.Z_at_minimum == pytest.approx(report.WZW, rel=1e-9, abs=1e-9)
        assert report.trace_z == pytest.approx(report.trace_z_formula, rel=1e-9, abs=1e-9)
        assert report.extras["joint_minimum"] == pytest.approx(report.z_eigenvalues[0], rel=1e-8, abs=1e-8)

    def test_minimizer_is_a_minimum(self):
        """Test that perturbing U* increases the quadratic."""
        pt = sample_point(4, seed=3)
        state = harnack_state(pt)
        rng = np.random.default_rng(3)
        W = rng.standard_normal(4)
        U = minimizing_U(state, W)
        best = harnack_quadratic(state, pt.Rm, U, W)

        for _ in range(5):
            raw = rng.standard_normal((4, 4))
            V = U + 0.1 * (raw - raw.T)
            assert harnack_quadratic(state, pt.Rm, V, W) > best

    def test_trace_from_quadratic(self):
        """Test that summing Z(U^c, e_c) gives half the trace Harnack quantity."""
        pt = sample_point(4, seed=5)
        state = harnack_state(pt)
        V = np.random.default_rng(5).standard_normal(4)

        assert trace_from_quadratic(state, pt, V) == pytest.approx(0.5 * trace_harnack_vector(pt, V))

    def test_trace_harnack_minimum(self):
        """Test the minimizing vector of the trace quantity."""
        value, V = trace_harnack_minimum(_sphere())
        assert value == pytest.approx(30.0)
        assert np.allclose(V, 0.0)

        pt = sample_point(4, seed=6)
        value, V = trace_harnack_minimum(pt)
        assert value == pytest.approx(trace_harnack_vector(pt, V))
        other = V + np.random.default_rng(6).standard_normal(4)
        assert trace_harnack_vector(pt, other) > value

    def test_minimizer_on_many_points(self):
        """Test Z(U*, W) = W Z W and U* against the brute-force solve on 100 random points."""
        for seed in range(100):
            n = 3 + seed % 3
            pt = sample_point(n, seed=seed)
            state = harnack_state(pt)
            W = np.random.default_rng(seed).standard_normal(n)
            U = minimizing_U(state, W)
            brute = brute_force_minimizer(state, pt.Rm, W)
            curvature_term = float(np.einsum("abcd,ab,cd->", pt.Rm, U, U))
            scale = 1.0 + abs(float(W @ state.M @ W)) + abs(curvature_term)

            assert np.abs(U - brute).max() <= 1e-9 * (1.0 + np.abs(U).max()), f"seed {seed}"
            assert abs(harnack_quadratic(state, pt.Rm, U, W) - float(W @ state.Z @ W)) <= 1e-10 * scale, f"seed {seed}"

    def test_trace_from_quadratic_on_many_vectors(self):
        """Test the trace identity for 1000 random vectors spread over ten points."""
        for seed in range(10):
            pt = sample_point(4, seed=seed)
            state = harnack_state(pt)
            for V in np.random.default_rng(seed).standard_normal((100, 4)):
                expected = 0.5 * trace_harnack_vector(pt, V)
                assert trace_from_quadratic(state, pt, V) == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_k_tensor_on_sphere(self):
        """Test K_avxy = ((n-1) K + 1/(2t)) R_xyav on the sphere."""
        pt = _sphere(n=4, K=2.0, t=0.5)
        state = harnack_state(pt)
        K = k_tensor(pt, state.P, state.S)

        assert np.allclose(K, (3 * 2.0 + 1.0) * np.einsum("xyav->avxy", pt.Rm))

    def test_flat_point_is_singular(self):
        """Test that zero curvature cannot be inverted."""
        pt = _sphere(K=0.0)

        with pytest.raises(SingularCurvatureOperator) as info:
            harnack_state(pt)
        assert info.value.eigenvalue == 0.0
        with pytest.raises(SingularRicci):
            trace_harnack_minimum(pt)

    def test_nonpositive_time(self):
        """Test that t must be positive."""
        with pytest.raises(IntervalError):
            build_PM(dataclasses.replace(_sphere(), t=0.0))

    def test_check_catches_inconsistent_ricci(self):
        """Test the contraction invariants of a curvature point."""
        pt = _sphere()
        pt.check()

        with pytest.raises(ValueError):
            dataclasses.replace(pt, Rc=pt.Rc + 1.0).check()

    def test_quadratic_rejects_symmetric_u(self):
        """Test that U must be a 2-form."""
        pt = _sphere()
        with pytest.raises(ValueError):
            harnack_quadratic(harnack_state(pt), pt.Rm, np.eye(3), np.ones(3))


class TestFrameDecomposition:
    """Tests for writing the Harnack form as a sum of squares."""

    def _data(self, shift: float):
        Rm = gen_curvature(4, seed=9)
        raw = np.random.default_rng(9).standard_normal((4, 4, 4))
        P = (raw - np.swapaxes(raw, 0, 1)) / 2.0
        S = invert_curvature_operator(Rm)
        M = np.einsum("ijkl,ija,klb->ab", S, P, P) + shift * np.eye(4)
        return Rm, P, M

    def test_frames_reproduce_r_p_m(self):
        """Test sum YY = R, sum YX = P and sum XX = M when Z > 0."""
        Rm, P, M = self._data(0.5)
        Y, X = frame_decomposition(Rm, P, M)
        induced = induced_tensors(Y, X)

        assert Y.shape == (10, 4, 4) and X.shape == (10, 4)
        for got, want in zip(induced, (Rm, P, M)):
            assert np.abs(got - want).max() < 1e-10

    def test_negative_z_has_no_frames(self):
        """Test that Z < 0 makes the Gram matrix indefinite."""
        with pytest.raises(FrameConstructionError):
            frame_decomposition(*self._data(-0.5))


class TestShrinkingSphere:
    """Tests for the shrinking-sphere family and the finite-difference check."""

    def test_interval(self):
        """Test K(t) inside the valid interval and errors outside it."""
        family = SphereFamily(3, 1.0)

        assert family.blow_up == pytest.approx(0.25)
        assert family.K(0.125) == pytest.approx(2.0)
        for t in (0.0, 0.25, 0.3, -1.0):
            with pytest.raises(IntervalError):
                family.K(t)

    @pytest.mark.parametrize("n, K0", [(1, 1.0), (3, 0.0), (3, -1.0)])
    def test_invalid_family(self, n, K0):
        """Test that n >= 2 and K0 > 0 are required."""
        with pytest.raises(ValueError):
            SphereFamily(n, K0)

    def test_curvature_ode(self):
        """Test dK/dt = 2(n-1) K^2 by central differences."""
        family = SphereFamily(4, 0.5)
        t, h = 0.1, 1e-5
        derivative = (family.K(t + h) - family.K(t - h)) / (2 * h)

        assert derivative == pytest.approx(6.0 * family.K(t) ** 2, rel=1e-6)

    def test_closed_form_z(self):
        """Test Z = ((n-1)^2 K^2 + (n-1) K/(2t)) d along the family."""
        family = SphereFamily(4, 1.0)
        for t in (0.02, 0.08, 0.14):
            Z = harnack_state(sphere_point(family, t)).Z
            assert np.allclose(Z, _sphere_z(4, family.K(t), t) * np.eye(4))

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_evolution_residual(self, n):
        """Test the absolute fourth-order residual at ten points up to 0.8 of the blow-up time."""
        family = SphereFamily(n, 1.0)
        grid = parse_t_grid(f"0:{0.8 * family.blow_up}:10")

        assert len(grid) == 10
        for t in grid:
            row = sphere_row(family, t, 1e-4)
            assert row.mt_residual <= 1e-6
            assert row.mt_relative <= row.mt_residual
            assert row.trace_residual <= 1e-6
            assert row.z_min > 0
            assert row.trace_supersolution > 0

    def test_second_order_convergence(self):
        """Test that halving the step quarters the second-order residual."""
        family = SphereFamily(3, 1.0)
        t = 0.5 * family.blow_up
        coarse = np.abs(mt_residual(family, t, 1e-3, order=2)).max()
        fine = np.abs(mt_residual(family, t, 5e-4, order=2)).max()

        assert coarse / fine == pytest.approx(4.0, rel=0.2)

    def test_row_reports_absolute_residual(self):
        """Test that mt_residual is the plain max-norm and mt_relative its scaled version."""
        family = SphereFamily(4, 1.0)
        t = 0.7 * family.blow_up
        residual = mt_residual(family, t, 1e-4)
        row = sphere_row(family, t, 1e-4)

        assert row.mt_residual == pytest.approx(float(np.abs(residual).max()), rel=1e-9, abs=1e-15)
        assert row.mt_relative <= row.mt_residual

    def test_sweep_fails_above_tolerance(self):
        """Test that the sweep fails once the absolute residual exceeds the tolerance."""
        family = SphereFamily(5, 1.0)
        grid = [0.5 * family.blow_up]
        worst = sphere_sweep(family, grid).rows[0].mt_residual

        assert sphere_sweep(family, grid, tolerance=1e-6).passed
        assert not sphere_sweep(family, grid, tolerance=0.5 * worst).passed

    def test_residual_is_relative(self):
        """Test the relative max-norm."""
        assert relative_max(np.array([0.5]), np.array([0.25])) == 0.5
        assert relative_max(np.array([2.0]), np.array([-4.0])) == 0.5

    def test_unsupported_stencil(self):
        """Test that only orders 2 and 4 exist."""
        with pytest.raises(ValueError):
            mt_residual(SphereFamily(3, 1.0), 0.1, 1e-4, order=3)

    def test_stencil_must_stay_inside(self):
        """Test that a stencil crossing the blow-up time raises IntervalError."""
        with pytest.raises(IntervalError):
            mt_residual(SphereFamily(3, 1.0), 0.2499, 1e-3)

    def test_sweep(self):
        """Test a passing sweep and its closed-form trace."""
        family = SphereFamily(3, 1.0)
        report = sphere_sweep(family, parse_t_grid("0.05:0.15:4"))

        assert report.passed
        assert [row.t for row in report.rows] == pytest.approx([0.075, 0.1, 0.125, 0.15])
        for row in report.rows:
            assert row.traceZ == pytest.approx(3 * _sphere_z(3, row.K, row.t))

    def test_sweep_beyond_blow_up(self):
        """Test that grid points past the blow-up time raise IntervalError."""
        with pytest.raises(IntervalError):
            sphere_sweep(SphereFamily(3, 1.0), [0.1, 0.3])

    def test_t_grid(self):
        """Test the a:b:k grid syntax."""
        assert parse_t_grid("0:1:4") == pytest.approx([0.25, 0.5, 0.75, 1.0])
        for text in ("0:1", "0:1:0", "a:b:c"):
            with pytest.raises(ValueError):
                parse_t_grid(text)
