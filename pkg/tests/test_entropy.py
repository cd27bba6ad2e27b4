import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gus.entropy import (CharacteristicsField, PreconditionError, RiemannData, RiemannField,
                         SineEntropySolution, characteristics_solution,
                         expansion_shock_solution, riemann_entropy_solution, riemann_test_suite,
                         shock_time, sine_entropy_solution, viscosity_sweep, weak_residual)
from gus.testfunctions import TestFunction

states = st.floats(-5, 5, allow_nan=False)


class TestRiemann:
    @given(states, states)
    def test_rankine_hugoniot(self, uL, uR):
        d = RiemannData(uL, uR)
        assert d.shock_speed * (uL - uR) == pytest.approx((uL ** 2 - uR ** 2) / 2, abs=1e-12)

    def test_shock_speed_half(self):
        d = RiemannData(1.0, 0.0)
        assert riemann_entropy_solution(d, 0.49, 1.0) == 1.0
        assert riemann_entropy_solution(d, 0.51, 1.0) == 0.0

    def test_inside_fan(self):
        assert riemann_entropy_solution(RiemannData(0.0, 1.0), 0.5, 1.0) == 0.5

    @settings(max_examples=50)
    @given(states, states, st.floats(-3, 3), st.floats(0.1, 3), st.floats(0.01, 100))
    def test_self_similar(self, uL, uR, x, t, alpha):
        d = RiemannData(uL, uR)
        a = riemann_entropy_solution(d, x, t)
        b = riemann_entropy_solution(d, alpha * x, alpha * t)
        assert abs(a - b) <= 1e-14 * max(1.0, abs(a))

    def test_needs_positive_time(self):
        with pytest.raises(PreconditionError):
            riemann_entropy_solution(RiemannData(1, 0), 0.0, 0.0)
        with pytest.raises(PreconditionError):
            expansion_shock_solution(RiemannData(0, 1), 0.0, -1.0)

    def test_expansion_jump(self):
        d = RiemannData(0.0, 1.0)
        assert expansion_shock_solution(d, np.array([0.49, 0.51]), 1.0).tolist() == [0.0, 1.0]


class TestWeakResidual:
    @pytest.mark.parametrize("uL,uR,entropy", [(1, 0, True), (0, 1, False), (0, 1, True),
                                              (-1, 2, True), (2, -1, True)])
    def test_weak_solutions(self, uL, uR, entropy):
        field = RiemannField(RiemannData(uL, uR), entropy)
        rep = weak_residual(field, field.initial, riemann_test_suite(), 1.0)
        assert rep.max_abs <= 1e-8
        assert len(rep.residuals) == 20

    def test_constant_state(self):
        rep = weak_residual(lambda t, x: np.full_like(np.asarray(x, float), 0.3),
                            lambda x: np.full_like(np.asarray(x, float), 0.3),
                            riemann_test_suite(n=5), 1.0)
        assert rep.max_abs <= 1e-13

    def test_wrong_speed_detected(self):
        # a jump from 1 to 0 moving at speed 1 is not a weak solution
        w = lambda t, x: np.where(np.asarray(x) < t, 1.0, 0.0)  # noqa: E731
        u0 = lambda x: np.where(np.asarray(x) < 0, 1.0, 0.0)  # noqa: E731
        rep = weak_residual(w, u0, riemann_test_suite(), 1.0, quad_resolution=64)
        assert rep.max_abs > 1e-3

    def test_csv(self):
        field = RiemannField(RiemannData(1, 0))
        rep = weak_residual(field, field.initial, riemann_test_suite(n=3), 1.0)
        lines = rep.to_csv().strip().split("\n")
        assert len(lines) == 4

    def test_support_outside_window(self):
        field = RiemannField(RiemannData(1, 0))
        phi = TestFunction(0.0, 0.5, 0.5, 0.2)
        with pytest.raises(ValueError):
            weak_residual(field, field.initial, [phi], 0.6)


class TestCharacteristics:
    def test_sine_residual(self):
        u = characteristics_solution(np.sin, 1.0, 0.5, np.cos)
        assert abs(u - np.sin(1 - 0.5 * u)) <= 1e-12

    def test_initial_time(self):
        x = np.linspace(-3, 3, 13)
        assert np.allclose(characteristics_solution(np.sin, x, 0.0, np.cos), np.sin(x))

    def test_constant_data(self):
        u = characteristics_solution(lambda x: 0 * x + 0.7, np.linspace(-1, 1, 5), 3.0,
                                     lambda x: 0 * x)
        assert np.all(u == 0.7)

    def test_strong_pde_residual(self):
        h = 1e-5
        x = np.linspace(-3, 3, 41)
        t = 0.6
        u = lambda tt, xx: characteristics_solution(np.sin, xx, tt, np.cos)  # noqa: E731
        ut = (u(t + h, x) - u(t - h, x)) / (2 * h)
        ux = (u(t, x + h) - u(t, x - h)) / (2 * h)
        assert np.abs(ut + u(t, x) * ux).max() <= 1e-6

    def test_past_shock_rejected(self):
        with pytest.raises(PreconditionError):
            characteristics_solution(np.sin, 0.0, 1.2, np.cos)

    def test_field_wrapper(self):
        f = CharacteristicsField(np.sin, np.cos)
        assert f(0.3, 1.0) == pytest.approx(characteristics_solution(np.sin, 1.0, 0.3, np.cos))


class TestShockTime:
    def test_sine(self):
        assert shock_time(np.sin, np.cos) == pytest.approx(1.0, abs=1e-8)

    def test_linear(self):
        assert shock_time(lambda x: -x, lambda x: -np.ones_like(x)) == pytest.approx(1.0)

    def test_nondecreasing(self):
        assert shock_time(np.arctan) == np.inf

    def test_scaled_sine(self):
        assert shock_time(lambda x: 2 * np.sin(3 * x)) == pytest.approx(1 / 6, rel=1e-6)

    def test_non_finite(self):
        with pytest.raises(ValueError):
            shock_time(np.sin, lambda x: np.full_like(x, np.nan))


class TestSineEntropySolution:
    def test_matches_characteristics_before_shock(self):
        x = np.linspace(-3, 3, 31)
        assert np.allclose(sine_entropy_solution(x, 0.7),
                           characteristics_solution(np.sin, x, 0.7, np.cos), atol=1e-12)

    def test_odd_and_bounded_after_shock(self):
        x = np.linspace(-3.1, 3.1, 63)
        u = sine_entropy_solution(x, 2.0)
        assert np.allclose(u, -sine_entropy_solution(-x, 2.0), atol=1e-14)
        assert np.all(np.abs(u) <= 1)

    def test_momentum_zero_energy_decays(self):
        sol = SineEntropySolution()
        x = np.linspace(-np.pi, np.pi, 20001)
        e = [np.trapezoid(sol(t, x) ** 2, x) for t in (0.5, 1.5, 2.0)]
        assert abs(np.trapezoid(sol(2.0, x), x)) < 1e-10
        assert e[0] > e[1] > e[2]

    def test_scaled_variants(self):
        sol = SineEntropySolution(amplitude=2.0, beta=1.0)
        assert sol.t_star == pytest.approx(1 / (2 * np.pi))
        x = np.linspace(-0.9, 0.9, 7)
        u0 = lambda y: 2 * np.sin(np.pi * y)  # noqa: E731
        assert np.allclose(sol(0.1, x), characteristics_solution(u0, x, 0.1, domain=(-1, 1)),
                           atol=1e-10)


class TestSweep:
    def test_self_comparison(self):
        res = viscosity_sweep(np.sin, [0.1], 16, 1e-3, 0.5, [0.5], reference_nu=0.1,
                              reference_K=16, reference_dt=1e-3, n_eval=512)
        assert res.errors(0.5)[0] <= 1e-12

    def test_decreasing_against_exact(self):
        res = viscosity_sweep(np.sin, [0.2, 0.1, 0.05], 64, 2e-3, 0.5, [0.5],
                              reference=SineEntropySolution(), n_eval=1024)
        e = res.errors(0.5)
        assert np.all(np.diff(e) < 0)
        assert not res.flags(0.5).any()
        assert res.to_csv().split("\n")[0] == "nu,time,L1_error,saturated_flag"

    def test_saturation_flag(self):
        # at K = 8 the smallest viscosities cannot be resolved
        res = viscosity_sweep(np.sin, [0.1, 0.01, 0.001, 1e-4], 8, 1e-3, 2.0, [2.0],
                              reference=SineEntropySolution(), n_eval=1024)
        assert res.flags(2.0)[-1]

    @pytest.mark.parametrize("nus,times", [([0.1, 0.2], [1.0]), ([0.1, -0.1], [1.0]),
                                           ([0.1], [3.0]), ([0.1], [])])
    def test_bad_arguments(self, nus, times):
        with pytest.raises(ValueError):
            viscosity_sweep(np.sin, nus, 8, 1e-3, 2.0, times, reference=SineEntropySolution())
