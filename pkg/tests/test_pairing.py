import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gus.entropy import SineEntropySolution
from gus.operators import EvolutionProblem
from gus.pairing import (RefinementStudy, pair, projected_test_function, refinement_study,
                         spacetime_pairing)
from gus.evolution import integrate
from gus.space import CoeffVector, SpaceError, build_space, constant, inner_product, project
from gus.testfunctions import TestFunction, bump, bump_integral, test_function_suite


def burgers_sine(K):
    S = build_space("Periodic", np.pi, K)
    return EvolutionProblem("Burgers", S), project(S, np.sin)


class TestTestFunctions:
    def test_bump_integral_closed_form(self):
        s = np.linspace(-1, 1, 200001)
        for order in (1, 2, 4, 7):
            assert bump_integral(order) == pytest.approx(np.trapezoid(bump(s, order), s), rel=1e-9)

    def test_derivative(self):
        phi = TestFunction(0.3, 0.5, 0.5, 0.2)
        x = np.linspace(-0.1, 0.7, 9)
        h = 1e-6
        fd = (phi.spatial(x + h) - phi.spatial(x - h)) / (2 * h)
        assert np.allclose(phi.spatial_dx(x), fd, atol=1e-6)
        fd_t = (phi.temporal(0.55 + h) - phi.temporal(0.55 - h)) / (2 * h)
        assert phi.temporal_dt(0.55) == pytest.approx(fd_t, rel=1e-6)

    @given(st.integers(0, 1000), st.integers(1, 30))
    def test_suite_inside_rectangle(self, seed, n):
        suite = test_function_suite(n, seed, x_range=(-2, 3), t_range=(0.5, 1.5))
        assert len(suite) == n
        assert all(phi.fits((-2, 3), (0.5, 1.5)) for phi in suite)

    def test_suite_is_deterministic(self):
        assert test_function_suite(5, 7) == test_function_suite(5, 7)

    @pytest.mark.parametrize("kw", [dict(width=0.0), dict(width=1.0, t_center=0.5),
                                    dict(width=1.0, t_center=0.5, t_width=-1.0),
                                    dict(width=1.0, order=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            TestFunction(0.0, **kw)


class TestPair:
    S = build_space("Periodic", 2.0, 16)
    phi = TestFunction(0.2, 0.7)

    def test_zero(self):
        assert pair(self.S, constant(self.S, 0.0), self.phi) == 0

    def test_constant_gives_integral(self):
        assert pair(self.S, constant(self.S), self.phi) == pytest.approx(
            self.phi.spatial_integral(), rel=1e-13)

    def test_matches_projected_test_function(self):
        u = project(self.S, lambda x: np.exp(np.sin(np.pi * x / 2)))
        p = CoeffVector(self.S, projected_test_function(self.S, self.phi))
        a, b = pair(self.S, u, self.phi), inner_product(self.S, u, p)
        assert a == pytest.approx(b, rel=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2 ** 31))
    def test_linear(self, a, b, seed):
        rng = np.random.default_rng(seed)
        u = CoeffVector(self.S, rng.standard_normal(self.S.dim))
        v = CoeffVector(self.S, rng.standard_normal(self.S.dim))
        lhs = pair(self.S, u * a + v * b, self.phi)
        rhs = a * pair(self.S, u, self.phi) + b * pair(self.S, v, self.phi)
        scale = 1 + abs(a) + abs(b)
        assert abs(lhs - rhs) <= 1e-12 * scale * (1 + abs(rhs))

    def test_linear_in_test_function(self):
        # the sum of two pairings is the pairing with the sum of the projected bumps
        u = project(self.S, np.cos)
        phi2 = TestFunction(-0.5, 0.3)
        total = pair(self.S, u, self.phi) + pair(self.S, u, phi2)
        p = projected_test_function(self.S, self.phi) + projected_test_function(self.S, phi2)
        assert total == pytest.approx(inner_product(self.S, u, CoeffVector(self.S, p)), rel=1e-9)

    def test_support_violation(self):
        with pytest.raises(SpaceError):
            pair(self.S, constant(self.S), TestFunction(1.8, 0.5))

    def test_dirichlet_space(self):
        D = build_space("Dirichlet", 1.0, 12)
        u = project(D, lambda x: np.sin(np.pi * x))
        phi = TestFunction(0.5, 0.2)
        x = np.linspace(0.3, 0.7, 400001)
        assert pair(D, u, phi) == pytest.approx(
            np.trapezoid(np.sin(np.pi * x) * phi.spatial(x), x), rel=1e-9)


class TestSpacetime:
    def test_advected_constant(self):
        S = build_space("Periodic", 1.0, 4)
        traj = integrate(EvolutionProblem("LinearAdvection", S, c=1.0), constant(S, 2.0), 1.0, 0.01)
        phi = TestFunction(0.0, 0.4, 0.5, 0.3)
        t = np.linspace(0.2, 0.8, 60001)
        expected = 2 * phi.spatial_integral() * np.trapezoid(phi.temporal(t), t)
        assert spacetime_pairing(traj, phi) == pytest.approx(expected, rel=1e-6)

    def test_needs_time_factor(self):
        S = build_space("Periodic", 1.0, 4)
        traj = integrate(EvolutionProblem("LinearAdvection", S), constant(S), 0.1, 0.01)
        with pytest.raises(ValueError):
            spacetime_pairing(traj, TestFunction(0.0, 0.4))


class TestRefinement:
    def test_constant_data_exact(self):
        def family(K):
            S = build_space("Periodic", np.pi, K)
            return EvolutionProblem("Burgers", S), constant(S, 0.5)

        phis = test_function_suite(5, 1, x_range=(-np.pi, np.pi), t_range=(0, 1))
        study = refinement_study(family, [4, 8, 16], phis, 1.0, 0.01)
        assert study.increments.max() <= 1e-12
        assert study.converged.all()

    def test_pre_shock_spectral_decay(self):
        phis = test_function_suite(6, 2, x_range=(-np.pi, np.pi), t_range=(0, 0.6))
        study = refinement_study(burgers_sine, [8, 16, 32, 64], phis, 0.6, 1e-3, method="rk6")
        inc = study.increments
        big = inc[:, :-1] > study.floor
        assert np.all((inc[:, 1:] <= 0.5 * inc[:, :-1])[big])
        assert study.converged.all()

    def test_micro_ratio_reported(self):
        phis = test_function_suite(3, 3, x_range=(-np.pi, np.pi), t_range=(0, 0.5))
        study = refinement_study(burgers_sine, [8, 16, 32], phis, 0.5, 1e-3,
                                 reference=SineEntropySolution())
        assert study.micro_ratio.shape == (3, 3)
        assert study.micro_decreasing is not None

    def test_csv(self):
        study = RefinementStudy((4, 8, 16), (None, None), np.array([[1.0, 0.5, 0.4], [2.0, 2.1, 2.3]]),
                                None, 1e-13)
        lines = study.to_csv().strip().split("\n")
        assert lines[0] == "phi_id,K,pairing,increment,verdict"
        assert lines[1].split(",")[3] == ""
        assert lines[1].endswith("converged") and lines[4].endswith("not_converged")

    @pytest.mark.parametrize("Ks", [[8, 16], [16, 8, 32]])
    def test_bad_ladder(self, Ks):
        phis = test_function_suite(2, 0, x_range=(-np.pi, np.pi), t_range=(0, 1))
        with pytest.raises(ValueError):
            refinement_study(burgers_sine, Ks, phis, 1.0, 0.01)
