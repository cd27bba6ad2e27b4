import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gus.operators import (Entropy, EvolutionProblem, advection_rhs, burgers_rhs, entropy_flux,
                           nse_functionals, nse_rhs, viscous_burgers_rhs, wave_energy, wave_rhs)
from gus.space import CoeffVector, SpaceError, build_space, derivative, inner_product, project


def smooth_random(S, seed, complex_=False, decay=1.0):
    rng = np.random.default_rng(seed)
    k = S.wavenumbers * S.beta / np.pi
    scale = 1.0 / (1.0 + k) ** decay
    c = rng.standard_normal(S.dim) * scale
    if complex_:
        c = c + 1j * rng.standard_normal(S.dim) * scale
    return CoeffVector(S, c)


class TestBurgers:
    def test_sine_closed_form(self):
        S = build_space("Periodic", np.pi, 8)
        r = burgers_rhs(S, project(S, np.sin))
        expected = project(S, lambda x: -0.5 * np.sin(2 * x))
        assert np.allclose(r.coeffs, expected.coeffs, atol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 40), st.floats(0.5, 10), st.integers(0, 2 ** 31))
    def test_energy_and_momentum_generators_vanish(self, K, beta, seed):
        S = build_space("Periodic", beta, K)
        u = smooth_random(S, seed)
        r = burgers_rhs(S, u)
        scale = np.abs(u.coeffs).max() ** 2 * K * S.length
        assert abs(inner_product(S, r, u)) < 1e-12 * scale
        assert abs(r.coeffs[0]) < 1e-13 * scale

    @given(st.floats(0.0, 1.0), st.integers(0, 2 ** 31))
    def test_viscous_dissipation_identity(self, nu, seed):
        S = build_space("Periodic", 2.0, 12)
        u = smooth_random(S, seed)
        r = viscous_burgers_rhs(S, u, nu)
        du = derivative(S, u)
        assert inner_product(S, r, u) == pytest.approx(-nu * inner_product(S, du, du),
                                                       abs=1e-10 * (1 + nu))

    def test_negative_viscosity_rejected(self):
        S = build_space("Periodic", 1.0, 4)
        with pytest.raises(SpaceError):
            viscous_burgers_rhs(S, project(S, np.sin), -0.1)

    def test_advection_is_translation_generator(self):
        S = build_space("Periodic", np.pi, 6)
        r = advection_rhs(S, project(S, np.sin), 2.0)
        assert np.allclose(r.coeffs, project(S, lambda x: -2 * np.cos(x)).coeffs, atol=1e-14)

    def test_requires_periodic(self):
        S = build_space("Dirichlet", 1.0, 4)
        with pytest.raises(SpaceError):
            EvolutionProblem("Burgers", S)


class TestNSE:
    def directional(self, F, S, c, d, h=1e-5):
        return (F(c + h * d) - F(c - h * d)) / (2 * h)

    @pytest.mark.parametrize("p", [4, 6])
    def test_mass_and_energy_stationary(self, p):
        S = build_space("Periodic", 4.0, 16)
        V = lambda x: 0.1 * x ** 2  # noqa: E731
        u = smooth_random(S, 5, complex_=True, decay=2.0)
        r = nse_rhs(S, u, V, p).coeffs
        Vn = V(S.nodes)
        dM = self.directional(lambda c: nse_functionals(S, c, Vn, p)["M"], S, u.coeffs, r)
        dE = self.directional(lambda c: nse_functionals(S, c, Vn, p)["E"], S, u.coeffs, r)
        dEp = self.directional(lambda c: nse_functionals(S, c, Vn, p)["E_plus"], S, u.coeffs, r)
        assert abs(dM) < 1e-7
        assert abs(dE) < 1e-6
        # the variant with +2/p |u|^p is not a conserved quantity of this equation
        assert abs(dEp) > 1e-3

    def test_needs_complex_vector(self):
        S = build_space("Periodic", 1.0, 4)
        with pytest.raises(SpaceError):
            nse_rhs(S, project(S, np.sin))

    def test_p_must_exceed_two(self):
        S = build_space("Periodic", 1.0, 4)
        with pytest.raises(SpaceError):
            EvolutionProblem("NSE", S, p=2.0)


class TestWave:
    def test_energy_stationary(self):
        S = build_space("Dirichlet", np.pi, 16)
        psi, phi = smooth_random(S, 1, decay=2.0), smooth_random(S, 2, decay=2.0)
        dpsi, dphi = wave_rhs(S, (psi, phi), 4)
        y = np.stack([psi.coeffs, phi.coeffs])
        d = np.stack([dpsi.coeffs, dphi.coeffs])
        h = 1e-5
        dE = (wave_energy(S, y + h * d, 4) - wave_energy(S, y - h * d, 4)) / (2 * h)
        assert abs(dE) < 1e-6

    def test_linear_case(self):
        S = build_space("Dirichlet", np.pi, 4)
        psi = project(S, lambda x: np.sin(2 * x))
        dpsi, dphi = wave_rhs(S, (psi, CoeffVector(S, np.zeros(4))), 4, coupling=0.0)
        assert np.allclose(dphi.coeffs, -4 * psi.coeffs)
        assert np.all(dpsi.coeffs == 0)

    def test_requires_dirichlet(self):
        with pytest.raises(SpaceError):
            EvolutionProblem("NonlinearWave", build_space("Periodic", 1.0, 4))


class TestEntropyFlux:
    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_monomial_closed_form(self, n):
        H = entropy_flux(Entropy.monomial(n))
        u = np.linspace(-2, 2, 9)
        assert np.allclose(H(u), n / (n + 1) * u ** (n + 1))

    def test_quadrature_path_matches_closed_form(self):
        G = Entropy(lambda u: np.cosh(u) - 1, np.sinh, "cosh")
        H = entropy_flux(G)
        u = np.array([-1.5, 0.0, 0.7, 2.0])
        # int_0^u s sinh s ds = u cosh u - sinh u
        assert np.allclose(H(u), u * np.cosh(u) - np.sinh(u), rtol=1e-10, atol=1e-14)

    def test_requires_zero_at_origin(self):
        with pytest.raises(SpaceError):
            entropy_flux(Entropy(lambda u: u + 1, lambda u: np.ones_like(u)))
