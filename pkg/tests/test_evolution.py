import io
import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gus.entropy import characteristics_solution
from gus.evolution import (Status, conservation_report, entropy_series, integrate, rk_step)
from gus.operators import Entropy, EvolutionProblem
from gus.space import CoeffVector, SpaceError, build_space, project


@pytest.fixture(scope="module")
def sine_space():
    return build_space("Periodic", np.pi, 64)


@pytest.fixture(scope="module")
def burgers_preshock(sine_space):
    S = sine_space
    return integrate(EvolutionProblem("Burgers", S), project(S, np.sin), 0.5, 1e-3,
                     sample_stride=50)


def advection_error(dt, method="rk4"):
    S = build_space("Periodic", np.pi, 4)
    traj = integrate(EvolutionProblem("LinearAdvection", S, c=1.0), project(S, np.sin), 1.0, dt,
                     method=method, sample_stride=10 ** 6)
    x = np.linspace(-np.pi, np.pi, 101)
    return np.abs(S.synth_at(traj.states[-1], x) - np.sin(x - 1.0)).max()


class TestIntegrators:
    def test_zero_dynamics(self):
        S = build_space("Periodic", 2.0, 8)
        u0 = project(S, lambda x: np.cos(np.pi * x / 2) + 0.3)
        traj = integrate(EvolutionProblem("LinearAdvection", S, c=0.0), u0, 1.0, 0.1)
        assert np.abs(traj.states[-1] - u0.coeffs).max() <= 1e-13

    def test_advection_halving_gains_twelve(self):
        e1, e2 = advection_error(0.05), advection_error(0.025)
        assert e1 / e2 >= 12

    def test_advection_order_fit(self):
        dts = np.array([0.1, 0.05, 0.025, 0.0125])
        errs = np.array([advection_error(dt) for dt in dts])
        slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert slope >= 3.9

    def test_sixth_order_method(self):
        e1, e2 = advection_error(0.2, "rk6"), advection_error(0.1, "rk6")
        assert np.log2(e1 / e2) > 5.7

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            rk_step(lambda y: y, np.ones(2), 0.1, "euler")

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-3, 3), st.floats(0.01, 0.5))
    def test_linear_scalar_growth(self, lam, h):
        y = rk_step(lambda v: lam * v, np.array([1.0]), h)[0]
        z = lam * h
        assert y == pytest.approx(1 + z + z ** 2 / 2 + z ** 3 / 6 + z ** 4 / 24, rel=1e-14)


class TestBurgersRuns:
    def test_preshock_matches_characteristics(self, sine_space, burgers_preshock):
        S = sine_space
        x = S.nodes
        exact = characteristics_solution(np.sin, x, 0.5, np.cos)
        assert np.abs(S.synth(burgers_preshock.states[-1]) - exact).max() <= 1e-6

    def test_time_reversibility(self, sine_space):
        S = sine_space
        prob = EvolutionProblem("Burgers", S)
        u0 = project(S, np.sin)
        errs = []
        for dt in (0.02, 0.01):
            fwd = integrate(prob, u0, 0.5, dt, sample_stride=1000)
            back = integrate(prob.negated(), fwd.states[-1], 0.5, dt, sample_stride=1000)
            errs.append(np.abs(back.states[-1] - u0.coeffs).max())
        assert errs[1] < 1e-6
        assert errs[0] / errs[1] > 12

    def test_monitors_every_step(self, burgers_preshock):
        traj = burgers_preshock
        assert len(traj.monitor_times) == 501
        assert len(traj.times) == 11
        assert np.all(np.diff(traj.times) > 0) and traj.times[0] == 0
        assert traj.states.shape[0] == len(traj.times)

    def test_function_handle_initial_data(self, sine_space):
        S = sine_space
        a = integrate(EvolutionProblem("Burgers", S), np.sin, 0.1, 0.01)
        b = integrate(EvolutionProblem("Burgers", S), project(S, np.sin), 0.1, 0.01)
        assert np.allclose(a.states[-1], b.states[-1], atol=1e-15)

    def test_conservation_before_shock(self, burgers_preshock):
        rep = conservation_report(burgers_preshock, 1e-8, "E")
        assert rep.functionals["P"].max_rel_drift <= 1e-9
        assert rep.functionals["E"].max_rel_drift <= 1e-8
        assert rep.certificate
        assert all(d.max_abs_drift >= 0 for d in rep.functionals.values())

    def test_viscous_energy_decays(self, sine_space):
        S = sine_space
        traj = integrate(EvolutionProblem("ViscousBurgers", S, nu=0.05), project(S, np.sin),
                         1.0, 1e-3, sample_stride=100)
        rep = conservation_report(traj, 1e-12, "E")
        assert rep.functionals["E"].monotone_nonincreasing
        assert rep.functionals["P"].max_rel_drift <= 1e-9
        assert rep.certificate

    def test_unknown_tag(self, burgers_preshock):
        with pytest.raises(KeyError):
            conservation_report(burgers_preshock, 1e-8, "Q")


class TestEntropySeries:
    def test_first_power_is_momentum(self, burgers_preshock):
        ser = entropy_series(burgers_preshock, Entropy.monomial(1))
        assert np.allclose(ser[:, 1], burgers_preshock.sampled_monitor("P"), atol=1e-15)

    def test_square_is_twice_energy(self, burgers_preshock):
        ser = entropy_series(burgers_preshock, lambda u: u ** 2)
        assert np.allclose(ser[:, 1], 2 * burgers_preshock.sampled_monitor("E"), rtol=1e-13)

    def test_cubic_entropy_constant_before_shock(self):
        # shifted data so the cubic entropy is not zero by symmetry
        S = build_space("Periodic", np.pi, 128)
        traj = integrate(EvolutionProblem("Burgers", S), lambda x: 0.5 + np.sin(x), 0.5, 1e-3,
                         sample_stride=50)
        ser = entropy_series(traj, Entropy.monomial(3))
        assert np.abs(ser[:, 1] - ser[0, 1]).max() <= 1e-6 * abs(ser[0, 1])

    def test_non_finite_entropy(self, burgers_preshock):
        with pytest.raises(SpaceError):
            entropy_series(burgers_preshock, lambda u: np.log(u))


class TestStatus:
    def test_blowup_reported(self):
        S = build_space("Periodic", np.pi, 16)
        prob = EvolutionProblem("ViscousBurgers", S, nu=0.1).negated()  # backward heat flow
        u0 = CoeffVector(S, 1e-3 * np.ones(S.dim))
        traj = integrate(prob, u0, 5.0, 1e-3, blowup_threshold=10.0)
        assert traj.status is Status.BLOW_UP
        assert 0 < traj.t_est < 5.0
        assert traj.times[-1] == pytest.approx(traj.t_est)

    def test_non_finite_reported(self):
        S = build_space("Periodic", np.pi, 16)
        prob = EvolutionProblem("LinearAdvection", S, c=1e3)
        traj = integrate(prob, project(S, lambda x: np.sin(16 * x)), 10.0, 0.1,
                         blowup_threshold=np.inf)
        assert traj.status is Status.STEP_UNDERFLOW
        assert "non-finite" in traj.message

    @pytest.mark.parametrize("dt", [0.0, -1e-3, 2.0])
    def test_bad_step(self, dt):
        S = build_space("Periodic", np.pi, 4)
        with pytest.raises(ValueError):
            integrate(EvolutionProblem("Burgers", S), project(S, np.sin), 1.0, dt)

    def test_space_mismatch(self):
        S, T = build_space("Periodic", np.pi, 4), build_space("Periodic", np.pi, 4)
        with pytest.raises(SpaceError):
            integrate(EvolutionProblem("Burgers", S), project(T, np.sin), 1.0, 0.1)


class TestOtherProblems:
    def test_short_nse_run(self):
        S = build_space("Periodic", 8.0, 32)
        prob = EvolutionProblem("NSE", S, p=4)
        traj = integrate(prob, lambda x: np.exp(-x ** 2), 0.2, 1e-3, method="rk6")
        rep = conservation_report(traj, 1e-8, "E")
        assert rep.functionals["M"].max_rel_drift < 1e-10
        assert rep.functionals["E"].max_rel_drift < 1e-9
        assert traj.states.dtype == complex

    def test_short_wave_run(self):
        S = build_space("Dirichlet", np.pi, 32)
        prob = EvolutionProblem("NonlinearWave", S, p=4)
        traj = integrate(prob, (lambda x: np.sin(x), lambda x: 0 * x), 0.2, 1e-3)
        rep = conservation_report(traj, 1e-8, "E")
        assert rep.functionals["E"].max_rel_drift < 1e-9
        assert traj.states.shape[1:] == (2, 32)


class TestCSV:
    def read(self, text):
        return list(csv.reader(io.StringIO(text)))

    def test_real_layout(self, burgers_preshock):
        rows = self.read(burgers_preshock.to_csv())
        dim = burgers_preshock.space.dim
        assert rows[0][:3] == ["time", "P", "E"]
        assert rows[0][3:] == [f"c_{k}" for k in range(dim)]
        assert len(rows) == len(burgers_preshock.times) + 1
        # full precision: values read back exactly
        assert float(rows[-1][3 + 65]) == burgers_preshock.states[-1][65]

    def test_complex_and_pair_layouts(self):
        S = build_space("Periodic", 2.0, 2)
        t = integrate(EvolutionProblem("NSE", S), lambda x: np.cos(np.pi * x / 2), 0.1, 0.05)
        head = self.read(t.to_csv())[0]
        assert head[:4] == ["time", "M", "E", "E_plus"]
        assert head[4:6] == ["c_0_re", "c_0_im"]
        D = build_space("Dirichlet", 1.0, 2)
        w = integrate(EvolutionProblem("NonlinearWave", D), (np.sin, np.sin), 0.1, 0.05)
        head = self.read(w.to_csv())[0]
        assert head == ["time", "E", "psi_0", "psi_1", "phi_0", "phi_1"]
