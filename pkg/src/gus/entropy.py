"""Exact and semi-analytic solutions of the inviscid Burgers equation.

These are independent oracles: Riemann solutions in closed form, the
implicit characteristics solution before the first shock, the entropy
solution for sine data, the weak-form residual test, and the
vanishing-viscosity sweep that compares viscous Galerkin runs with an
entropy reference.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .evolution import fmt, integrate
from .operators import EvolutionProblem
from .space import Kind, build_space, project, transfer_coeffs
from .testfunctions import TestFunction, test_function_suite


class PreconditionError(ValueError):
    """An oracle was asked for something outside its domain of validity."""


# -- Riemann problems -------------------------------------------------------

@dataclass(frozen=True)
class RiemannData:
    uL: float
    uR: float

    def __post_init__(self):
        if not (np.isfinite(self.uL) and np.isfinite(self.uR)):
            raise ValueError("Riemann states must be finite")

    @property
    def shock_speed(self) -> float:
        return 0.5 * (self.uL + self.uR)


def riemann_entropy_solution(data: RiemannData, x, t: float):
    """Entropy solution of Burgers' equation with data uL for x<0, uR for x>0."""
    if not t > 0:
        raise PreconditionError(f"Riemann solution needs t > 0, got {t}")
    x = np.asarray(x, dtype=float)
    uL, uR = data.uL, data.uR
    if uL > uR:
        out = np.where(x < data.shock_speed * t, uL, uR)
    elif uL < uR:
        out = np.clip(x / t, uL, uR)
    else:
        out = np.full_like(x, uL)
    return out if out.ndim else float(out)


def expansion_shock_solution(data: RiemannData, x, t: float):
    """Piecewise-constant jump moving at the Rankine-Hugoniot speed.

    For uL < uR this is a weak solution that violates the entropy condition.
    """
    if not t > 0:
        raise PreconditionError(f"Riemann solution needs t > 0, got {t}")
    x = np.asarray(x, dtype=float)
    out = np.where(x < data.shock_speed * t, data.uL, data.uR)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RiemannField:
    """Space-time field (t, x) -> u of a Riemann solution.

    ``entropy=False`` selects the expansion shock instead of the rarefaction.
    The breakpoints move on straight lines x = speed * t, which lets the
    weak-residual quadrature split exactly at every kink and jump.
    """

    data: RiemannData
    entropy: bool = True

    def __call__(self, t, x):
        if self.entropy:
            return riemann_entropy_solution(self.data, x, t)
        return expansion_shock_solution(self.data, x, t)

    @property
    def speeds(self) -> tuple[float, ...]:
        uL, uR = self.data.uL, self.data.uR
        if uL == uR:
            return ()
        if uL < uR and self.entropy:
            return (uL, uR)
        return (self.data.shock_speed,)

    def breakpoints(self, t: float) -> np.ndarray:
        return np.array([s * t for s in self.speeds])

    def time_breaks(self, xa: float, xb: float) -> np.ndarray:
        """Times at which a breakpoint crosses x = xa or x = xb."""
        out = [x / s for s in self.speeds if s != 0 for x in (xa, xb)]
        return np.array([t for t in out if t > 0])

    def initial(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, self.data.uL, self.data.uR)


# -- smooth data before the first shock ------------------------------------

def _derivative_handle(u0, du0):
    if du0 is not None:
        return du0
    h = 1e-6
    return lambda x: (np.asarray(u0(x + h)) - np.asarray(u0(x - h))) / (2 * h)


def shock_time(u0: Callable, du0: Callable | None = None, domain=(-np.pi, np.pi),
               n_grid: int = 4097) -> float:
    """First time characteristics cross: -1 / min u0' (infinity if u0' >= 0).

    The minimum is found by a dense grid scan followed by bounded scalar
    minimization around the best grid point.
    """
    d = _derivative_handle(u0, du0)
    xs = np.linspace(domain[0], domain[1], n_grid)
    vals = np.asarray(d(xs), dtype=float) * np.ones_like(xs)
    if not np.all(np.isfinite(vals)):
        raise PreconditionError("non-finite derivative samples in the shock-time scan")
    i = int(np.argmin(vals))
    m = vals[i]
    h = xs[1] - xs[0]
    lo, hi = max(domain[0], xs[i] - h), min(domain[1], xs[i] + h)
    if hi > lo:
        res = optimize.minimize_scalar(lambda x: float(d(x)), bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-13})
        m = min(m, float(res.fun))
    if m >= 0:
        return float("inf")
    return -1.0 / m


def characteristics_solution(u0: Callable, x, t: float, du0: Callable | None = None,
                             domain=(-np.pi, np.pi), t_star: float | None = None):
    """Classical solution u = u0(x - u t) of Burgers' equation before the first shock.

    Each point is solved by Newton's method safeguarded with a bracket;
    a step leaving the bracket is replaced by bisection.  The residual of
    every returned value is at most 1e-12 (times max(1, |u|)).
    """
    if t < 0:
        raise PreconditionError(f"time must be nonnegative, got {t}")
    d = _derivative_handle(u0, du0)
    if t_star is None:
        t_star = shock_time(u0, du0, domain)
    if t >= t_star:
        raise PreconditionError(f"t = {t} is not before the shock time {t_star:.6g}")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if t == 0:
        out = np.asarray(u0(x), dtype=float) * np.ones_like(x)
        return float(out[0]) if scalar else out

    def F(u):
        return u - np.asarray(u0(x - u * t), dtype=float)

    u = np.asarray(u0(x), dtype=float) * np.ones_like(x)
    r = 1.0 + np.abs(u)
    lo, hi = u - r, u + r
    for _ in range(200):
        bad = (F(lo) > 0) | (F(hi) < 0)
        if not bad.any():
            break
        lo = np.where(F(lo) > 0, lo - 2 * (hi - lo), lo)
        hi = np.where(F(hi) < 0, hi + 2 * (hi - lo), hi)
    else:
        raise PreconditionError("could not bracket the characteristics equation")
    for _ in range(200):
        f = F(u)
        tol = 1e-13 * np.maximum(1.0, np.abs(u))
        if np.all(np.abs(f) <= tol):
            break
        lo = np.where(f < 0, u, lo)
        hi = np.where(f > 0, u, hi)
        fp = 1.0 + t * np.asarray(d(x - u * t), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = u - f / fp
        ok = (fp > 0) & (newton > lo) & (newton < hi) & np.isfinite(newton)
        u_new = np.where(ok, newton, 0.5 * (lo + hi))
        u = np.where(np.abs(f) <= tol, u, u_new)
    res = np.abs(F(u))
    if np.any(res > 1e-12 * np.maximum(1.0, np.abs(u))):
        raise PreconditionError(f"characteristics solve failed, residual {res.max():.3g}")
    return float(u[0]) if scalar else u


@dataclass(frozen=True)
class CharacteristicsField:
    """(t, x) -> characteristics solution for fixed smooth data."""

    u0: Callable
    du0: Callable | None = None
    domain: tuple = (-np.pi, np.pi)
    t_star: float = field(default=None)

    def __post_init__(self):
        if self.t_star is None:
            object.__setattr__(self, "t_star", shock_time(self.u0, self.du0, self.domain))

    def __call__(self, t, x):
        return characteristics_solution(self.u0, x, t, self.du0, self.domain, self.t_star)

    def breakpoints(self, t):
        return np.array([])


# -- sine data past the shock -----------------------------------------------

@dataclass(frozen=True)
class SineEntropySolution:
    """Entropy solution for u0(x) = amplitude * sin(pi (x - shift) / beta), periodic.

    For the unit problem u0 = sin x on [-pi, pi] the solution at x >= 0 is
    sin(x0) where x0 is the smallest root of x0 + t sin x0 = x on the
    admissible branch; it is odd in x, vanishes at +-pi, and the shock that
    forms at t* = 1 stays at x = +-pi.  Other amplitudes and widths follow
    by rescaling.  A negative amplitude is a half-period shift.
    """

    amplitude: float = 1.0
    beta: float = np.pi
    shift: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.amplitude < 0:
            object.__setattr__(self, "shift", self.shift - self.beta)
            object.__setattr__(self, "amplitude", -self.amplitude)

    @property
    def t_star(self) -> float:
        if self.amplitude == 0:
            return float("inf")
        return self.beta / (np.pi * self.amplitude)

    def initial(self, x):
        return self.amplitude * np.sin(np.pi * (np.asarray(x, dtype=float) - self.shift) / self.beta)

    def _unit(self, xi: np.ndarray, tau: float) -> np.ndarray:
        # xi in [-pi, pi]
        s = np.sign(xi)
        ax = np.abs(xi)
        top = np.pi if tau <= 1 else np.arccos(-1.0 / tau)
        lo = np.zeros_like(ax)
        hi = np.full_like(ax, top)
        for _ in range(80):
            m = 0.5 * (lo + hi)
            below = m + tau * np.sin(m) - ax < 0
            lo = np.where(below, m, lo)
            hi = np.where(below, hi, m)
        u = s * np.sin(0.5 * (lo + hi))
        return np.where(np.abs(ax - np.pi) < 1e-14, 0.0, u)

    def __call__(self, t, x):
        if t < 0:
            raise PreconditionError("time must be nonnegative")
        x = np.asarray(x, dtype=float)
        if self.amplitude == 0:
            return np.zeros_like(x)
        xi = np.pi * (x - self.shift) / self.beta
        xi = (xi + np.pi) % (2 * np.pi) - np.pi
        # keep the right endpoint on +pi (value 0 either way)
        tau = self.amplitude * np.pi * t / self.beta
        out = self.amplitude * self._unit(np.atleast_1d(xi), tau)
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def shock_location(self) -> float:
        """Position of the stationary shock, wrapped into [-beta, beta)."""
        x = self.shift + self.beta
        return float((x + self.beta) % (2 * self.beta) - self.beta)

    def breakpoints(self, t: float) -> np.ndarray:
        return np.array([self.shock_location()]) if t >= self.t_star else np.array([])


def sine_entropy_solution(x, t: float, amplitude: float = 1.0, beta: float = np.pi):
    return SineEntropySolution(amplitude, beta)(t, x)


# -- weak-form residual ------------------------------------------------------

@dataclass(frozen=True)
class WeakResidualReport:
    residuals: np.ndarray
    test_functions: tuple

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.residuals))) if len(self.residuals) else 0.0

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["phi_id", "x_center", "x_width", "t_center", "t_width", "residual"])
        for i, (phi, r) in enumerate(zip(self.test_functions, self.residuals)):
            w.writerow([i, fmt(phi.center), fmt(phi.width), fmt(phi.t_center),
                        fmt(phi.t_width), fmt(r)])
        return out.getvalue()


def _gauss(a: float, b: float, n: int):
    s, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * s + 0.5 * (a + b), 0.5 * (b - a) * w


def _split(a: float, b: float, cuts) -> list[float]:
    inner = sorted(float(c) for c in np.atleast_1d(cuts) if a < c < b)
    return [a] + inner + [b]


def weak_residual(w, u0, test_functions: Sequence[TestFunction], T: float,
                  quad_resolution: int = 32, x_range=(-1.0, 1.0)) -> WeakResidualReport:
    """Residual of the weak formulation of Burgers' equation for each test function.

    R(phi) = int int (w phi_t + 1/2 w^2 phi_x) dx dt + int u0(x) phi(0, x) dx.

    Every integral is a tensor Gauss-Legendre rule with ``quad_resolution``
    points per panel; panels are split at the discontinuities of ``w``
    (``w.breakpoints(t)``) and, in time, where those cross the support edge
    (``w.time_breaks``), so piecewise-polynomial fields are integrated to
    round-off.
    """
    out = []
    for phi in test_functions:
        if not phi.has_time:
            raise PreconditionError("weak residual needs space-time test functions")
        if not phi.fits(x_range, (0.0, T)):
            raise PreconditionError(f"test function support leaves (0, {T}) x {tuple(x_range)}")
        xa, xb = phi.x_support
        ta, tb = phi.t_support
        tcuts = w.time_breaks(xa, xb) if hasattr(w, "time_breaks") else []
        total = 0.0
        tedges = _split(ta, tb, tcuts)
        for t0, t1 in zip(tedges[:-1], tedges[1:]):
            tq, tw = _gauss(t0, t1, quad_resolution)
            for t, wt in zip(tq, tw):
                xcuts = w.breakpoints(t) if hasattr(w, "breakpoints") else []
                inner = 0.0
                edges = _split(xa, xb, xcuts)
                for x0, x1 in zip(edges[:-1], edges[1:]):
                    xq, xw = _gauss(x0, x1, quad_resolution)
                    vals = np.asarray(w(t, xq), dtype=float)
                    integrand = (vals * phi.temporal_dt(t) * phi.spatial(xq)
                                 + 0.5 * vals ** 2 * phi.temporal(t) * phi.spatial_dx(xq))
                    inner += float(np.dot(xw, integrand))
                total += wt * inner
        xq, xw = _gauss(xa, xb, quad_resolution)
        total += float(np.dot(xw, np.asarray(u0(xq), dtype=float) * phi(0.0, xq)))
        out.append(total)
    res = np.array(out)
    if not np.all(np.isfinite(res)):
        raise PreconditionError("non-finite weak residual")
    return WeakResidualReport(res, tuple(test_functions))


def riemann_test_suite(seed: int = 0, n: int = 20) -> list[TestFunction]:
    """The fixed suite used for the Riemann weak-residual checks."""
    return test_function_suite(n, seed, x_range=(-1.0, 1.0), t_range=(0.0, 1.0))


# -- vanishing viscosity ----------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    nu: float
    time: float
    l1_error: float
    saturated: bool
    dt: float
    message: str = ""


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    reference: str

    def errors(self, time: float) -> np.ndarray:
        return np.array([r.l1_error for r in self.rows if r.time == time])

    def nus(self, time: float) -> np.ndarray:
        return np.array([r.nu for r in self.rows if r.time == time])

    def flags(self, time: float) -> np.ndarray:
        return np.array([r.saturated for r in self.rows if r.time == time])

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["nu", "time", "L1_error", "saturated_flag"])
        for r in self.rows:
            w.writerow([fmt(r.nu), fmt(r.time), fmt(r.l1_error), int(r.saturated)])
        return out.getvalue()


def _stable_dt(dt: float, nu: float, K: int, beta: float) -> float:
    # the real-axis stability interval of classical RK4 is about 2.78
    kmax = K * np.pi / beta
    if nu > 0:
        dt = min(dt, 2.5 / (nu * kmax ** 2))
    return dt


def viscous_states(u0, nu: float, K: int, dt: float, times: Sequence[float],
                   beta: float = np.pi, method: str = "rk4"):
    """States of the viscous Galerkin run at each of ``times`` (increasing)."""
    S = build_space(Kind.PERIODIC, beta, K)
    problem = EvolutionProblem("ViscousBurgers", S, nu=nu)
    c = project(S, u0, oversample=4).coeffs if callable(u0) else np.asarray(u0, dtype=float)
    dt = _stable_dt(dt, nu, K, beta)
    out, t_prev = [], 0.0
    for t in times:
        seg = t - t_prev
        if seg > 0:
            n = max(1, int(np.ceil(seg / dt - 1e-9)))
            traj = integrate(problem, c, seg, seg / n, method=method, sample_stride=n)
            if traj.status.value != "Completed":
                raise RuntimeError(f"viscous run failed: {traj.message}")
            c = traj.states[-1]
        out.append(c.copy())
        t_prev = t
    return S, out, dt


def l1_distance(S, c, reference_values: np.ndarray, fine) -> float:
    vals = fine.synth(transfer_coeffs(c, S, fine))
    return float(fine.quad(np.abs(vals - reference_values)))


def viscosity_sweep(u0, nu_list: Sequence[float], K: int, dt: float, T: float,
                    comparison_times: Sequence[float], beta: float = np.pi,
                    reference=None, reference_nu: float = 1e-3, reference_K: int = 1024,
                    reference_dt: float = 5e-4, n_eval: int = 8192,
                    workers: int = 1, method: str = "rk4") -> SweepResult:
    """L1 distance between viscous Galerkin runs and an entropy reference.

    ``reference`` may be a field (t, x) -> u; otherwise a viscous run at
    ``reference_nu`` on ``reference_K`` modes stands in for the inviscid
    limit.  A row is flagged saturated once its error stops decreasing
    relative to the previous viscosity; the flag stays up for every
    smaller viscosity at that time.  Solver failures are recorded per row.
    """
    nu_list = [float(v) for v in nu_list]
    if any(not v > 0 for v in nu_list):
        raise ValueError("viscosities must be positive")
    if any(b >= a for a, b in zip(nu_list, nu_list[1:])):
        raise ValueError("nu_list must be strictly decreasing")
    times = sorted(float(t) for t in comparison_times)
    if not times or times[0] <= 0 or times[-1] > T * (1 + 1e-12):
        raise ValueError("comparison times must lie in (0, T]")
    fine = build_space(Kind.PERIODIC, beta, max(K, reference_K, (n_eval - 2) // 3))
    if reference is None:
        Sr, states, _ = viscous_states(u0, reference_nu, reference_K, reference_dt, times, beta, method)
        ref_vals = [fine.synth(transfer_coeffs(c, Sr, fine)) for c in states]
        label = f"viscous nu={reference_nu:g} K={reference_K} dt={reference_dt:g}"
    else:
        ref_vals = [np.asarray(reference(t, fine.nodes), dtype=float) for t in times]
        label = getattr(reference, "__name__", type(reference).__name__)

    def one(nu):
        try:
            S, states, dt_used = viscous_states(u0, nu, K, dt, times, beta, method)
            return [(l1_distance(S, c, rv, fine), dt_used, "") for c, rv in zip(states, ref_vals)]
        except Exception as exc:  # recorded per row, the sweep goes on
            return [(float("nan"), _stable_dt(dt, nu, K, beta), str(exc))] * len(times)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, nu_list))
    else:
        results = [one(nu) for nu in nu_list]
    rows = []
    for j, t in enumerate(times):
        saturated, prev = False, None
        for nu, res in zip(nu_list, results):
            err, dt_used, msg = res[j]
            if prev is not None and not (err < prev):
                saturated = True
            rows.append(SweepRow(nu, t, err, saturated, dt_used, msg))
            prev = err
    rows.sort(key=lambda r: (-r.nu, r.time))
    return SweepResult(tuple(rows), label)
