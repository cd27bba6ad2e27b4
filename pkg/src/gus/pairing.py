"""Observing Galerkin fields through test functions, and refinement in K.

A field is "seen" only through its pairings with compactly supported
bumps.  The refinement study computes space-time pairings of a family of
Galerkin solutions for increasing K and checks that the Cauchy
increments between consecutive K shrink ("decreasing under refinement"
is the finite stand-in for "infinitely close").
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .evolution import Trajectory, fmt, integrate
from .space import CoeffVector, FunctionSpace, SpaceError, project
from .testfunctions import TestFunction, test_function_suite

__all__ = ["TestFunction", "test_function_suite", "pair", "projected_test_function",
           "spacetime_pairing", "refinement_study", "RefinementStudy"]


_PANEL = np.polynomial.legendre.leggauss(32)


def _gauss_points(phi: TestFunction, n: int):
    """Composite 32-point Gauss-Legendre rule with about ``n`` points on the support."""
    s, w = _PANEL
    xa, xb = phi.x_support
    edges = np.linspace(xa, xb, max(1, -(-n // 32)) + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    return (mid + half * s).ravel(), (half * w).ravel()


def _check_support(space: FunctionSpace, phi: TestFunction):
    if not phi.fits(space.domain):
        lo, hi = space.domain
        raise SpaceError(f"test function support {phi.x_support} is not inside ({lo:g}, {hi:g})")


def _n_points(space: FunctionSpace, density: int) -> int:
    return max(64, density * space.n_nodes)


def pair(space: FunctionSpace, u: CoeffVector, phi: TestFunction, t: float | None = None,
         density: int = 8):
    """int u(x) phi(x) dx by composite Gauss-Legendre on the support of phi.

    The rule uses at least ``density`` times as many points as the space
    has quadrature nodes.  With ``t`` the time factor of phi is included.
    """
    if u.space is not space:
        raise SpaceError("vector does not belong to this space")
    _check_support(space, phi)
    x, w = _gauss_points(phi, _n_points(space, density))
    val = np.dot(w, space.synth_at(u.coeffs, x) * phi.spatial(x))
    if t is not None:
        val = val * float(phi.temporal(t))
    return val


def projected_test_function(space: FunctionSpace, phi: TestFunction, derivative: bool = False,
                            density: int = 8) -> np.ndarray:
    """Coefficients of P(phi) (or of P(phi_x)), from Gauss-Legendre basis pairings."""
    _check_support(space, phi)
    x, w = _gauss_points(phi, _n_points(space, density))
    g = w * (phi.spatial_dx(x) if derivative else phi.spatial(x))
    k = np.pi * np.arange(1, space.K + 1) / space.beta
    kx = np.outer(k, x)
    if space.periodic:
        m = np.concatenate([[np.sum(g)], np.cos(kx) @ g, np.sin(kx) @ g])
    else:
        m = np.sin(kx) @ g
    return m / space.basis_norms


def spacetime_pairing(traj: Trajectory, phi: TestFunction, density: int = 8) -> float:
    """int int u phi dx dt for phi = T(t) X(x).

    Computed as int T(t) <u(t), P(X)> dt with the trapezoid rule over the
    stored samples, which should be every step.
    """
    if not phi.has_time:
        raise ValueError("space-time pairing needs a test function with a time factor")
    S = traj.space
    p = projected_test_function(S, phi, density=density)
    series = np.asarray(traj.states) @ (S.basis_norms * p)
    return float(np.trapezoid(phi.temporal(traj.times) * series, traj.times))


@dataclass(frozen=True)
class RefinementStudy:
    """Pairings a[phi, K], increments and verdicts of a K-refinement ladder."""

    K_list: tuple
    phis: tuple
    pairings: np.ndarray            # (n_phi, n_K)
    micro_ratio: np.ndarray | None  # (n_phi, n_K) or None
    floor: float
    micro_floor: float = 1e-9

    @property
    def increments(self) -> np.ndarray:
        return np.abs(np.diff(self.pairings, axis=1))

    def _decreasing(self, rows: np.ndarray, floor: float) -> np.ndarray:
        ok = (rows[:, 1:] < rows[:, :-1]) | (rows[:, 1:] <= floor)
        return np.all(ok, axis=1)

    @property
    def converged(self) -> np.ndarray:
        """Per phi: increments decrease at every step (or sit below the round-off floor)."""
        return self._decreasing(self.increments, self.floor)

    @property
    def micro_decreasing(self) -> np.ndarray | None:
        """Per phi: the micro-invisibility ratio decreases at every doubling.

        Ratios below ``micro_floor`` count as numerically zero (already
        invisible); the macro pairing is interpolated in time, so tiny
        ratios are interpolation noise rather than a trend.
        """
        if self.micro_ratio is None:
            return None
        return self._decreasing(self.micro_ratio, self.micro_floor)

    def verdict(self, i: int) -> str:
        return "converged" if self.converged[i] else "not_converged"

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        header = ["phi_id", "K", "pairing", "increment", "verdict"]
        if self.micro_ratio is not None:
            header.append("micro_ratio")
        w.writerow(header)
        inc = self.increments
        for i in range(len(self.phis)):
            for j, K in enumerate(self.K_list):
                row = [i, K, fmt(self.pairings[i, j]), fmt(inc[i, j - 1]) if j else "",
                       self.verdict(i)]
                if self.micro_ratio is not None:
                    row.append(fmt(self.micro_ratio[i, j]))
                w.writerow(row)
        return out.getvalue()


def _macro_pairing_series(S, reference, phis, times, coarse_dt, density):
    """Coarse time grid, P w(t) there, and the pairings <P w(t), P phi>."""
    n = max(2, int(round(times[-1] / coarse_dt)))
    tc = np.linspace(times[0], times[-1], n + 1)
    proj = np.array([projected_test_function(S, phi, density=density) for phi in phis])
    W = np.array([project(S, lambda x, t=t: reference(t, x), oversample=8).coeffs for t in tc])
    macro = W @ (S.basis_norms * proj).T  # (n_coarse, n_phi)
    return tc, W, macro


def _run_one(family, K, phis, T, dt, method, reference, coarse_dt, density):
    problem, u0 = family(K)
    traj = integrate(problem, u0, T, dt, method=method, sample_stride=1)
    if traj.status.value != "Completed":
        raise RuntimeError(f"K={K}: {traj.message}")
    S = traj.space
    t = traj.times
    states = np.asarray(traj.states)
    proj = np.array([projected_test_function(S, phi, density=density) for phi in phis])
    series = states @ (S.basis_norms * proj).T  # (n_t, n_phi)
    temporal = np.array([phi.temporal(t) for phi in phis]).T
    a = np.trapezoid(temporal * series, t, axis=0)
    if reference is None:
        return a, None
    tc, W, macro = _macro_pairing_series(S, reference, phis, t, coarse_dt, density)
    # the macro pairing is smooth in time: interpolate it onto the step grid
    macro_fine = CubicSpline(tc, macro, axis=0)(t)
    micro = np.trapezoid(temporal * (series - macro_fine), t, axis=0)
    idx = np.clip(np.searchsorted(t, tc - 0.5 * dt), 0, len(t) - 1)
    psi = states[idx] - W
    psi2 = np.sum(S.basis_norms * psi * psi, axis=1)
    norm = np.sqrt(np.trapezoid(psi2, tc))
    return a, np.abs(micro) / norm if norm > 0 else np.zeros_like(micro)


def refinement_study(family: Callable, K_list: Sequence[int], phi_list: Sequence[TestFunction],
                     T: float, dt: float, method: str = "rk4", reference=None,
                     workers: int = 1, coarse_dt: float = 0.01, density: int = 8
                     ) -> RefinementStudy:
    """Space-time pairings of the solutions ``family(K) -> (problem, u0)`` over ``K_list``.

    With a macroscopic ``reference`` field w(t, x) the study also reports,
    per phi and K, the micro-invisibility ratio
    |int int (u - P w) phi| / (int |u - P w|^2 dt)^(1/2).
    """
    K_list = [int(k) for k in K_list]
    if len(K_list) < 3:
        raise ValueError("a refinement study needs at least 3 values of K")
    if any(b <= a for a, b in zip(K_list, K_list[1:])):
        raise ValueError("K_list must be strictly increasing")
    phis = tuple(phi_list)
    if not all(phi.has_time for phi in phis):
        raise ValueError("refinement study needs space-time test functions")

    def job(K):
        return _run_one(family, K, phis, T, dt, method, reference, coarse_dt, density)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, K_list))
    else:
        results = [job(K) for K in K_list]
    pairings = np.array([r[0] for r in results]).T
    micro = None if reference is None else np.array([r[1] for r in results]).T
    floor = 1e-13 * max(1.0, float(np.max(np.abs(pairings))))
    return RefinementStudy(tuple(K_list), phis, pairings, micro, floor)
