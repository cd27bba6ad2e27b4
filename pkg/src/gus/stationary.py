"""Stationary Galerkin problems <A(u), v> = <f, v> for every v in the space.

Existence for such problems comes from a degree argument: if
<A(u) - f, u> > 0 on a sphere, the field is homotopic to the identity
there.  The computational counterpart implemented here is a homotopy
H(u, s) = (1 - s) u + s (A(u) - f) traced from the trivial root at s = 0
to s = 1, together with a sampling check of the sphere condition.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .space import CoeffVector, FunctionSpace, SpaceError


class ContinuationError(RuntimeError):
    """Newton failed along the homotopy; ``last_s`` is the last parameter reached."""

    def __init__(self, message: str, last_s: float):
        super().__init__(f"{message} (last converged s = {last_s:.6g})")
        self.last_s = last_s


@dataclass(frozen=True, eq=False)
class StationaryProblem:
    """Operator A acting on coefficient arrays, right-hand side f, optional sphere radius."""

    space: FunctionSpace
    operator: Callable[[np.ndarray], np.ndarray]
    f: CoeffVector
    R: float | None = None

    def __post_init__(self):
        if self.f.space is not self.space:
            raise SpaceError("right-hand side does not belong to the problem space")
        if self.R is not None and not self.R > 0:
            raise ValueError(f"sphere radius must be positive, got {self.R}")

    def apply(self, c: np.ndarray) -> np.ndarray:
        out = np.asarray(self.operator(np.asarray(c, dtype=float)), dtype=float)
        if out.shape != (self.space.dim,):
            raise SpaceError(f"operator returned shape {out.shape}, expected ({self.space.dim},)")
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("operator evaluation produced non-finite values")
        return out

    def residual(self, c: np.ndarray) -> np.ndarray:
        """Coefficients of P(A(u) - f)."""
        return self.apply(c) - self.f.coeffs

    def residual_norm(self, c: np.ndarray) -> float:
        """Largest of the L2 norm of P(A(u) - f) and its pairings with the basis."""
        r = self.residual(c)
        return _residual_measure(self.space, r)


def _residual_measure(space: FunctionSpace, r: np.ndarray) -> float:
    l2 = float(np.sqrt(np.sum(space.basis_norms * r * r)))
    return max(l2, float(np.max(np.abs(space.basis_norms * r))))


def _l2(space: FunctionSpace, c: np.ndarray) -> float:
    return float(np.sqrt(np.sum(space.basis_norms * c * c)))


# -- operators ---------------------------------------------------------------

def p_laplacian_operator(space: FunctionSpace, p: float = 4.0, linear_weight: float = 1.0):
    """Weak form of -div(|u'|^(p-2) u') + linear_weight * u''.

    <A(u), v> = int |u'|^(p-2) u' v' - linear_weight * u' v'.  The equation
    Delta_p u - Delta u = g is A(u) = -g in this sign convention.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")

    def A(c):
        g = space.deriv_nodes(c)
        flux = g ** 3 if p == 4 else np.abs(g) ** (p - 2) * g
        return -space.weak_derivative(flux) + linear_weight * space.weak_derivative(g)

    return A


def p_laplacian_energy(space: FunctionSpace, f: CoeffVector, p: float = 4.0,
                       linear_weight: float = 1.0):
    """Energy whose critical points solve A(u) = f for the operator above.

    Returns (J, gradJ) on coefficient arrays; the gradient is taken with
    respect to the coefficients, i.e. basis_norms * (A(u) - f).
    """
    A = p_laplacian_operator(space, p, linear_weight)
    fc = f.coeffs

    def J(c):
        g = space.deriv_nodes(c)
        return float(space.quad(np.abs(g) ** p / p - 0.5 * linear_weight * g * g)) \
            - float(space.inner(fc, c))

    def grad(c):
        return space.basis_norms * (A(c) - fc)

    return J, grad


def diagonal_operator(space: FunctionSpace, diag) -> Callable:
    """Linear operator acting by multiplication of each coefficient."""
    d = np.broadcast_to(np.asarray(diag, dtype=float), (space.dim,)).copy()
    return lambda c: d * c


# -- sphere condition ----------------------------------------------------------

def _random_sphere_points(space, R, n, seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, space.dim))
    norms = np.sqrt(np.sum(space.basis_norms * z * z, axis=1))
    return R * z / norms[:, None]


def sphere_values(problem: StationaryProblem, R: float, n_samples: int = 64, seed=0) -> np.ndarray:
    """<A(u) - f, u> at pseudo-random points of the L2 sphere of radius R."""
    if not R > 0:
        raise ValueError(f"sphere radius must be positive, got {R}")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    S = problem.space
    pts = _random_sphere_points(S, R, n_samples, seed)
    return np.array([float(S.inner(problem.residual(u), u)) for u in pts])


def check_sphere_condition(problem: StationaryProblem, R: float, n_samples: int = 64,
                           seed=0) -> bool:
    """True iff <A(u) - f, u> > 0 at every sampled point of the sphere.

    This is a sampling certificate, not a proof.
    """
    return bool(np.all(sphere_values(problem, R, n_samples, seed) > 0))


def find_sphere_radius(problem: StationaryProblem, R0: float = 1.0, n_samples: int = 64,
                       seed=0, max_doublings: int = 60) -> float:
    """Smallest R = R0 * 2^j passing the sampled sphere condition."""
    R = float(R0)
    for _ in range(max_doublings + 1):
        if check_sphere_condition(problem, R, n_samples, seed):
            return R
        R *= 2
    raise ContinuationError("no radius passed the sphere condition", 0.0)


# -- continuation ------------------------------------------------------------

def fd_jacobian(F: Callable, x: np.ndarray, F0: np.ndarray | None = None,
                scale: float | None = None) -> np.ndarray:
    """Forward-difference Jacobian with step 1e-6 * (1 + scale)."""
    F0 = F(x) if F0 is None else F0
    h = 1e-6 * (1.0 + (np.linalg.norm(x) if scale is None else scale))
    J = np.empty((len(F0), len(x)))
    for i in range(len(x)):
        e = x.copy()
        e[i] += h
        J[:, i] = (F(e) - F0) / h
    return J


def _newton(problem, F, u, tol, max_iters):
    """Damped Newton on F; returns (u, converged)."""
    S = problem.space
    r = F(u)
    for _ in range(max_iters):
        if _residual_measure(S, r) <= tol:
            return _polish(S, F, u, r), True
        try:
            d = np.linalg.solve(fd_jacobian(F, u, r, _l2(S, u)), -r)
        except np.linalg.LinAlgError:
            return u, False
        lam, n0 = 1.0, _residual_measure(S, r)
        while lam > 1e-10:
            trial = u + lam * d
            rt = F(trial)
            if _residual_measure(S, rt) < (1 - 1e-4 * lam) * n0:
                u, r = trial, rt
                break
            lam /= 2
        else:
            return u, False
    return u, _residual_measure(S, r) <= tol


def _polish(S, F, u, r):
    """One extra full Newton step, kept only if it lowers the residual."""
    try:
        trial = u + np.linalg.solve(fd_jacobian(F, u, r, _l2(S, u)), -r)
    except np.linalg.LinAlgError:
        return u
    rt = F(trial)
    if np.all(np.isfinite(rt)) and _residual_measure(S, rt) < _residual_measure(S, r):
        return trial
    return u


def _homotopy(problem, anchor=None):
    a = 0.0 if anchor is None else anchor

    def H(u, s):
        return (1 - s) * (u - a) + s * problem.residual(u)
    return H


def _natural(problem, steps, tol, max_iters):
    H = _homotopy(problem)
    u = np.zeros(problem.space.dim)
    last = 0.0
    for j in range(1, steps + 1):
        s = j / steps
        u, ok = _newton(problem, lambda c: H(c, s), u, tol, max_iters)
        if not ok:
            raise ContinuationError(f"Newton diverged at s = {s:.6g}", last)
        last = s
    return u


def _arclength(problem, steps, tol, max_iters, max_points=5000, anchor=None):
    """Pseudo-arclength continuation of H(u, s) = 0 from (anchor, 0) past s = 1."""
    S = problem.space
    H = _homotopy(problem, anchor)
    n = S.dim
    w = np.sqrt(S.basis_norms)  # work in L2-orthonormal coordinates

    def G(y):
        return w * H(y[:n] / w, y[n])

    def tangent(y, prev):
        Jm = fd_jacobian(G, y, None, np.linalg.norm(y))
        t = np.linalg.svd(Jm)[2][-1]
        if prev is None:
            return t if t[n] > 0 else -t
        return t if np.dot(t, prev) > 0 else -t

    y = np.zeros(n + 1)
    if anchor is not None:
        y[:n] = w * anchor
    t = tangent(y, None)
    h = 1.0 / steps
    last_s = 0.0
    for _ in range(max_points):
        pred = y + h * t

        def aug(z):
            return np.concatenate([G(z), [np.dot(t, z - pred)]])

        z, ok = pred.copy(), False
        for _ in range(max_iters):
            r = aug(z)
            if np.linalg.norm(r) <= tol:
                ok = True
                break
            try:
                z = z - np.linalg.solve(fd_jacobian(aug, z, r, np.linalg.norm(z)), r)
            except np.linalg.LinAlgError:
                break
            if not np.all(np.isfinite(z)):
                break
        if not ok or np.linalg.norm(z - y) > 4 * h:
            h /= 2
            if h < 1e-10:
                raise ContinuationError("arclength step underflow", last_s)
            continue
        if z[n] >= 1.0:
            # crossed s = 1: polish from the chord point; too long a step is retried shorter
            a = (1.0 - y[n]) / (z[n] - y[n])
            start = (y + a * (z - y))[:n] / w
            u, ok = _newton(problem, problem.residual, start, tol, max_iters)
            if ok:
                return u
            h /= 2
            if h < 1e-10:
                raise ContinuationError("final Newton polish at s = 1 failed", last_s)
            continue
        y = z
        last_s = y[n]
        if last_s < -1.0:
            raise ContinuationError("path turned back past s = 0", last_s)
        t = tangent(y, t)
        h = min(1.5 * h, 0.5)
    raise ContinuationError("continuation did not reach s = 1", last_s)


def solve_stationary(problem: StationaryProblem, homotopy_steps: int = 20,
                     newton_tol: float = 1e-10, max_newton_iters: int = 50,
                     method: str = "auto") -> CoeffVector:
    """Root of P(A(u) - f) reached by homotopy from the identity.

    ``method`` is "natural" (Newton at equally spaced s), "arclength"
    (pseudo-arclength, which follows the path through folds in s) or
    "auto" (natural first, arclength if that fails).  The returned u has
    residual L2 norm and every basis pairing at most ``newton_tol``.
    """
    if homotopy_steps < 1 or max_newton_iters < 1:
        raise ValueError("homotopy_steps and max_newton_iters must be positive")
    if not newton_tol > 0:
        raise ValueError("newton_tol must be positive")
    if method not in ("auto", "natural", "arclength"):
        raise ValueError(f"unknown continuation method {method!r}")
    if method in ("auto", "natural"):
        try:
            return CoeffVector(problem.space, _natural(problem, homotopy_steps, newton_tol,
                                                       max_newton_iters))
        except ContinuationError:
            if method == "natural":
                raise
    # a symmetric start can sit on branch points of the path; generic anchors
    # near the origin turn those into regular folds
    rng = np.random.default_rng(0)
    scale = 0.1 * max(_l2(problem.space, problem.f.coeffs), 1.0)
    anchor = None
    for attempt in range(4):
        try:
            return CoeffVector(problem.space, _arclength(problem, homotopy_steps, newton_tol,
                                                         max_newton_iters, anchor=anchor))
        except ContinuationError:
            if attempt == 3:
                raise
        anchor = scale * rng.standard_normal(problem.space.dim) / np.sqrt(problem.space.basis_norms)


def galerkin_pairings(problem: StationaryProblem, u: CoeffVector) -> np.ndarray:
    """<A(u) - f, v_i> for every basis function v_i."""
    return problem.space.basis_norms * problem.residual(u.coeffs)
