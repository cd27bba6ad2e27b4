"""Finite trigonometric Galerkin spaces.

Two families are provided:

``Periodic``
    span{1, cos(k*pi*x/beta), sin(k*pi*x/beta) : 1 <= k <= K} on [-beta, beta].
    Coefficients are stored blocked as ``[c0, a_1..a_K, b_1..b_K]``.

``Dirichlet``
    span{sin(k*pi*x/beta) : 1 <= k <= K} on [0, beta].
    Coefficients are ``[b_1..b_K]``.

Both carry a uniform quadrature grid of ``N`` nodes, ``N`` being the
smallest power of two >= 3K+2.  On the periodic grid the rule is the
trapezoid rule (equal weights, node at -beta), on the Dirichlet grid the
composite midpoint rule.  All transforms between coefficients and node
values go through FFT/DST/DCT.

Array-level methods (``synth``, ``analyze``, ...) work on raw numpy
coefficient arrays and are what the solvers use in their inner loops.
The module-level functions (``integral``, ``project``, ...) take
:class:`CoeffVector` objects and check that the operands agree.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft


class SpaceError(ValueError):
    """Invalid parameters, mismatched operands or unsupported operations."""


class Kind(enum.Enum):
    PERIODIC = "Periodic"
    DIRICHLET = "Dirichlet"

    @classmethod
    def parse(cls, value) -> "Kind":
        if isinstance(value, cls):
            return value
        for member in cls:
            if str(value).lower() == member.value.lower():
                return member
        raise SpaceError(f"unknown space kind {value!r}")


def _node_count(K: int) -> int:
    n = 1
    while n < 3 * K + 2:
        n *= 2
    return n


@dataclass(frozen=True, eq=False)
class FunctionSpace:
    """A finite Galerkin space with its quadrature grid.

    Instances are immutable; derived arrays are computed lazily and cached.
    Two spaces are only considered the same if they are the same object.
    """

    kind: Kind
    beta: float
    K: int
    n_nodes: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n_nodes", _node_count(self.K))

    # -- basis metadata -------------------------------------------------

    @property
    def periodic(self) -> bool:
        return self.kind is Kind.PERIODIC

    @property
    def dim(self) -> int:
        return 2 * self.K + 1 if self.periodic else self.K

    @property
    def domain(self) -> tuple[float, float]:
        return (-self.beta, self.beta) if self.periodic else (0.0, self.beta)

    @property
    def length(self) -> float:
        lo, hi = self.domain
        return hi - lo

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumber k*pi/beta of every coefficient slot."""
        k = np.arange(1, self.K + 1) * np.pi / self.beta
        if self.periodic:
            return np.concatenate([[0.0], k, k])
        return k

    @cached_property
    def basis_norms(self) -> np.ndarray:
        """Squared L2 norms of the basis functions."""
        if self.periodic:
            return np.concatenate([[2 * self.beta], np.full(2 * self.K, self.beta)])
        return np.full(self.K, self.beta / 2)

    @cached_property
    def nodes(self) -> np.ndarray:
        N = self.n_nodes
        if self.periodic:
            return -self.beta + 2 * self.beta * np.arange(N) / N
        return (np.arange(N) + 0.5) * self.beta / N

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.n_nodes, self.length / self.n_nodes)

    def basis_function(self, index: int) -> Callable[[np.ndarray], np.ndarray]:
        """Pointwise callable for basis function number ``index``."""
        if not 0 <= index < self.dim:
            raise SpaceError(f"basis index {index} out of range for dim {self.dim}")
        s = np.pi / self.beta
        if not self.periodic:
            k = index + 1
            return lambda x: np.sin(k * s * np.asarray(x, dtype=float))
        if index == 0:
            return lambda x: np.ones_like(np.asarray(x, dtype=float))
        if index <= self.K:
            k = index
            return lambda x: np.cos(k * s * np.asarray(x, dtype=float))
        k = index - self.K
        return lambda x: np.sin(k * s * np.asarray(x, dtype=float))

    # -- transforms -----------------------------------------------------

    def _check_coeffs(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c)
        if c.shape != (self.dim,):
            raise SpaceError(f"coefficient array of shape {c.shape}, expected ({self.dim},)")
        return c

    def synth(self, c: np.ndarray) -> np.ndarray:
        """Node values of the function with coefficients ``c``."""
        c = self._check_coeffs(c)
        if np.iscomplexobj(c):
            return self.synth(c.real) + 1j * self.synth(c.imag)
        N, K = self.n_nodes, self.K
        if self.periodic:
            sign = (-1.0) ** np.arange(1, K + 1)
            X = np.zeros(N // 2 + 1, dtype=complex)
            X[0] = N * c[0]
            X[1:K + 1] = 0.5 * N * sign * (c[1:K + 1] - 1j * c[K + 1:])
            return sfft.irfft(X, N)
        x = np.zeros(N)
        x[:K] = 0.5 * c
        if K == N:
            x[N - 1] = c[N - 1]
        return sfft.dst(x, type=3)

    def analyze(self, values: np.ndarray) -> np.ndarray:
        """Discrete L2 projection of node values onto the space."""
        values = np.asarray(values)
        if values.shape != (self.n_nodes,):
            raise SpaceError(f"node array of shape {values.shape}, expected ({self.n_nodes},)")
        if np.iscomplexobj(values):
            return self.analyze(values.real) + 1j * self.analyze(values.imag)
        return _analyze_grid(values, self.kind, self.K)

    def deriv_nodes(self, c: np.ndarray) -> np.ndarray:
        """Node values of the classical x-derivative of ``c``."""
        c = self._check_coeffs(c)
        if self.periodic:
            return self.synth(self.D(c))
        if np.iscomplexobj(c):
            return self.deriv_nodes(c.real) + 1j * self.deriv_nodes(c.imag)
        N, K = self.n_nodes, self.K
        x = np.zeros(N)
        x[1:K + 1] = 0.5 * c * self.wavenumbers
        return sfft.dct(x, type=3)

    def weak_derivative(self, g: np.ndarray) -> np.ndarray:
        """Coefficients r with <r, v> = -Q(g v') for every basis v.

        This is P(dg/dx) in the weak sense, with ``g`` given at the nodes.
        For the periodic family it coincides with D applied to P(g).
        """
        g = np.asarray(g)
        if self.periodic:
            return self.D(self.analyze(g))
        if np.iscomplexobj(g):
            return self.weak_derivative(g.real) + 1j * self.weak_derivative(g.imag)
        N, K = self.n_nodes, self.K
        y = sfft.dct(g, type=2)  # y_k = 2 sum_j g_j cos(k pi x_j / beta)
        cos_moments = 0.5 * y[1:K + 1] * (self.beta / N)
        return -self.wavenumbers * cos_moments / self.basis_norms

    def D(self, c: np.ndarray) -> np.ndarray:
        """Duality derivative on the periodic family.

        Maps cos(k s x) to -k s sin(k s x) and sin(k s x) to k s cos(k s x),
        with s = pi/beta, and the constant to zero.
        """
        if not self.periodic:
            raise SpaceError("the duality derivative is only available on Periodic spaces")
        c = self._check_coeffs(c)
        K = self.K
        k = self.wavenumbers[1:K + 1]
        out = np.zeros_like(c)
        out[1:K + 1] = k * c[K + 1:]
        out[K + 1:] = -k * c[1:K + 1]
        return out

    def lap(self, c: np.ndarray) -> np.ndarray:
        c = self._check_coeffs(c)
        return -self.wavenumbers ** 2 * c

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex | float:
        """L2 inner product of coefficient arrays, conjugate-linear in ``u``."""
        return np.sum(self.basis_norms * np.conj(u) * v)

    def quad(self, values: np.ndarray):
        """Quadrature of node values over the domain."""
        return np.dot(self.weights, values)

    def contains(self, x) -> np.ndarray:
        lo, hi = self.domain
        x = np.asarray(x, dtype=float)
        tol = 1e-12 * max(1.0, self.beta)
        return (x >= lo - tol) & (x <= hi + tol)

    def synth_at(self, c: np.ndarray, x) -> np.ndarray:
        """Direct basis synthesis at arbitrary points."""
        c = self._check_coeffs(c)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        kx = np.outer(x, np.pi * np.arange(1, self.K + 1) / self.beta)
        if self.periodic:
            out = c[0] + np.cos(kx) @ c[1:self.K + 1] + np.sin(kx) @ c[self.K + 1:]
            return out * np.ones(len(x), dtype=np.result_type(c, float))
        return np.sin(kx) @ c

    def __repr__(self):
        return f"FunctionSpace({self.kind.value}, beta={self.beta:g}, K={self.K})"


def _analyze_grid(values: np.ndarray, kind: Kind, K: int) -> np.ndarray:
    N = len(values)
    if kind is Kind.PERIODIC:
        F = sfft.rfft(values)
        sign = (-1.0) ** np.arange(1, K + 1)
        a = 2.0 / N * sign * F[1:K + 1].real
        b = -2.0 / N * sign * F[1:K + 1].imag
        return np.concatenate([[F[0].real / N], a, b])
    y = sfft.dst(values, type=2)
    return y[:K] / N


@dataclass(frozen=True, eq=False)
class CoeffVector:
    """Coefficients of one field in the basis of ``space``."""

    space: FunctionSpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex if np.iscomplexobj(self.coeffs) else float)
        if c.shape != (self.space.dim,):
            raise SpaceError(
                f"coefficient vector of length {c.size} does not match dim {self.space.dim}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.coeffs)

    @property
    def scalar(self) -> str:
        return "Complex" if self.is_complex else "Real"

    def _check(self, other: "CoeffVector"):
        if not isinstance(other, CoeffVector):
            return NotImplemented
        if other.space is not self.space:
            raise SpaceError("operands belong to different spaces")
        if other.is_complex != self.is_complex:
            raise SpaceError("operands have different scalar flavors")

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return CoeffVector(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return CoeffVector(self.space, self.coeffs - other.coeffs)

    def __neg__(self):
        return CoeffVector(self.space, -self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, CoeffVector) or not np.isscalar(scalar):
            return NotImplemented
        if np.iscomplexobj(scalar) and not self.is_complex:
            raise SpaceError("complex scaling of a real vector; convert with as_complex() first")
        return CoeffVector(self.space, self.coeffs * scalar)

    __rmul__ = __mul__

    def as_complex(self) -> "CoeffVector":
        return CoeffVector(self.space, self.coeffs.astype(complex))

    def norm(self) -> float:
        return float(np.sqrt(abs(self.space.inner(self.coeffs, self.coeffs))))

    def values(self) -> np.ndarray:
        """Values at the quadrature nodes."""
        return self.space.synth(self.coeffs)


# -- public operations ------------------------------------------------------

def build_space(kind, beta: float, K: int) -> FunctionSpace:
    """Build a Periodic or Dirichlet trigonometric space.

    K = 0 is accepted for Periodic spaces (constants only).
    """
    kind = Kind.parse(kind)
    if not np.isfinite(beta) or beta <= 0:
        raise SpaceError(f"FunctionSpace requires half_width beta > 0, got {beta}")
    if int(K) != K or K < 0:
        raise SpaceError(f"FunctionSpace requires an integer mode_count K >= 0, got {K}")
    if K == 0 and kind is Kind.DIRICHLET:
        raise SpaceError("a Dirichlet FunctionSpace needs K >= 1")
    return FunctionSpace(kind, float(beta), int(K))


def _same_space(space: FunctionSpace, *vectors: CoeffVector):
    for v in vectors:
        if not isinstance(v, CoeffVector) or v.space is not space:
            raise SpaceError("vector does not belong to this space")


def constant(space: FunctionSpace, value=1.0) -> CoeffVector:
    """The constant function, i.e. a multiple of the unit element."""
    if not space.periodic:
        raise SpaceError("Dirichlet spaces do not contain constants")
    c = np.zeros(space.dim, dtype=np.result_type(value, float))
    c[0] = value
    return CoeffVector(space, c)


def basis_vector(space: FunctionSpace, index: int) -> CoeffVector:
    c = np.zeros(space.dim)
    c[index] = 1.0
    return CoeffVector(space, c)


def integral(space: FunctionSpace, u: CoeffVector):
    """Integral over the domain, exact for every member of the space."""
    _same_space(space, u)
    if space.periodic:
        return u.coeffs[0] * 2 * space.beta
    # int_0^beta sin(k pi x / beta) dx = beta (1 - (-1)^k) / (k pi); the midpoint
    # rule is not exact for odd sines over half a period, so use the closed form
    k = np.arange(1, space.K + 1)
    return np.dot(space.beta * (1 - (-1.0) ** k) / (k * np.pi), u.coeffs)


def inner_product(space: FunctionSpace, u: CoeffVector, v: CoeffVector):
    """L2 inner product; Hermitian (conjugate-linear in u) for complex vectors."""
    _same_space(space, u, v)
    if u.is_complex != v.is_complex:
        raise SpaceError("operands have different scalar flavors")
    return space.inner(u.coeffs, v.coeffs)


def _fine_grid_coefficients(space: FunctionSpace, f, oversample: int) -> np.ndarray:
    N = space.n_nodes * oversample
    if space.periodic:
        x = -space.beta + 2 * space.beta * np.arange(N) / N
        vals = np.asarray(f(x))
        if vals.shape != x.shape:
            vals = np.broadcast_to(vals, x.shape).copy()
        # trapezoid rule on [-beta, beta]: average the two endpoint values
        end = np.asarray(f(np.array([space.beta])))
        vals = vals.astype(np.result_type(vals, end, float))
        vals[0] = 0.5 * (vals[0] + end.reshape(-1)[0])
    else:
        x = (np.arange(N) + 0.5) * space.beta / N
        vals = np.asarray(f(x))
        if vals.shape != x.shape:
            vals = np.broadcast_to(vals, x.shape).copy()
    if not np.all(np.isfinite(vals)):
        raise SpaceError("projected function has non-finite values at the quadrature nodes")
    if np.iscomplexobj(vals):
        return (_analyze_grid(vals.real, space.kind, space.K)
                + 1j * _analyze_grid(vals.imag, space.kind, space.K))
    return _analyze_grid(vals, space.kind, space.K)


def project(space: FunctionSpace, f, oversample: int = 1) -> CoeffVector:
    """Canonical L2 projection of a pointwise function onto ``space``.

    ``f`` is sampled on the quadrature grid refined ``oversample`` times;
    members of the space are reproduced exactly for any ``oversample``.
    For functions outside the space a larger ``oversample`` reduces the
    quadrature (aliasing) error of the projection integrals.
    """
    if oversample < 1 or int(oversample) != oversample:
        raise SpaceError("oversample must be a positive integer")
    return CoeffVector(space, _fine_grid_coefficients(space, f, int(oversample)))


def project_values(space: FunctionSpace, values) -> CoeffVector:
    """Projection of a function known only through its node values."""
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        raise SpaceError("non-finite node values")
    return CoeffVector(space, space.analyze(values))


def derivative(space: FunctionSpace, u: CoeffVector) -> CoeffVector:
    _same_space(space, u)
    return CoeffVector(space, space.D(u.coeffs))


def laplacian(space: FunctionSpace, u: CoeffVector) -> CoeffVector:
    _same_space(space, u)
    return CoeffVector(space, space.lap(u.coeffs))


def multiply_project(space: FunctionSpace, u: CoeffVector, v: CoeffVector) -> CoeffVector:
    """P(u*v): pointwise product at the nodes followed by projection."""
    _same_space(space, u, v)
    return CoeffVector(space, space.analyze(space.synth(u.coeffs) * space.synth(v.coeffs)))


def evaluate(space: FunctionSpace, u: CoeffVector, points) -> np.ndarray:
    _same_space(space, u)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    if not np.all(space.contains(points)):
        lo, hi = space.domain
        raise SpaceError(f"evaluation point outside the domain [{lo:g}, {hi:g}]")
    return space.synth_at(u.coeffs, points)


def transfer_coeffs(c: np.ndarray, source: FunctionSpace, target: FunctionSpace) -> np.ndarray:
    """Coefficients of a source-space function in a target space of the same family.

    Modes beyond the target's K are dropped (this is the projection), missing
    ones are zero (exact embedding).
    """
    if source.kind is not target.kind or source.beta != target.beta:
        raise SpaceError("transfer needs spaces of the same kind and half_width")
    c = np.asarray(c)
    m = min(source.K, target.K)
    out = np.zeros(c.shape[:-1] + (target.dim,), dtype=c.dtype)
    if source.periodic:
        out[..., 0] = c[..., 0]
        out[..., 1:m + 1] = c[..., 1:m + 1]
        out[..., target.K + 1:target.K + 1 + m] = c[..., source.K + 1:source.K + 1 + m]
    else:
        out[..., :m] = c[..., :m]
    return out


def transfer(u: CoeffVector, target: FunctionSpace) -> CoeffVector:
    """Move ``u`` into ``target`` by embedding or truncation."""
    return CoeffVector(target, transfer_coeffs(u.coeffs, u.space, target))
