"""Right-hand sides of the projected evolution problems.

Every operator is realized as P∘A: nonlinear terms are evaluated
pointwise at the quadrature nodes and projected back onto the space,
linear terms act diagonally on the coefficients.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .space import CoeffVector, FunctionSpace, SpaceError, Kind


class OperatorTag(enum.Enum):
    BURGERS = "Burgers"
    VISCOUS_BURGERS = "ViscousBurgers"
    NSE = "NSE"
    NONLINEAR_WAVE = "NonlinearWave"
    LINEAR_ADVECTION = "LinearAdvection"

    @classmethod
    def parse(cls, value) -> "OperatorTag":
        if isinstance(value, cls):
            return value
        for member in cls:
            if str(value).lower() == member.value.lower():
                return member
        raise SpaceError(f"unknown operator tag {value!r}")


# -- array-level kernels ----------------------------------------------------

def _burgers(space: FunctionSpace, c: np.ndarray) -> np.ndarray:
    u = space.synth(c)
    ux = space.synth(space.D(c))
    return -space.analyze(u * ux)


def _power_term(u: np.ndarray, p: float) -> np.ndarray:
    """|u|^(p-2) u, pointwise."""
    if p == 4:
        return (u.real ** 2 + u.imag ** 2) * u if np.iscomplexobj(u) else u ** 3
    return np.abs(u) ** (p - 2) * u


def _nse(space: FunctionSpace, c: np.ndarray, V: np.ndarray | None, p: float,
         coupling: float = 1.0) -> np.ndarray:
    u = space.synth(c)
    g = -coupling * _power_term(u, p)
    if V is not None:
        g = g + V * u
    return -1j * (-0.5 * space.lap(c) + space.analyze(g))


def _wave(space: FunctionSpace, y: np.ndarray, p: float, coupling: float) -> np.ndarray:
    psi, phi = y
    force = space.lap(psi)
    if coupling:
        force = force - coupling * space.analyze(_power_term(space.synth(psi), p))
    return np.stack([phi, force])


# -- problem definition -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class EvolutionProblem:
    """Operator tag, parameters and space of a projected evolution problem.

    ``potential`` is a callable V(x) used by the NSE; it is sampled once at
    the quadrature nodes.  ``coupling`` scales the power nonlinearity of
    the NSE and the wave equation (1 in the physical problems).
    """

    operator: OperatorTag
    space: FunctionSpace
    nu: float = 0.0
    p: float = 4.0
    c: float = 1.0
    potential: Callable | None = None
    coupling: float = 1.0
    _V: np.ndarray | None = field(init=False, repr=False, default=None)

    def __post_init__(self):
        op = OperatorTag.parse(self.operator)
        object.__setattr__(self, "operator", op)
        periodic = self.space.kind is Kind.PERIODIC
        if op in (OperatorTag.BURGERS, OperatorTag.VISCOUS_BURGERS, OperatorTag.NSE,
                  OperatorTag.LINEAR_ADVECTION) and not periodic:
            raise SpaceError(f"{op.value} requires a Periodic space")
        if op is OperatorTag.NONLINEAR_WAVE and periodic:
            raise SpaceError("NonlinearWave requires a Dirichlet space")
        if op is OperatorTag.VISCOUS_BURGERS and not self.nu >= 0:
            raise SpaceError(f"ViscousBurgers requires nu >= 0, got {self.nu}")
        if op in (OperatorTag.NSE, OperatorTag.NONLINEAR_WAVE) and not self.p > 2:
            raise SpaceError(f"{op.value} requires p > 2, got {self.p}")
        if self.potential is not None:
            V = np.asarray(self.potential(self.space.nodes), dtype=float)
            V = np.broadcast_to(V, self.space.nodes.shape).copy()
            if not np.all(np.isfinite(V)):
                raise SpaceError("potential is not finite at the quadrature nodes")
            V.setflags(write=False)
            object.__setattr__(self, "_V", V)

    @property
    def field_layout(self) -> str:
        return "Pair" if self.operator is OperatorTag.NONLINEAR_WAVE else "Single"

    @property
    def is_complex(self) -> bool:
        return self.operator is OperatorTag.NSE

    @property
    def state_shape(self) -> tuple[int, ...]:
        if self.field_layout == "Pair":
            return (2, self.space.dim)
        return (self.space.dim,)

    def rhs(self, y: np.ndarray) -> np.ndarray:
        """P∘A applied to a raw coefficient array (or stacked pair)."""
        S, op = self.space, self.operator
        if op is OperatorTag.BURGERS:
            return _burgers(S, y)
        if op is OperatorTag.VISCOUS_BURGERS:
            out = _burgers(S, y)
            if self.nu:
                out = out + self.nu * S.lap(y)
            return out
        if op is OperatorTag.LINEAR_ADVECTION:
            return -self.c * S.D(y)
        if op is OperatorTag.NSE:
            return _nse(S, y, self._V, self.p, self.coupling)
        return _wave(S, y, self.p, self.coupling)

    def negated(self) -> "_Reversed":
        """The same problem with time reversed (rhs multiplied by -1)."""
        return _Reversed(self)

    # -- monitored functionals ---------------------------------------------

    def monitor_names(self) -> tuple[str, ...]:
        op = self.operator
        if op is OperatorTag.NSE:
            return ("M", "E", "E_plus")
        if op is OperatorTag.NONLINEAR_WAVE:
            return ("E",)
        return ("P", "E")

    def monitors(self, y: np.ndarray) -> dict[str, float]:
        S, op = self.space, self.operator
        if op is OperatorTag.NSE:
            return nse_functionals(S, y, self._V, self.p)
        if op is OperatorTag.NONLINEAR_WAVE:
            return {"E": wave_energy(S, y, self.p, self.coupling)}
        return {"P": float(y[0] * 2 * S.beta), "E": 0.5 * float(S.inner(y, y))}


class _Reversed:
    def __init__(self, problem: EvolutionProblem):
        self._problem = problem

    def __getattr__(self, name):
        return getattr(self._problem, name)

    def rhs(self, y):
        return -self._problem.rhs(y)


def nse_functionals(space: FunctionSpace, c: np.ndarray, V: np.ndarray | None,
                    p: float) -> dict[str, float]:
    """Mass and the two signed energy variants of the NSE.

    ``E`` is the functional the equation conserves,
    int 1/2|u_x|^2 + V|u|^2 - (2/p)|u|^p; ``E_plus`` carries +(2/p)|u|^p.
    """
    u = space.synth(c)
    dc = space.D(c)
    grad2 = float(space.inner(dc, dc).real)
    mod2 = u.real ** 2 + u.imag ** 2
    pot = float(space.quad(V * mod2)) if V is not None else 0.0
    up = float(space.quad(mod2 ** (p / 2)))
    return {
        "M": float(space.inner(c, c).real),
        "E": 0.5 * grad2 + pot - 2.0 / p * up,
        "E_plus": 0.5 * grad2 + pot + 2.0 / p * up,
    }


def wave_energy(space: FunctionSpace, y: np.ndarray, p: float, coupling: float = 1.0) -> float:
    """1/2 int phi^2 + 1/2 int |psi_x|^2 + (1/p) int |psi|^p."""
    psi, phi = y
    kin = 0.5 * float(space.inner(phi, phi))
    grad = 0.5 * float(np.sum(space.basis_norms * space.wavenumbers ** 2 * psi ** 2))
    pot = coupling / p * float(space.quad(np.abs(space.synth(psi)) ** p))
    return kin + grad + pot


# -- public operations on CoeffVectors --------------------------------------

def _require(space: FunctionSpace, u: CoeffVector, *, periodic=None, complex_=None):
    if not isinstance(u, CoeffVector) or u.space is not space:
        raise SpaceError("vector does not belong to this space")
    if periodic is not None and space.periodic != periodic:
        raise SpaceError("operator requires a %s space" % ("Periodic" if periodic else "Dirichlet"))
    if complex_ is not None and u.is_complex != complex_:
        raise SpaceError("operator requires a %s vector" % ("complex" if complex_ else "real"))


def burgers_rhs(space: FunctionSpace, u: CoeffVector) -> CoeffVector:
    """-P(u Du)."""
    _require(space, u, periodic=True, complex_=False)
    return CoeffVector(space, _burgers(space, u.coeffs))


def viscous_burgers_rhs(space: FunctionSpace, u: CoeffVector, nu: float) -> CoeffVector:
    if not nu >= 0:
        raise SpaceError(f"viscosity must be nonnegative, got {nu}")
    _require(space, u, periodic=True, complex_=False)
    out = _burgers(space, u.coeffs)
    if nu:
        out = out + nu * space.lap(u.coeffs)
    return CoeffVector(space, out)


def advection_rhs(space: FunctionSpace, u: CoeffVector, c: float) -> CoeffVector:
    _require(space, u, periodic=True)
    return CoeffVector(space, -c * space.D(u.coeffs))


def nse_rhs(space: FunctionSpace, u: CoeffVector, V=None, p: float = 4.0) -> CoeffVector:
    """-i P(-1/2 Δu + V u - |u|^(p-2) u) for complex u."""
    if not p > 2:
        raise SpaceError(f"NSE requires p > 2, got {p}")
    _require(space, u, periodic=True, complex_=True)
    Vn = None
    if V is not None:
        Vn = np.broadcast_to(np.asarray(V(space.nodes), dtype=float), space.nodes.shape)
    return CoeffVector(space, _nse(space, u.coeffs, Vn, p))


def wave_rhs(space: FunctionSpace, state, p: float = 4.0, coupling: float = 1.0):
    """(phi, P(Δpsi - coupling |psi|^(p-2) psi)) for the first-order wave system."""
    if not p > 2:
        raise SpaceError(f"NonlinearWave requires p > 2, got {p}")
    try:
        psi, phi = state
    except (TypeError, ValueError):
        raise SpaceError("wave state must be a (psi, phi) pair") from None
    for v in (psi, phi):
        _require(space, v, periodic=False, complex_=False)
    d_psi, d_phi = _wave(space, np.stack([psi.coeffs, phi.coeffs]), p, coupling)
    return CoeffVector(space, d_psi), CoeffVector(space, d_phi)


# -- entropy pairs ----------------------------------------------------------

@dataclass(frozen=True)
class Entropy:
    """An entropy G with derivative dG; ``power`` marks the monomial u**n."""

    G: Callable
    dG: Callable
    name: str = "G"
    power: int | None = None

    @classmethod
    def monomial(cls, n: int) -> "Entropy":
        return cls(lambda u: np.asarray(u, dtype=float) ** n,
                   lambda u: n * np.asarray(u, dtype=float) ** (n - 1),
                   name=f"u^{n}", power=n)

    def __call__(self, u):
        return self.G(u)


def entropy_flux(entropy: Entropy) -> Callable:
    """The entropy flux H(u) = int_0^u s G'(s) ds.

    Monomials use the closed form n/(n+1) u^(n+1); anything else is
    integrated adaptively to relative tolerance 1e-10.
    """
    g0 = np.asarray(entropy.G(0.0), dtype=float)
    if abs(float(g0)) > 1e-14:
        raise SpaceError("an entropy must satisfy G(0) = 0")
    if entropy.power is not None:
        n = entropy.power
        return lambda u: n / (n + 1) * np.asarray(u, dtype=float) ** (n + 1)

    def integrand(s):
        v = float(entropy.dG(s))
        if not np.isfinite(v):
            raise SpaceError(f"G' is not finite at {s}")
        return s * v

    def H(u):
        u = np.asarray(u, dtype=float)
        flat = [integrate.quad(integrand, 0.0, ui, epsabs=0.0, epsrel=1e-10, limit=200)[0]
                for ui in u.reshape(-1)]
        return np.array(flat).reshape(u.shape) if u.shape else flat[0]

    return H
