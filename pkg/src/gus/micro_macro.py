"""Split a Galerkin Burgers solution u into a macroscopic part and a remainder.

u = P(w) + psi, where w is a macroscopic field (an entropy reference
solution or a mollified copy of u) and psi collects what the Galerkin
solution carries beyond it.  The diagnostics measure the momentum of psi,
its correlation with P(w), the energy split and the growth of the "heat"
1/2 |psi|^2, and how well psi obeys the transport law
psi_t + d/dx((w + psi/2) psi) = F with F concentrated near the shock.
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .entropy import CharacteristicsField, PreconditionError, SineEntropySolution
from .evolution import Trajectory, fmt
from .operators import OperatorTag
from .space import project


class MacroMode(enum.Enum):
    ENTROPY_REFERENCE = "EntropyReference"
    MOLLIFIED = "Mollified"


@dataclass(frozen=True)
class Mollified:
    """Gaussian mollification of the Galerkin solution with standard deviation ``width``."""

    width: float

    def __post_init__(self):
        if not self.width >= 0:
            raise ValueError(f"mollification width must be nonnegative, got {self.width}")


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Per sampled time: coefficients of P(w) and of psi = u - P(w).

    ``w`` is the macroscopic field as a callable (t, x) -> values; for the
    mollified mode it is the mollified Galerkin solution itself.
    """

    trajectory: Trajectory
    mode: MacroMode
    w: Callable
    macro: np.ndarray
    psi: np.ndarray
    t_star: float
    width: float | None = None

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    @property
    def space(self):
        return self.trajectory.space


def _sine_reference(traj: Trajectory):
    """Entropy solution for data that is a single first-mode sine wave, if it is one."""
    S = traj.space
    c = traj.states[0]
    if S.K == 0:
        return None
    a1, b1 = c[1], c[S.K + 1]
    rest = np.delete(c, [1, S.K + 1])
    amp = float(np.hypot(a1, b1))
    if amp == 0 or np.max(np.abs(rest)) > 1e-12 * amp:
        return None
    # a1 cos + b1 sin = amp sin(pi (x - shift)/beta)
    shift = -S.beta / np.pi * float(np.arctan2(a1, b1))
    return SineEntropySolution(amp, S.beta, shift)


def _smooth_reference(traj: Trajectory):
    """Characteristics solution for the trigonometric initial polynomial, before its shock."""
    S = traj.space
    c0 = traj.states[0].copy()
    dc0 = S.D(c0)

    def u0(x):
        return S.synth_at(c0, np.atleast_1d(x)).reshape(np.shape(x))

    def du0(x):
        return S.synth_at(dc0, np.atleast_1d(x)).reshape(np.shape(x))

    return CharacteristicsField(u0, du0, S.domain)


def entropy_reference(traj: Trajectory):
    """The oracle covering the trajectory's initial data, or raise if none does."""
    ref = _sine_reference(traj)
    if ref is not None:
        return ref
    field = _smooth_reference(traj)
    if traj.times[-1] < field.t_star:
        return field
    raise PreconditionError("no entropy oracle covers this initial data past its shock time; "
                            "use the Mollified mode")


def decompose(traj: Trajectory, macro_mode="EntropyReference", reference=None,
              oversample: int = 8) -> Decomposition:
    """psi(t) = u(t) - P(w(t)) at every sampled time.

    ``macro_mode`` is "EntropyReference" or a :class:`Mollified` instance.
    In the reference mode ``reference`` may supply the field w(t, x);
    otherwise the sine-wave entropy solution or the characteristics
    solution is chosen from the initial data.  P(w) uses the quadrature
    grid refined ``oversample`` times.
    """
    prob = traj.problem
    if prob.operator not in (OperatorTag.BURGERS, OperatorTag.VISCOUS_BURGERS):
        raise PreconditionError("decomposition needs a real Burgers trajectory")
    S = traj.space
    states = np.asarray(traj.states)
    if isinstance(macro_mode, Mollified):
        k = S.wavenumbers
        damp = np.exp(-0.5 * (k * macro_mode.width) ** 2)
        macro = states * damp
        rows = {float(t): m for t, m in zip(traj.times, macro)}

        def w(t, x, _rows=rows):
            return S.synth_at(_rows[float(t)], x)

        psi = states - macro
        return Decomposition(traj, MacroMode.MOLLIFIED, w, macro, psi, float("inf"),
                             macro_mode.width)
    if MacroMode(macro_mode) is not MacroMode.ENTROPY_REFERENCE:
        raise ValueError(f"unknown macro mode {macro_mode!r}")
    ref = reference if reference is not None else entropy_reference(traj)
    macro = np.array([project(S, lambda x, t=t: ref(t, x), oversample).coeffs
                      for t in traj.times])
    t_star = float(getattr(ref, "t_star", float("inf")))
    return Decomposition(traj, MacroMode.ENTROPY_REFERENCE, ref, macro, states - macro, t_star)


@dataclass(frozen=True)
class MicroReport:
    times: np.ndarray
    psi_momentum: np.ndarray
    psi_w_corr: np.ndarray
    heat: np.ndarray
    macro_energy: np.ndarray
    cross_term: np.ndarray
    energy: np.ndarray
    t_star: float
    heat_tolerance: float

    @property
    def post_shock(self) -> np.ndarray:
        return self.times > self.t_star

    @property
    def mean_post_shock_corr(self) -> float:
        m = self.post_shock
        return float(np.mean(np.abs(self.psi_w_corr[m]))) if m.any() else float("nan")

    @property
    def min_heat_increment(self) -> float:
        h = self.heat[self.post_shock]
        return float(np.min(np.diff(h))) if len(h) > 1 else 0.0

    @property
    def heat_nondecreasing(self) -> bool:
        return self.min_heat_increment >= -self.heat_tolerance

    @property
    def budget_error(self) -> np.ndarray:
        """E(u) - (macro energy + heat + cross term); zero up to round-off."""
        return self.energy - (self.macro_energy + self.heat + self.cross_term)

    @property
    def macro_plus_heat_drift(self) -> float:
        """max |macro energy + heat - E(0)|."""
        return float(np.max(np.abs(self.macro_energy + self.heat - self.energy[0])))


def micro_diagnostics(dec: Decomposition, heat_tolerance: float | None = None) -> MicroReport:
    """Per sampled time: int psi, normalized <psi, P(w)>, heat and the energy split.

    heat = 1/2 int psi^2, macro energy = 1/2 int P(w)^2, cross term = int P(w) psi,
    so that E(u) = macro + heat + cross exactly.  ``heat_tolerance``
    defaults to 1e-4 E(0) and is the allowed decrease between samples.
    """
    S = dec.space
    n = S.basis_norms
    psi, W = dec.psi, dec.macro
    states = np.asarray(dec.trajectory.states)
    heat = 0.5 * np.sum(n * psi * psi, axis=1)
    macro = 0.5 * np.sum(n * W * W, axis=1)
    cross = np.sum(n * psi * W, axis=1)
    energy = 0.5 * np.sum(n * states * states, axis=1)
    denom = np.sqrt(4 * heat * macro)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(denom > 0, cross / np.where(denom > 0, denom, 1.0), 0.0)
    mom = psi[:, 0] * n[0] if S.periodic else np.zeros(len(psi))
    tol = 1e-4 * energy[0] if heat_tolerance is None else heat_tolerance
    return MicroReport(dec.times, mom, corr, heat, macro, cross, energy, dec.t_star, tol)


@dataclass(frozen=True)
class TransportResidual:
    times: np.ndarray
    outside: np.ndarray
    inside: np.ndarray
    outside_rms: np.ndarray
    inside_rms: np.ndarray
    shock_position: np.ndarray
    band: float

    def ratio(self, mask=None) -> float:
        """(time-averaged inside norm) / (time-averaged outside norm)."""
        m = np.ones(len(self.times), bool) if mask is None else mask
        return float(np.mean(self.inside[m]) / np.mean(self.outside[m]))

    def rms_ratio(self, mask=None) -> float:
        m = np.ones(len(self.times), bool) if mask is None else mask
        return float(np.mean(self.inside_rms[m]) / np.mean(self.outside_rms[m]))


def _periodic_distance(x, x0, L):
    d = np.abs(x - x0) % L
    return np.minimum(d, L - d)


def transport_residual(dec: Decomposition, shock_exclusion_width: float) -> TransportResidual:
    """r = dpsi/dt + D P((w + psi/2) psi) at interior sampled times.

    The time derivative is a centered difference of the stored samples,
    which must be uniformly spaced.  The shock is located at the node where
    the slope of u, mollified over four grid widths, is most negative.  L2
    norms of r are reported separately inside the band of half-width
    ``shock_exclusion_width`` around it (where the source F may live) and
    outside.  Before the shock time the band is empty.
    """
    if not shock_exclusion_width > 0:
        raise ValueError("shock_exclusion_width must be positive")
    t = dec.times
    if len(t) < 3:
        raise PreconditionError("transport residual needs at least 3 sampled times")
    steps = np.diff(t)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, t[-1]):
        raise PreconditionError("transport residual needs uniformly spaced samples")
    h = steps[0]
    S = dec.space
    x, wq = S.nodes, S.weights
    states = np.asarray(dec.trajectory.states)
    # a Burgers shock is compressive and survives mollification over a few
    # grid cells; the oscillations that thermalize the solution do not
    smooth = np.exp(-0.5 * (S.wavenumbers * 4 * S.beta / max(S.K, 1)) ** 2)
    out, ins, out_rms, in_rms, pos = [], [], [], [], []
    for j in range(1, len(t) - 1):
        psi = dec.psi[j]
        dpsi = (dec.psi[j + 1] - dec.psi[j - 1]) / (2 * h)
        wv = np.asarray(dec.w(t[j], x), dtype=float)
        pv = S.synth(psi)
        r = S.synth(dpsi + S.D(S.analyze((wv + 0.5 * pv) * pv)))
        du = S.synth(S.D(states[j] * smooth))
        xs = x[int(np.argmin(du))]
        if t[j] > dec.t_star:
            band = _periodic_distance(x, xs, S.length) <= shock_exclusion_width
        else:
            band = np.zeros_like(x, dtype=bool)
        r2 = r * r * wq
        ins.append(float(np.sqrt(np.sum(r2[band]))))
        out.append(float(np.sqrt(np.sum(r2[~band]))))
        in_rms.append(float(np.sqrt(np.sum(r2[band]) / max(np.sum(wq[band]), 1e-300))))
        out_rms.append(float(np.sqrt(np.sum(r2[~band]) / max(np.sum(wq[~band]), 1e-300))))
        pos.append(float(xs))
    return TransportResidual(t[1:-1], np.array(out), np.array(ins), np.array(out_rms),
                             np.array(in_rms), np.array(pos), shock_exclusion_width)


def diagnostics_csv(report: MicroReport, transport: TransportResidual | None = None) -> str:
    """One row per sampled time; transport columns are empty at the end points."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["time", "psi_momentum", "psi_w_corr", "heat", "macro_energy", "cross_term",
                "transport_residual_out", "transport_residual_in"])
    tr = {}
    if transport is not None:
        tr = {round(float(t), 12): (o, i) for t, o, i in
              zip(transport.times, transport.outside, transport.inside)}
    for k, t in enumerate(report.times):
        o, i = tr.get(round(float(t), 12), ("", ""))
        w.writerow([fmt(t), fmt(report.psi_momentum[k]), fmt(report.psi_w_corr[k]),
                    fmt(report.heat[k]), fmt(report.macro_energy[k]), fmt(report.cross_term[k]),
                    fmt(o) if o != "" else "", fmt(i) if i != "" else ""])
    return out.getvalue()
