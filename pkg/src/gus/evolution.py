"""Time integration of the projected system du/dt = P A(u).

The integrators are explicit fixed-step Runge-Kutta schemes.  Nothing is
conserved by construction: the monitored functionals are evaluated after
every step and their drift is what :func:`conservation_report` measures.
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .operators import Entropy, EvolutionProblem
from .space import CoeffVector, SpaceError, project

# Butcher tableaux (a, b, c).  "rk6" is Butcher's 7-stage sixth-order method.
_TABLEAUX = {
    "rk4": (
        [[], [1 / 2], [0, 1 / 2], [0, 0, 1]],
        [1 / 6, 1 / 3, 1 / 3, 1 / 6],
        [0, 1 / 2, 1 / 2, 1],
    ),
    "rk6": (
        [[], [1 / 3], [0, 2 / 3], [1 / 12, 1 / 3, -1 / 12],
         [-1 / 16, 9 / 8, -3 / 16, -3 / 8], [0, 9 / 8, -3 / 8, -3 / 4, 1 / 2],
         [9 / 44, -9 / 11, 63 / 44, 18 / 11, 0, -16 / 11]],
        [11 / 120, 0, 27 / 40, 27 / 40, -4 / 15, -4 / 15, 11 / 120],
        [0, 1 / 3, 2 / 3, 1 / 3, 1 / 2, 1 / 2, 1],
    ),
}

METHODS = tuple(_TABLEAUX)


def rk_step(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, h: float,
            method: str = "rk4") -> np.ndarray:
    """One explicit Runge-Kutta step of an autonomous system."""
    try:
        a, b, _ = _TABLEAUX[method]
    except KeyError:
        raise ValueError(f"unknown integrator {method!r}; choose from {METHODS}") from None
    ks = []
    for row in a:
        yi = y
        for aij, kj in zip(row, ks):
            if aij:
                yi = yi + (h * aij) * kj
        ks.append(f(yi))
    out = y
    for bi, ki in zip(b, ks):
        if bi:
            out = out + (h * bi) * ki
    return out


class Status(enum.Enum):
    COMPLETED = "Completed"
    BLOW_UP = "BlowUpDetected"
    STEP_UNDERFLOW = "StepUnderflow"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled states of one run plus per-step monitor histories.

    ``times``/``states`` hold the samples (every ``sample_stride`` steps and
    the final state).  ``monitor_times``/``monitors`` hold every step.
    ``t_est`` is the last stable time when a blow-up was detected.
    """

    problem: EvolutionProblem
    times: np.ndarray
    states: np.ndarray
    monitor_times: np.ndarray
    monitors: dict[str, np.ndarray]
    monitor_scales: dict[str, float]
    status: Status
    dt: float
    method: str
    t_est: float | None = None
    message: str = ""

    def __len__(self):
        return len(self.times)

    @property
    def space(self):
        return self.problem.space

    def state(self, i: int):
        """Sample ``i`` as a CoeffVector, or a (psi, phi) pair for the wave system."""
        y = self.states[i]
        if self.problem.field_layout == "Pair":
            return CoeffVector(self.space, y[0]), CoeffVector(self.space, y[1])
        return CoeffVector(self.space, y)

    def sampled_monitor(self, name: str) -> np.ndarray:
        """Monitor values at the sample times."""
        idx = np.searchsorted(self.monitor_times, self.times - 1e-12 * max(1.0, self.times[-1]))
        return self.monitors[name][idx]

    def to_csv(self, stream=None) -> str:
        """CSV with time, the monitor columns and the coefficients, one row per sample."""
        own = stream is None
        stream = stream or io.StringIO()
        names = list(self.monitors)
        dim = self.space.dim
        if self.problem.field_layout == "Pair":
            coeff_cols = [f"psi_{k}" for k in range(dim)] + [f"phi_{k}" for k in range(dim)]
        elif self.problem.is_complex:
            coeff_cols = [f"c_{k}_{part}" for k in range(dim) for part in ("re", "im")]
        else:
            coeff_cols = [f"c_{k}" for k in range(dim)]
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["time"] + names + coeff_cols)
        mon = {n: self.sampled_monitor(n) for n in names}
        for i, t in enumerate(self.times):
            y = self.states[i]
            if self.problem.is_complex:
                flat = np.column_stack([y.real, y.imag]).reshape(-1)
            else:
                flat = np.asarray(y).reshape(-1)
            w.writerow([fmt(t)] + [fmt(mon[n][i]) for n in names] + [fmt(v) for v in flat])
        return stream.getvalue() if own else ""


def fmt(x) -> str:
    """Full-precision decimal rendering used in every CSV."""
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _as_state(problem: EvolutionProblem, u0) -> np.ndarray:
    S = problem.space

    def lift(v):
        # a pointwise function handle is projected onto the space
        return project(S, v, oversample=4) if callable(v) and not isinstance(v, CoeffVector) else v

    if problem.field_layout == "Pair" and isinstance(u0, tuple):
        u0 = tuple(lift(v) for v in u0)
    else:
        u0 = lift(u0)
    if problem.field_layout == "Pair":
        try:
            psi, phi = u0
        except (TypeError, ValueError):
            raise SpaceError("the wave system needs a (psi, phi) initial state") from None
        parts = []
        for v in (psi, phi):
            if isinstance(v, CoeffVector):
                if v.space is not S:
                    raise SpaceError("initial state does not belong to the problem space")
                v = v.coeffs
            parts.append(np.asarray(v, dtype=float))
        y = np.stack(parts)
    else:
        if isinstance(u0, CoeffVector):
            if u0.space is not S:
                raise SpaceError("initial state does not belong to the problem space")
            u0 = u0.coeffs
        y = np.array(u0, dtype=complex if problem.is_complex else float)
    if y.shape != problem.state_shape:
        raise SpaceError(f"initial state of shape {y.shape}, expected {problem.state_shape}")
    return y


def _state_norm(problem, y) -> float:
    S = problem.space
    if y.ndim == 2:
        return float(np.sqrt(sum(abs(S.inner(v, v)) for v in y)))
    return float(np.sqrt(abs(S.inner(y, y))))


def integrate(problem: EvolutionProblem, u0, T: float, dt: float,
              blowup_threshold: float | None = None, sample_stride: int = 1,
              method: str = "rk4", entropies: Sequence[Entropy] = ()) -> Trajectory:
    """Integrate the projected system from ``u0`` up to time ``T``.

    Parameters
    ----------
    problem : EvolutionProblem
    u0 : CoeffVector, coefficient array, function handle, or (psi, phi) pair
        Function handles are projected onto the space.
    T, dt : float
        Final time and fixed step; the step count is ``round(T/dt)``.
    blowup_threshold : float, optional
        Run stops with ``BlowUpDetected`` once the L2 norm of the state
        exceeds it.  Defaults to ``1e8 * max(|u0|, 1)``.
    sample_stride : int
        Store every ``sample_stride``-th state (the final one always).
    method : {"rk4", "rk6"}
    entropies : sequence of Entropy
        Extra functionals int G(u) dx monitored at every step, stored as
        ``G_0``, ``G_1``, ...
    """
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    if not T > 0 or dt > T * (1 + 1e-12):
        raise ValueError(f"need 0 < dt <= T, got dt={dt}, T={T}")
    if sample_stride < 1:
        raise ValueError("sample_stride must be a positive integer")
    if method not in _TABLEAUX:
        raise ValueError(f"unknown integrator {method!r}; choose from {METHODS}")
    y = _as_state(problem, u0)
    S = problem.space
    n_steps = int(round(T / dt))
    norm0 = _state_norm(problem, y)
    if blowup_threshold is None:
        blowup_threshold = 1e8 * max(norm0, 1.0)

    def mon(y):
        m = problem.monitors(y)
        if entropies:
            u = S.synth(y)
            for k, ent in enumerate(entropies):
                m[f"G_{k}"] = float(S.quad(ent.G(u)))
        return m

    m0 = mon(y)
    names = list(m0)
    hist = {n: np.empty(n_steps + 1) for n in names}
    for n in names:
        hist[n][0] = m0[n]
    # scale used for relative drifts when the initial value vanishes
    floor = np.sqrt(S.length) * norm0
    scales = {n: max(abs(m0[n]), floor if n in ("P",) or n.startswith("G_") else 0.0)
              for n in names}
    times, states = [0.0], [y.copy()]
    status, t_est, message = Status.COMPLETED, None, ""
    last = 0
    for i in range(1, n_steps + 1):
        y_new = rk_step(problem.rhs, y, dt, method)
        if not np.all(np.isfinite(y_new)):
            status = Status.STEP_UNDERFLOW
            message = f"non-finite state at step {i} (t={i * dt:.6g})"
            break
        if _state_norm(problem, y_new) > blowup_threshold:
            status = Status.BLOW_UP
            t_est = (i - 1) * dt
            message = f"state norm exceeded {blowup_threshold:.3g} at t={i * dt:.6g}"
            break
        y = y_new
        last = i
        m = mon(y)
        for n in names:
            hist[n][i] = m[n]
        if i % sample_stride == 0 or i == n_steps:
            times.append(i * dt)
            states.append(y.copy())
    if status is not Status.COMPLETED and times[-1] != last * dt:
        times.append(last * dt)
        states.append(y.copy())
    mt = np.arange(last + 1) * dt
    hist = {n: v[:last + 1] for n, v in hist.items()}
    arr = np.array(states)
    arr.setflags(write=False)
    return Trajectory(problem, np.array(times), arr, mt, hist, scales, status, dt, method,
                      t_est, message)


@dataclass(frozen=True)
class FunctionalDrift:
    initial: float
    max_abs_drift: float
    max_rel_drift: float
    monotone_nonincreasing: bool


@dataclass(frozen=True)
class ConservationReport:
    functionals: dict[str, FunctionalDrift]
    certificate: bool
    coercive: str
    tolerance: float

    def rows(self):
        for name, d in self.functionals.items():
            yield name, d.initial, d.max_abs_drift, d.max_rel_drift, d.monotone_nonincreasing

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["functional", "initial", "max_abs_drift", "max_rel_drift",
                    "monotone_nonincreasing", "coercive", "certificate"])
        for name, init, ad, rd, mono in self.rows():
            w.writerow([name, fmt(init), fmt(ad), fmt(rd), int(mono),
                        int(name == self.coercive), int(self.certificate)])
        return out.getvalue()


def conservation_report(traj: Trajectory, tolerance: float = 1e-8,
                        coercive_functional_tag: str = "E") -> ConservationReport:
    """Drift statistics of every monitored functional against its t=0 value.

    The certificate mirrors the global-existence argument: it holds when
    the run completed and the declared coercive functional never increased
    by more than ``tolerance`` (relative) over the whole run.
    """
    if len(traj.monitor_times) == 0:
        raise ValueError("empty trajectory")
    if coercive_functional_tag not in traj.monitors:
        raise KeyError(f"unknown functional {coercive_functional_tag!r}; "
                       f"monitored: {sorted(traj.monitors)}")
    out = {}
    for name, series in traj.monitors.items():
        I0 = float(series[0])
        drift = np.abs(series - I0)
        scale = traj.monitor_scales.get(name) or abs(I0) or 1.0
        inc = np.diff(series)
        mono = bool(np.all(inc <= tolerance * scale))
        out[name] = FunctionalDrift(I0, float(drift.max()), float(drift.max() / scale), mono)
    cert = traj.status is Status.COMPLETED and out[coercive_functional_tag].monotone_nonincreasing
    return ConservationReport(out, cert, coercive_functional_tag, tolerance)


def entropy_series(traj: Trajectory, G) -> np.ndarray:
    """(time, int G(u) dx) at every sampled time, as an (n, 2) array."""
    S = traj.space
    if traj.problem.field_layout == "Pair" or traj.problem.is_complex:
        raise SpaceError("entropy series are defined for real single-field trajectories")
    g = G.G if isinstance(G, Entropy) else G
    vals = []
    for y in traj.states:
        gu = np.asarray(g(S.synth(y)), dtype=float)
        if not np.all(np.isfinite(gu)):
            raise SpaceError("entropy is not finite at the sampled values")
        vals.append(S.quad(gu))
    return np.column_stack([traj.times, vals])
