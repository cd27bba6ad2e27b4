"""Scenario runner: ``gus run <config.json> [--out DIR] [--workers N] [--quiet]``.

A scenario is a JSON object; its schema is ``CONFIG_SCHEMA`` below and is
documented in the README.  Unknown keys are rejected.  Each experiment
writes its CSV artifacts, a ``metrics.csv`` with every headline number,
and ``summary.txt`` rendered from those same metrics.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import entropy as ent
from .evolution import conservation_report, fmt, integrate
from .micro_macro import Mollified, decompose, diagnostics_csv, micro_diagnostics, transport_residual
from .operators import EvolutionProblem, OperatorTag
from .pairing import refinement_study
from .space import CoeffVector, SpaceError, build_space, project
from .stationary import (ContinuationError, StationaryProblem,
                         diagonal_operator, find_sphere_radius, galerkin_pairings,
                         p_laplacian_operator, solve_stationary)
from .testfunctions import test_function_suite

EXPERIMENTS = ("Evolve", "StationarySolve", "ViscositySweep", "MicroMacro",
               "RefinementStudy", "WeakResidualCheck")
FORMS = ("sine", "gaussian", "riemann", "sawtooth", "point-mass")

_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}
_beta = {"oneOf": [{"type": "number"}, {"type": "string", "pattern": r"^[0-9.]*\*?pi(/[0-9.]+)?$"}]}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_initial = _obj({
    "form": {"enum": list(FORMS)},
    "amplitude": _num, "shift": _num, "width": _num, "uL": _num, "uR": _num,
}, ["form"])

CONFIG_SCHEMA = _obj({
    "name": {"type": "string"},
    "experiment": {"enum": list(EXPERIMENTS)},
    "output": {"type": "string"},
    "space": _obj({"kind": {"enum": ["Periodic", "Dirichlet"]}, "beta": _beta,
                   "K": {"type": "integer"}}, ["kind", "beta", "K"]),
    "problem": _obj({
        "operator": {"enum": [t.value for t in OperatorTag]},
        "nu": _num, "p": _num, "c": _num,
        "potential": _obj({"form": {"enum": ["zero", "constant", "harmonic"]},
                           "value": _num}, ["form"]),
    }, ["operator"]),
    "initial": _initial,
    "velocity": _initial,
    "run": _obj({"T": _num, "dt": _num, "sample_stride": _pos_int, "seed": {"type": "integer"},
                 "method": {"enum": ["rk4", "rk6"]}}),
    "sweep": _obj({"nu_list": {"type": "array", "items": _num, "minItems": 1},
                   "comparison_times": {"type": "array", "items": _num, "minItems": 1},
                   "reference_nu": _num, "reference_K": _pos_int, "reference_dt": _num,
                   "reference": {"enum": ["viscous", "exact-sine"]}}, ["nu_list", "comparison_times"]),
    "micro_macro": _obj({"mode": {"enum": ["EntropyReference", "Mollified"]}, "width": _num,
                         "shock_exclusion_width": _num}),
    "refinement": _obj({"K_list": {"type": "array", "items": _pos_int, "minItems": 3},
                        "n_test_functions": _pos_int, "macro_reference": {"type": "boolean"}},
                       ["K_list"]),
    "stationary": _obj({"operator": {"enum": ["p-laplacian", "shifted-laplacian"]},
                        "p": _num, "forcing": _initial, "homotopy_steps": _pos_int,
                        "newton_tol": _num, "max_newton_iters": _pos_int,
                        "method": {"enum": ["auto", "natural", "arclength"]},
                        "sphere_samples": _pos_int}),
    "weak_residual": _obj({"uL": _num, "uR": _num, "solution": {"enum": ["entropy", "expansion"]},
                           "n_test_functions": _pos_int, "quad_resolution": _pos_int},
                          ["uL", "uR"]),
}, ["name", "experiment"])


class ConfigError(ValueError):
    pass


def load_config(path) -> dict:
    """Parse and validate a scenario file; errors name the line or field."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = ".".join(str(p) for p in e.absolute_path) or "<top level>"
        raise ConfigError(f"{path}: field {where}: {e.message}")
    return cfg


def _beta_value(v) -> float:
    if isinstance(v, (int, float)):
        return float(v)
    num, _, den = v.partition("/")
    factor = num.replace("pi", "").replace("*", "") or "1"
    return float(factor) * math.pi / (float(den) if den else 1.0)


def _space(cfg):
    s = cfg.get("space")
    if s is None:
        raise ConfigError("field space: required for this experiment")
    return build_space(s["kind"], _beta_value(s["beta"]), s["K"])


def initial_function(spec: dict, S):
    """Pointwise callable for a named initial profile (point masses excluded)."""
    a = spec.get("amplitude", 1.0)
    x0 = spec.get("shift", 0.0)
    width = spec.get("width", 1.0)
    form = spec["form"]
    if form == "sine":
        return lambda x: a * np.sin(np.pi * (x - x0) / S.beta)
    if form == "gaussian":
        if not width > 0:
            raise ConfigError("initial.width must be positive")
        return lambda x: a * np.exp(-((x - x0) / width) ** 2)
    if form == "riemann":
        uL, uR = spec.get("uL", 1.0), spec.get("uR", 0.0)
        return lambda x: np.where(x < x0, uL, uR) + 0.0 * x
    if form == "sawtooth":
        return lambda x: a * (((x - x0) / S.beta + 1) % 2 - 1)
    raise ConfigError(f"initial form {form!r} has no pointwise values")


def initial_vector(spec: dict, S) -> CoeffVector:
    """Projected initial data; a point mass uses its exact projection."""
    if spec["form"] == "point-mass":
        x0 = spec.get("shift", 0.0)
        if not S.contains(x0):
            raise ConfigError("initial.shift of a point mass must lie in the domain")
        a = spec.get("amplitude", 1.0)
        vals = np.array([S.basis_function(i)(np.array([x0]))[0] for i in range(S.dim)])
        return CoeffVector(S, a * vals / S.basis_norms)
    oversample = 8 if spec["form"] in ("riemann", "sawtooth") else 4
    return project(S, initial_function(spec, S), oversample)


def _potential(spec):
    if spec is None or spec["form"] == "zero":
        return None
    v = spec.get("value", 1.0)
    if spec["form"] == "constant":
        return lambda x: np.full_like(x, v)
    return lambda x: 0.5 * v * v * x * x


def _run_params(cfg, T=None, dt=None):
    r = cfg.get("run", {})
    T = r.get("T", T)
    dt = r.get("dt", dt)
    if T is None or dt is None:
        raise ConfigError("field run: T and dt are required for this experiment")
    return float(T), float(dt), r.get("sample_stride", 1), r.get("seed", 0), r.get("method", "rk4")


def _problem(cfg, S):
    p = cfg.get("problem")
    if p is None:
        raise ConfigError("field problem: required for this experiment")
    return EvolutionProblem(p["operator"], S, nu=p.get("nu", 0.0), p=p.get("p", 4.0),
                            c=p.get("c", 1.0), potential=_potential(p.get("potential")))


class Outputs:
    """Collects artifacts in memory; everything is written by one writer at the end."""

    def __init__(self):
        self.files: dict[str, str] = {}
        self.metrics: list[tuple[str, str]] = []
        self.verdicts: list[str] = []

    def metric(self, key, value):
        if isinstance(value, (bool, np.bool_)):
            text = str(int(value))
        elif isinstance(value, (int, np.integer)):
            text = str(int(value))
        elif isinstance(value, (float, np.floating)):
            text = fmt(value)
        else:
            text = str(value)
        self.metrics.append((key, text))

    def metrics_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(self.metrics)
        return out.getvalue()

    def summary(self, cfg) -> str:
        lines = [f"scenario: {cfg['name']}", f"experiment: {cfg['experiment']}", ""]
        width = max((len(k) for k, _ in self.metrics), default=0)
        lines += [f"{k.ljust(width)}  {v}" for k, v in self.metrics]
        if self.verdicts:
            lines += [""] + self.verdicts
        lines.append("")
        lines.append("all numbers above are also in metrics.csv")
        return "\n".join(lines) + "\n"


# -- experiments ---------------------------------------------------------------

def _evolve(cfg, out: Outputs, workers: int):
    S = _space(cfg)
    problem = _problem(cfg, S)
    T, dt, stride, _, method = _run_params(cfg)
    if "initial" not in cfg:
        raise ConfigError("field initial: required for Evolve")
    u0 = initial_vector(cfg["initial"], S)
    if problem.is_complex:
        u0 = u0.as_complex()
    if problem.field_layout == "Pair":
        v0 = initial_vector(cfg["velocity"], S) if "velocity" in cfg else CoeffVector(S, np.zeros(S.dim))
        u0 = (u0, v0)
    traj = integrate(problem, u0, T, dt, sample_stride=stride, method=method)
    coercive = "E"
    rep = conservation_report(traj, 1e-8, coercive)
    out.files["trajectory.csv"] = traj.to_csv()
    out.files["conservation.csv"] = rep.to_csv()
    out.metric("status", traj.status.value)
    if traj.t_est is not None:
        out.metric("T_est", traj.t_est)
    out.metric("steps", len(traj.monitor_times) - 1)
    for name, d in rep.functionals.items():
        out.metric(f"{name}_initial", d.initial)
        out.metric(f"{name}_max_rel_drift", d.max_rel_drift)
    out.metric("certificate", rep.certificate)
    out.verdicts.append(f"global-existence certificate ({coercive} nonincreasing within 1e-8): "
                        f"{'yes' if rep.certificate else 'no'}")


def _stationary(cfg, out: Outputs, workers: int):
    S = _space(cfg)
    st = cfg.get("stationary", {})
    forcing = st.get("forcing", {"form": "sine"})
    g = initial_vector(forcing, S)
    kind = st.get("operator", "p-laplacian")
    if kind == "p-laplacian":
        A = p_laplacian_operator(S, st.get("p", 4.0))
        f = g * -1.0  # Delta_p u - Delta u = g  <=>  A(u) = -g
    else:
        A = diagonal_operator(S, S.wavenumbers ** 2 + 1.0)
        f = g
    problem = StationaryProblem(S, A, f)
    R = find_sphere_radius(problem, 1.0, st.get("sphere_samples", 64), cfg.get("run", {}).get("seed", 0))
    u = solve_stationary(problem, st.get("homotopy_steps", 20), st.get("newton_tol", 1e-10),
                         st.get("max_newton_iters", 50), st.get("method", "auto"))
    res = problem.residual(u.coeffs)
    out.files["solution.csv"] = "index,coefficient,residual\n" + "".join(
        f"{i},{fmt(c)},{fmt(r)}\n" for i, (c, r) in enumerate(zip(u.coeffs, res)))
    out.metric("sphere_radius", R)
    out.metric("residual_norm", problem.residual_norm(u.coeffs))
    out.metric("max_galerkin_pairing", float(np.max(np.abs(galerkin_pairings(problem, u)))))
    out.metric("solution_l2_norm", u.norm())
    out.verdicts.append("sphere condition is a sampling certificate, not a proof")


def _sweep(cfg, out: Outputs, workers: int):
    S = _space(cfg)
    sw = cfg["sweep"] if "sweep" in cfg else None
    if sw is None:
        raise ConfigError("field sweep: required for ViscositySweep")
    T, dt, _, _, method = _run_params(cfg)
    u0 = initial_function(cfg.get("initial", {"form": "sine"}), S)
    reference = None
    if sw.get("reference", "viscous") == "exact-sine":
        init = cfg.get("initial", {"form": "sine"})
        if init["form"] != "sine":
            raise ConfigError("sweep.reference exact-sine needs sine initial data")
        reference = ent.SineEntropySolution(init.get("amplitude", 1.0), S.beta, init.get("shift", 0.0))
    res = ent.viscosity_sweep(u0, sw["nu_list"], S.K, dt, T, sw["comparison_times"], S.beta,
                              reference, sw.get("reference_nu", 1e-3), sw.get("reference_K", 1024),
                              sw.get("reference_dt", 5e-4), workers=workers, method=method)
    out.files["sweep.csv"] = res.to_csv()
    out.metric("reference", res.reference)
    for t in sorted({r.time for r in res.rows}):
        errs, flags = res.errors(t), res.flags(t)
        unsat = errs[~flags]
        dec = bool(len(unsat) >= 2 and np.all(np.diff(unsat) < 0))
        out.metric(f"t={fmt(t)}_strictly_decreasing_before_saturation", dec)
        out.metric(f"t={fmt(t)}_saturation_flagged", bool(flags.any()))
        for r in res.rows:
            if r.time == t:
                out.metric(f"t={fmt(t)}_nu={fmt(r.nu)}_L1", r.l1_error)
    for r in res.rows:
        if r.message:
            out.verdicts.append(f"nu={fmt(r.nu)} failed: {r.message}")


def _micro_macro(cfg, out: Outputs, workers: int):
    S = _space(cfg)
    problem = _problem(cfg, S)
    T, dt, stride, _, method = _run_params(cfg)
    u0 = initial_vector(cfg.get("initial", {"form": "sine"}), S)
    traj = integrate(problem, u0, T, dt, sample_stride=stride, method=method)
    mm = cfg.get("micro_macro", {})
    mode = Mollified(mm.get("width", 0.1)) if mm.get("mode") == "Mollified" else "EntropyReference"
    dec = decompose(traj, mode)
    rep = micro_diagnostics(dec)
    band = mm.get("shock_exclusion_width", 10 * S.beta / max(S.K, 1))
    tr = transport_residual(dec, band) if len(traj.times) >= 3 else None
    out.files["diagnostics.csv"] = diagnostics_csv(rep, tr)
    out.metric("t_star", dec.t_star)
    out.metric("max_abs_psi_momentum", float(np.max(np.abs(rep.psi_momentum))))
    out.metric("mean_post_shock_corr", rep.mean_post_shock_corr)
    out.metric("min_post_shock_heat_increment", rep.min_heat_increment)
    out.metric("heat_nondecreasing", rep.heat_nondecreasing)
    out.metric("max_budget_error", float(np.max(np.abs(rep.budget_error))))
    if tr is not None:
        post = tr.times > dec.t_star
        if post.any():
            out.metric("transport_in_out_ratio", tr.ratio(post))
            out.metric("transport_rms_in_out_ratio", tr.rms_ratio(post))
    out.verdicts.append("thresholds for correlation and transport are measured trends, "
                        "not rates from theory")


def _refinement(cfg, out: Outputs, workers: int):
    S = _space(cfg)
    rf = cfg.get("refinement")
    if rf is None:
        raise ConfigError("field refinement: required for RefinementStudy")
    T, dt, _, seed, method = _run_params(cfg)
    init = cfg.get("initial", {"form": "sine"})
    pcfg = cfg.get("problem", {"operator": "Burgers"})

    def family(K):
        SK = build_space(S.kind, S.beta, K)
        return _problem({"problem": pcfg}, SK), initial_vector(init, SK)

    lo, hi = S.domain
    suite = test_function_suite(rf.get("n_test_functions", 20), seed, (lo, hi), (0.0, T))
    reference = None
    if rf.get("macro_reference", False):
        if init["form"] != "sine":
            raise ConfigError("refinement.macro_reference needs sine initial data")
        reference = ent.SineEntropySolution(init.get("amplitude", 1.0), S.beta, init.get("shift", 0.0))
    study = refinement_study(family, rf["K_list"], suite, T, dt, method, reference, workers)
    out.files["study.csv"] = study.to_csv()
    out.metric("n_converged", int(np.sum(study.converged)))
    out.metric("n_test_functions", len(suite))
    if study.micro_ratio is not None:
        out.metric("n_micro_ratio_decreasing", int(np.sum(study.micro_decreasing)))
    out.verdicts.append("'converged' means increments decrease under refinement (finite stand-in "
                        "for infinitely close)")


def _weak(cfg, out: Outputs, workers: int):
    wr = cfg.get("weak_residual")
    if wr is None:
        raise ConfigError("field weak_residual: required for WeakResidualCheck")
    data = ent.RiemannData(wr["uL"], wr["uR"])
    field = ent.RiemannField(data, entropy=wr.get("solution", "entropy") == "entropy")
    T = cfg.get("run", {}).get("T", 1.0)
    seed = cfg.get("run", {}).get("seed", 0)
    suite = test_function_suite(wr.get("n_test_functions", 20), seed, (-1.0, 1.0), (0.0, T))
    rep = ent.weak_residual(field, field.initial, suite, T, wr.get("quad_resolution", 32))
    out.files["weak_residual.csv"] = rep.to_csv()
    out.metric("max_abs_residual", rep.max_abs)
    out.metric("passes_1e-8", rep.max_abs <= 1e-8)


_DISPATCH = {"Evolve": _evolve, "StationarySolve": _stationary, "ViscositySweep": _sweep,
             "MicroMacro": _micro_macro, "RefinementStudy": _refinement, "WeakResidualCheck": _weak}


def run(config_path, out_dir=None, workers: int = 1, quiet: bool = False) -> int:
    """Run one scenario; returns the process exit status."""
    try:
        cfg = load_config(config_path)
        outputs = Outputs()
        _DISPATCH[cfg["experiment"]](cfg, outputs, max(1, int(workers)))
    except (ConfigError, SpaceError, ent.PreconditionError, ContinuationError,
            ValueError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    target = Path(out_dir or cfg.get("output") or f"out_{cfg['name']}")
    target.mkdir(parents=True, exist_ok=True)
    outputs.files["metrics.csv"] = outputs.metrics_csv()
    outputs.files["summary.txt"] = outputs.summary(cfg)
    for name in sorted(outputs.files):
        with open(target / name, "w", newline="") as fh:
            fh.write(outputs.files[name])
    if not quiet:
        sys.stdout.write(outputs.files["summary.txt"])
        print(f"wrote {len(outputs.files)} files to {target}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory")
    r.add_argument("--workers", type=int, default=1, help="worker threads for sweeps and studies")
    r.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    if args.workers < 1:
        parser.error("--workers must be at least 1")
    return run(args.config, args.out, args.workers, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
