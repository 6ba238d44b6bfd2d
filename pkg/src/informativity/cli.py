"""Command-line front end.

    informativity check    --problem P.json [--properties all] [--method pencil|geometric|both]
    informativity validate --problem P.json [--samples 500]
    informativity simulate --system S.json --horizon T [--noise-scale 1] --output P.json

Exit codes: 0 clean run, 2 input error, 3 inconsistent data, 4 critical
disagreement (between methods, or between a verdict and the oracle).
Verdicts themselves never change the exit code.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometric import geometric_test
from .linalg import DEFAULT_TOL, InputError, Tolerances, as_matrix
from .oracle import cross_validate
from .pencil import DEFAULT_SEED, NumericalInstabilityError
from .problem import (
    InconsistentDataError,
    SystemStructure,
    build_reduction,
    classify_noise,
    load_problem,
    problem_to_dict,
    simulate,
)
from .properties import GEOMETRIC_PROPERTIES, Property, Verdict
from .rank_tests import informativity_test, prepare

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_INCONSISTENT, EXIT_CRITICAL = 0, 2, 3, 4


@dataclass
class RunConfig:
    problem_path: str
    properties: list[Property] | str = "all"
    method: str = "pencil"
    rank_rtol: float | None = None
    boundary_delta: float | None = None
    seed: int = DEFAULT_SEED
    samples: int = 500
    fmt: str = "json"
    output: str | None = None

    def __post_init__(self):
        if self.method not in ("pencil", "geometric", "both"):
            raise InputError(f"--method: expected pencil, geometric or both, got {self.method!r}")
        if self.fmt not in ("text", "json"):
            raise InputError(f"--format: expected text or json, got {self.fmt!r}")
        if isinstance(self.properties, str):
            self.properties = parse_properties(self.properties, self.method)
        elif self.method == "geometric":
            bad = [p.value for p in self.properties if p not in GEOMETRIC_PROPERTIES]
            if bad:
                raise InputError(f"--method geometric does not support {', '.join(bad)}")
        if self.samples < 0:
            raise InputError("--samples must be non-negative")
        self.tolerances(DEFAULT_TOL)  # rejects bad overrides before any work

    def tolerances(self, base: Tolerances) -> Tolerances:
        kw = {"rank_rtol": base.rank_rtol, "boundary_delta": base.boundary_delta,
              "containment_atol": base.containment_atol}
        if self.rank_rtol is not None:
            kw["rank_rtol"] = self.rank_rtol
        if self.boundary_delta is not None:
            kw["boundary_delta"] = self.boundary_delta
        return Tolerances(**kw)


def parse_properties(text: str, method: str = "pencil") -> list[Property]:
    if text.strip().lower() == "all":
        return list(GEOMETRIC_PROPERTIES) if method == "geometric" else list(Property)
    props = []
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            props.append(Property.parse(item))
        except ValueError as exc:
            raise InputError(f"--properties: {exc}") from exc
    if not props:
        raise InputError("--properties: empty list")
    if method == "geometric":
        bad = [p.value for p in props if p not in GEOMETRIC_PROPERTIES]
        if bad:
            raise InputError(f"--method geometric does not support {', '.join(bad)}")
    return props


def complex_json(z) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def verdict_json(v: Verdict, seconds: float) -> dict:
    out = {
        "status": v.status.value,
        "informative": v.informative,
        "method": v.method,
        "precondition": v.precondition_holds,
        "explanation": v.explanation,
        "witness": v.witness,
        "seconds": seconds,
    }
    rv = v.rank_verdict
    if rv is not None:
        out["normal_rank"] = rv.normal_rank
        out["target_rank"] = rv.target_rank
        out["region"] = rv.region.value
        out["witnesses"] = [{"lambda": complex_json(lam), "rank": rk} for lam, rk in rv.witnesses]
        out["marginal_witnesses"] = [{"lambda": complex_json(lam), "rank": rk}
                                     for lam, rk in rv.marginal_witnesses]
    trace = v.details.get("trace")
    if trace is not None:
        out["trace"] = trace
    extra = {k: val for k, val in v.details.items() if k != "trace"}
    if extra:
        out["details"] = extra
    return out


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    res = fn(*args, **kw)
    return res, time.perf_counter() - t0


def cmd_check(cfg: RunConfig) -> tuple[int, dict]:
    sys_, data, base_tol = load_problem(cfg.problem_path)
    tol = cfg.tolerances(base_tol)
    red = prepare(sys_, data, tol)
    results = []
    disagreements = 0
    for prop in cfg.properties:
        entry = {"property": prop.value, "verdicts": {}}
        if cfg.method in ("pencil", "both"):
            v, dt = _timed(informativity_test, sys_, data, prop, tol, cfg.seed, reduction=red)
            entry["verdicts"]["pencil"] = verdict_json(v, dt)
        if cfg.method in ("geometric", "both") and prop in GEOMETRIC_PROPERTIES:
            g, dt = _timed(geometric_test, sys_, data, prop, tol, reduction=red)
            entry["verdicts"]["geometric"] = verdict_json(g, dt)
        statuses = {v["status"] for v in entry["verdicts"].values()}
        entry["status"] = statuses.pop() if len(statuses) == 1 else "disagreement"
        if entry["status"] == "disagreement":
            disagreements += 1
        results.append(entry)
    report = _header("check", cfg, tol, sys_, data, red)
    report["results"] = results
    report["disagreements"] = disagreements
    return (EXIT_CRITICAL if disagreements else EXIT_OK), report


def cmd_validate(cfg: RunConfig) -> tuple[int, dict]:
    sys_, data, base_tol = load_problem(cfg.problem_path)
    tol = cfg.tolerances(base_tol)
    red = prepare(sys_, data, tol, build_reduction(sys_, data, tol))
    xv = cross_validate(sys_, data, cfg.properties, cfg.samples, cfg.seed, tol, reduction=red)
    report = _header("validate", cfg, tol, sys_, data, red)
    report.update({k: v for k, v in xv.items() if k not in ("schema_version", "kind", "seed")})
    return (EXIT_OK if xv["status"] == "ok" else EXIT_CRITICAL), report


def _header(kind, cfg, tol, sys_, data, red) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "problem": str(cfg.problem_path),
        "method": cfg.method,
        "seed": cfg.seed,
        "tolerances": {"rank_rtol": tol.rank_rtol, "boundary_delta": tol.boundary_delta,
                       "containment_atol": tol.containment_atol},
        "dimensions": {"n": sys_.n, "m": sys_.m, "p": sys_.p, "noise": sys_.r_w, "T": data.T},
        "noise_pattern": classify_noise(sys_).value,
        "annihilator_rows": int(red.MN.shape[0]),
    }


# --- simulate ------------------------------------------------------------------

def load_system(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read system file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("system file: top-level value must be an object")
    return doc


def _opt(doc, key, shape):
    if key not in doc:
        return None
    return as_matrix(doc[key], *shape, name=key)


def cmd_simulate(system_path, horizon: int, noise_scale: float = 1.0, input_scale: float = 1.0,
                 seed: int = DEFAULT_SEED) -> dict:
    """Simulate the system in ``system_path`` and return a problem document.

    The file holds ``A_true`` (or ``A``), ``B``, ``C``, ``D``, ``E``, ``F`` and
    optionally ``x0``, ``u`` (m x T) and ``w`` (r x T); whatever is missing is
    drawn from a seeded standard normal.
    """
    doc = load_system(system_path)
    if horizon < 1:
        raise InputError("--horizon must be at least 1")
    key = "A_true" if "A_true" in doc else "A"
    if key not in doc:
        raise InputError("system file: missing A_true")
    A = as_matrix(doc[key], name=key)
    n = A.shape[0]
    if A.shape != (n, n):
        raise InputError(f"{key}: must be square, got {A.shape}")
    B = as_matrix(doc.get("B", []), rows=n, name="B")
    C = as_matrix(doc.get("C", []), cols=n, name="C")
    m, p = B.shape[1], C.shape[0]
    D = as_matrix(doc.get("D", np.zeros((p, m))), p, m, "D")
    E = as_matrix(doc.get("E", []), rows=n, name="E")
    F = as_matrix(doc.get("F", np.zeros((p, E.shape[1]))), p, E.shape[1], "F")
    sys_ = SystemStructure(B, C, D, E, F)
    rng = np.random.default_rng(seed)
    x0 = np.asarray(doc["x0"], float) if "x0" in doc else rng.standard_normal(n)
    U = _opt(doc, "u", (m, horizon))
    if U is None:
        U = input_scale * rng.standard_normal((m, horizon))
    W = _opt(doc, "w", (sys_.r_w, horizon))
    if W is None:
        W = noise_scale * rng.standard_normal((sys_.r_w, horizon))
    data = simulate(A, sys_, x0, U, W)
    return problem_to_dict(sys_, data)


# --- text output -----------------------------------------------------------------

def render_text(report: dict) -> str:
    lines = [f"{report['kind']}: {report['problem']} "
             f"(n={report['dimensions']['n']}, T={report['dimensions']['T']}, "
             f"noise={report['noise_pattern']})"]
    if report["kind"] == "check":
        for r in report["results"]:
            parts = []
            for method, v in r["verdicts"].items():
                parts.append(f"{method}={v['status']}")
            lines.append(f"  {r['property']:<24} {r['status']:<16} {' '.join(parts)}")
            for method, v in r["verdicts"].items():
                lines.append(f"      [{method}] {v['explanation']}")
    else:
        for e in report["properties"]:
            lines.append(f"  {e['property']:<24} {e['verdict']:<16} check={e['check']}")
        lines.append(f"status: {report['status']} "
                     f"({report['critical_disagreements']} critical disagreements)")
    return "\n".join(lines)


def emit(report: dict, fmt: str, output: str | None):
    text = render_text(report) if fmt == "text" else json.dumps(report, indent=2)
    if output:
        Path(output).write_text(text + "\n")
    else:
        print(text)


# --- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="informativity",
                                     description="Informativity of noisy data for system properties.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--problem", required=True, help="problem JSON file")
        sp.add_argument("--properties", default="all", help="comma-separated list or 'all'")
        sp.add_argument("--method", default="pencil", choices=["pencil", "geometric", "both"])
        sp.add_argument("--rank-rtol", type=float, default=None)
        sp.add_argument("--boundary-delta", type=float, default=None)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--samples", type=int, default=500)
        sp.add_argument("--format", dest="fmt", default="json", choices=["text", "json"])
        sp.add_argument("--output", default=None)

    common(sub.add_parser("check", help="run informativity tests"))
    common(sub.add_parser("validate", help="cross-check verdicts against sampled systems"))
    sim = sub.add_parser("simulate", help="simulate a true system into a problem file")
    sim.add_argument("--system", required=True, help="JSON with A_true, B, C, D, E, F")
    sim.add_argument("--horizon", type=int, required=True)
    sim.add_argument("--noise-scale", type=float, default=1.0)
    sim.add_argument("--input-scale", type=float, default=1.0)
    sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sim.add_argument("--output", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            doc = cmd_simulate(args.system, args.horizon, args.noise_scale, args.input_scale, args.seed)
            text = json.dumps(doc, indent=2)
            if args.output:
                Path(args.output).write_text(text + "\n")
            else:
                print(text)
            return EXIT_OK
        cfg = RunConfig(args.problem, args.properties, args.method, args.rank_rtol,
                        args.boundary_delta, args.seed, args.samples, args.fmt, args.output)
        code, report = (cmd_check if args.command == "check" else cmd_validate)(cfg)
        emit(report, cfg.fmt, cfg.output)
        if code == EXIT_CRITICAL:
            print("error: critical disagreement, see report", file=sys.stderr)
        return code
    except InconsistentDataError as exc:
        print(f"error: inconsistent data: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (InputError, NumericalInstabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
