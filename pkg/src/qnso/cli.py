"""Command-line interface.

Exit codes: 0 success, 1 bad input, 2 a negative mathematical verdict
(preservation violated, a necessary condition fails, an invariance check
fails, an orbit escapes the simplex, no fixed point found).
"""
from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import models
from .cubic import CubicMatrix, MatrixFormatError, check_conditions, check_edge_necessity, load_matrix
from .dynamics import (bifurcation_scan, find_fixed_points, logistic_map, lyapunov_exponent,
                       write_bifurcation_csv)
from .operator import DomainEscapeError, iterate, preservation_oracle, write_trajectory_csv

COMMANDS = ("check", "preserve", "simulate", "fixed-points", "bifurcation",
            "lyapunov", "invariants", "conjecture")

EXIT_OK, EXIT_INPUT, EXIT_VERDICT = 0, 1, 2

# parameter scanned by `bifurcation` and its default range, per model
_SCAN = {
    "logistic": ("mu", (2.5, 4.0)),
    "va": ("b", (-1.0, -0.25)),
    "v2": ("a", (0.5, 2.0)),
    "v3": ("a", (0.25, 2.75)),
}


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    mu: float | None = None
    a: float | None = None
    b: float | None = None
    c: float | None = None
    matrix: str | None = None
    init: list | None = None
    steps: int = 100
    samples: int = 10_000
    seed: int = 0
    tol: float | None = None
    transient: int = 1000
    keep: int = 256
    grid: int = 50
    param_range: tuple | None = None
    iters: int = 100_000
    out: str | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if (self.model is None) == (self.matrix is None):
            raise InputError("give exactly one of --model or --matrix")


def _spec(cfg: RunConfig) -> models.ModelSpec:
    need = {"logistic": ("mu",), "v1": ("a", "b", "c"), "va": ("b",), "v2": ("a",), "v3": ("a",)}
    if cfg.model not in need:
        raise InputError(f"unknown model {cfg.model!r}")
    vals = {}
    for name in need[cfg.model]:
        v = getattr(cfg, name)
        if v is None:
            raise InputError(f"model {cfg.model} needs --{name}")
        vals[name] = v
    try:
        return getattr(models, cfg.model)(**vals)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _matrix(cfg: RunConfig) -> tuple[CubicMatrix, dict]:
    if cfg.matrix is not None:
        try:
            P, changed = load_matrix(cfg.matrix)
        except FileNotFoundError:
            raise InputError(f"matrix file not found: {cfg.matrix}") from None
        except MatrixFormatError as exc:
            raise InputError(str(exc)) from exc
        return P, {"source": cfg.matrix, "symmetrized_changed": changed}
    spec = _spec(cfg)
    return models.build(spec), {"source": spec.label()}


def _start(cfg: RunConfig, m: int) -> np.ndarray:
    if cfg.init is None:
        x = np.arange(1, m + 1, dtype=float)
        return x / x.sum()
    x = np.array(cfg.init, dtype=float)
    if x.size != m:
        raise InputError(f"--init needs {m} comma-separated values, got {x.size}")
    if np.any(x < -1e-9) or abs(x.sum() - 1.0) > 1e-9:
        raise InputError(f"--init {x.tolist()} is not on the simplex")
    return x


def _emit_json(doc, cfg: RunConfig, stdout) -> None:
    text = json.dumps(doc, indent=2, allow_nan=True) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        stdout.write(text)


def _emit_csv(writer, obj, cfg: RunConfig, stdout) -> None:
    if cfg.out:
        writer(obj, cfg.out)
    else:
        buf = io.StringIO()
        writer(obj, buf)
        stdout.write(buf.getvalue())


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Execute one command; returns the process exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        return _dispatch(cfg, stdout, stderr)
    except (InputError, ValueError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


def _dispatch(cfg: RunConfig, stdout, stderr) -> int:
    cmd = cfg.command
    if cmd == "check":
        P, meta = _matrix(cfg)
        rep = check_conditions(P, 1e-12 if cfg.tol is None else cfg.tol)
        doc = {**meta, **rep.to_dict(), "edge_necessity": check_edge_necessity(P).to_dict()}
        _emit_json(doc, cfg, stdout)
        return EXIT_OK if rep.necessary else EXIT_VERDICT

    if cmd == "preserve":
        P, meta = _matrix(cfg)
        v = preservation_oracle(P, cfg.samples, cfg.seed, 1e-12 if cfg.tol is None else cfg.tol)
        _emit_json({**meta, **v.to_dict()}, cfg, stdout)
        return EXIT_OK if v.preserved else EXIT_VERDICT

    if cmd == "simulate":
        P, meta = _matrix(cfg)
        x0 = _start(cfg, P.m)
        try:
            traj = iterate(P, x0, cfg.steps, operator_id=meta["source"])
        except DomainEscapeError as exc:
            stderr.write(f"domain escape: {exc}\n")
            return EXIT_VERDICT
        _emit_csv(write_trajectory_csv, traj, cfg, stdout)
        return EXIT_OK

    if cmd == "fixed-points":
        P, _ = _matrix(cfg)
        tol = 1e-10 if cfg.tol is None else cfg.tol
        recs = find_fixed_points(P, tol=tol)
        _emit_json([r.to_dict() for r in recs], cfg, stdout)
        line = [r for r in recs if not r.isolated]
        if line:
            p0 = line[0].point.coords
            d = np.array(line[0].direction, dtype=float)
            stderr.write("non-isolated fixed points: affine hull {x = p + s d}, "
                         f"p = {p0.tolist()}, d = {d.tolist()} ({len(line)} representatives)\n")
        if not recs:
            stderr.write("no fixed point found from any seed\n")
            return EXIT_VERDICT
        return EXIT_OK

    if cmd == "bifurcation":
        if cfg.model not in _SCAN:
            raise InputError("bifurcation needs --model logistic, va, v2 or v3")
        name, default = _SCAN[cfg.model]
        lo, hi = cfg.param_range or default
        tol = 1e-6 if cfg.tol is None else cfg.tol

        def family(value):
            kw = {"mu": cfg.mu, "a": cfg.a, "b": cfg.b, "c": cfg.c, name: value}
            spec = _spec(RunConfig("check", model=cfg.model, **kw))
            if cfg.model == "logistic":
                return logistic_map(spec.mu)
            return models.build(spec)

        x0 = None
        if cfg.init is not None:
            x0 = cfg.init[0] if cfg.model == "logistic" else cfg.init
        scan = bifurcation_scan(family, (lo, hi), cfg.grid, cfg.transient, cfg.keep,
                                x0=x0, tol=tol, parameter=name)
        _emit_csv(write_bifurcation_csv, scan, cfg, stdout)
        return EXIT_OK

    if cmd == "lyapunov":
        iters = cfg.iters
        if cfg.model in ("logistic", "va", "v1"):
            spec = _spec(cfg)
            f = models.reduction_1d(spec)
            x0 = 0.3 if cfg.init is None else cfg.init[-1 if cfg.model != "v1" else 0]
            est = lyapunov_exponent(f, x0, iters, cfg.transient)
            doc = {"source": spec.label(), "system": "interval map", **est.to_dict()}
        else:
            P, meta = _matrix(cfg)
            est = lyapunov_exponent(P, _start(cfg, P.m), iters, cfg.transient)
            doc = {**meta, "system": "operator (tangent space of the simplex)", **est.to_dict()}
            if cfg.model == "v2":
                doc["v2_mu"] = 2.0 + cfg.a
                doc["v2_criterion_chaotic"] = 2.0 + cfg.a > models.CHAOS_ONSET_MU
        _emit_json(doc, cfg, stdout)
        return EXIT_OK

    if cmd == "invariants":
        spec = _spec(cfg)
        if spec.kind == "v3":
            labels = [models.InvariantSetLabel(n) for n in ("M1", "M2", "M3", "M4", "M5")]
        elif spec.kind == "v2":
            labels = [models.InvariantSetLabel("M0"), models.InvariantSetLabel("M1"),
                      models.InvariantSetLabel("X")]
            labels += [models.InvariantSetLabel("Momega", omega=w) for w in (0.5, 1.0, 2.0)]
        else:
            raise InputError("invariants needs --model v2 or v3")
        results = [models.verify_invariance(spec, lab, cfg.samples if cfg.samples else 1000, cfg.seed)
                   for lab in labels]
        _emit_json([r.to_dict() for r in results], cfg, stdout)
        return EXIT_OK if all(r.passed for r in results) else EXIT_VERDICT

    if cmd == "conjecture":
        spec = _spec(cfg)
        if spec.kind != "v3":
            raise InputError("conjecture needs --model v3")
        trials = cfg.extras.get("trials", 100)
        stats = models.conjecture_experiment(spec.a, trials, cfg.steps, cfg.seed,
                                             1e-3 if cfg.tol is None else cfg.tol)
        doc = stats.to_dict()
        doc.pop("distances")
        _emit_json(doc, cfg, stdout)
        return EXIT_OK
    raise InputError(f"unknown command {cmd!r}")


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _range(text: str) -> tuple:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("--range needs two values lo,hi")
    return tuple(vals)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnso", description="Quadratic operators on the simplex: conditions, dynamics, invariant sets.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--model", choices=("logistic", "v1", "va", "v2", "v3"))
    parser.add_argument("--mu", type=float)
    parser.add_argument("--a", type=float)
    parser.add_argument("--b", type=float)
    parser.add_argument("--c", type=float)
    parser.add_argument("--matrix", help="JSON cubic-matrix file")
    parser.add_argument("--init", type=_floats, help="initial point, comma separated")
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--transient", type=int, default=1000)
    parser.add_argument("--keep", type=int, default=256)
    parser.add_argument("--grid", type=int, default=50)
    parser.add_argument("--range", dest="param_range", type=_range,
                        help="bifurcation parameter range lo,hi")
    parser.add_argument("--iters", type=int, default=100_000, help="Lyapunov iterations")
    parser.add_argument("--trials", type=int, default=100, help="conjecture trials")
    parser.add_argument("--out", help="output path (default stdout)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    defaults = {"steps": 10_000 if ns.command == "conjecture" else 100,
                "samples": 1000 if ns.command == "invariants" else 10_000}
    try:
        cfg = RunConfig(
            command=ns.command, model=ns.model, mu=ns.mu, a=ns.a, b=ns.b, c=ns.c,
            matrix=ns.matrix, init=ns.init,
            steps=ns.steps if ns.steps is not None else defaults["steps"],
            samples=ns.samples if ns.samples is not None else defaults["samples"],
            seed=ns.seed, tol=ns.tol, transient=ns.transient, keep=ns.keep, grid=ns.grid,
            param_range=ns.param_range, iters=ns.iters, out=ns.out,
            extras={"trials": ns.trials})
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    try:
        return run(cfg)
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
