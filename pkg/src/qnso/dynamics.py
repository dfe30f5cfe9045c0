"""Fixed points, stability, periods, Lyapunov exponents and bifurcation scans."""
from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cubic import CubicMatrix
from .operator import (SimplexPoint, Trajectory, apply, as_simplex_point,
                       reduced_jacobian, simplex_grid)

__all__ = [
    "Map1D",
    "logistic_map",
    "FixedPointRecord",
    "LyapunovEstimate",
    "BifurcationScan",
    "eigenvalues_small",
    "classify_eigenvalues",
    "classify_fixed_point",
    "find_fixed_points",
    "orbit",
    "detect_period",
    "lyapunov_exponent",
    "bifurcation_scan",
    "write_bifurcation_csv",
]


@dataclass(frozen=True)
class Map1D:
    """A map of an interval together with its derivative."""

    f: Callable[[float], float]
    df: Callable[[float], float]
    name: str = ""

    def __call__(self, x: float) -> float:
        return self.f(x)


def logistic_map(mu: float) -> Map1D:
    """``g(x) = mu x (1 - x)``."""
    return Map1D(lambda x: mu * x * (1.0 - x), lambda x: mu * (1.0 - 2.0 * x),
                 f"logistic(mu={mu!r})")


# ---------------------------------------------------------------- eigenvalues

def _quadratic_roots(b: float, c: float) -> list[complex]:
    # roots of t^2 + b t + c, avoiding cancellation in the real case
    disc = b * b - 4.0 * c
    if disc >= 0.0:
        s = math.sqrt(disc)
        q = -0.5 * (b + math.copysign(s, b))
        if q == 0.0:
            return [complex(0.0), complex(0.0)]
        return [complex(q), complex(c / q)]
    s = math.sqrt(-disc)
    return [complex(-0.5 * b, 0.5 * s), complex(-0.5 * b, -0.5 * s)]


def _cubic_roots(c2: float, c1: float, c0: float) -> list[complex]:
    # roots of t^3 + c2 t^2 + c1 t + c0
    shift = c2 / 3.0
    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2 ** 3 / 27.0 - c2 * c1 / 3.0 + c0
    scale = max(abs(c2), abs(c1) ** 0.5, abs(c0) ** (1.0 / 3.0), 1e-300)
    if abs(p) <= 1e-14 * scale ** 2 and abs(q) <= 1e-14 * scale ** 3:
        roots = [complex(-shift)] * 3
    else:
        disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
        if disc < 0.0:
            # three real roots: trigonometric form
            r = 2.0 * math.sqrt(-p / 3.0)
            arg = max(-1.0, min(1.0, 3.0 * q / (p * r)))
            phi = math.acos(arg) / 3.0
            roots = [complex(r * math.cos(phi - 2.0 * math.pi * k / 3.0) - shift) for k in range(3)]
        else:
            sq = math.sqrt(disc)
            u = math.copysign(abs(-q / 2.0 + sq) ** (1.0 / 3.0), -q / 2.0 + sq)
            v = -p / (3.0 * u) if u != 0.0 else math.copysign(abs(-q / 2.0 - sq) ** (1.0 / 3.0), -q / 2.0 - sq)
            w = complex(-0.5, math.sqrt(3.0) / 2.0)
            roots = [u + v, u * w + v * w.conjugate(), u * w.conjugate() + v * w]
            roots = [complex(z) - shift for z in roots]

    def poly(z):
        return ((z + c2) * z + c1) * z + c0

    def dpoly(z):
        return (3.0 * z + 2.0 * c2) * z + c1

    polished = []
    for z in roots:
        for _ in range(3):
            d = dpoly(z)
            if d == 0:
                break
            step = poly(z) / d
            if not cmath.isfinite(step) or abs(poly(z - step)) >= abs(poly(z)):
                break
            z -= step
        polished.append(z)
    return polished


def eigenvalues_small(M) -> list[complex]:
    """Eigenvalues with multiplicity.

    Sizes 1-3 use closed forms on the characteristic polynomial; larger
    matrices go to LAPACK.
    """
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    n = A.shape[0]
    if n == 0:
        return []
    if n == 1:
        return [complex(A[0, 0])]
    if n == 2:
        tr = A[0, 0] + A[1, 1]
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        return _quadratic_roots(-tr, det)
    if n == 3:
        tr = np.trace(A)
        minors = (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
                  + A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]
                  + A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
        det = (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
               - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
               + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))
        return _cubic_roots(-float(tr), float(minors), -det)
    return [complex(z) for z in np.linalg.eigvals(A)]


# ---------------------------------------------------------------- fixed points

@dataclass(frozen=True)
class FixedPointRecord:
    """A fixed point with the spectrum of the reduced Jacobian.

    ``isolated`` is False when the point belongs to a detected line of fixed
    points; ``direction`` then holds that line's unit direction vector.
    """

    point: SimplexPoint
    eigenvalues: list
    classification: str
    annotation: str | None = None
    isolated: bool = True
    direction: tuple | None = None
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "point": self.point.coords.tolist(),
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "classification": self.classification,
            "annotation": self.annotation,
            "isolated": self.isolated,
        }


def classify_eigenvalues(eigs: Sequence[complex], tol: float = 1e-9) -> tuple[str, str | None]:
    """Return ``(classification, annotation)`` from the moduli of ``eigs``.

    Moduli in ``[1 - tol, 1 + tol]`` count as on the unit circle.
    """
    mods = [abs(z) for z in eigs]
    on_circle = [abs(r - 1.0) <= tol for r in mods]
    if any(on_circle):
        rest = [r for r, c in zip(mods, on_circle) if not c]
        annotation = None
        if rest and all(r < 1.0 for r in rest):
            annotation = "semi-attracting"
        elif rest and all(r > 1.0 for r in rest):
            annotation = "semi-repelling"
        return "non-hyperbolic", annotation
    if all(r < 1.0 for r in mods):
        return "attracting", None
    if all(r > 1.0 for r in mods):
        return "repelling", None
    return "saddle", None


def classify_fixed_point(P: CubicMatrix, x, tol: float = 1e-9) -> FixedPointRecord:
    """Spectrum and type of a fixed point of the operator."""
    pt = as_simplex_point(x)
    residual = float(np.max(np.abs(apply(P, pt.coords) - pt.coords)))
    if not residual < tol:
        raise ValueError(f"not a fixed point: residual {residual:.3g} >= tol {tol:g}")
    eigs = eigenvalues_small(reduced_jacobian(P, pt.coords))
    cls, ann = classify_eigenvalues(eigs, tol)
    return FixedPointRecord(pt, eigs, cls, ann, residual=residual)


def _reduced_residual(P: CubicMatrix, u: np.ndarray) -> np.ndarray:
    x = np.append(u, 1.0 - u.sum())
    return apply(P, x)[:-1] - u


def _newton(P: CubicMatrix, u: np.ndarray, tol: float, max_iter: int = 100):
    I = np.eye(u.size)
    g = _reduced_residual(P, u)
    gn = np.max(np.abs(g))
    for _ in range(max_iter):
        x = np.append(u, 1.0 - u.sum())
        if np.max(np.abs(apply(P, x) - x)) < tol * 1e-2:
            break
        A = reduced_jacobian(P, x) - I
        step = np.linalg.lstsq(A, -g, rcond=None)[0]
        lam = 1.0
        for _ in range(31):
            trial = u + lam * step
            gt = _reduced_residual(P, trial)
            gtn = np.max(np.abs(gt))
            if gtn < gn:
                break
            lam *= 0.5
        else:
            break
        u, g, gn = trial, gt, gtn
    return u


def find_fixed_points(P: CubicMatrix, seeds_per_face: int = 10, tol: float = 1e-10,
                      simplex_eps: float = 1e-9, rank_tol: float = 1e-8) -> list[FixedPointRecord]:
    """Fixed points on the simplex by damped Newton from a grid of seeds.

    The last coordinate is eliminated; Newton steps are least-squares
    solutions so that lines of fixed points are reached too.  Steps are
    halved (at most 30 times) until the residual decreases.  Converged
    points are deduplicated within ``10 * tol``.  A point where ``J - I`` has
    a singular value below ``rank_tol`` and whose null direction lines up
    with another converged point is marked ``isolated=False``.
    """
    m = P.m
    seeds = simplex_grid(m, max(int(seeds_per_face), 1))
    found: list[np.ndarray] = []
    for s in seeds:
        u = _newton(P, s[:-1].copy(), tol)
        x = np.append(u, 1.0 - u.sum())
        if not np.all(np.isfinite(x)):
            continue
        if np.max(np.abs(apply(P, x) - x)) >= tol:
            continue
        if np.any(x < -simplex_eps) or abs(x.sum() - 1.0) > simplex_eps:
            continue
        x = np.clip(x, 0.0, None)
        x /= x.sum()
        if any(np.max(np.abs(x - y)) < 10 * tol for y in found):
            continue
        found.append(x)

    # continuum detection
    I = np.eye(m - 1)
    null_dirs = []
    for x in found:
        _, sv, vt = np.linalg.svd(reduced_jacobian(P, x) - I)
        if sv[-1] < rank_tol:
            v = vt[-1]
            full = np.append(v, -v.sum())
            null_dirs.append(full / np.linalg.norm(full))
        else:
            null_dirs.append(None)
    on_line = [False] * len(found)
    for a, (xa, da) in enumerate(zip(found, null_dirs)):
        if da is None:
            continue
        for b, xb in enumerate(found):
            if b == a or null_dirs[b] is None:
                continue
            d = xb - xa
            dist = np.linalg.norm(d)
            if dist > 0 and np.linalg.norm(d - (d @ da) * da) <= 1e-6 * dist:
                on_line[a] = True
                break

    records = []
    for x, d, line in zip(found, null_dirs, on_line):
        rec = classify_fixed_point(P, x, max(tol, 1e-9))
        if line:
            d = d * np.sign(d[np.argmax(np.abs(d))])
            rec = FixedPointRecord(rec.point, rec.eigenvalues, rec.classification,
                                   rec.annotation, isolated=False,
                                   direction=tuple(float(v) for v in d),
                                   residual=rec.residual)
        records.append(rec)
    records.sort(key=lambda r: tuple(-r.point.coords))
    return records


# ---------------------------------------------------------------- orbits & periods

def orbit(system, x0, n: int) -> np.ndarray:
    """``n`` steps of a :class:`Map1D` (shape (n+1,)) or an operator (shape (n+1, m))."""
    if isinstance(system, CubicMatrix):
        from .operator import iterate
        return iterate(system, x0, n).points
    out = np.empty(n + 1)
    x = float(x0)
    out[0] = x
    f = system.f
    for i in range(1, n + 1):
        x = f(x)
        out[i] = x
    return out


def detect_period(traj, max_period: int = 64, tol: float = 1e-6,
                  transient: int = 0) -> int | None:
    """Smallest ``p <= max_period`` with ``|x_{n+p} - x_n| < tol`` on the final window.

    The window covers the last ``2 * max_period`` admissible ``n``.  Returns
    ``None`` when no period is found (aperiodic at this resolution).
    """
    X = traj.points if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    N = X.shape[0]
    if max_period < 1:
        raise ValueError("max_period must be >= 1")
    if N < transient + 4 * max_period:
        raise ValueError(
            f"trajectory too short: {N} points, need {transient + 4 * max_period}")
    W = 2 * max_period
    for p in range(1, max_period + 1):
        lo = N - W - p
        diff = np.abs(X[lo + p:N] - X[lo:N - p])
        if np.max(diff) < tol:
            return p
    return None


# ---------------------------------------------------------------- Lyapunov

@dataclass(frozen=True)
class LyapunovEstimate:
    """Mean log stretch per iteration (natural log), with a batch-means error."""

    value: float
    iterations: int
    transient_discarded: int
    stderr: float
    skipped: int = 0

    def to_dict(self) -> dict:
        return {"value": self.value, "iterations": self.iterations,
                "transient_discarded": self.transient_discarded,
                "stderr": self.stderr, "skipped": self.skipped}


def _batch_stderr(logs: np.ndarray, batches: int) -> float:
    n = logs.size // batches
    if n == 0 or batches < 2:
        return math.nan
    means = logs[: n * batches].reshape(batches, n).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


def lyapunov_exponent(system, x0, iters: int = 100_000, transient: int = 1000,
                      batches: int = 20) -> LyapunovEstimate:
    """Largest Lyapunov exponent along the orbit of ``x0``.

    For a :class:`Map1D` this is the mean of ``log|f'(x_n)|``.  For a cubic
    matrix a tangent vector of the map restricted to ``sum x = 1`` is pushed
    forward and renormalized every step (so the trivial direction normal to
    the simplex does not contribute).  Steps with an exactly zero derivative
    are skipped and counted.
    """
    if iters < 1000:
        raise ValueError("iters must be >= 1000")
    logs = np.empty(iters)
    skipped = 0
    if isinstance(system, CubicMatrix):
        m = system.m
        P2 = system.entries.reshape(m, m * m)
        x = as_simplex_point(x0).coords.copy()
        for _ in range(transient):
            Y = (x @ P2).reshape(m, m)
            x = x @ Y
            x /= x.sum()
        w = np.ones(m - 1) / math.sqrt(m - 1)
        used = 0
        for _ in range(iters):
            Y = (x @ P2).reshape(m, m)
            J = 2.0 * Y.T                    # J[k, j] = 2 sum_i P[i,j,k] x_i
            Jr = J[:-1, :-1] - J[:-1, -1][:, None]
            w = Jr @ w
            x = x @ Y
            x /= x.sum()
            r = math.sqrt(float(w @ w))
            if r == 0.0:
                skipped += 1
                w = np.ones(m - 1) / math.sqrt(m - 1)
                continue
            logs[used] = math.log(r)
            used += 1
            w /= r
    else:
        x = float(x0)
        f, df = system.f, system.df
        for _ in range(transient):
            x = f(x)
        used = 0
        for _ in range(iters):
            d = abs(df(x))
            x = f(x)
            if d == 0.0:
                skipped += 1
                continue
            logs[used] = math.log(d)
            used += 1
    logs = logs[:used]
    return LyapunovEstimate(float(logs.mean()), iters, transient,
                            _batch_stderr(logs, batches), skipped)


# ---------------------------------------------------------------- bifurcation

@dataclass(frozen=True)
class BifurcationScan:
    """Post-transient samples and detected period for each parameter value."""

    parameter: str
    values: np.ndarray
    samples: list = field(default_factory=list)
    periods: list = field(default_factory=list)


def _default_start(m: int) -> np.ndarray:
    x = np.full(m, 0.7 / (m - 1))
    x[-1] = 0.3
    return x


def bifurcation_scan(family: Callable, param_range: tuple[float, float] | None = None,
                     grid_size: int | None = None, transient: int = 1000, keep: int = 256,
                     x0=None, tol: float = 1e-6, max_period: int | None = None,
                     values: Sequence[float] | None = None,
                     parameter: str = "param", coordinate: int = -1) -> BifurcationScan:
    """Scan a one-parameter family of maps.

    ``family(value)`` returns a :class:`Map1D` or a :class:`CubicMatrix`.
    Each cell starts from the same ``x0`` (0.3 for interval maps; for
    operators, last coordinate 0.3 and the rest equal), discards
    ``transient`` steps, keeps ``keep`` samples of coordinate ``coordinate``,
    and runs :func:`detect_period` on the kept states.
    """
    if values is None:
        if param_range is None or grid_size is None:
            raise ValueError("give either values or both param_range and grid_size")
        if grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        values = np.linspace(param_range[0], param_range[1], grid_size)
    values = np.asarray(values, dtype=float)
    if max_period is None:
        max_period = max(1, keep // 4)
    samples, periods = [], []
    for v in values:
        system = family(float(v))
        if isinstance(system, CubicMatrix):
            start = _default_start(system.m) if x0 is None else np.asarray(x0, dtype=float)
            orb = orbit(system, start, transient + keep - 1)
            kept = orb[transient:]
            samples.append(kept[:, coordinate].copy())
        else:
            start = 0.3 if x0 is None else float(x0)
            kept = orbit(system, start, transient + keep - 1)[transient:]
            samples.append(kept.copy())
        periods.append(detect_period(kept, max_period, tol))
    return BifurcationScan(parameter, values, samples, periods)


def write_bifurcation_csv(scan: BifurcationScan, path_or_file) -> None:
    """Rows ``param,sample_index,value,period`` at 17 significant digits."""

    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["param", "sample_index", "value", "period"])
        for v, s, p in zip(scan.values, scan.samples, scan.periods):
            per = "aperiodic" if p is None else str(p)
            for i, y in enumerate(s):
                w.writerow([format(v, ".17g"), i, format(y, ".17g"), per])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)
