"""Evaluating quadratic operators on the simplex.

Covers single-point and batched evaluation, the analytic Jacobian (full and
restricted to the simplex's affine hull), trajectories, and an empirical
falsifier for simplex preservation.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cubic import CubicMatrix

__all__ = [
    "SIMPLEX_EPS",
    "SimplexPoint",
    "Trajectory",
    "PreservationVerdict",
    "DomainEscapeError",
    "as_simplex_point",
    "apply",
    "apply_batch",
    "jacobian",
    "reduced_jacobian",
    "iterate",
    "preservation_oracle",
    "sample_simplex",
    "simplex_grid",
    "project_to_simplex",
    "write_trajectory_csv",
    "read_trajectory_csv",
]

SIMPLEX_EPS = 1e-9


class DomainEscapeError(RuntimeError):
    """An iterate left the simplex."""

    def __init__(self, step: int, point: np.ndarray, eps: float):
        self.step = step
        self.point = np.asarray(point)
        super().__init__(
            f"iterate {step} left the simplex (eps={eps:g}): "
            f"min coord {self.point.min():.6g}, sum {self.point.sum():.17g}")


def _on_simplex(x: np.ndarray, eps: float) -> bool:
    return bool(np.all(x >= -eps) and abs(x.sum() - 1.0) <= eps)


@dataclass(frozen=True)
class SimplexPoint:
    """A probability vector, checked on construction to within ``eps``."""

    coords: np.ndarray
    eps: float = SIMPLEX_EPS

    def __post_init__(self):
        x = np.array(self.coords, dtype=float).reshape(-1)
        if x.size < 1 or not np.all(np.isfinite(x)):
            raise ValueError("simplex point needs finite coordinates")
        if not _on_simplex(x, self.eps):
            raise ValueError(
                f"point {x.tolist()} is not on the simplex within eps={self.eps:g}")
        x.setflags(write=False)
        object.__setattr__(self, "coords", x)

    @property
    def m(self) -> int:
        return self.coords.size

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)

    def __len__(self):
        return self.coords.size

    def __iter__(self):
        return iter(self.coords.tolist())

    @classmethod
    def vertex(cls, i: int, m: int) -> SimplexPoint:
        e = np.zeros(m)
        e[i] = 1.0
        return cls(e)

    @classmethod
    def barycenter(cls, m: int) -> SimplexPoint:
        return cls(np.full(m, 1.0 / m))


def as_simplex_point(x, eps: float = SIMPLEX_EPS) -> SimplexPoint:
    if isinstance(x, SimplexPoint):
        return x
    return SimplexPoint(x, eps)


def _vector(P: CubicMatrix, x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.size != P.m:
        raise ValueError(f"dimension mismatch: matrix has m={P.m}, point has {v.size} coords")
    return v


def apply(P: CubicMatrix, x) -> np.ndarray:
    """``x'_k = sum_{i,j} P[i,j,k] x_i x_j``.

    No simplex check is made on the result.
    """
    v = _vector(P, x)
    return np.einsum("ijk,i,j->k", P.entries, v, v)


def apply_batch(P: CubicMatrix, X: np.ndarray) -> np.ndarray:
    """Row-wise :func:`apply` for an (n, m) array of points."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != P.m:
        raise ValueError(f"expected an (n, {P.m}) array, got shape {X.shape}")
    # (n, m) @ (m, m*m) then contract with x again
    Y = X @ P.entries.reshape(P.m, -1)
    return np.einsum("nj,njk->nk", X, Y.reshape(-1, P.m, P.m))


def jacobian(P: CubicMatrix, x) -> np.ndarray:
    """Full Jacobian ``J[k, i] = 2 sum_j P[i,j,k] x_j`` (P assumed symmetric)."""
    v = _vector(P, x)
    return 2.0 * np.einsum("ijk,j->ki", P.entries, v)


def reduced_jacobian(P: CubicMatrix, x, eliminate: int | None = None) -> np.ndarray:
    """Jacobian of the map restricted to the hyperplane ``sum x = 1``.

    Coordinate ``eliminate`` (default: the last one) is written as one minus
    the others, leaving an (m-1) x (m-1) matrix.  Its eigenvalues do not
    depend on which coordinate is eliminated when the rows of P sum to one.
    """
    J = jacobian(P, x)
    m = P.m
    e = m - 1 if eliminate is None else eliminate
    keep = [i for i in range(m) if i != e]
    return J[np.ix_(keep, keep)] - J[keep, e][:, None]


@dataclass(frozen=True)
class Trajectory:
    """Orbit ``points[0], ..., points[length]`` of a map; ``points`` has shape (length+1, m)."""

    points: np.ndarray
    operator_id: str = ""

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def length(self) -> int:
        return self.points.shape[0] - 1

    @property
    def m(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def point(self, n: int) -> SimplexPoint:
        return SimplexPoint(self.points[n])


def iterate(P: CubicMatrix, x0, n: int, *, verify: bool = False,
            eps: float = SIMPLEX_EPS, operator_id: str = "") -> Trajectory:
    """Iterate the operator ``n`` times from ``x0``.

    Every iterate is checked against the eps-simplex and a
    :class:`DomainEscapeError` names the first step that leaves it.  Accepted
    iterates are rescaled to sum exactly to one before the next step.  With
    ``verify=True`` the preservation oracle is run first and a failing verdict
    raises before any iteration.
    """
    if n < 0:
        raise ValueError("number of steps must be non-negative")
    x = as_simplex_point(x0, eps).coords.copy()
    _vector(P, x)
    if verify:
        verdict = preservation_oracle(P)
        if not verdict.preserved:
            raise ValueError(
                f"operator does not preserve the simplex: {verdict.violation} "
                f"coordinate at {verdict.counterexample.coords.tolist()}")
    out = np.empty((n + 1, P.m))
    out[0] = x
    for step in range(1, n + 1):
        x = apply(P, x)
        if not _on_simplex(x, eps):
            raise DomainEscapeError(step, x, eps)
        # the sum obeys s' = s^2 under condition i), so rounding drift doubles
        # every step unless it is removed
        x = x / x.sum()
        out[step] = x
    return Trajectory(out, operator_id)


def write_trajectory_csv(traj: Trajectory, path_or_file) -> None:
    """Write ``n,x1,...,xm`` rows with 17 significant digits."""
    header = ["n"] + [f"x{i + 1}" for i in range(traj.m)]

    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for n, row in enumerate(traj.points):
            w.writerow([n] + [format(v, ".17g") for v in row])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


def read_trajectory_csv(path: str | Path) -> Trajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "n":
        raise ValueError(f"{path}: missing 'n,x1,...' header")
    return Trajectory(np.array([[float(v) for v in r[1:]] for r in rows[1:]]))


# ---------------------------------------------------------------- sampling

def sample_simplex(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """Uniform points on the simplex via normalized exponentials."""
    E = rng.exponential(size=(n, m))
    return E / E.sum(axis=1, keepdims=True)


def simplex_grid(m: int, resolution: int) -> np.ndarray:
    """All points with coordinates in ``{0, 1/r, ..., 1}`` on the m-simplex."""
    r = resolution
    if m == 1:
        return np.ones((1, 1))
    pts = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            pts.append(prefix + [remaining])
            return
        for c in range(remaining + 1):
            rec(prefix + [c], remaining - c, slots - 1)

    rec([], r, m)
    return np.array(pts, dtype=float) / r


def _face_grid(m: int, resolution: int) -> np.ndarray:
    # Grids on every edge and 2-face; edges are contained in the 2-faces when m >= 3.
    from itertools import combinations

    size = min(m, 3)
    local = simplex_grid(size, resolution)
    blocks = []
    for face in combinations(range(m), size):
        block = np.zeros((local.shape[0], m))
        block[:, list(face)] = local
        blocks.append(block)
    return np.vstack(blocks)


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u - css / np.arange(1, n + 1) > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


# ---------------------------------------------------------------- oracle

@dataclass(frozen=True)
class PreservationVerdict:
    """Outcome of :func:`preservation_oracle`.

    ``counterexample`` is the worst point found (always a valid simplex
    point), ``image`` its image, ``index``/``value`` the offending coordinate.
    ``violation`` is one of ``"negative"``, ``"exceeds_one"``, ``"sum"`` or
    ``None`` when preserved.  The oracle is a falsifier: ``preserved=True``
    only means no violation was found.
    """

    preserved: bool
    counterexample: SimplexPoint | None
    image: np.ndarray | None
    index: int | None
    value: float | None
    violation: str | None
    samples_used: int
    strategy: str
    worst_margin: float
    tol: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "preserved": self.preserved,
            "counterexample": None if self.counterexample is None
            else self.counterexample.coords.tolist(),
            "image": None if self.image is None else self.image.tolist(),
            "index": self.index,
            "value": self.value,
            "violation": self.violation,
            "samples_used": self.samples_used,
            "strategy": self.strategy,
            "worst_margin": self.worst_margin,
            "tol": self.tol,
            "seed": self.seed,
            "note": "sampling falsifier: 'preserved' means no violation found, not a proof",
        }


_BATCH = 4096


def _margins(Y: np.ndarray) -> np.ndarray:
    # Smallest slack over: y_k >= 0, y_k <= 1, sum(y) == 1.
    lo = Y.min(axis=1)
    hi = 1.0 - Y.max(axis=1)
    s = -np.abs(Y.sum(axis=1) - 1.0)
    return np.minimum(np.minimum(lo, hi), s)


def _descend(P: CubicMatrix, x: np.ndarray, k: int, steps: int = 100) -> np.ndarray:
    """Projected gradient descent on ``V(x)_k`` over the simplex."""
    Q = P.entries[:, :, k]
    L = 2.0 * max(np.linalg.norm(Q, 2), 1e-12)
    best, best_val = x, float(x @ Q @ x)
    for _ in range(steps):
        grad = 2.0 * Q @ x
        x = project_to_simplex(x - grad / L)
        val = float(x @ Q @ x)
        if val >= best_val:
            break
        best, best_val = x, val
    return best


def preservation_oracle(P: CubicMatrix, samples: int = 10_000, seed: int = 0,
                        tol: float = 1e-12) -> PreservationVerdict:
    """Search for a simplex point whose image leaves the simplex.

    Tests the vertices, a grid of resolution ceil(sqrt(samples)) on every
    edge and 2-face, and ``samples`` uniform random points drawn in batches
    with seeds derived from ``(seed, batch_index)``.  The most negative output
    coordinate found is then pushed further down by projected gradient
    descent (at most 100 steps).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    m = P.m
    best = {"margin": math.inf, "x": None, "strategy": "grid"}

    def scan(X, strategy):
        Y = apply_batch(P, X)
        mg = _margins(Y)
        i = int(np.argmin(mg))
        if mg[i] < best["margin"]:
            best.update(margin=float(mg[i]), x=X[i].copy(), strategy=strategy)
        return X.shape[0]

    used = scan(np.eye(m), "grid")
    used += scan(_face_grid(m, math.ceil(math.sqrt(samples))), "grid")
    remaining = samples
    batch = 0
    while remaining > 0:
        size = min(_BATCH, remaining)
        rng = np.random.default_rng([seed, batch])
        used += scan(sample_simplex(rng, size, m), "random")
        remaining -= size
        batch += 1

    # sharpen on the coordinate that got closest to going negative
    x = best["x"]
    k = int(np.argmin(apply(P, x)))
    refined = _descend(P, x, k)
    used += 1
    mg_ref = float(_margins(apply(P, refined)[None, :])[0])
    if mg_ref < best["margin"]:
        best.update(margin=mg_ref, x=refined, strategy="local-min refinement")

    x = best["x"]
    y = apply(P, x)
    preserved = best["margin"] >= -tol
    index = value = violation = None
    if not preserved:
        if y.min() < -tol:
            index, violation = int(np.argmin(y)), "negative"
        elif y.max() > 1.0 + tol:
            index, violation = int(np.argmax(y)), "exceeds_one"
        else:
            violation = "sum"
        value = float(y[index]) if index is not None else float(y.sum())
    return PreservationVerdict(
        preserved=preserved,
        counterexample=SimplexPoint(x),
        image=y,
        index=index,
        value=value,
        violation=violation,
        samples_used=used,
        strategy=best["strategy"],
        worst_margin=best["margin"],
        tol=tol,
        seed=seed,
    )
