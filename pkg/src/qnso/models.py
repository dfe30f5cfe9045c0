"""Named operators, their one-dimensional reductions, and invariant-set tools.

Models
------
``logistic(mu)``   the one-dimensional operator whose second coordinate follows
                   ``y' = mu y (1 - y)``; same matrix as ``va(1 - mu/2)``
``v1(a, b, c)``    general operator on the 1-simplex
``va(b)``          ``x' = x^2 + 2bxy + y^2``, ``y' = 2(1-b)xy``
``v2(a)``          the three-species operator with a line of fixed points and
                   logistic dynamics on every ray ``y = w z``
``v3(a)``          the three-species operator with four fixed points and five
                   invariant regions
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cubic import CubicMatrix, symmetrize
from .dynamics import LyapunovEstimate, Map1D, logistic_map, lyapunov_exponent
from .operator import (SimplexPoint, apply, as_simplex_point, reduced_jacobian,
                       sample_simplex)

__all__ = [
    "ModelSpec",
    "InvariantSetLabel",
    "LimitPrediction",
    "InvarianceResult",
    "RatioSequence",
    "ConjectureStats",
    "CHAOS_ONSET_MU",
    "logistic",
    "v1",
    "va",
    "v2",
    "v3",
    "build",
    "non_preserving_example",
    "reduction_1d",
    "reduce_v2",
    "vd_step",
    "restrict_v2_to_Momega",
    "zeta_coordinate",
    "reduce_v3_to_W",
    "w_step",
    "w_jacobian",
    "w_jacobian_from_operator",
    "v3_fixed_points",
    "classify_invariant_set",
    "sample_invariant_set",
    "verify_invariance",
    "ratio_sequence",
    "predict_limit",
    "conjecture_experiment",
    "v2_chaos_verdict",
]

# logistic map: no finite-period attractor for most mu beyond this value
CHAOS_ONSET_MU = 3.56995


@dataclass(frozen=True)
class ModelSpec:
    """A named model with validated parameters."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        p = self.params
        k = self.kind
        if k == "logistic":
            mu = p["mu"]
            if not 2.0 < mu <= 4.0:
                raise ValueError(f"logistic: mu must lie in (2, 4], got {mu}")
        elif k == "v1":
            a, b, c = p["a"], p["b"], p["c"]
            if not (0.0 <= a <= 1.0 and 0.0 <= c <= 1.0):
                raise ValueError(f"v1: a and c must lie in [0, 1], got a={a}, c={c}")
            lo, hi = -math.sqrt(a * c), 1.0 + math.sqrt((1.0 - a) * (1.0 - c))
            if not lo <= b <= hi:
                raise ValueError(f"v1: b must lie in [{lo:.6g}, {hi:.6g}], got {b}")
        elif k == "va":
            b = p["b"]
            if not -1.0 <= b < 0.0:
                raise ValueError(f"va: b must lie in [-1, 0), got {b}")
        elif k == "v2":
            a = p["a"]
            if not 0.0 <= a <= 2.0:
                raise ValueError(f"v2: a must lie in [0, 2], got {a}")
        elif k == "v3":
            a = p["a"]
            if not 0.0 < a < 3.0:
                raise ValueError(
                    f"v3: a must lie in the open interval (0, 3), got {a}; at a=0 and a=3 "
                    "one coordinate decouples and the invariant-set analysis does not apply")
        else:
            raise ValueError(f"unknown model kind {k!r}")

    def __getattr__(self, name):
        if name.startswith("__") or name == "params":
            raise AttributeError(name)
        try:
            return self.params[name]
        except KeyError:
            raise AttributeError(name) from None

    def label(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.kind}({args})"


def logistic(mu: float) -> ModelSpec:
    return ModelSpec("logistic", {"mu": float(mu)})


def v1(a: float, b: float, c: float) -> ModelSpec:
    return ModelSpec("v1", {"a": float(a), "b": float(b), "c": float(c)})


def va(b: float) -> ModelSpec:
    return ModelSpec("va", {"b": float(b)})


def v2(a: float) -> ModelSpec:
    return ModelSpec("v2", {"a": float(a)})


def v3(a: float) -> ModelSpec:
    return ModelSpec("v3", {"a": float(a)})


def _v1_matrix(a, b, c) -> np.ndarray:
    P = np.zeros((2, 2, 2))
    P[0, 0] = [a, 1.0 - a]
    P[0, 1] = P[1, 0] = [b, 1.0 - b]
    P[1, 1] = [c, 1.0 - c]
    return P


def build(spec: ModelSpec) -> CubicMatrix:
    """Symmetrized cubic matrix of a model."""
    k = spec.kind
    if k == "logistic":
        return symmetrize(_v1_matrix(1.0, 1.0 - spec.mu / 2.0, 1.0))
    if k == "v1":
        return symmetrize(_v1_matrix(spec.a, spec.b, spec.c))
    if k == "va":
        return symmetrize(_v1_matrix(1.0, spec.b, 1.0))
    P = np.zeros((3, 3, 3))
    a = spec.a
    if k == "v2":
        # x' = x^2 + y^2 + z^2 - axy - axz + 2yz, y' = (2+a)xy, z' = (2+a)xz
        P[0, 0, 0] = P[1, 1, 0] = P[2, 2, 0] = 1.0
        P[0, 1, 0] = P[1, 0, 0] = P[0, 2, 0] = P[2, 0, 0] = -a / 2.0
        P[1, 2, 0] = P[2, 1, 0] = 1.0
        P[0, 1, 1] = P[1, 0, 1] = (2.0 + a) / 2.0
        P[0, 2, 2] = P[2, 0, 2] = (2.0 + a) / 2.0
    else:
        # x' = x^2 + y^2 + z^2 - xy - xz - yz, y' = 3xy + ayz, z' = 3xz + (3-a)yz
        P[0, 0, 0] = P[1, 1, 0] = P[2, 2, 0] = 1.0
        for i, j in ((0, 1), (0, 2), (1, 2)):
            P[i, j, 0] = P[j, i, 0] = -0.5
        P[0, 1, 1] = P[1, 0, 1] = 1.5
        P[1, 2, 1] = P[2, 1, 1] = a / 2.0
        P[0, 2, 2] = P[2, 0, 2] = 1.5
        P[1, 2, 2] = P[2, 1, 2] = (3.0 - a) / 2.0
    return symmetrize(P)


def non_preserving_example(m: int = 3, split=None) -> CubicMatrix:
    """Matrix satisfying i), ii), iii') that does not preserve the simplex for m >= 3.

    ``P[i,i,0] = 1``, ``P[i,j,0] = -1`` for i != j, and for i != j the weight 2
    is spread over k >= 1 by ``split`` (a length m-1 vector summing to 2;
    default uniform).
    """
    if m < 3:
        raise ValueError("the counterexample needs m >= 3")
    split = np.full(m - 1, 2.0 / (m - 1)) if split is None else np.asarray(split, dtype=float)
    if split.shape != (m - 1,) or abs(split.sum() - 2.0) > 1e-12 or np.any(split < 0) or np.any(split > 2):
        raise ValueError("split must have m-1 entries in [0, 2] summing to 2")
    P = np.zeros((m, m, m))
    for i in range(m):
        P[i, i, 0] = 1.0
        for j in range(m):
            if i != j:
                P[i, j, 0] = -1.0
                P[i, j, 1:] = split
    return symmetrize(P)


def reduction_1d(spec: ModelSpec) -> Map1D:
    """Interval map carrying the dynamics of a one-dimensional model.

    For ``logistic`` and ``va`` the coordinate is y; for ``v1`` it is x; for
    ``v2`` it is ``t = y + z`` (logistic with ``mu = 2 + a``).
    """
    k = spec.kind
    if k == "logistic":
        return logistic_map(spec.mu)
    if k == "va":
        return logistic_map(2.0 * (1.0 - spec.b))
    if k == "v2":
        return logistic_map(2.0 + spec.a)
    if k == "v1":
        a, b, c = spec.a, spec.b, spec.c
        lead = a - 2.0 * b + c
        return Map1D(lambda x: lead * x * x + 2.0 * (b - c) * x + c,
                     lambda x: 2.0 * lead * x + 2.0 * (b - c),
                     spec.label())
    raise ValueError(f"{k} has no one-dimensional reduction")


# ---------------------------------------------------------------- v2

def reduce_v2(x) -> tuple[float, float]:
    """``(x, y + z)`` for a point of the 2-simplex."""
    c = np.asarray(x, dtype=float)
    if c.size != 3:
        raise ValueError("reduce_v2 needs a point with 3 coordinates")
    return float(c[0]), float(c[1] + c[2])


def vd_step(a: float, x: float, t: float) -> tuple[float, float]:
    """One step of the reduced v2 map on ``(x, t)``."""
    return x * x + t * t - a * x * t, (2.0 + a) * x * t


def restrict_v2_to_Momega(omega: float, a: float, z: float) -> float:
    """v2 on the ray ``y = omega z``: ``z' = (2 + a)(1 - (omega + 1) z) z``.

    In the coordinate ``zeta = (1 + omega) z`` this is the logistic map with
    ``mu = 2 + a``; see :func:`zeta_coordinate`.
    """
    if not omega > 0.0 or not math.isfinite(omega):
        raise ValueError(f"omega must be a positive finite number, got {omega}")
    zmax = 1.0 / (1.0 + omega)
    if not -1e-15 <= z <= zmax + 1e-15:
        raise ValueError(f"z={z} is outside the fiber range [0, {zmax}]")
    return (2.0 + a) * (1.0 - (omega + 1.0) * z) * z


def zeta_coordinate(omega: float, z: float) -> float:
    return (1.0 + omega) * z


# ---------------------------------------------------------------- v3

def reduce_v3_to_W(x) -> tuple[float, float]:
    """Drop x from ``(x, y, z)``."""
    c = np.asarray(x, dtype=float)
    if c.size != 3:
        raise ValueError("reduce_v3_to_W needs a point with 3 coordinates")
    return float(c[1]), float(c[2])


def w_step(a: float, y, z):
    """``W(y, z) = (y (3 - 3y + (a - 3) z), z (3 - a y - 3 z))``; broadcasts over arrays."""
    return y * (3.0 - 3.0 * y + (a - 3.0) * z), z * (3.0 - a * y - 3.0 * z)


def w_jacobian(a: float, y: float, z: float) -> np.ndarray:
    return np.array([[3.0 - 6.0 * y + (a - 3.0) * z, (a - 3.0) * y],
                     [-a * z, 3.0 - a * y - 6.0 * z]])


def w_jacobian_from_operator(P: CubicMatrix, y: float, z: float) -> np.ndarray:
    """Generic operator Jacobian restricted to the ``(y, z)`` chart (x eliminated)."""
    return reduced_jacobian(P, [1.0 - y - z, y, z], eliminate=0)


def v3_fixed_points(a: float) -> dict[str, np.ndarray]:
    d = a * a - 3.0 * a + 9.0
    return {
        "s1": np.array([1.0, 0.0, 0.0]),
        "s2": np.array([1.0 / 3.0, 0.0, 2.0 / 3.0]),
        "s3": np.array([1.0 / 3.0, 2.0 / 3.0, 0.0]),
        "s4": np.array([(a * a - 3.0 * a + 3.0) / d, 2.0 * a / d, 2.0 * (3.0 - a) / d]),
    }


# ---------------------------------------------------------------- invariant sets

@dataclass(frozen=True)
class InvariantSetLabel:
    """Invariant set containing a point.

    v2: ``M0`` (y = 0), ``M1`` (z = 0), ``X`` (x = 1/(2+a)) or ``Momega``
    (y = omega z, omega > 0).  v3 (in the (y, z) chart): ``M1`` (y = 0),
    ``M2`` (z = 0), ``M3`` (z = (3-a)/a y), ``M4`` (below that line) or
    ``M5`` (above it).  ``tol`` is the band used for the equalities.
    """

    name: str
    omega: float | None = None
    tol: float = 1e-9

    def __str__(self):
        return f"M_omega(omega={self.omega:.17g})" if self.name == "Momega" else self.name


def _m3_defect(a: float, y, z):
    return (3.0 - a) * y - a * z


def classify_invariant_set(model: ModelSpec, x, tol: float = 1e-9) -> InvariantSetLabel:
    """Invariant set label of a simplex point.

    v3 checks run in the order M1, M2, M3 (band ``|(3-a)y - az| <= tol``),
    then the sign of ``(3-a)y - az``, so every point gets exactly one label;
    the vertex (1, 0, 0) is labelled M1.  v2 checks run M0, M1, X, Momega.
    """
    pt = as_simplex_point(x)
    _, y, z = pt.coords
    a = model.a
    if model.kind == "v3":
        if abs(y) <= tol:
            return InvariantSetLabel("M1", tol=tol)
        if abs(z) <= tol:
            return InvariantSetLabel("M2", tol=tol)
        d = _m3_defect(a, y, z)
        if abs(d) <= tol:
            return InvariantSetLabel("M3", tol=tol)
        return InvariantSetLabel("M4" if d > 0 else "M5", tol=tol)
    if model.kind == "v2":
        if abs(y) <= tol:
            return InvariantSetLabel("M0", tol=tol)
        if abs(z) <= tol:
            return InvariantSetLabel("M1", tol=tol)
        if abs(pt.coords[0] - 1.0 / (2.0 + a)) <= tol:
            return InvariantSetLabel("X", omega=float(y / z), tol=tol)
        return InvariantSetLabel("Momega", omega=float(y / z), tol=tol)
    raise ValueError(f"invariant sets are defined for v2 and v3, not {model.kind}")


def _member(model: ModelSpec, label: InvariantSetLabel, X: np.ndarray) -> np.ndarray:
    # Membership predicate on an (n, 3) array of points.
    x, y, z = X[:, 0], X[:, 1], X[:, 2]
    a, tol, name = model.a, label.tol, label.name
    if model.kind == "v3":
        d = _m3_defect(a, y, z)
        return {
            "M1": np.abs(y) <= tol,
            "M2": np.abs(z) <= tol,
            "M3": np.abs(d) <= tol,
            "M4": d > tol,
            "M5": d < -tol,
        }[name]
    return {
        "M0": lambda: np.abs(y) <= tol,
        "M1": lambda: np.abs(z) <= tol,
        "X": lambda: np.abs(x - 1.0 / (2.0 + a)) <= tol,
        "Momega": lambda: np.abs(y - label.omega * z) <= tol * max(1.0, label.omega),
    }[name]()


def sample_invariant_set(model: ModelSpec, label: InvariantSetLabel, n: int,
                         rng: np.random.Generator) -> np.ndarray:
    """``n`` points of the labelled set (uniform along lines, rejection in open regions)."""
    a = model.a
    u = rng.random(n)
    name = label.name
    if model.kind == "v3":
        if name == "M1":
            return np.column_stack([1.0 - u, np.zeros(n), u])
        if name == "M2":
            return np.column_stack([1.0 - u, u, np.zeros(n)])
        if name == "M3":
            s = (3.0 - a) / a
            y = u * (1.0 / (1.0 + s))
            z = s * y
            return np.column_stack([1.0 - y - z, y, z])
    else:
        if name == "M0":
            return np.column_stack([1.0 - u, np.zeros(n), u])
        if name == "M1":
            return np.column_stack([1.0 - u, u, np.zeros(n)])
        if name == "Momega":
            z = u / (1.0 + label.omega)
            y = label.omega * z
            return np.column_stack([1.0 - y - z, y, z])
        if name == "X":
            x0 = 1.0 / (2.0 + a)
            y = u * (1.0 - x0)
            return np.column_stack([np.full(n, x0), y, 1.0 - x0 - y])
    out = []
    while sum(len(b) for b in out) < n:
        cand = sample_simplex(rng, 4 * n, 3)
        out.append(cand[_member(model, label, cand)])
    return np.vstack(out)[:n]


@dataclass(frozen=True)
class InvarianceResult:
    model: str
    label: str
    trials: int
    passed: bool
    failures: int
    witness: list | None
    identity_residual: float | None = None
    boundary_passed: bool | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_invariance(model: ModelSpec, label: InvariantSetLabel | str, trials: int = 1000,
                      seed: int = 0, omega: float | None = None) -> InvarianceResult:
    """Sample the set, apply one step, and check the images stay in it.

    For v3 also checks ``(3-a)y' - az' = 3x((3-a)y - az)`` on every sample
    (residual must be < 1e-12) and that points with x = 0 land on M3.
    """
    if isinstance(label, str):
        label = InvariantSetLabel(label, omega=omega)
    P = build(model)
    rng = np.random.default_rng([seed, trials])
    X = sample_invariant_set(model, label, trials, rng)
    Y = np.vstack([apply(P, x) for x in X])
    ok = _member(model, label, Y)
    failures = int((~ok).sum())
    witness = None
    if failures:
        i = int(np.argmin(ok))
        witness = [X[i].tolist(), Y[i].tolist()]
    residual = boundary = None
    passed = failures == 0
    if model.kind == "v3":
        a = model.a
        lhs = _m3_defect(a, Y[:, 1], Y[:, 2])
        rhs = 3.0 * X[:, 0] * _m3_defect(a, X[:, 1], X[:, 2])
        residual = float(np.max(np.abs(lhs - rhs)))
        u = rng.random(trials)
        edge = np.column_stack([np.zeros(trials), u, 1.0 - u])
        img = np.vstack([apply(P, x) for x in edge])
        boundary = bool(np.all(np.abs(_m3_defect(a, img[:, 1], img[:, 2])) <= label.tol))
        passed = passed and residual < 1e-12 and boundary
    return InvarianceResult(model.label(), str(label), trials, passed, failures,
                            witness, residual, boundary)


@dataclass(frozen=True)
class RatioSequence:
    """``P_n = z_n / y_n`` along a v3 orbit started in M4 or M5.

    ``strictly_monotone`` requires a strict step in the expected direction
    while ``|bound - P_n|`` exceeds ``resolution`` (64 ulps of the bound);
    past that point only the absence of a step in the wrong direction larger
    than ``resolution`` is required.
    """

    values: np.ndarray
    bound: float
    direction: str
    strictly_monotone: bool
    bounded: bool
    gap: float
    resolution: float
    truncated: bool = False
    diagnostic: str = ""


def ratio_sequence(model: ModelSpec, x0, n: int) -> RatioSequence:
    """Ratios ``z/y`` of the first ``n`` v3 iterates from ``x0`` in M4 or M5."""
    if model.kind != "v3":
        raise ValueError("ratio_sequence is defined for v3")
    a = model.a
    label = classify_invariant_set(model, x0)
    if label.name not in ("M4", "M5"):
        if label.name == "M3":
            bound = (3.0 - a) / a
            return RatioSequence(np.full(n + 1, bound), bound, "constant", True, True, 0.0, 0.0)
        raise ValueError(f"x0 must lie in M4 or M5 (or M3), got {label.name}")
    y, z = reduce_v3_to_W(x0)
    bound = (3.0 - a) / a
    vals = [z / y]
    truncated, diag = False, ""
    for _ in range(n):
        y, z = w_step(a, y, z)
        if y == 0.0:
            truncated, diag = True, f"y underflowed to 0 after {len(vals)} steps"
            break
        vals.append(z / y)
    vals = np.array(vals)
    # each W step rounds y and z independently; with the defect contracting by
    # 3x < 1 the ratio settles in a noise band of ~12 eps * bound
    resolution = 64.0 * np.spacing(bound)
    steps = np.diff(vals)
    if label.name == "M4":
        direction = "increasing"
        resolvable = (bound - vals[:-1]) > resolution
        strict = bool(np.all(steps[resolvable] > 0.0) and np.all(steps[~resolvable] > -resolution))
        bounded = bool(np.all(vals <= bound + resolution))
    else:
        direction = "decreasing"
        resolvable = (vals[:-1] - bound) > resolution
        strict = bool(np.all(steps[resolvable] < 0.0) and np.all(steps[~resolvable] < resolution))
        bounded = bool(np.all(vals >= bound - resolution))
    return RatioSequence(vals, bound, direction, strict, bounded,
                         float(abs(bound - vals[-1])), float(resolution), truncated, diag)


@dataclass(frozen=True)
class LimitPrediction:
    limit: str                  # s1, s2, s3, s4 or "subset-of-M3"
    point: np.ndarray | None
    source: InvariantSetLabel


def predict_limit(model: ModelSpec, x0, tol: float = 1e-9) -> LimitPrediction:
    """Limit of the v3 orbit of ``x0`` according to the invariant set it starts in.

    Orbits from M4 or M5 are only known to accumulate on M3; numerically they
    approach s4 (see :func:`conjecture_experiment`).
    """
    if model.kind != "v3":
        raise ValueError("predict_limit is defined for v3")
    pts = v3_fixed_points(model.a)
    label = classify_invariant_set(model, x0, tol)
    x, y, z = as_simplex_point(x0).coords
    if abs(x - 1.0) <= tol:
        return LimitPrediction("s1", pts["s1"], label)
    table = {"M1": "s2", "M2": "s3", "M3": "s4"}
    if label.name in table:
        key = table[label.name]
        return LimitPrediction(key, pts[key], label)
    return LimitPrediction("subset-of-M3", None, label)


@dataclass(frozen=True)
class ConjectureStats:
    """Convergence of v3 orbits from M4 and M5 towards s4 (numerical evidence only)."""

    a: float
    trials: int
    steps: int
    tol: float
    seed: int
    fraction_converged: float
    max_final_distance: float
    distances: np.ndarray
    tail: np.ndarray = field(repr=False, default=None)   # (trials, <=100) last distances

    def to_dict(self) -> dict:
        return {"a": self.a, "trials": self.trials, "steps": self.steps, "tol": self.tol,
                "seed": self.seed, "fraction_converged": self.fraction_converged,
                "max_final_distance": self.max_final_distance,
                "distances": self.distances.tolist(),
                "kind": "conjecture support"}


def conjecture_experiment(a: float, trials: int = 100, steps: int = 10_000, seed: int = 0,
                          tol: float = 1e-3, band: float = 1e-9) -> ConjectureStats:
    """Iterate v3 from uniform starts in M4 and M5 and measure the sup distance to s4."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    model = v3(a)
    rng = np.random.default_rng(seed)
    starts = []
    while len(starts) < trials:
        cand = sample_simplex(rng, trials, 3)
        d = _m3_defect(a, cand[:, 1], cand[:, 2])
        keep = (np.abs(d) > band) & (cand[:, 1] > band) & (cand[:, 2] > band)
        starts.extend(cand[keep])
    X = np.array(starts[:trials])
    y, z = X[:, 1].copy(), X[:, 2].copy()
    s4 = v3_fixed_points(model.a)["s4"]
    ntail = min(100, steps + 1)
    tail = np.empty((trials, ntail))

    def dist(y, z):
        return np.max(np.abs(np.column_stack([1.0 - y - z, y, z]) - s4), axis=1)

    for n in range(steps + 1):
        if n > 0:
            y, z = w_step(a, y, z)
        k = n - (steps + 1 - ntail)
        if k >= 0:
            tail[:, k] = dist(y, z)
    final = tail[:, -1]
    return ConjectureStats(float(a), trials, steps, tol, seed,
                           float(np.mean(final < tol)), float(final.max()), final.copy(), tail)


def v2_chaos_verdict(a: float, x0=(0.3, 0.45, 0.25), iters: int = 100_000,
                     transient: int = 1000) -> dict:
    """Logistic parameter ``mu = 2 + a``, the chaos-onset criterion, and a measured exponent."""
    spec = v2(a)
    mu = 2.0 + a
    est: LyapunovEstimate = lyapunov_exponent(build(spec), x0, iters, transient)
    return {"a": a, "mu": mu, "criterion_chaotic": mu > CHAOS_ONSET_MU,
            "lyapunov": est.to_dict()}
