"""Cubic matrices and the coefficient conditions for simplex preservation.

A cubic matrix ``P`` with entries ``P[i, j, k]`` defines the quadratic map
``x'_k = sum_{i,j} P[i, j, k] x_i x_j``.  Indices are zero-based throughout
the code; the JSON file format uses the same zero-based layout.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "CubicMatrix",
    "ConditionReport",
    "EdgeCheck",
    "EdgeNecessityReport",
    "MatrixFormatError",
    "symmetrize",
    "check_conditions",
    "quadratic_range_on_unit_interval",
    "check_edge_necessity",
    "load_matrix",
    "save_matrix",
]


class MatrixFormatError(ValueError):
    """Raised for malformed cubic-matrix input (shape, finiteness, JSON layout)."""


@dataclass(frozen=True)
class CubicMatrix:
    """Dense m x m x m coefficient tensor.

    The array is copied on construction and marked read-only, so instances
    can be shared freely.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != 3 or not (arr.shape[0] == arr.shape[1] == arr.shape[2]):
            raise MatrixFormatError(
                f"cubic matrix must have shape (m, m, m), got {arr.shape}")
        if arr.shape[0] < 2:
            raise MatrixFormatError("cubic matrix dimension m must be >= 2")
        if not np.all(np.isfinite(arr)):
            raise MatrixFormatError("cubic matrix has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.entries, self.entries.transpose(1, 0, 2)))

    def __eq__(self, other):
        if not isinstance(other, CubicMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    __hash__ = None


def symmetrize(raw: CubicMatrix | np.ndarray) -> CubicMatrix:
    """Return the matrix with ``P[i, j, k]`` replaced by ``(P[i,j,k] + P[j,i,k]) / 2``.

    Both orderings define the same quadratic map, so this loses nothing.
    Applying it twice gives the same result as applying it once.
    """
    if not isinstance(raw, CubicMatrix):
        raw = CubicMatrix(raw)
    p = raw.entries
    return CubicMatrix(0.5 * (p + p.transpose(1, 0, 2)))


@dataclass(frozen=True)
class ConditionReport:
    """Verdicts on the preservation conditions, with violation witnesses.

    Witness tuples use zero-based indices.  For ``iii_violations`` and
    ``iii_prime_violations`` a margin of ``nan`` marks a triple that could not
    be evaluated because a diagonal coefficient is negative (condition ii
    already fails there).
    """

    m: int
    tol: float
    cond_i: bool
    cond_i_residual: float
    cond_ii: bool
    ii_violations: list = field(default_factory=list)   # (i, k, value)
    cond_iii: bool = True
    iii_violations: list = field(default_factory=list)  # (i, j, k, margin)
    cond_iii_prime: bool = True
    iii_prime_violations: list = field(default_factory=list)  # (i, j, k, bound, margin)
    cond_iv_volterra: bool = False
    is_3_stochastic: bool = False
    has_negative_offdiagonal: bool = False

    @property
    def sufficient(self) -> bool:
        """i), ii) and iii) hold, so the operator preserves the simplex."""
        return self.cond_i and self.cond_ii and self.cond_iii

    @property
    def necessary(self) -> bool:
        """i), ii) and iii') hold; failing any of them rules out preservation."""
        return self.cond_i and self.cond_ii and self.cond_iii_prime

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and math.isnan(v):
                return None
            return v

        return {
            "m": self.m,
            "tol": self.tol,
            "cond_i": {"ok": self.cond_i, "worst_residual": self.cond_i_residual},
            "cond_ii": {"ok": self.cond_ii,
                        "violations": [{"i": i, "k": k, "value": v}
                                       for i, k, v in self.ii_violations]},
            "cond_iii": {"ok": self.cond_iii,
                         "violations": [{"i": i, "j": j, "k": k, "margin": clean(mg)}
                                        for i, j, k, mg in self.iii_violations]},
            "cond_iii_prime": {"ok": self.cond_iii_prime,
                               "violations": [{"i": i, "j": j, "k": k, "bound": b,
                                               "margin": clean(mg)}
                                              for i, j, k, b, mg in self.iii_prime_violations]},
            "cond_iv_volterra": self.cond_iv_volterra,
            "is_3_stochastic": self.is_3_stochastic,
            "has_negative_offdiagonal": self.has_negative_offdiagonal,
            "sufficient": self.sufficient,
            "necessary": self.necessary,
        }


def _diag_product(d_ik: float, d_jk: float, tol: float) -> float:
    # Slightly negative diagonals within tol count as zero; anything below is
    # not evaluable (nan).
    if d_ik < -tol or d_jk < -tol:
        return math.nan
    return max(d_ik, 0.0) * max(d_jk, 0.0)


def check_conditions(P: CubicMatrix, tol: float = 1e-12) -> ConditionReport:
    """Evaluate conditions i), ii), iii), iii') and the Volterra condition iv).

    Every inequality is non-strict and relaxed by ``tol``; the equality in i)
    is tested as ``|sum_k P[i,j,k] - 1| <= tol``.
    """
    if tol < 0 or not math.isfinite(tol):
        raise ValueError(f"tol must be a finite non-negative number, got {tol}")
    p = P.entries
    m = P.m

    residuals = np.abs(p.sum(axis=2) - 1.0)
    worst = float(residuals.max())
    cond_i = worst <= tol

    ii_viol = []
    for i in range(m):
        for k in range(m):
            v = float(p[i, i, k])
            if v < -tol or v > 1.0 + tol:
                ii_viol.append((i, k, v))

    scale = 1.0 / (m - 1)
    iii_viol = []
    iiip_viol = []
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(m):
                b = float(p[i, j, k])
                prod = _diag_product(p[i, i, k], p[j, j, k], tol)
                if math.isnan(prod):
                    iii_viol.append((i, j, k, math.nan))
                    iiip_viol.append((i, j, k, "lower", math.nan))
                    continue
                root = math.sqrt(prod)
                margin = b + scale * root
                if margin < -tol:
                    iii_viol.append((i, j, k, margin))
                lower = b + root
                if lower < -tol:
                    iiip_viol.append((i, j, k, "lower", lower))
                up_prod = _diag_product(1.0 - p[i, i, k], 1.0 - p[j, j, k], tol)
                if math.isnan(up_prod):
                    iiip_viol.append((i, j, k, "upper", math.nan))
                    continue
                upper = 1.0 + math.sqrt(up_prod) - b
                if upper < -tol:
                    iiip_viol.append((i, j, k, "upper", upper))

    idx = np.arange(m)
    off_target = (idx[None, None, :] != idx[:, None, None]) & (idx[None, None, :] != idx[None, :, None])
    volterra = bool(np.all(np.abs(p[off_target]) <= tol))

    nonneg = bool(np.all(p >= -tol))
    offdiag = idx[:, None] != idx[None, :]
    neg_off = bool(np.any(p[offdiag] < -tol))

    return ConditionReport(
        m=m,
        tol=tol,
        cond_i=cond_i,
        cond_i_residual=worst,
        cond_ii=not ii_viol,
        ii_violations=ii_viol,
        cond_iii=not iii_viol,
        iii_violations=iii_viol,
        cond_iii_prime=not iiip_viol,
        iii_prime_violations=iiip_viol,
        cond_iv_volterra=volterra,
        is_3_stochastic=nonneg and cond_i,
        has_negative_offdiagonal=neg_off,
    )


def quadratic_range_on_unit_interval(a: float, b: float, c: float) -> tuple[float, float]:
    """Exact min and max of ``f(t) = (a - 2b + c) t^2 + 2 (b - c) t + c`` on [0, 1].

    ``f`` is the restriction of one output coordinate to the edge
    ``t e_i + (1 - t) e_j`` with ``a = P[i,i,k]``, ``b = P[i,j,k]``,
    ``c = P[j,j,k]``.

    >>> quadratic_range_on_unit_interval(1.0, -1.0, 1.0)
    (0.0, 1.0)
    """
    lead = a - 2.0 * b + c
    values = [c, a]
    if lead != 0.0:
        t0 = (c - b) / lead
        if 0.0 < t0 < 1.0:
            # f(t0) = (ac - b^2) / lead, written this way to avoid cancellation
            values.append((a * c - b * b) / lead)
    return float(min(values)), float(max(values))


@dataclass(frozen=True)
class EdgeCheck:
    i: int
    j: int
    k: int
    lo: float
    hi: float
    ok: bool


@dataclass(frozen=True)
class EdgeNecessityReport:
    """Per-edge verdict: does each output coordinate stay in [0, 1] along every edge?"""

    passed: bool
    edges: list

    @property
    def failures(self) -> list:
        return [e for e in self.edges if not e.ok]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failures": [{"i": e.i, "j": e.j, "k": e.k, "lo": e.lo, "hi": e.hi}
                         for e in self.failures],
        }


def check_edge_necessity(P: CubicMatrix, tol: float = 1e-12) -> EdgeNecessityReport:
    """Check the image of every edge of the simplex coordinate by coordinate.

    For each pair i < j and each k the exact range of the output coordinate
    over the edge is computed; the edge passes if it lies in ``[-tol, 1 + tol]``.
    When all diagonal coefficients lie in [0, 1] this is equivalent to iii').
    """
    p = P.entries
    m = P.m
    edges = []
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(m):
                lo, hi = quadratic_range_on_unit_interval(p[i, i, k], p[i, j, k], p[j, j, k])
                ok = lo >= -tol and hi <= 1.0 + tol
                edges.append(EdgeCheck(i, j, k, lo, hi, ok))
    return EdgeNecessityReport(passed=all(e.ok for e in edges), edges=edges)


def load_matrix(path: str | Path) -> tuple[CubicMatrix, bool]:
    """Read ``{"m": int, "entries": [[[...]]]}`` and symmetrize it.

    Returns the symmetrized matrix and whether symmetrization changed any entry.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(doc, dict) or "m" not in doc or "entries" not in doc:
        raise MatrixFormatError(f"{path}: expected an object with keys 'm' and 'entries'")
    m = doc["m"]
    if not isinstance(m, int) or isinstance(m, bool) or m < 2:
        raise MatrixFormatError(f"{path}: 'm' must be an integer >= 2")
    try:
        arr = np.array(doc["entries"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise MatrixFormatError(f"{path}: 'entries' must be a numeric m x m x m array") from exc
    if arr.shape != (m, m, m):
        raise MatrixFormatError(f"{path}: 'entries' has shape {arr.shape}, expected ({m}, {m}, {m})")
    raw = CubicMatrix(arr)
    sym = symmetrize(raw)
    return sym, not np.array_equal(raw.entries, sym.entries)


def save_matrix(P: CubicMatrix, path: str | Path) -> None:
    Path(path).write_text(json.dumps({"m": P.m, "entries": P.entries.tolist()}))
