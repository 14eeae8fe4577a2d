"""ROC curves, AUC and utility-optimal operating points.

Class 0 is the positive class and a higher score predicts class 0.  Curves
are discrete vertex lists ``(f_k, t_k)`` of false-positive and true-positive
rates.  With class-0 share ``B`` a vertex corresponds to the confusion matrix::

    [[B t,       (1-B) f    ],
     [B (1-t),   (1-B) (1-f)]]

so the utility yield is ``(U00-U10) B t - (U11-U01) (1-B) f + const``.  The
best vertex is where a line of slope ``s = (U11-U01)(1-B) / ((U00-U10) B)``
touches the upper convex hull of the curve.  Ties go to the smaller ``f``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .core import ConfusionMatrix, UtilityMatrix, _as_utility, utility_yield
from .errors import ContractViolation, DegenerateProblemError, InputError

__all__ = [
    "RocCurve",
    "OperatingContext",
    "OperatingPoint",
    "TangentRank",
    "curve_from_scores",
    "confusion_at",
    "auc",
    "upper_hull",
    "optimal_operating_point",
    "brute_force_operating_point",
    "compare_by_tangent",
    "dominates",
    "binormal_curve",
    "search_reversal_pair",
    "reversal_fixture",
    "FIXTURE_CONTEXT",
]

_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Monotone piecewise-linear ROC curve from ``(0, 0)`` to ``(1, 1)``.

    ``thresholds[k]`` is the score cut-off producing vertex ``k`` (``inf`` for
    the origin), or ``None`` for curves read from rate pairs.
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray | None = None

    def __post_init__(self):
        f = np.array(self.fpr, dtype=float)
        t = np.array(self.tpr, dtype=float)
        if f.ndim != 1 or f.shape != t.shape or f.size < 2:
            raise ContractViolation("ROC curve needs two equal-length vectors of >= 2 points")
        if np.any((f < 0) | (f > 1) | (t < 0) | (t > 1)):
            raise ContractViolation("ROC rates must lie in [0, 1]")
        if np.any(np.diff(f) < 0) or np.any(np.diff(t) < 0):
            raise ContractViolation("ROC rates must be non-decreasing")
        if f[0] != 0 or t[0] != 0 or f[-1] != 1 or t[-1] != 1:
            raise ContractViolation("ROC curve must start at (0, 0) and end at (1, 1)")
        f.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "fpr", f)
        object.__setattr__(self, "tpr", t)
        if self.thresholds is not None:
            th = np.array(self.thresholds, dtype=float)
            if th.shape != f.shape:
                raise ContractViolation("thresholds must match the number of vertices")
            th.setflags(write=False)
            object.__setattr__(self, "thresholds", th)

    def __len__(self):
        return self.fpr.size

    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    @classmethod
    def from_points(cls, points: Sequence[tuple[float, float]]) -> "RocCurve":
        arr = np.asarray(points, dtype=float)
        return cls(arr[:, 0], arr[:, 1])


@dataclass(frozen=True)
class OperatingContext:
    """Utilities plus the class-0 share ``B`` of the test set."""

    utility: UtilityMatrix
    balance: float

    def __post_init__(self):
        U = _as_utility(self.utility)
        object.__setattr__(self, "utility", U)
        if U.n_classes != 2:
            raise ContractViolation("ROC analysis is binary")
        if not U.is_feasible:
            raise ContractViolation("operating context needs U00 >= U10 and U11 >= U01")
        if not 0 < self.balance < 1:
            raise ContractViolation("balance B must lie in (0, 1)")
        g0, g1 = U.gains()
        if g0 == 0 and g1 == 0:
            raise DegenerateProblemError("U00 == U10 and U11 == U01: every threshold is equal")

    @property
    def slope(self) -> float:
        """Slope of the iso-utility lines in ROC space (``inf`` when ``U00 == U10``)."""
        g0, g1 = self.utility.gains()
        if g0 == 0:
            return float("inf")
        return g1 * (1.0 - self.balance) / (g0 * self.balance)


@dataclass(frozen=True)
class OperatingPoint:
    fpr: float
    tpr: float
    utility_yield: float
    index: int
    threshold: float | None


@dataclass(frozen=True)
class TangentRank:
    index: int
    rank: int
    intercept: float | None
    utility_yield: float
    auc: float
    point: OperatingPoint


def curve_from_scores(labels: Sequence[int], scores: Sequence[float]) -> RocCurve:
    """Threshold sweep over the distinct score values (tied scores form one step)."""
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=float)
    if y.ndim != 1 or y.shape != s.shape or y.size == 0:
        raise InputError("labels and scores must be non-empty and of equal length")
    if not np.all(np.isin(y, (0, 1))):
        raise InputError("labels must be 0 or 1")
    if not np.all(np.isfinite(s)):
        raise InputError("scores must be finite")
    pos = np.count_nonzero(y == 0)
    neg = y.size - pos
    if pos == 0 or neg == 0:
        raise InputError("ROC analysis needs both classes in the data")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), y.size - 1]
    tp = np.cumsum(y == 0)[last]
    fp = np.cumsum(y == 1)[last]
    fpr = np.r_[0.0, fp / neg]
    tpr = np.r_[0.0, tp / pos]
    return RocCurve(fpr, tpr, np.r_[np.inf, s[last]])


def confusion_at(point: tuple[float, float], balance: float) -> ConfusionMatrix:
    """Normalized confusion matrix of an ROC vertex for class-0 share ``balance``."""
    f, t = float(point[0]), float(point[1])
    if not (0 <= f <= 1 and 0 <= t <= 1):
        raise ContractViolation("ROC point must lie in the unit square")
    if not 0 < balance < 1:
        raise ContractViolation("balance B must lie in (0, 1)")
    B = float(balance)
    return ConfusionMatrix([[B * t, (1 - B) * f], [B * (1 - t), (1 - B) * (1 - f)]])


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve."""
    f, t = curve.fpr, curve.tpr
    return float(np.sum(np.diff(f) * (t[1:] + t[:-1]) / 2.0))


def upper_hull(curve: RocCurve) -> list[int]:
    """Indices of the vertices on the upper convex hull, left to right.

    Collinear middle points are dropped; at equal ``f`` only the highest
    vertex (first occurrence) is kept.
    """
    best: dict[float, int] = {}
    for k, (f, t) in enumerate(zip(curve.fpr, curve.tpr)):
        if f not in best or t > curve.tpr[best[f]]:
            best[f] = k
    idx = [best[f] for f in sorted(best)]
    hull: list[int] = []
    for k in idx:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = ((curve.fpr[a] - curve.fpr[o]) * (curve.tpr[k] - curve.tpr[o])
                     - (curve.tpr[a] - curve.tpr[o]) * (curve.fpr[k] - curve.fpr[o]))
            if cross >= 0:  # a is not strictly above the chord o-k
                hull.pop()
            else:
                break
        hull.append(k)
    return hull


def _point(curve: RocCurve, k: int, ctx: OperatingContext) -> OperatingPoint:
    f, t = float(curve.fpr[k]), float(curve.tpr[k])
    th = None if curve.thresholds is None else float(curve.thresholds[k])
    return OperatingPoint(f, t, utility_yield(ctx.utility, confusion_at((f, t), ctx.balance)),
                          k, th)


def optimal_operating_point(curve: RocCurve, ctx: OperatingContext) -> OperatingPoint:
    """Vertex of maximal utility yield, found by hull tangency."""
    s = ctx.slope
    hull = upper_hull(curve)
    i = 0
    while i + 1 < len(hull):
        a, b = hull[i], hull[i + 1]
        edge = (curve.tpr[b] - curve.tpr[a]) / (curve.fpr[b] - curve.fpr[a])
        if edge > s:
            i += 1
        else:
            break
    return _point(curve, hull[i], ctx)


def brute_force_operating_point(curve: RocCurve, ctx: OperatingContext) -> OperatingPoint:
    """Reference answer: evaluate the yield at every vertex."""
    yields = np.array([
        utility_yield(ctx.utility, confusion_at(p, ctx.balance)) for p in curve.points()
    ])
    best = yields.max()
    cand = np.flatnonzero(yields >= best - _TOL * max(1.0, abs(best)))
    k = min(cand, key=lambda j: (curve.fpr[j], -curve.tpr[j], j))
    return _point(curve, int(k), ctx)


def _intercept(curve: RocCurve, ctx: OperatingContext) -> float | None:
    s = ctx.slope
    if not np.isfinite(s):
        return None
    return float(np.max(curve.tpr - s * curve.fpr))


def compare_by_tangent(curves: Sequence[RocCurve], ctx: OperatingContext) -> list[TangentRank]:
    """Rank classifiers by the intercept of their touching iso-utility line.

    Equivalent to ranking by optimal achievable yield.  Equal intercepts share
    a rank and are listed in input order.
    """
    if len(curves) < 2:
        raise ContractViolation("need at least two curves to compare")
    entries = []
    for k, c in enumerate(curves):
        op = optimal_operating_point(c, ctx)
        icpt = _intercept(c, ctx)
        key = icpt if icpt is not None else op.utility_yield
        entries.append((key, k, icpt, op, auc(c)))
    entries.sort(key=lambda e: (-e[0], e[1]))
    out, rank, prev = [], 0, None
    for pos, (key, k, icpt, op, a) in enumerate(entries):
        if prev is None or prev - key > _TOL * max(1.0, abs(prev)):
            rank = pos + 1
        prev = key
        out.append(TangentRank(k, rank, icpt, op.utility_yield, a, op))
    # tied entries are listed in input order, independent of rounding noise
    out.sort(key=lambda r: (r.rank, r.index))
    return out


def _limits(curve: RocCurve, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left and right limits of ``t(f)`` at each ``x`` (they differ on vertical steps)."""
    f, t = curve.fpr, curve.tpr
    lo = np.searchsorted(f, x, side="left")
    hi = np.searchsorted(f, x, side="right")
    left = np.empty_like(x)
    right = np.empty_like(x)
    for n, xv in enumerate(x):
        if lo[n] < hi[n]:  # x is a vertex abscissa
            left[n] = t[lo[n]]
            right[n] = t[hi[n] - 1]
        else:
            v = np.interp(xv, f, t)
            left[n] = right[n] = v
    return left, right


def dominates(curve_a: RocCurve, curve_b: RocCurve) -> bool:
    """True iff ``a`` is nowhere below ``b`` and somewhere strictly above."""
    x = np.union1d(curve_a.fpr, curve_b.fpr)
    la, ra = _limits(curve_a, x)
    lb, rb = _limits(curve_b, x)
    if np.any(la < lb - _TOL) or np.any(ra < rb - _TOL):
        return False
    return bool(np.any(la > lb + _TOL) or np.any(ra > rb + _TOL))


# -- AUC versus utility: a reversal example ------------------------------

#: utility and balance at which the shipped fixture pair reverses AUC ordering
FIXTURE_CONTEXT = OperatingContext(UtilityMatrix([[4.0, 0.0], [0.0, 1.0]]), 0.5)


def binormal_curve(a: float, b: float, n: int = 41) -> RocCurve:
    """Vertices of ``t = Phi(a + b * Phi^-1(f))`` on ``n`` equally spaced ``f``."""
    f = np.linspace(0.0, 1.0, n)
    with np.errstate(divide="ignore"):
        t = norm.cdf(a + b * norm.ppf(f))
    t[0], t[-1] = 0.0, 1.0
    return RocCurve(f, np.maximum.accumulate(t))


def search_reversal_pair(ctx: OperatingContext = FIXTURE_CONTEXT, n: int = 41):
    """Deterministic grid search for two binormal curves whose AUC order is
    opposite to their optimal-yield order under ``ctx``.

    Returns ``((a_A, b_A), (a_B, b_B))`` where curve A has the smaller AUC but
    the higher optimal yield; the pair maximizes the smaller of the two gaps.
    Both optimal vertices must be interior (neither all-class-0 nor
    all-class-1 decisions).
    """
    params = [(round(float(a), 2), round(float(b), 2))
              for a in np.arange(0.5, 3.01, 0.25) for b in np.arange(0.25, 2.01, 0.25)]
    curves = {p: binormal_curve(*p, n=n) for p in params}
    aucs = {p: auc(c) for p, c in curves.items()}
    ops = {p: optimal_operating_point(c, ctx) for p, c in curves.items()}
    best_yield = {p: op.utility_yield for p, op in ops.items()}
    interior = [p for p in params if 0 < ops[p].fpr < 1]
    best, best_gap = None, 0.0
    for pa in interior:
        for pb in interior:
            d_auc = aucs[pb] - aucs[pa]
            d_yield = best_yield[pa] - best_yield[pb]
            gap = min(d_auc, d_yield)
            if gap > best_gap:
                best, best_gap = (pa, pb), gap
    if best is None:
        raise RuntimeError("no reversal pair in the search grid")
    return best


def reversal_fixture() -> tuple[RocCurve, RocCurve, dict]:
    """The shipped curve pair: ``(curve_a, curve_b, parameters)``.

    ``curve_a`` has the smaller AUC but ranks first under :data:`FIXTURE_CONTEXT`.
    """
    from .fileio import read_curve_csv

    pkg = resources.files("utileval") / "data"
    meta = json.loads((pkg / "auc_reversal.json").read_text())
    a = read_curve_csv(pkg / "auc_reversal_a.csv")
    b = read_curve_csv(pkg / "auc_reversal_b.csv")
    return a, b, meta
