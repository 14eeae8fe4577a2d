"""Empirical test of whether a metric ranks like some utility yield.

At a fixed test set (fixed class frequencies) a metric is consistent with
expected-utility maximization exactly when its ordering of confusion matrices
agrees with the ordering by a linear functional ``X*C00 + Y*C11`` whose
coefficients do not depend on the class frequencies.  Monotone transforms are
allowed, so only orderings are compared.

Directions are parametrized by the angle ``theta`` in degrees, with
``(X, Y) = (cos theta, sin theta)`` restricted to ``[0, 90]`` because feasible
utilities have ``X, Y >= 0``.  Every sampled pair whose metric difference is
not a near tie restricts ``theta`` to an open half-circle; the admissible set
at one frequency is the intersection of those arcs, computed exactly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import ConfusionMatrix, UtilityMatrix, _as_utility
from .metrics import MetricDescriptor, get_metric
from .sampling import confusion_from_rates, substream

log = logging.getLogger(__name__)

__all__ = [
    "FREQUENCY_GRID",
    "DirectionSet",
    "ComplianceReport",
    "ReversalWitness",
    "admissible_directions",
    "compliance_verdict",
    "find_reversal_witness",
    "direction_disagreements",
]

FREQUENCY_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
TIE_TOL = 1e-9
WITNESS_TOL = 1e-6
GRID_STEP_DEG = 0.5

_WITNESS_UTILITIES = (
    UtilityMatrix.identity(),
    UtilityMatrix([[1.0, 0.0], [0.0, 0.0]]),
    UtilityMatrix([[0.0, 0.0], [0.0, 1.0]]),
)


@dataclass(frozen=True)
class DirectionSet:
    """Admissible direction angles (degrees) for one class frequency."""

    f0: float
    intervals: tuple[tuple[float, float], ...]
    pairs_tested: int
    pairs_excluded: int
    resampled: int = 0

    @property
    def empty(self) -> bool:
        return not self.intervals

    def __contains__(self, theta: float) -> bool:
        return any(lo <= theta <= hi for lo, hi in self.intervals)


@dataclass(frozen=True)
class ReversalWitness:
    """Two confusion matrices ranked oppositely by a metric and by a utility yield.

    ``first`` scores higher on the metric but has the lower yield.
    """

    first: ConfusionMatrix
    second: ConfusionMatrix
    metric_diff: float
    yield_diff: float
    f0: float
    draws: int


@dataclass
class ComplianceReport:
    metric: str
    compliant: bool
    direction_sets: list[DirectionSet]
    direction_deg: float | None
    coefficients: tuple[float, float] | None
    declared_compliant: bool
    samples: int
    witnesses: list[tuple[UtilityMatrix, ReversalWitness]] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "compliant" if self.compliant else "non-compliant"

    @property
    def matches_declared(self) -> bool:
        return self.compliant == self.declared_compliant

    @property
    def pairs_tested(self) -> int:
        return sum(d.pairs_tested for d in self.direction_sets)


def _metric(metric) -> MetricDescriptor:
    return get_metric(metric)


def _sample_flat(metric: MetricDescriptor, f0: float, n: int, rng, rate_range=(0.0, 1.0)):
    """``n`` flat confusion matrices at class share ``f0`` with finite metric values."""
    lo, hi = rate_range
    rates = rng.uniform(lo, hi, size=(n, 2))
    flat = np.stack(confusion_from_rates(f0, rates[:, 0], rates[:, 1]), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = metric.vector(*flat.T)
    resampled = 0
    bad = ~np.isfinite(scores)
    while bad.any():
        resampled += int(bad.sum())
        log.info("metric %s undefined on %d samples at f0=%g; resampling",
                 metric.name, int(bad.sum()), f0)
        rates = rng.uniform(lo, hi, size=(int(bad.sum()), 2))
        flat[bad] = np.stack(confusion_from_rates(f0, rates[:, 0], rates[:, 1]), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = metric.vector(*flat.T)
        bad = ~np.isfinite(scores)
    return flat, scores, resampled


@dataclass(frozen=True)
class _Constraints:
    dc00: np.ndarray
    dc11: np.ndarray
    sign: np.ndarray
    excluded: int


def _pair_constraints(flat, scores) -> _Constraints:
    i, j = np.triu_indices(len(scores), k=1)
    dm = scores[j] - scores[i]
    dc00 = flat[j, 0] - flat[i, 0]
    dc11 = flat[j, 3] - flat[i, 3]
    keep = (np.abs(dm) >= TIE_TOL) & (np.hypot(dc00, dc11) >= TIE_TOL)
    return _Constraints(dc00[keep], dc11[keep], np.sign(dm[keep]), int((~keep).sum()))


def _arc_bounds(c: _Constraints) -> tuple[float, float]:
    """Intersection of all admissible half-circles with ``[0, 90]``."""
    if c.sign.size == 0:
        return 0.0, 90.0
    phi = np.degrees(np.arctan2(c.sign * c.dc11, c.sign * c.dc00))
    lo = float(np.max(np.maximum(0.0, phi - 90.0)))
    hi = float(np.min(np.minimum(90.0, phi + 90.0)))
    return lo, hi


def _representative(lo: float, hi: float) -> float:
    """Grid angle inside ``[lo, hi]`` nearest its midpoint, else the midpoint."""
    mid = 0.5 * (lo + hi)
    k_lo = math.ceil(lo / GRID_STEP_DEG - 1e-12)
    k_hi = math.floor(hi / GRID_STEP_DEG + 1e-12)
    if k_lo <= k_hi:
        k = min(max(round(mid / GRID_STEP_DEG), k_lo), k_hi)
        return k * GRID_STEP_DEG
    return mid


def direction_coefficients(theta: float) -> tuple[float, float]:
    """``(X, Y)`` for an angle, scaled so the larger coefficient is 1."""
    if theta == 0.0:
        return 1.0, 0.0
    if theta == 90.0:
        return 0.0, 1.0
    if theta == 45.0:
        return 1.0, 1.0
    c, s = math.cos(math.radians(theta)), math.sin(math.radians(theta))
    m = max(c, s)
    return c / m, s / m


def _agrees(c: _Constraints, theta: float) -> bool:
    x, y = direction_coefficients(theta)
    return bool(np.all(c.sign * (x * c.dc00 + y * c.dc11) > 0))


def _constraints_at(metric: MetricDescriptor, f0: float, samples: int, rng_seed: int, key: int):
    rng = substream(rng_seed, key, int(round(f0 * 1e6)))
    flat, scores, resampled = _sample_flat(metric, f0, samples, rng)
    return _pair_constraints(flat, scores), resampled


def _check_inputs(f0: float, samples: int) -> None:
    if not 0 < f0 < 1:
        raise ValueError("f0 must lie in (0, 1)")
    if samples < 100:
        raise ValueError("at least 100 samples are required")


def admissible_directions(metric, f0: float, samples: int = 400,
                          rng_seed: int = 0) -> DirectionSet:
    """Directions whose linear functional orders all sampled pairs like ``metric``.

    ``samples`` confusion matrices are drawn at class share ``f0`` uniformly
    over the attainable ``(C00, C11)`` rectangle and all their pairs are
    compared; pairs with a metric difference below ``1e-9`` are skipped.
    """
    _check_inputs(f0, samples)
    m = _metric(metric)
    cons, resampled = _constraints_at(m, f0, samples, rng_seed, 0)
    lo, hi = _arc_bounds(cons)
    intervals: tuple[tuple[float, float], ...] = ()
    if lo <= hi and _agrees(cons, _representative(lo, hi)):
        intervals = ((lo, hi),)
    return DirectionSet(f0, intervals, int(cons.sign.size), cons.excluded, resampled)


def compliance_verdict(metric, frequency_grid: Sequence[float] = FREQUENCY_GRID,
                       samples: int = 400, rng_seed: int = 0,
                       witness_draws: int = 20_000) -> ComplianceReport:
    """Decide whether one frequency-independent direction fits every frequency."""
    grid = sorted(set(float(f) for f in frequency_grid))
    if len(grid) < 3:
        raise ValueError("the frequency grid needs at least 3 distinct values")
    m = _metric(metric)
    sets, all_cons = [], []
    lo, hi = 0.0, 90.0
    for f0 in grid:
        _check_inputs(f0, samples)
        cons, resampled = _constraints_at(m, f0, samples, rng_seed, 0)
        f_lo, f_hi = _arc_bounds(cons)
        ok = f_lo <= f_hi and _agrees(cons, _representative(f_lo, f_hi))
        sets.append(DirectionSet(f0, ((f_lo, f_hi),) if ok else (), int(cons.sign.size),
                                 cons.excluded, resampled))
        all_cons.append(cons)
        lo, hi = max(lo, f_lo), min(hi, f_hi)

    theta = None
    if all(not s.empty for s in sets) and lo <= hi:
        cand = _representative(lo, hi)
        if all(_agrees(c, cand) for c in all_cons):
            theta = cand
    report = ComplianceReport(
        metric=m.name,
        compliant=theta is not None,
        direction_sets=sets,
        direction_deg=theta,
        coefficients=direction_coefficients(theta) if theta is not None else None,
        declared_compliant=m.declared_compliant,
        samples=samples,
    )
    if not report.compliant:
        for U in _WITNESS_UTILITIES:
            w = find_reversal_witness(m, U, grid, max_draws=witness_draws, rng_seed=rng_seed)
            if w is not None:
                report.witnesses.append((U, w))
                break
    return report


def direction_disagreements(metric, theta: float, f0: float, n_pairs: int,
                            rng_seed: int = 0) -> int:
    """Count fresh random pairs ordered differently by ``metric`` and direction ``theta``."""
    m = _metric(metric)
    rng = substream(rng_seed, 1, int(round(f0 * 1e6)))
    a, sa, _ = _sample_flat(m, f0, n_pairs, rng)
    b, sb, _ = _sample_flat(m, f0, n_pairs, rng)
    x, y = direction_coefficients(theta)
    dm = sb - sa
    dl = x * (b[:, 0] - a[:, 0]) + y * (b[:, 3] - a[:, 3])
    keep = (np.abs(dm) >= TIE_TOL) & (np.abs(dl) >= TIE_TOL)
    return int(np.count_nonzero(np.sign(dm[keep]) != np.sign(dl[keep])))


def find_reversal_witness(metric, U: UtilityMatrix, f0: float | Sequence[float],
                          max_draws: int = 20_000, rng_seed: int = 0,
                          rate_range: tuple[float, float] = (0.0, 1.0),
                          batch: int = 256) -> ReversalWitness | None:
    """Search for two same-test-set confusion matrices the metric misranks.

    Returns the first pair found whose metric and yield differences both exceed
    ``1e-6`` with opposite signs, or ``None`` after ``max_draws`` matrices per
    class frequency.  ``f0`` may be a sequence of frequencies to try in order.
    """
    m = _metric(metric)
    u = np.asarray(_as_utility(U).flat())
    freqs = [f0] if np.isscalar(f0) else list(f0)
    for f in freqs:
        if not 0 < f < 1:
            raise ValueError("f0 must lie in (0, 1)")
        rng = substream(rng_seed, 2, int(round(f * 1e6)))
        drawn = 0
        while drawn < max_draws:
            n = min(batch, max_draws - drawn)
            if n < 2:
                break
            flat, scores, _ = _sample_flat(m, f, n, rng, rate_range)
            drawn += n
            yields = flat @ u
            dm = scores[:, None] - scores[None, :]
            dy = yields[:, None] - yields[None, :]
            hits = np.argwhere((dm > WITNESS_TOL) & (dy < -WITNESS_TOL))
            if hits.size:
                i, j = hits[0]
                return ReversalWitness(
                    first=ConfusionMatrix(flat[i].reshape(2, 2)),
                    second=ConfusionMatrix(flat[j].reshape(2, 2)),
                    metric_diff=float(dm[i, j]),
                    yield_diff=float(dy[i, j]),
                    f0=float(f),
                    draws=drawn,
                )
    return None
