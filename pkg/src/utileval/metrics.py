"""Classical binary evaluation metrics and the metric registry.

Class 0 is the positive class.  Every metric has two forms:

* a scalar function of a normalized :class:`~utileval.core.ConfusionMatrix`,
  which raises :class:`~utileval.errors.UndefinedMetricError` when one of the
  two classes is absent from the test set;
* a vectorized form over arrays ``(c00, c01, c10, c11)`` used by the Monte
  Carlo and compliance machinery.  The compiled kernel mirrors these
  expressions operation for operation, so keep the two in sync.

Degenerate denominators (no item predicted positive, and so on) score 0.

Matthews correlation coefficient
--------------------------------
Written in terms of ``C00, C11`` and the class frequencies, the correlation
numerator is ``f1*C00 + f0*C11 - f0*f1``.  Dropping the ``-f0*f1`` term gives
1.26 and 1.54 on the two worked-example classifiers, outside ``[-1, 1]``; with
it the values are 0.24 and 0.51.  The centred (standard) form is used.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ConfusionMatrix, UtilityMatrix, _as_confusion, _as_utility
from .errors import ContractViolation, UndefinedMetricError

__all__ = [
    "accuracy",
    "true_positive_rate",
    "true_negative_rate",
    "precision",
    "f_beta",
    "f1_score",
    "matthews_cc",
    "fowlkes_mallows",
    "balanced_accuracy",
    "MetricDescriptor",
    "REGISTRY",
    "get_metric",
    "yield_as_metric",
]


def _ratio(num, den):
    """``num / den`` with the zero-denominator convention (0)."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    ok = den > 0
    safe = np.where(ok, den, 1.0)
    return np.where(ok, num / safe, 0.0)


def _rate(num, den):
    """``num / den`` that is NaN (undefined) on a zero class frequency."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    ok = den > 0
    safe = np.where(ok, den, 1.0)
    return np.where(ok, num / safe, np.nan)


# -- vectorized forms ------------------------------------------------------

def accuracy_v(c00, c01, c10, c11):
    return np.asarray(c00 + c11, dtype=float)


def tpr_v(c00, c01, c10, c11):
    f0 = c00 + c10
    return _rate(c00, f0)


def tnr_v(c00, c01, c10, c11):
    f1 = c01 + c11
    return _rate(c11, f1)


def precision_v(c00, c01, c10, c11):
    return _ratio(c00, c00 + c01)


def fbeta_v(c00, c01, c10, c11, beta=1.0):
    b2 = beta * beta
    return _ratio((1.0 + b2) * c00, (1.0 + b2) * c00 + b2 * c10 + c01)


def f1_v(c00, c01, c10, c11):
    return fbeta_v(c00, c01, c10, c11, 1.0)


def mcc_v(c00, c01, c10, c11):
    f0 = c00 + c10
    f1 = c01 + c11
    den = np.sqrt(f0 * f1 * (c00 + c01) * (c10 + c11))
    return _ratio(c00 * c11 - c01 * c10, den)


def fm_v(c00, c01, c10, c11):
    f0 = c00 + c10
    return _ratio(c00, np.sqrt(f0 * (c00 + c01)))


def balanced_accuracy_v(c00, c01, c10, c11):
    f0 = c00 + c10
    f1 = c01 + c11
    return _rate(c00, 2.0 * f0) + _rate(c11, 2.0 * f1)


# -- scalar forms ----------------------------------------------------------

def _entries(C, need_both_classes: bool = True) -> tuple[float, float, float, float]:
    C = _as_confusion(C)
    if not C.is_normalized:
        raise ContractViolation("metrics require a normalized confusion matrix")
    c00, c01, c10, c11 = C.flat()
    if need_both_classes and (c00 + c10 <= 0 or c01 + c11 <= 0):
        raise UndefinedMetricError(
            "test set contains a single class; class-conditional metrics are undefined")
    return c00, c01, c10, c11


def accuracy(C: ConfusionMatrix) -> float:
    """Fraction of correctly classified items, ``C00 + C11``."""
    return float(accuracy_v(*_entries(C, need_both_classes=False)))


def true_positive_rate(C: ConfusionMatrix) -> float:
    """Recall of class 0, ``C00 / f0``."""
    return float(tpr_v(*_entries(C)))


def true_negative_rate(C: ConfusionMatrix) -> float:
    """Specificity, ``C11 / f1``."""
    return float(tnr_v(*_entries(C)))


def precision(C: ConfusionMatrix) -> float:
    return float(precision_v(*_entries(C)))


def f_beta(C: ConfusionMatrix, beta: float = 1.0) -> float:
    """Weighted harmonic mean of precision and recall.

    For ``beta == 1`` this equals ``2 C00 / (C00 - C11 + 1)``.
    """
    if not beta > 0:
        raise ContractViolation("beta must be positive")
    return float(fbeta_v(*_entries(C), beta=beta))


def f1_score(C: ConfusionMatrix) -> float:
    return f_beta(C, 1.0)


def matthews_cc(C: ConfusionMatrix) -> float:
    return float(mcc_v(*_entries(C)))


def fowlkes_mallows(C: ConfusionMatrix) -> float:
    """Geometric mean of precision and recall."""
    return float(fm_v(*_entries(C)))


def balanced_accuracy(C: ConfusionMatrix) -> float:
    return float(balanced_accuracy_v(*_entries(C)))


# -- registry --------------------------------------------------------------

VectorScore = Callable[..., np.ndarray]


@dataclass(frozen=True)
class MetricDescriptor:
    """A named scoring function with its declared decision-theoretic status.

    ``witness`` is the ``(X, Y)`` pair of the admissible linear form
    ``a(f) * (X*C00 + Y*C11) + b(f)`` when the metric is declared compliant.
    """

    name: str
    score: Callable[[ConfusionMatrix], float]
    vector: VectorScore
    declared_compliant: bool
    witness: tuple[float, float] | None = None
    value_range: tuple[float, float] = (0.0, 1.0)
    aliases: tuple[str, ...] = field(default=())
    kernel_code: int | None = None

    def __call__(self, C: ConfusionMatrix) -> float:
        return self.score(C)


def _descriptor(name, score, vector, compliant, witness=None, value_range=(0.0, 1.0),
                aliases=(), code=None):
    return MetricDescriptor(name, score, vector, compliant, witness, value_range,
                            tuple(aliases), code)


# Kernel codes are part of the compiled kernel's ABI; do not renumber.
REGISTRY: dict[str, MetricDescriptor] = {
    d.name: d
    for d in (
        _descriptor("accuracy", accuracy, accuracy_v, True, (1.0, 1.0), code=0),
        _descriptor("balanced_accuracy", balanced_accuracy, balanced_accuracy_v, False,
                    aliases=("ba",), code=1),
        _descriptor("precision", precision, precision_v, False, aliases=("ppv",), code=2),
        _descriptor("tpr", true_positive_rate, tpr_v, True, (1.0, 0.0),
                    aliases=("recall", "sensitivity", "true_positive_rate"), code=3),
        _descriptor("tnr", true_negative_rate, tnr_v, True, (0.0, 1.0),
                    aliases=("specificity", "true_negative_rate"), code=4),
        _descriptor("f1", f1_score, f1_v, False, aliases=("f_measure", "f1_score"), code=5),
        _descriptor("mcc", matthews_cc, mcc_v, False, value_range=(-1.0, 1.0),
                    aliases=("matthews", "matthews_cc"), code=6),
        _descriptor("fowlkes_mallows", fowlkes_mallows, fm_v, False, aliases=("fm",), code=7),
    )
}

_ALIASES = {alias: d.name for d in REGISTRY.values() for alias in (d.name, *d.aliases)}


def get_metric(name: str | MetricDescriptor) -> MetricDescriptor:
    """Look up a registry metric by name or alias."""
    if isinstance(name, MetricDescriptor):
        return name
    key = name.strip().lower().replace("-", "_")
    try:
        return REGISTRY[_ALIASES[key]]
    except KeyError:
        raise KeyError(
            f"unknown metric {name!r}; available: {', '.join(REGISTRY)}") from None


def yield_as_metric(U: UtilityMatrix, name: str | None = None) -> MetricDescriptor:
    """Wrap the utility yield of ``U`` as a (compliant) registry-style metric."""
    U = _as_utility(U)
    if not U.is_feasible:
        raise ContractViolation("yield_as_metric requires a feasible utility matrix")
    u00, u01, u10, u11 = U.flat()

    def vector(c00, c01, c10, c11):
        return np.asarray(u00 * c00 + u01 * c01 + u10 * c10 + u11 * c11, dtype=float)

    def score(C):
        return float(vector(*_entries(C, need_both_classes=False)))

    lo, hi = float(U.entries.min()), float(U.entries.max())
    return MetricDescriptor(
        name=name or f"yield{U.entries.tolist()}",
        score=score,
        vector=vector,
        declared_compliant=True,
        witness=(u00 - u10, u11 - u01),
        value_range=(lo, hi),
    )
