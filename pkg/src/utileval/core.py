"""Confusion matrices, utility matrices and the utility yield.

Conventions
-----------
Matrices are indexed ``[i, j]`` with ``i`` the class chosen by the classifier
(row) and ``j`` the true class (column).  Class 0 is the "positive" class.

The utility yield of a classifier with normalized confusion matrix ``C`` under
utility matrix ``U`` is ``sum_ij U[i, j] * C[i, j]``; it is the only ranking
criterion consistent with expected-utility maximization.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ContractViolation,
    DegenerateProblemError,
    InfeasibleError,
    InvalidScaleError,
)

NORMALIZATION_TOL = 1e-12
#: absolute tolerance for equality comparisons of yields and utilities
ATOL = 1e-9

__all__ = [
    "ConfusionMatrix",
    "UtilityMatrix",
    "UtilityCoordinates",
    "ClassDistribution",
    "UtilityMixture",
    "utility_yield",
    "affine_transform",
    "normalize_utilities",
    "coords_to_matrix",
    "matrix_to_coords",
    "coords_to_entries",
    "expected_utility_matrix",
    "optimal_class",
]


def _frozen_square(entries, name: str) -> np.ndarray:
    arr = np.array(entries, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
        raise ContractViolation(f"{name} must be a square matrix with n >= 2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Counts or relative frequencies of (predicted class, true class).

    Parameters
    ----------
    entries : array_like, shape (n, n)
        Nonnegative entries; ``entries[i][j]`` counts items predicted as ``i``
        whose true class is ``j``.
    total : int, optional
        Number of test items the frequencies were computed from.
    """

    entries: np.ndarray
    total: int | None = None

    def __post_init__(self):
        arr = _frozen_square(self.entries, "confusion matrix")
        if np.any(arr < 0):
            raise ContractViolation("confusion matrix entries must be nonnegative")
        if arr.sum() <= 0:
            raise ContractViolation("confusion matrix must not be all zero")
        if self.total is not None and (int(self.total) != self.total or self.total <= 0):
            raise ContractViolation("total count N must be a positive integer")
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_counts(cls, counts) -> "ConfusionMatrix":
        """Normalize a matrix of counts ``F_ij`` into frequencies ``F_ij / N``."""
        arr = np.asarray(counts, dtype=float)
        n = arr.sum()
        total = int(round(n)) if np.allclose(arr, np.round(arr)) else None
        return cls(arr / n, total=total)

    @classmethod
    def from_labels(cls, true_labels: Sequence[int], predicted: Sequence[int],
                    n_classes: int = 2) -> "ConfusionMatrix":
        """Tally a normalized confusion matrix from paired label sequences."""
        t = np.asarray(true_labels, dtype=int)
        p = np.asarray(predicted, dtype=int)
        if t.shape != p.shape or t.ndim != 1 or t.size == 0:
            raise ContractViolation("label sequences must be non-empty and of equal length")
        if t.min() < 0 or p.min() < 0 or t.max() >= n_classes or p.max() >= n_classes:
            raise ContractViolation(f"labels must lie in 0..{n_classes - 1}")
        counts = np.zeros((n_classes, n_classes))
        np.add.at(counts, (p, t), 1)
        return cls.from_counts(counts)

    @property
    def n_classes(self) -> int:
        return self.entries.shape[0]

    @property
    def is_normalized(self) -> bool:
        return abs(self.entries.sum() - 1.0) <= NORMALIZATION_TOL

    def normalized(self) -> "ConfusionMatrix":
        if self.is_normalized:
            return self
        total = self.total
        if total is None and np.allclose(self.entries, np.round(self.entries)):
            total = int(round(self.entries.sum()))
        return ConfusionMatrix(self.entries / self.entries.sum(), total=total)

    @property
    def class_frequencies(self) -> np.ndarray:
        """Column sums: relative frequency of each true class."""
        return self.normalized().entries.sum(axis=0)

    @property
    def f0(self) -> float:
        return float(self.class_frequencies[0])

    @property
    def f1(self) -> float:
        return float(self.class_frequencies[1])

    # binary accessors
    @property
    def c00(self) -> float:
        return float(self.entries[0, 0])

    @property
    def c01(self) -> float:
        return float(self.entries[0, 1])

    @property
    def c10(self) -> float:
        return float(self.entries[1, 0])

    @property
    def c11(self) -> float:
        return float(self.entries[1, 1])

    def flat(self) -> tuple[float, float, float, float]:
        """Binary entries as ``(c00, c01, c10, c11)``."""
        _require_binary(self.entries, "confusion matrix")
        return self.c00, self.c01, self.c10, self.c11

    def relabeled(self) -> "ConfusionMatrix":
        """Swap the names of the two classes (rows and columns)."""
        _require_binary(self.entries, "confusion matrix")
        return ConfusionMatrix(self.entries[::-1, ::-1], total=self.total)

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries) and self.total == other.total

    def __repr__(self):
        return f"ConfusionMatrix({self.entries.tolist()!r}, total={self.total!r})"


@dataclass(frozen=True, eq=False)
class UtilityMatrix:
    """Utilities ``U[i, j]`` of choosing class ``i`` when class ``j`` is true."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _frozen_square(self.entries, "utility matrix")
        if np.ptp(arr) == 0:
            raise DegenerateProblemError(
                "all utilities are equal: the choice of class is immaterial")
        object.__setattr__(self, "entries", arr)

    @classmethod
    def identity(cls, n: int = 2) -> "UtilityMatrix":
        return cls(np.eye(n))

    @property
    def n_classes(self) -> int:
        return self.entries.shape[0]

    @property
    def is_feasible(self) -> bool:
        """Correct classification is never worse than misclassifying the same true class."""
        e = self.entries
        return bool(np.all(np.diag(e)[None, :] >= e - NORMALIZATION_TOL))

    @property
    def is_normalized(self) -> bool:
        return (abs(self.entries.min()) <= NORMALIZATION_TOL
                and abs(self.entries.max() - 1.0) <= NORMALIZATION_TOL)

    def flat(self) -> tuple[float, float, float, float]:
        _require_binary(self.entries, "utility matrix")
        e = self.entries
        return float(e[0, 0]), float(e[0, 1]), float(e[1, 0]), float(e[1, 1])

    def gains(self) -> tuple[float, float]:
        """``(U00 - U10, U11 - U01)``: weights of ``C00`` and ``C11`` in the yield."""
        u00, u01, u10, u11 = self.flat()
        return u00 - u10, u11 - u01

    def allclose(self, other: "UtilityMatrix", atol: float = ATOL) -> bool:
        return np.allclose(self.entries, other.entries, rtol=0, atol=atol)

    def __eq__(self, other):
        if not isinstance(other, UtilityMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __repr__(self):
        return f"UtilityMatrix({self.entries.tolist()!r})"


def _require_binary(arr: np.ndarray, name: str) -> None:
    if arr.shape != (2, 2):
        raise ContractViolation(f"{name} must be 2x2 for this operation, got {arr.shape}")


@dataclass(frozen=True)
class UtilityCoordinates:
    """Position of a normalized binary utility matrix in the 2-D metric space.

    ``x`` trades the utility of correctly classifying class 0 against class 1;
    ``y`` raises the utility of misclassifying class 1 (``y > 0``) or class 0
    (``y < 0``).  The corners with ``|x - y| > 1`` are infeasible.
    """

    x: float
    y: float

    def __post_init__(self):
        x, y = float(self.x), float(self.y)
        if not (abs(x) <= 1 and abs(y) <= 1):
            raise InfeasibleError(f"coordinates ({x}, {y}) outside [-1, 1]^2")
        if y - x > 1 or x - y > 1:
            raise InfeasibleError(f"coordinates ({x}, {y}) lie in an excluded corner")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @staticmethod
    def is_feasible(x: float, y: float) -> bool:
        return abs(x) <= 1 and abs(y) <= 1 and y - x <= 1 and x - y <= 1


@dataclass(frozen=True)
class ClassDistribution:
    """Probabilities ``(p0, p1)`` of the two classes."""

    p0: float
    p1: float

    def __post_init__(self):
        if self.p0 < 0 or self.p1 < 0:
            raise ContractViolation("class probabilities must be nonnegative")
        if abs(self.p0 + self.p1 - 1.0) > NORMALIZATION_TOL:
            raise ContractViolation("class probabilities must sum to 1")

    @classmethod
    def from_weights(cls, w0: float, w1: float) -> "ClassDistribution":
        total = w0 + w1
        if w0 < 0 or w1 < 0 or total <= 0:
            raise ContractViolation("class weights must be nonnegative and not both zero")
        return cls(w0 / total, 1.0 - w0 / total)

    def as_array(self) -> np.ndarray:
        return np.array([self.p0, self.p1])


@dataclass(frozen=True)
class UtilityMixture:
    """Probability-weighted candidate utility matrices."""

    components: tuple[tuple[float, UtilityMatrix], ...] = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple((float(q), u) for q, u in self.components)
        if not comps:
            raise ContractViolation("utility mixture must not be empty")
        weights = np.array([q for q, _ in comps])
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > NORMALIZATION_TOL:
            raise ContractViolation("mixture weights must be nonnegative and sum to 1")
        shapes = {u.entries.shape for _, u in comps}
        if len(shapes) != 1:
            raise ContractViolation("mixture components must have the same shape")
        object.__setattr__(self, "components", comps)


def _as_utility(U) -> UtilityMatrix:
    return U if isinstance(U, UtilityMatrix) else UtilityMatrix(U)


def _as_confusion(C) -> ConfusionMatrix:
    return C if isinstance(C, ConfusionMatrix) else ConfusionMatrix(C)


def utility_yield(U: UtilityMatrix, C: ConfusionMatrix) -> float:
    """Average utility per classified item: ``sum_ij U_ij C_ij``.

    Raises
    ------
    ContractViolation
        If ``C`` is not normalized or the shapes differ.
    """
    U, C = _as_utility(U), _as_confusion(C)
    if not C.is_normalized:
        raise ContractViolation("utility_yield requires a normalized confusion matrix")
    if U.entries.shape != C.entries.shape:
        raise ContractViolation("utility and confusion matrices differ in shape")
    return float(np.sum(U.entries * C.entries))


def affine_transform(U: UtilityMatrix, a: float, b: float) -> UtilityMatrix:
    """Change of utility unit and zero: ``a * U + b`` with ``a > 0``."""
    if not a > 0:
        raise InvalidScaleError(f"scale must be positive, got {a}")
    U = _as_utility(U)
    return UtilityMatrix(a * U.entries + b)


def normalize_utilities(U: UtilityMatrix) -> UtilityMatrix:
    """Rescale so the minimum utility is 0 and the maximum is 1."""
    e = _as_utility(U).entries
    span = e.max() - e.min()
    if span == 0:
        raise DegenerateProblemError("cannot normalize a constant utility matrix")
    return UtilityMatrix((e - e.min()) / span)


def coords_to_entries(x, y) -> np.ndarray:
    """Vectorized coordinate map; returns ``(..., 4)`` as ``(U00, U01, U10, U11)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u00 = 1.0 - np.where(x > 0, x, 0.0)
    u01 = np.where(y > 0, y, 0.0)
    u10 = -np.where(y < 0, y, 0.0)
    u11 = 1.0 + np.where(x < 0, x, 0.0)
    return np.stack([u00, u01, u10, u11], axis=-1)


def coords_to_matrix(c: UtilityCoordinates) -> UtilityMatrix:
    if not isinstance(c, UtilityCoordinates):
        c = UtilityCoordinates(*c)
    return UtilityMatrix(coords_to_entries(c.x, c.y).reshape(2, 2))


def matrix_to_coords(U: UtilityMatrix) -> UtilityCoordinates:
    """Inverse of :func:`coords_to_matrix`.

    The matrix must already be normalized and feasible; it is not normalized
    implicitly.
    """
    U = _as_utility(U)
    if not U.is_normalized:
        raise ContractViolation("matrix_to_coords requires a normalized utility matrix")
    if not U.is_feasible:
        raise InfeasibleError("utility matrix violates U00 >= U10 or U11 >= U01")
    u00, u01, u10, u11 = U.flat()
    tol = NORMALIZATION_TOL
    # A normalized feasible matrix has its max on the diagonal and its min off it.
    if u00 < 1 - tol:
        if abs(u11 - 1) > tol:
            raise InfeasibleError("diagonal must contain the maximum utility 1")
        x = 1.0 - u00
    else:
        x = u11 - 1.0 if u11 < 1 - tol else 0.0
    if u01 > tol:
        if abs(u10) > tol:
            raise InfeasibleError("off-diagonal must contain the minimum utility 0")
        y = u01
    else:
        y = -u10 if u10 > tol else 0.0
    return UtilityCoordinates(x, y)


def expected_utility_matrix(m: UtilityMixture) -> UtilityMatrix:
    """Effective utility matrix under uncertainty: ``sum_a q_a U^(a)``."""
    if not isinstance(m, UtilityMixture):
        m = UtilityMixture(tuple(m))
    total = sum(q * u.entries for q, u in m.components)
    return UtilityMatrix(total)


def optimal_class(U: UtilityMatrix, p: ClassDistribution | Iterable[float]
                  ) -> tuple[int, np.ndarray]:
    """Choose the class with maximal expected utility.

    ``p`` may be a :class:`ClassDistribution` or unnormalized nonnegative
    weights.  Ties within :data:`ATOL` go to the lowest class index.

    Returns
    -------
    (int, ndarray)
        The chosen class and the expected utility of every choice.
    """
    U = _as_utility(U)
    if isinstance(p, ClassDistribution):
        probs = p.as_array()
    else:
        w = np.asarray(list(p), dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise ContractViolation("class weights must be nonnegative and not all zero")
        probs = w / w.sum()
    if probs.shape != (U.n_classes,):
        raise ContractViolation("class distribution does not match the utility matrix")
    ubar = U.entries @ probs
    best = int(np.flatnonzero(ubar >= ubar.max() - ATOL)[0])
    return best, ubar
