"""Random generation for the experiments.

Streams
-------
All randomness flows from a 64-bit master seed.  Each logical task (a Monte
Carlo chunk, a role within the chunk, ...) gets its own generator through
:func:`substream`, which keys a :class:`numpy.random.SeedSequence` by the task's
integer coordinates.  Results therefore do not depend on how tasks are
scheduled across workers.

Utility matrices are handled in flat form ``(U00, U01, U10, U11)`` by the
vectorized samplers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ConfusionMatrix,
    UtilityCoordinates,
    UtilityMatrix,
    coords_to_entries,
    coords_to_matrix,
)
from .errors import ContractViolation, SamplerError

__all__ = [
    "parse_seed",
    "substream",
    "rate_from_uniform",
    "sample_rate",
    "confusion_from_rates",
    "sample_confusion",
    "UtilityPrior",
    "ErrorModel",
    "sample_true_utility",
    "sample_true_utilities",
    "perturb_utility",
    "perturb_utilities",
    "REJECTION_CAP",
]

#: maximum rejection-sampling attempts per accepted draw
REJECTION_CAP = 10**6
SEED_MAX = 2**64 - 1
GAUSSIAN_PRIOR_SIGMA = 1.0 / 3.0


def parse_seed(value: int | str) -> int:
    """Accept a seed as int, decimal string, or ``0x``-prefixed hex string."""
    if isinstance(value, str):
        text = value.strip().lower()
        try:
            seed = int(text, 16) if text.startswith("0x") else int(text, 10)
        except ValueError:
            raise ContractViolation(f"invalid seed {value!r}") from None
    else:
        seed = int(value)
    if not 0 <= seed <= SEED_MAX:
        raise ContractViolation(f"seed must be a 64-bit unsigned integer, got {value!r}")
    return seed


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the task identified by ``key``."""
    ss = np.random.SeedSequence(entropy=parse_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# -- classifier rates ------------------------------------------------------

def rate_from_uniform(u):
    """Inverse CDF of the density on ``[0.5, 1]`` proportional to ``r - 0.5``."""
    return 0.5 + 0.5 * np.sqrt(u)


def sample_rate(rng, size=None):
    """Draw true-positive/true-negative rates favouring good classifiers.

    Median 0.8536, quartiles 0.75 and 0.9330.
    """
    u = _as_rng(rng).random(size)
    r = rate_from_uniform(u)
    return float(r) if size is None else r


def confusion_from_rates(f0, tpr, tnr):
    """Flat confusion entries ``(c00, c01, c10, c11)`` for given rates and class-0 share."""
    f0 = np.asarray(f0, dtype=float)
    tpr = np.asarray(tpr, dtype=float)
    tnr = np.asarray(tnr, dtype=float)
    c00 = f0 * tpr
    c01 = (1.0 - f0) * (1.0 - tnr)
    c10 = f0 * (1.0 - tpr)
    c11 = (1.0 - f0) * tnr
    return c00, c01, c10, c11


def sample_confusion(f0: float, rng, tpr: float | None = None,
                     tnr: float | None = None) -> ConfusionMatrix:
    """Normalized confusion matrix with class-0 share ``f0`` and sampled rates.

    ``tpr``/``tnr`` may be fixed to bypass sampling.
    """
    if not 0 < f0 < 1:
        raise ContractViolation("class frequency f0 must lie in (0, 1)")
    rng = _as_rng(rng)
    if tpr is None:
        tpr = sample_rate(rng)
    if tnr is None:
        tnr = sample_rate(rng)
    c00, c01, c10, c11 = confusion_from_rates(f0, tpr, tnr)
    return ConfusionMatrix([[float(c00), float(c01)], [float(c10), float(c11)]])


# -- utility priors ---------------------------------------------------------

@dataclass(frozen=True)
class UtilityPrior:
    """Distribution of true utility matrices over the coordinate square.

    ``kind`` is ``"uniform"`` or ``"gaussian"``; the gaussian is centred on the
    identity matrix with standard deviation ``sigma`` per coordinate and
    truncated to the feasible region.
    """

    kind: str = "uniform"
    sigma: float = GAUSSIAN_PRIOR_SIGMA

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian"):
            raise ContractViolation(f"unknown prior kind {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ContractViolation("gaussian prior needs a positive sigma")

    def sample_coords(self, rng, n: int) -> np.ndarray:
        """``(n, 2)`` array of feasible ``(x, y)`` draws, by rejection."""
        rng = _as_rng(rng)
        out = np.empty((n, 2))
        filled = 0
        attempts = 0
        while filled < n:
            need = n - filled
            batch = max(16, int(need * 1.5) + 8)
            if self.kind == "uniform":
                xy = rng.uniform(-1.0, 1.0, size=(batch, 2))
            else:
                xy = rng.normal(0.0, self.sigma, size=(batch, 2))
            attempts += batch
            ok = (np.all(np.abs(xy) <= 1.0, axis=1)
                  & (xy[:, 1] - xy[:, 0] <= 1.0) & (xy[:, 0] - xy[:, 1] <= 1.0))
            good = xy[ok][:need]
            out[filled:filled + len(good)] = good
            filled += len(good)
            if filled < n and attempts > REJECTION_CAP * max(1, n):
                raise SamplerError("utility prior rejection sampler exceeded its cap")
        return out


def sample_true_utilities(prior: UtilityPrior, rng, n: int) -> np.ndarray:
    """``(n, 4)`` flat normalized feasible utility matrices."""
    xy = prior.sample_coords(rng, n)
    return coords_to_entries(xy[:, 0], xy[:, 1])


def sample_true_utility(prior: UtilityPrior, rng) -> UtilityMatrix:
    return UtilityMatrix(sample_true_utilities(prior, rng, 1).reshape(2, 2))


def prior_mode(prior: UtilityPrior) -> UtilityMatrix:
    """Most probable matrix of the prior (defined for the gaussian only)."""
    if prior.kind != "gaussian":
        raise ContractViolation("the uniform prior has no unique mode")
    return coords_to_matrix(UtilityCoordinates(0.0, 0.0))


# -- assessment errors ------------------------------------------------------

@dataclass(frozen=True)
class ErrorModel:
    """Entrywise gaussian error with standard deviation ``sigma`` in ``[0, 0.3]``."""

    sigma: float

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 0.3:
            raise ContractViolation(f"error sigma must lie in [0, 0.3], got {self.sigma}")


def _valid_noisy(v: np.ndarray) -> np.ndarray:
    # entries in [0, 1] and correct >= incorrect for each true class
    return (np.all((v >= 0.0) & (v <= 1.0), axis=-1)
            & (v[..., 0] >= v[..., 2]) & (v[..., 3] >= v[..., 1]))


def perturb_utilities(U: np.ndarray, sigma: float, rng,
                      cap: int = REJECTION_CAP) -> np.ndarray:
    """Add jointly truncated gaussian errors to ``(n, 4)`` flat utility matrices.

    Each row is redrawn as a whole until all four entries lie in ``[0, 1]`` and
    the column-wise ordering ``U00 >= U10``, ``U11 >= U01`` holds.  The result
    is not renormalized.
    """
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != 4:
        raise ContractViolation("expected an (n, 4) array of flat utility matrices")
    if sigma < 0:
        raise ContractViolation("sigma must be nonnegative")
    if not np.all(_valid_noisy(U)):
        raise ContractViolation("matrices to perturb must have entries in [0, 1] and be feasible")
    if sigma == 0:
        return U.copy()
    rng = _as_rng(rng)
    out = np.empty_like(U)
    todo = np.arange(len(U))
    attempts = np.zeros(len(U), dtype=np.int64)
    per_row = 4
    while todo.size:
        base = U[todo]
        eps = rng.normal(0.0, sigma, size=(todo.size, per_row, 4))
        cand = base[:, None, :] + eps
        ok = _valid_noisy(cand)
        hit = ok.any(axis=1)
        first = ok.argmax(axis=1)
        rows = np.flatnonzero(hit)
        out[todo[rows]] = cand[rows, first[rows]]
        attempts[todo] += np.where(hit, first + 1, per_row)
        todo = todo[~hit]
        if todo.size and attempts[todo].max() >= cap:
            raise SamplerError(
                f"truncated-gaussian perturbation exceeded {cap} attempts (sigma={sigma})")
        per_row = min(per_row * 2, 1024)
    return out


def perturb_utility(U: UtilityMatrix, sigma: float, rng) -> UtilityMatrix:
    """Scalar convenience wrapper around :func:`perturb_utilities`."""
    flat = np.asarray(U.flat() if isinstance(U, UtilityMatrix) else U, dtype=float)
    return UtilityMatrix(perturb_utilities(flat.reshape(1, 4), sigma, rng).reshape(2, 2))
