"""Pure-numpy misranking counter; the fallback for the compiled kernel."""
from __future__ import annotations

import numpy as np

from . import metrics
from .sampling import confusion_from_rates

_BY_CODE = {d.kernel_code: d.vector for d in metrics.REGISTRY.values()}


def _yields(u, c00, c01, c10, c11):
    return u[..., 0] * c00 + u[..., 1] * c01 + u[..., 2] * c10 + u[..., 3] * c11


def _counts(d_true, d_eval):
    mis = ((d_true > 0) & (d_eval < 0)) | ((d_true < 0) & (d_eval > 0))
    tie = (d_true == 0) | (d_eval == 0)
    return int(np.count_nonzero(mis)), int(np.count_nonzero(tie))


def count_misrankings(true_u, noisy_u, f0, rates, metric_codes):
    """Same contract as the compiled ``count_misrankings``."""
    true_u = np.asarray(true_u, dtype=float)
    noisy_u = np.asarray(noisy_u, dtype=float)
    f0 = np.asarray(f0, dtype=float)
    rates = np.asarray(rates, dtype=float)
    codes = [int(c) for c in metric_codes]
    n = true_u.shape[0]
    if f0.shape != (n,) or rates.shape != (n, 4) or true_u.shape != (n, 4):
        raise ValueError("inconsistent input shapes")
    k = noisy_u.shape[0]
    if k and noisy_u.shape[1:] != (n, 4):
        raise ValueError("inconsistent noisy utility shape")
    for c in codes:
        if c not in _BY_CODE:
            raise ValueError(f"unknown metric code {c}")

    a = confusion_from_rates(f0, rates[:, 0], rates[:, 1])
    b = confusion_from_rates(f0, rates[:, 2], rates[:, 3])
    d_true = _yields(true_u, *b) - _yields(true_u, *a)

    mis = np.zeros(len(codes) + k, dtype=np.int64)
    tie = np.zeros(len(codes) + k, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        for j, code in enumerate(codes):
            score = _BY_CODE[code]
            mis[j], tie[j] = _counts(d_true, score(*b) - score(*a))
    for j in range(k):
        d_eval = _yields(noisy_u[j], *b) - _yields(noisy_u[j], *a)
        mis[len(codes) + j], tie[len(codes) + j] = _counts(d_true, d_eval)
    return mis, tie
