"""Monte Carlo estimate of how often evaluators misrank pairs of classifiers.

One trial draws a true utility matrix, one perturbed copy per error level, a
class share ``f0 ~ Uniform(0, 1)`` and two confusion matrices sharing it.  An
evaluator misranks the pair when its signed score difference and the true
yield difference have strictly opposite signs.

Trials are processed in fixed-size chunks.  Chunk ``c`` draws from
``substream(seed, c, role, ...)`` so the counts do not depend on the number
of workers, and integer counts are reduced by summation.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import kernel
from .compliance import find_reversal_witness
from .core import UtilityMatrix, _as_utility
from .errors import ConfigError
from .metrics import REGISTRY, get_metric
from .sampling import (
    UtilityPrior,
    confusion_from_rates,
    parse_seed,
    perturb_utilities,
    rate_from_uniform,
    sample_true_utilities,
    substream,
)

__all__ = [
    "DEFAULT_SIGMAS",
    "ExperimentConfig",
    "EvaluatorResult",
    "ExperimentReport",
    "SweepResult",
    "run_pairwise_experiment",
    "sweep_error_levels",
    "difference_samples",
    "ScatterDataset",
    "scatter_dataset",
]

DEFAULT_SIGMAS = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3)
DEFAULT_CHUNK = 1 << 16
MIN_PAIRS = 10_000

_ROLE_UTILITY, _ROLE_CONFUSION, _ROLE_NOISE = 0, 1, 2


def _sigma_key(sigma: float) -> int:
    return int(round(sigma * 1_000_000))


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of the pairwise misranking experiment.

    ``chunk_size`` is part of the random-stream layout: changing it changes
    the draws.  ``workers`` only affects scheduling.
    """

    prior: str = "uniform"
    sigmas: tuple[float, ...] = DEFAULT_SIGMAS
    metrics: tuple[str, ...] = tuple(REGISTRY)
    pairs: int = 1_000_000
    seed: int = 0
    chunk_size: int = DEFAULT_CHUNK
    workers: int = 1

    def __post_init__(self):
        try:
            UtilityPrior(self.prior)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        sig = tuple(float(s) for s in self.sigmas)
        for s in sig:
            if not 0.0 <= s <= 0.3:
                raise ConfigError(f"sigma values must lie in [0, 0.3], got {s}")
        if len(set(map(_sigma_key, sig))) != len(sig):
            raise ConfigError("duplicate sigma values")
        try:
            names = tuple(get_metric(m).name for m in self.metrics)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        if self.pairs < MIN_PAIRS:
            raise ConfigError(f"pairs must be at least {MIN_PAIRS}")
        if self.chunk_size < 1 or self.workers < 1:
            raise ConfigError("chunk_size and workers must be positive")
        try:
            seed = parse_seed(self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(self, "sigmas", sig)
        object.__setattr__(self, "metrics", names)
        object.__setattr__(self, "seed", seed)

    @property
    def n_chunks(self) -> int:
        return -(-self.pairs // self.chunk_size)

    def chunk_sizes(self) -> list[int]:
        full, rest = divmod(self.pairs, self.chunk_size)
        return [self.chunk_size] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class EvaluatorResult:
    name: str
    kind: str  # "metric" or "noisy_utility"
    sigma: float | None
    misranked: int
    ties: int
    pairs: int

    @property
    def fraction(self) -> float:
        return self.misranked / self.pairs

    @property
    def stderr(self) -> float:
        p = self.fraction
        return math.sqrt(p * (1.0 - p) / self.pairs)


@dataclass
class ExperimentReport:
    prior: str
    seed: int
    pairs: int
    chunk_size: int
    results: list[EvaluatorResult] = field(default_factory=list)

    def metric_results(self) -> list[EvaluatorResult]:
        return [r for r in self.results if r.kind == "metric"]

    def noisy_results(self) -> list[EvaluatorResult]:
        return [r for r in self.results if r.kind == "noisy_utility"]

    def get(self, name: str) -> EvaluatorResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def noisy(self, sigma: float) -> EvaluatorResult:
        for r in self.noisy_results():
            if _sigma_key(r.sigma) == _sigma_key(sigma):
                return r
        raise KeyError(f"sigma={sigma}")

    def best_metric(self, n_se: float = 3.0) -> tuple[str, str, bool]:
        """Lowest-misranking metric, the runner-up, and whether they are separated.

        Separation means the gap exceeds ``n_se`` combined standard errors;
        otherwise the two are reported as tied.
        """
        ranked = sorted(self.metric_results(), key=lambda r: r.fraction)
        if len(ranked) < 2:
            raise ValueError("need at least two metrics to rank")
        a, b = ranked[0], ranked[1]
        gap = b.fraction - a.fraction
        return a.name, b.name, gap > n_se * math.hypot(a.stderr, b.stderr)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "prior": self.prior,
            "seed": self.seed,
            "pairs": self.pairs,
            "chunk_size": self.chunk_size,
            "results": [
                {
                    "evaluator": r.name,
                    "kind": r.kind,
                    "sigma": r.sigma,
                    "misranked": r.misranked,
                    "ties": r.ties,
                    "pairs": r.pairs,
                    "fraction": r.fraction,
                    "stderr": r.stderr,
                }
                for r in self.results
            ],
        }

    CSV_COLUMNS = ("evaluator", "kind", "sigma", "misranked", "ties", "pairs", "fraction", "stderr")

    def csv_rows(self) -> list[tuple]:
        return [
            (r.name, r.kind, "" if r.sigma is None else repr(r.sigma), r.misranked, r.ties,
             r.pairs, repr(r.fraction), repr(r.stderr))
            for r in self.results
        ]


def noisy_name(sigma: float) -> str:
    return f"noisy_utility[sigma={sigma:g}]"


def _draw_chunk(cfg: ExperimentConfig, chunk: int, n: int):
    prior = UtilityPrior(cfg.prior)
    true_u = sample_true_utilities(prior, substream(cfg.seed, chunk, _ROLE_UTILITY), n)
    rng = substream(cfg.seed, chunk, _ROLE_CONFUSION)
    f0 = rng.random(n)
    zero = f0 == 0.0
    while zero.any():  # measure-zero degenerate share
        f0[zero] = rng.random(int(zero.sum()))
        zero = f0 == 0.0
    rates = rate_from_uniform(rng.random((n, 4)))
    noisy = np.empty((len(cfg.sigmas), n, 4))
    for k, s in enumerate(cfg.sigmas):
        noisy[k] = perturb_utilities(
            true_u, s, substream(cfg.seed, chunk, _ROLE_NOISE, _sigma_key(s)))
    return true_u, noisy, f0, rates


def _run_chunk(cfg: ExperimentConfig, chunk: int, n: int, count_fn):
    true_u, noisy, f0, rates = _draw_chunk(cfg, chunk, n)
    codes = np.array([REGISTRY[m].kernel_code for m in cfg.metrics], dtype=np.int64)
    return count_fn(np.ascontiguousarray(true_u), np.ascontiguousarray(noisy),
                    np.ascontiguousarray(f0), np.ascontiguousarray(rates), codes)


def run_pairwise_experiment(cfg: ExperimentConfig, count_fn=None) -> ExperimentReport:
    """Estimate misranking fractions for every metric and error level in ``cfg``.

    ``count_fn`` overrides the kernel backend (used by benchmarks and tests).
    """
    count_fn = count_fn or kernel.count_misrankings
    sizes = cfg.chunk_sizes()
    m, k = len(cfg.metrics), len(cfg.sigmas)
    mis = np.zeros(m + k, dtype=np.int64)
    tie = np.zeros(m + k, dtype=np.int64)

    def work(c):
        return _run_chunk(cfg, c, sizes[c], count_fn)

    if cfg.workers == 1:
        parts = map(work, range(len(sizes)))
        for a, b in parts:
            mis += a
            tie += b
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
            for a, b in ex.map(work, range(len(sizes))):
                mis += a
                tie += b

    results = [
        EvaluatorResult(name, "metric", None, int(mis[j]), int(tie[j]), cfg.pairs)
        for j, name in enumerate(cfg.metrics)
    ]
    results += [
        EvaluatorResult(noisy_name(s), "noisy_utility", s, int(mis[m + j]), int(tie[m + j]),
                        cfg.pairs)
        for j, s in enumerate(cfg.sigmas)
    ]
    return ExperimentReport(cfg.prior, cfg.seed, cfg.pairs, cfg.chunk_size, results)


@dataclass
class SweepResult:
    """Misranking fraction of the noisy-utility evaluator as a function of sigma."""

    report: ExperimentReport
    sigmas: np.ndarray
    fractions: np.ndarray
    stderrs: np.ndarray
    reference: dict[str, float]
    slope: float
    intercept: float
    r_squared: float

    def non_decreasing(self, n_se: float = 3.0) -> bool:
        """No drop between consecutive levels larger than ``n_se`` combined errors."""
        d = np.diff(self.fractions)
        tol = n_se * np.hypot(self.stderrs[1:], self.stderrs[:-1])
        return bool(np.all(d >= -tol))

    def below(self, metric: str) -> np.ndarray:
        """Mask of sigma levels where the noisy utility beats ``metric``."""
        return self.fractions < self.reference[metric]

    def crossing(self, metric: str) -> float | None:
        """Sigma where the curve first reaches the metric's line (linear interpolation)."""
        ref = self.reference[metric]
        above = np.flatnonzero(self.fractions >= ref)
        if above.size == 0:
            return None
        i = int(above[0])
        if i == 0:
            return float(self.sigmas[0])
        x0, x1 = self.sigmas[i - 1], self.sigmas[i]
        y0, y1 = self.fractions[i - 1], self.fractions[i]
        return float(x0 + (ref - y0) * (x1 - x0) / (y1 - y0))

    def rows(self) -> list[tuple]:
        return [(repr(float(s)), repr(float(f)), repr(float(e)))
                for s, f, e in zip(self.sigmas, self.fractions, self.stderrs)]


def sweep_error_levels(cfg: ExperimentConfig, sigmas: Sequence[float] | None = None,
                       count_fn=None) -> SweepResult:
    """Run the experiment over a sigma grid and fit a straight line to the curve."""
    if sigmas is not None:
        cfg = replace(cfg, sigmas=tuple(sorted(float(s) for s in sigmas)))
    elif list(cfg.sigmas) != sorted(cfg.sigmas):
        cfg = replace(cfg, sigmas=tuple(sorted(cfg.sigmas)))
    report = run_pairwise_experiment(cfg, count_fn)
    noisy = report.noisy_results()
    s = np.array([r.sigma for r in noisy])
    f = np.array([r.fraction for r in noisy])
    e = np.array([r.stderr for r in noisy])
    if len(s) >= 2:
        slope, intercept = np.polyfit(s, f, 1)
        resid = f - (slope * s + intercept)
        ss_tot = float(np.sum((f - f.mean()) ** 2))
        r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    else:
        slope, intercept, r2 = float("nan"), float("nan"), float("nan")
    reference = {r.name: r.fraction for r in report.metric_results()}
    return SweepResult(report, s, f, e, reference, float(slope), float(intercept), r2)


def difference_samples(cfg: ExperimentConfig, n: int) -> dict[str, np.ndarray]:
    """Signed score differences for the first ``n`` trials, for scatter plots.

    Uses the same streams as chunk 0 of :func:`run_pairwise_experiment`.
    """
    n = min(n, cfg.chunk_sizes()[0])
    true_u, noisy, f0, rates = _draw_chunk(cfg, 0, cfg.chunk_sizes()[0])
    true_u, noisy, f0, rates = true_u[:n], noisy[:, :n], f0[:n], rates[:n]
    a = confusion_from_rates(f0, rates[:, 0], rates[:, 1])
    b = confusion_from_rates(f0, rates[:, 2], rates[:, 3])

    def yields(u, c):
        return u[:, 0] * c[0] + u[:, 1] * c[1] + u[:, 2] * c[2] + u[:, 3] * c[3]

    out = {"true_yield_diff": yields(true_u, b) - yields(true_u, a)}
    for name in cfg.metrics:
        vec = REGISTRY[name].vector
        out[name] = vec(*b) - vec(*a)
    for k, s in enumerate(cfg.sigmas):
        out[noisy_name(s)] = yields(noisy[k], b) - yields(noisy[k], a)
    return out


@dataclass
class ScatterDataset:
    """Sampled confusion matrices scored by true yield and by a metric."""

    utility: UtilityMatrix
    metric: str
    f0: float
    yields: np.ndarray
    scores: np.ndarray
    witnesses: list = field(default_factory=list)

    CSV_COLUMNS = ("yield", "score", "pair_id", "reversed_flag")

    def rows(self) -> list[tuple]:
        out = [(repr(float(y)), repr(float(s)), "", 0) for y, s in zip(self.yields, self.scores)]
        metric = get_metric(self.metric)
        u = np.asarray(self.utility.flat())
        for k, w in enumerate(self.witnesses):
            for C in (w.first, w.second):
                out.append((repr(float(np.asarray(C.flat()) @ u)),
                            repr(float(metric.vector(*C.flat()))), k, 1))
        return out

    def discordant_fraction(self) -> float:
        """Share of sampled pairs ordered oppositely by score and yield."""
        i, j = np.triu_indices(len(self.yields), k=1)
        dy = self.yields[j] - self.yields[i]
        ds = self.scores[j] - self.scores[i]
        return float(np.mean(((dy > 0) & (ds < 0)) | ((dy < 0) & (ds > 0))))

    def max_line_residual(self) -> float:
        """Largest deviation of the points from their least-squares line."""
        slope, intercept = np.polyfit(self.yields, self.scores, 1)
        return float(np.max(np.abs(self.scores - (slope * self.yields + intercept))))


def scatter_dataset(U: UtilityMatrix, metric, f0: float, n: int, seed: int = 0,
                    witnesses: int = 1, witness_draws: int = 5_000) -> ScatterDataset:
    """Score ``n`` sampled confusion matrices at share ``f0`` both ways.

    Up to ``witnesses`` misranked pairs are appended for highlighting.
    """
    U = _as_utility(U)
    m = get_metric(metric)
    rng = substream(seed, 3, int(round(f0 * 1e6)))
    rates = rate_from_uniform(rng.random((n, 2)))
    flat = confusion_from_rates(f0, rates[:, 0], rates[:, 1])
    u = U.flat()
    yields = u[0] * flat[0] + u[1] * flat[1] + u[2] * flat[2] + u[3] * flat[3]
    scores = m.vector(*flat)
    found = []
    for k in range(witnesses):
        w = find_reversal_witness(m, U, f0, max_draws=witness_draws, rng_seed=(seed + k + 1) % 2**64,
                                  rate_range=(0.5, 1.0))
        if w is None:
            break
        found.append(w)
    return ScatterDataset(U, m.name, float(f0), np.asarray(yields), np.asarray(scores), found)
