import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utileval import kernel
from utileval.metrics import REGISTRY, get_metric
from utileval.sampling import (
    UtilityPrior,
    confusion_from_rates,
    perturb_utilities,
    rate_from_uniform,
    sample_true_utilities,
)

ALL_CODES = np.array([d.kernel_code for d in REGISTRY.values()], dtype=np.int64)

needs_compiled = pytest.mark.skipif(kernel.compiled is None, reason="extension not built")


def _inputs(seed, n, sigmas=(0.0, 0.1, 0.3), extreme=False):
    rng = np.random.default_rng(seed)
    true_u = sample_true_utilities(UtilityPrior(), rng, n)
    noisy = np.stack([perturb_utilities(true_u, s, rng) for s in sigmas]) if sigmas else \
        np.empty((0, n, 4))
    f0 = rng.random(n)
    rates = rate_from_uniform(rng.random((n, 4)))
    if extreme:
        rates = rng.choice([0.0, 0.5, 1.0], size=(n, 4))
        f0 = rng.choice([1e-300, 0.5, 1 - 1e-16, 0.3], size=n)
    return (np.ascontiguousarray(true_u), np.ascontiguousarray(noisy),
            np.ascontiguousarray(f0), np.ascontiguousarray(rates))


def _brute_force(true_u, noisy, f0, rates, codes):
    """Per-pair loop over the scalar definitions."""
    m = len(codes)
    mis = np.zeros(m + len(noisy), dtype=np.int64)
    tie = np.zeros_like(mis)
    by_code = {d.kernel_code: d.vector for d in REGISTRY.values()}
    for i in range(len(f0)):
        a = [float(v) for v in confusion_from_rates(f0[i], rates[i, 0], rates[i, 1])]
        b = [float(v) for v in confusion_from_rates(f0[i], rates[i, 2], rates[i, 3])]
        dt = np.dot(true_u[i], b) - np.dot(true_u[i], a)
        evals = [float(by_code[c](*b)) - float(by_code[c](*a)) for c in codes]
        evals += [np.dot(u[i], b) - np.dot(u[i], a) for u in noisy]
        for j, de in enumerate(evals):
            mis[j] += (dt > 0 and de < 0) or (dt < 0 and de > 0)
            tie[j] += dt == 0 or de == 0
    return mis, tie


def test_backend_selected():
    assert kernel.BACKEND in ("compiled", "python")
    assert kernel.count_misrankings in (kernel.compiled, kernel.fallback)


def test_fallback_against_brute_force():
    args = _inputs(1, 400)
    mis, tie = kernel.fallback(*args, ALL_CODES)
    bmis, btie = _brute_force(*args, ALL_CODES)
    # the brute force uses dot products, so allow a handful of rounding flips
    assert np.abs(mis - bmis).max() <= 2
    assert mis[len(ALL_CODES)] == 0  # sigma = 0 reproduces the true ordering


@needs_compiled
@pytest.mark.parametrize("seed", range(5))
def test_backends_bit_identical(seed):
    args = _inputs(seed, 20_000)
    a = kernel.compiled(*args, ALL_CODES)
    b = kernel.fallback(*args, ALL_CODES)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@needs_compiled
@pytest.mark.parametrize("seed", range(3))
def test_backends_agree_on_degenerate_rates(seed):
    args = _inputs(seed, 5000, extreme=True)
    a = kernel.compiled(*args, ALL_CODES)
    b = kernel.fallback(*args, ALL_CODES)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert a[1].sum() > 0  # ties do occur here


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 300),
       st.lists(st.sampled_from(list(REGISTRY)), min_size=0, max_size=8))
def test_backends_agree_property(seed, n, names):
    codes = np.array([get_metric(x).kernel_code for x in names], dtype=np.int64)
    args = _inputs(seed, n, sigmas=(0.05,))
    a = kernel.compiled(*args, codes)
    b = kernel.fallback(*args, codes)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@pytest.mark.parametrize("fn", [kernel.fallback, kernel.compiled])
def test_shape_and_code_validation(fn):
    if fn is None:
        pytest.skip("extension not built")
    true_u, noisy, f0, rates = _inputs(0, 10)
    with pytest.raises(ValueError):
        fn(true_u, noisy, f0[:5].copy(), rates, ALL_CODES)
    with pytest.raises(ValueError):
        fn(true_u, noisy, f0, rates, np.array([99], dtype=np.int64))


@pytest.mark.parametrize("fn", [kernel.fallback, kernel.compiled])
def test_no_noisy_levels(fn):
    if fn is None:
        pytest.skip("extension not built")
    true_u, _, f0, rates = _inputs(0, 100, sigmas=())
    mis, tie = fn(true_u, np.empty((0, 100, 4)), f0, rates, ALL_CODES)
    assert mis.shape == (len(ALL_CODES),)
