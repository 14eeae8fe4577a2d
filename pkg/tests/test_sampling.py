import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from utileval.core import UtilityCoordinates, UtilityMatrix, coords_to_entries
from utileval.errors import ContractViolation, SamplerError
from utileval.sampling import (
    ErrorModel,
    UtilityPrior,
    confusion_from_rates,
    parse_seed,
    perturb_utilities,
    perturb_utility,
    prior_mode,
    rate_from_uniform,
    sample_confusion,
    sample_rate,
    sample_true_utilities,
    sample_true_utility,
    substream,
)


def _valid(U):
    U = np.asarray(U)
    return (np.all((U >= 0) & (U <= 1), axis=-1)
            & (U[..., 0] >= U[..., 2]) & (U[..., 3] >= U[..., 1]))


# -- seeds and streams ------------------------------------------------------

@pytest.mark.parametrize("text, value", [("42", 42), ("0x2A", 42), (" 0 ", 0),
                                         (str(2**64 - 1), 2**64 - 1), (7, 7)])
def test_parse_seed(text, value):
    assert parse_seed(text) == value


@pytest.mark.parametrize("bad", ["-1", "abc", str(2**64), "0xg"])
def test_parse_seed_rejects(bad):
    with pytest.raises(ContractViolation):
        parse_seed(bad)


def test_substreams_are_reproducible_and_distinct():
    a = substream(9, 0, 1).random(5)
    assert np.array_equal(a, substream(9, 0, 1).random(5))
    assert not np.array_equal(a, substream(9, 0, 2).random(5))
    assert not np.array_equal(a, substream(10, 0, 1).random(5))


# -- rate sampler -----------------------------------------------------------

@pytest.mark.parametrize("u, r", [(0.25, 0.75), (0.5, 0.5 + 0.5 * np.sqrt(0.5)),
                                  (0.0, 0.5), (1.0, 1.0)])
def test_rate_inverse_cdf(u, r):
    assert rate_from_uniform(u) == pytest.approx(r, abs=1e-15)


def test_rate_median_value():
    assert rate_from_uniform(0.5) == pytest.approx(0.85355, abs=1e-5)


def test_rate_density_is_linear():
    # Under p(r) proportional to r - 1/2 on [1/2, 1], the CDF is 4 (r - 1/2)^2.
    r = sample_rate(np.random.default_rng(1), 200_000)
    ks = stats.kstest(r, lambda x: np.clip(4 * (x - 0.5) ** 2, 0, 1))
    assert ks.pvalue > 1e-3
    assert r.min() >= 0.5 and r.max() <= 1.0


def test_sample_rate_scalar():
    assert 0.5 <= sample_rate(np.random.default_rng(0)) <= 1.0


# -- confusion sampler ------------------------------------------------------

def test_sample_confusion_fixed_rates():
    C = sample_confusion(0.5, 0, tpr=1.0, tnr=1.0)
    assert np.allclose(C.entries, [[0.5, 0], [0, 0.5]])
    C = sample_confusion(0.9, 0, tpr=0.54, tnr=0.70)
    assert np.allclose(C.entries, [[0.486, 0.03], [0.414, 0.07]], atol=1e-12)


@pytest.mark.parametrize("f0", [0.0, 1.0, -0.2])
def test_sample_confusion_rejects_degenerate_share(f0):
    with pytest.raises(ContractViolation):
        sample_confusion(f0, 0)


def test_confusion_columns_reproduce_share():
    rng = np.random.default_rng(3)
    f0 = rng.random(10_000)
    c00, c01, c10, c11 = confusion_from_rates(f0, sample_rate(rng, 10_000), sample_rate(rng, 10_000))
    assert np.allclose(c00 + c10, f0, atol=1e-15)
    assert np.allclose(c01 + c11, 1 - f0, atol=1e-15)
    assert np.allclose(c00 + c01 + c10 + c11, 1.0, atol=1e-15)


def test_sample_confusion_is_normalized():
    rng = np.random.default_rng(8)
    for _ in range(50):
        C = sample_confusion(0.3, rng)
        assert C.is_normalized and C.f0 == pytest.approx(0.3)


# -- utility priors ---------------------------------------------------------

@pytest.mark.parametrize("kind", ["uniform", "gaussian"])
def test_prior_draws_are_feasible(kind):
    xy = UtilityPrior(kind).sample_coords(np.random.default_rng(4), 20_000)
    x, y = xy[:, 0], xy[:, 1]
    assert np.all(np.abs(xy) <= 1)
    assert np.all(y - x <= 1) and np.all(x - y <= 1)
    U = sample_true_utilities(UtilityPrior(kind), np.random.default_rng(4), 1000)
    assert np.all(_valid(U))


def test_uniform_prior_is_centred():
    xy = UtilityPrior("uniform").sample_coords(np.random.default_rng(5), 100_000)
    se = xy.std(axis=0) / np.sqrt(len(xy))
    assert np.all(np.abs(xy.mean(axis=0)) < 3 * se)


def test_uniform_prior_fills_the_cut_square():
    # The cut square has area 3; the open first quadrant has area 1.
    xy = UtilityPrior("uniform").sample_coords(np.random.default_rng(6), 120_000)
    share = np.mean((xy[:, 0] > 0) & (xy[:, 1] > 0))
    assert share == pytest.approx(1 / 3, abs=0.005)


def test_gaussian_prior_mode_is_identity():
    assert prior_mode(UtilityPrior("gaussian")) == UtilityMatrix.identity()
    with pytest.raises(ContractViolation):
        prior_mode(UtilityPrior("uniform"))


def _truncated_gaussian_sd(sigma):
    """Standard deviation of x for the gaussian restricted to the cut square."""
    pdf = stats.norm(0, sigma).pdf
    lo, hi = (lambda x: max(-1.0, x - 1.0)), (lambda x: min(1.0, x + 1.0))
    mass = integrate.dblquad(lambda y, x: pdf(x) * pdf(y), -1, 1, lo, hi)[0]
    second = integrate.dblquad(lambda y, x: x * x * pdf(x) * pdf(y), -1, 1, lo, hi)[0]
    return np.sqrt(second / mass)


def test_gaussian_prior_spread():
    xy = UtilityPrior("gaussian").sample_coords(np.random.default_rng(7), 50_000)
    expected = _truncated_gaussian_sd(1 / 3)
    assert expected < 1 / 3
    assert xy.std(axis=0) == pytest.approx([expected, expected], rel=0.02)


def test_sample_true_utility_is_normalized():
    U = sample_true_utility(UtilityPrior(), np.random.default_rng(0))
    assert U.is_normalized and U.is_feasible


def test_unknown_prior():
    with pytest.raises(ContractViolation):
        UtilityPrior("beta")


# -- error model ------------------------------------------------------------

@pytest.mark.parametrize("sigma", [-0.1, 0.31])
def test_error_model_range(sigma):
    with pytest.raises(ContractViolation):
        ErrorModel(sigma)


def test_zero_sigma_is_identity():
    U = coords_to_entries([0.2, -0.5], [0.1, 0.0])
    assert np.array_equal(perturb_utilities(U, 0.0, 0), U)


def test_perturbation_respects_constraints_near_boundary():
    U = np.tile([0.5, 0.5, 0.0, 1.0], (5000, 1))
    out = perturb_utilities(U, 0.1, np.random.default_rng(2))
    assert np.all(_valid(out))
    assert out.std(axis=0).min() > 0.03


def test_small_sigma_deviation_matches_untruncated():
    U = np.tile([0.9, 0.1, 0.1, 0.9], (40_000, 1))  # well inside the valid region
    out = perturb_utilities(U, 0.05, np.random.default_rng(11))
    dev = (out - U).std(axis=0)
    assert np.all(np.abs(dev - 0.05) < 0.005)


def test_identity_perturbation_is_truncated_not_clipped():
    U = np.tile([1.0, 0.0, 0.0, 1.0], (20_000, 1))
    out = perturb_utilities(U, 0.05, np.random.default_rng(12))
    assert np.all(_valid(out))
    # rejection never lands exactly on the boundary, clipping would
    assert not np.any(out == 1.0) and not np.any(out == 0.0)
    # each retained deviation is a half-normal with scale sigma
    dev = np.abs(out - U)
    assert dev.mean(axis=0) == pytest.approx([0.05 * np.sqrt(2 / np.pi)] * 4, rel=0.05)


def test_perturbation_is_not_renormalized():
    U = np.tile([0.9, 0.1, 0.1, 0.9], (200, 1))
    out = perturb_utilities(U, 0.05, np.random.default_rng(0))
    assert not np.allclose(out.min(axis=1), 0.0)


def test_rejection_cap():
    with pytest.raises(SamplerError):
        perturb_utilities(np.array([[1.0, 0.0, 0.0, 1.0]]), 50.0, np.random.default_rng(0), cap=8)


def test_perturb_rejects_invalid_input():
    with pytest.raises(ContractViolation):
        perturb_utilities(np.array([[0.0, 1.0, 1.0, 0.0]]), 0.1, 0)


def test_perturb_utility_wrapper():
    U = perturb_utility(UtilityMatrix.identity(), 0.1, np.random.default_rng(0))
    assert _valid(np.ravel(U.entries))


coordinate_pairs = st.tuples(st.floats(-1, 1), st.floats(-1, 1)).filter(
    lambda c: UtilityCoordinates.is_feasible(*c))


@settings(max_examples=60, deadline=None)
@given(coordinate_pairs, st.floats(0.0, 0.3), st.integers(0, 2**32))
def test_perturbation_invariants(xy, sigma, seed):
    U = coords_to_entries(*xy).reshape(1, 4)
    out = perturb_utilities(np.repeat(U, 50, axis=0), sigma, np.random.default_rng(seed))
    assert np.all(_valid(out))
