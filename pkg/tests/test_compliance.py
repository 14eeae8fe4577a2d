import math

import numpy as np
import pytest

from oracles import textbook_metrics
from utileval.compliance import (
    FREQUENCY_GRID,
    admissible_directions,
    compliance_verdict,
    direction_coefficients,
    direction_disagreements,
    find_reversal_witness,
)
from utileval.core import UtilityMatrix, utility_yield
from utileval.metrics import REGISTRY

COMPLIANT = ("accuracy", "tpr", "tnr")
NON_COMPLIANT = ("precision", "f1", "mcc", "fowlkes_mallows", "balanced_accuracy")


@pytest.mark.parametrize("f0", FREQUENCY_GRID)
def test_accuracy_admits_diagonal(f0):
    assert 45.0 in admissible_directions("accuracy", f0)


@pytest.mark.parametrize("f0", FREQUENCY_GRID)
def test_tpr_admits_zero_angle(f0):
    assert 0.0 in admissible_directions("tpr", f0)


@pytest.mark.parametrize("f0", FREQUENCY_GRID)
def test_tnr_admits_right_angle(f0):
    assert 90.0 in admissible_directions("tnr", f0)


def test_precision_has_no_direction_at_balance():
    d = admissible_directions("precision", 0.5)
    assert d.empty
    assert d.pairs_tested > 1000


def test_precision_pairs_disagree_with_every_direction_on_a_grid():
    # Brute force over a grid of attainable matrices at f0 = 0.5: for every
    # angle some pair is ordered differently by precision and by the line.
    grid = np.linspace(0.02, 0.48, 12)
    c00, c11 = np.meshgrid(grid, grid)
    c00, c11 = c00.ravel(), c11.ravel()
    prec = c00 / (c00 + 0.5 - c11)
    i, j = np.triu_indices(c00.size, k=1)
    dm = prec[j] - prec[i]
    for theta in np.arange(0.0, 90.01, 0.5):
        x, y = direction_coefficients(theta)
        dl = x * (c00[j] - c00[i]) + y * (c11[j] - c11[i])
        keep = (np.abs(dm) > 1e-9) & (np.abs(dl) > 1e-9)
        assert np.any(np.sign(dm[keep]) != np.sign(dl[keep])), theta


@pytest.mark.parametrize("f0", FREQUENCY_GRID)
def test_balanced_accuracy_direction_rotates(f0):
    # linear at fixed f0 with weights 1/(2 f0) and 1/(2 f1)
    expected = math.degrees(math.atan2(f0, 1 - f0))
    d = admissible_directions("balanced_accuracy", f0)
    assert not d.empty
    assert expected in d
    (lo, hi), = d.intervals
    assert hi - lo < 0.1


@pytest.mark.parametrize("name", COMPLIANT)
def test_compliant_verdicts(name):
    r = compliance_verdict(name)
    assert r.compliant and r.verdict == "compliant"
    assert r.matches_declared
    assert not r.witnesses
    assert r.coefficients == pytest.approx(REGISTRY[name].witness, abs=1e-12)


@pytest.mark.parametrize("name", NON_COMPLIANT)
def test_non_compliant_verdicts(name):
    r = compliance_verdict(name)
    assert not r.compliant and r.verdict == "non-compliant"
    assert r.matches_declared
    assert r.direction_deg is None and r.coefficients is None
    assert r.witnesses


def test_balanced_accuracy_fails_only_on_intersection():
    r = compliance_verdict("balanced_accuracy")
    assert all(not s.empty for s in r.direction_sets)
    assert not r.compliant


@pytest.mark.parametrize("name", COMPLIANT)
@pytest.mark.parametrize("f0", FREQUENCY_GRID)
def test_reported_direction_reproduces_ordering(name, f0):
    r = compliance_verdict(name)
    assert direction_disagreements(name, r.direction_deg, f0, 10_000, rng_seed=99) == 0


def test_verdicts_are_deterministic():
    a = compliance_verdict("mcc", rng_seed=5)
    b = compliance_verdict("mcc", rng_seed=5)
    assert a.direction_sets == b.direction_sets
    assert a.witnesses[0][1] == b.witnesses[0][1]


def test_grid_needs_three_frequencies():
    with pytest.raises(ValueError):
        compliance_verdict("accuracy", (0.2, 0.8))


def test_samples_lower_bound():
    with pytest.raises(ValueError):
        admissible_directions("accuracy", 0.5, samples=50)


# -- witnesses --------------------------------------------------------------

def _check_witness(name, U, w):
    a, b = w.first.flat(), w.second.flat()
    ma, mb = textbook_metrics(*a)[name], textbook_metrics(*b)[name]
    ya, yb = utility_yield(U, w.first), utility_yield(U, w.second)
    assert ma - mb > 1e-6
    assert ya - yb < -1e-6
    assert w.first.f0 == pytest.approx(w.second.f0, abs=1e-15) == pytest.approx(w.f0)


def test_f1_witness_identity_balanced():
    U = UtilityMatrix.identity()
    w = find_reversal_witness("f1", U, 0.5)
    assert w is not None
    _check_witness("f1", U, w)


@pytest.mark.parametrize("f0", FREQUENCY_GRID)
def test_accuracy_never_reverses_identity(f0):
    assert find_reversal_witness("accuracy", UtilityMatrix.identity(), f0, max_draws=5000) is None


@pytest.mark.parametrize("f0", FREQUENCY_GRID)
def test_tpr_never_reverses_its_utility(f0):
    U = UtilityMatrix([[1, 0], [0, 0]])
    assert find_reversal_witness("tpr", U, f0, max_draws=5000) is None


@pytest.mark.parametrize("name", NON_COMPLIANT)
def test_verdict_witnesses_are_genuine(name):
    for U, w in compliance_verdict(name).witnesses:
        _check_witness(name, U, w)


def test_witness_rejects_bad_share():
    with pytest.raises(ValueError):
        find_reversal_witness("f1", UtilityMatrix.identity(), 1.0)
