from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import random_context, random_curve
from oracles import roc_points_by_threshold
from utileval.core import UtilityMatrix, affine_transform, utility_yield
from utileval.errors import ContractViolation, DegenerateProblemError, InputError
from utileval.roc import (
    FIXTURE_CONTEXT,
    OperatingContext,
    RocCurve,
    auc,
    binormal_curve,
    brute_force_operating_point,
    compare_by_tangent,
    confusion_at,
    curve_from_scores,
    dominates,
    optimal_operating_point,
    reversal_fixture,
    search_reversal_pair,
    upper_hull,
)

DIAGONAL = RocCurve([0.0, 1.0], [0.0, 1.0])
PERFECT = RocCurve([0.0, 0.0, 1.0], [0.0, 1.0, 1.0])


def auc_mann_whitney(labels, scores):
    pos = [s for y, s in zip(labels, scores) if y == 0]
    neg = [s for y, s in zip(labels, scores) if y == 1]
    wins = sum((p > q) + 0.5 * (p == q) for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


# -- curves from scores -----------------------------------------------------

def test_hand_case_matches_threshold_enumeration():
    labels, scores = (0, 0, 0, 1, 1, 1), (0.9, 0.8, 0.4, 0.7, 0.3, 0.2)
    curve = curve_from_scores(labels, scores)
    expected = roc_points_by_threshold(labels, scores)
    got = [(Fraction(f).limit_denominator(12), Fraction(t).limit_denominator(12))
           for f, t in curve.points()]
    assert got == expected
    # every point listed for this case is on the curve, plus (2/3, 1)
    listed = [(0, 0), (0, Fraction(1, 3)), (0, Fraction(2, 3)), (Fraction(1, 3), Fraction(2, 3)),
              (Fraction(1, 3), 1), (1, 1)]
    assert set(listed) <= set(got)
    assert set(got) - set(listed) == {(Fraction(2, 3), 1)}
    assert curve.thresholds.tolist() == [np.inf, 0.9, 0.8, 0.7, 0.4, 0.3, 0.2]


def test_perfect_scores():
    c = curve_from_scores([0, 0, 1, 1], [0.9, 0.8, 0.2, 0.1])
    assert (0.0, 1.0) in c.points()
    assert auc(c) == 1.0


def test_constant_scores_give_diagonal():
    c = curve_from_scores([0, 1, 0, 1, 1], [0.5] * 5)
    assert c.points() == [(0.0, 0.0), (1.0, 1.0)]


def test_single_class_rejected():
    with pytest.raises(InputError):
        curve_from_scores([1, 1, 1], [0.1, 0.2, 0.3])


def test_length_mismatch_rejected():
    with pytest.raises(InputError):
        curve_from_scores([0, 1], [0.1])


@pytest.mark.parametrize("f, t", [
    ([0, 0.5], [0, 1]),          # does not end at (1, 1)
    ([0, 0.6, 0.5, 1], [0, 0.2, 0.3, 1]),  # f decreasing
    ([0, 1.2, 1], [0, 1, 1]),    # out of range
])
def test_invalid_curves(f, t):
    with pytest.raises(ContractViolation):
        RocCurve(f, t)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 6)), min_size=2, max_size=30))
def test_auc_equals_mann_whitney(data):
    labels = [y for y, _ in data]
    if len(set(labels)) < 2:
        return
    scores = [float(s) for _, s in data]
    assert auc(curve_from_scores(labels, scores)) == pytest.approx(
        auc_mann_whitney(labels, scores), abs=1e-12)


# -- confusion matrices and AUC ---------------------------------------------

def test_confusion_at_examples():
    assert np.allclose(confusion_at((0, 1), 0.5).entries, [[0.5, 0], [0, 0.5]])
    assert np.allclose(confusion_at((0.3, 0.3), 0.5).entries, [[0.15, 0.15], [0.35, 0.35]])
    assert np.allclose(confusion_at((0.2, 0.9), 0.8).entries, [[0.72, 0.04], [0.08, 0.16]])


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 0.99))
def test_confusion_at_is_normalized_with_share_b(f, t, B):
    C = confusion_at((f, t), B)
    assert C.is_normalized
    assert C.f0 == pytest.approx(B, abs=1e-15)


def test_confusion_at_validation():
    with pytest.raises(ContractViolation):
        confusion_at((0.5, 0.5), 1.0)
    with pytest.raises(ContractViolation):
        confusion_at((1.5, 0.5), 0.5)


def test_auc_examples():
    assert auc(PERFECT) == 1.0
    assert auc(DIAGONAL) == 0.5
    assert auc(RocCurve([0, 0.5, 1], [0, 0.9, 1])) == pytest.approx(0.7, abs=1e-15)


# -- operating points -------------------------------------------------------

def test_slopes():
    assert OperatingContext(UtilityMatrix.identity(), 0.5).slope == 1.0
    assert OperatingContext(UtilityMatrix([[4, 0], [0, 1]]), 0.5).slope == 0.25
    assert OperatingContext(UtilityMatrix.identity(), 0.8).slope == pytest.approx(0.25)


def test_equivalent_contexts_rank_identically():
    rng = np.random.default_rng(0)
    curves = [random_curve(rng) for _ in range(6)]
    a = compare_by_tangent(curves, OperatingContext(UtilityMatrix([[4, 0], [0, 1]]), 0.5))
    b = compare_by_tangent(curves, OperatingContext(UtilityMatrix.identity(), 0.8))
    assert [r.index for r in a] == [r.index for r in b]
    assert [r.intercept for r in a] == pytest.approx([r.intercept for r in b], abs=1e-12)


def test_infinite_slope_picks_origin():
    ctx = OperatingContext(UtilityMatrix([[0, 0], [0, 1]]), 0.5)
    assert ctx.slope == np.inf
    op = optimal_operating_point(random_curve(np.random.default_rng(3)), ctx)
    assert op.fpr == 0.0


def test_zero_slope_picks_first_full_recall_point():
    ctx = OperatingContext(UtilityMatrix([[1, 0], [0, 0]]), 0.5)
    c = RocCurve([0, 0.2, 0.5, 1], [0, 0.6, 1.0, 1.0])
    op = optimal_operating_point(c, ctx)
    assert (op.fpr, op.tpr) == (0.5, 1.0)


def test_degenerate_context():
    with pytest.raises(DegenerateProblemError):
        OperatingContext(UtilityMatrix([[1, 0], [1, 0]]), 0.5)


def test_context_requires_feasible_and_valid_balance():
    with pytest.raises(ContractViolation):
        OperatingContext(UtilityMatrix([[0, 1], [1, 0]]), 0.5)
    with pytest.raises(ContractViolation):
        OperatingContext(UtilityMatrix.identity(), 0.0)


@pytest.mark.parametrize("B", [0.2, 0.5, 0.9])
def test_perfect_scores_yield(B):
    U = UtilityMatrix([[3, -1], [0.5, 2]])
    c = curve_from_scores([0, 0, 1, 1, 1], [5, 4, 3, 2, 1])
    op = optimal_operating_point(c, OperatingContext(U, B))
    assert (op.fpr, op.tpr) == (0.0, 1.0)
    assert op.utility_yield == pytest.approx(B * 3 + (1 - B) * 2)
    assert op.threshold == 4


def test_diagonal_ties_resolve_to_smallest_fpr():
    ctx = OperatingContext(UtilityMatrix.identity(), 0.5)
    c = RocCurve(np.linspace(0, 1, 11), np.linspace(0, 1, 11))
    yields = [utility_yield(ctx.utility, confusion_at(p, 0.5)) for p in c.points()]
    assert np.allclose(yields, 0.5)
    for fn in (optimal_operating_point, brute_force_operating_point):
        op = fn(c, ctx)
        assert (op.fpr, op.tpr, op.index) == (0.0, 0.0, 0)


def test_hull_drops_collinear_and_interior_points():
    c = RocCurve([0, 0, 0.25, 0.5, 0.5, 1], [0, 0.5, 0.5, 0.75, 1.0, 1.0])
    assert upper_hull(c) == [1, 4, 5]


def test_hull_matches_brute_force_on_random_curves():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        c, ctx = random_curve(rng), random_context(rng)
        h, b = optimal_operating_point(c, ctx), brute_force_operating_point(c, ctx)
        assert h.index == b.index
        assert (h.fpr, h.tpr) == (b.fpr, b.tpr)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_optimum_dominates_every_vertex(seed):
    rng = np.random.default_rng(seed)
    c, ctx = random_curve(rng), random_context(rng)
    op = optimal_operating_point(c, ctx)
    for p in c.points():
        y = utility_yield(ctx.utility, confusion_at(p, ctx.balance))
        assert op.utility_yield >= y - 1e-12


# -- comparisons ------------------------------------------------------------

def test_identical_curves_tie():
    c = random_curve(np.random.default_rng(1))
    ranks = compare_by_tangent([c, c], FIXTURE_CONTEXT)
    assert [r.rank for r in ranks] == [1, 1]


def test_compare_needs_two_curves():
    with pytest.raises(ContractViolation):
        compare_by_tangent([DIAGONAL], FIXTURE_CONTEXT)


def test_intercept_ranking_equals_yield_ranking():
    rng = np.random.default_rng(77)
    for _ in range(100):
        curves = [random_curve(rng) for _ in range(int(rng.integers(2, 5)))]
        ctx = random_context(rng)
        ranks = compare_by_tangent(curves, ctx)
        by_yield = sorted(range(len(curves)),
                          key=lambda k: -brute_force_operating_point(curves[k], ctx).utility_yield)
        ys = [brute_force_operating_point(curves[r.index], ctx).utility_yield for r in ranks]
        assert all(a >= b - 1e-12 for a, b in zip(ys, ys[1:]))
        assert sorted(ys, reverse=True) == pytest.approx(
            [brute_force_operating_point(curves[k], ctx).utility_yield for k in by_yield])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.1, 10), st.floats(-10, 10))
def test_tangent_ranking_affine_invariant(seed, a, b):
    rng = np.random.default_rng(seed)
    curves = [random_curve(rng) for _ in range(4)]
    ctx = random_context(rng)
    ctx2 = OperatingContext(affine_transform(ctx.utility, a, b), ctx.balance)
    r1 = compare_by_tangent(curves, ctx)
    r2 = compare_by_tangent(curves, ctx2)
    assert [(r.index, r.rank) for r in r1] == [(r.index, r.rank) for r in r2]


def test_dominance_examples():
    assert dominates(PERFECT, DIAGONAL)
    assert not dominates(DIAGONAL, PERFECT)
    assert not dominates(DIAGONAL, DIAGONAL)
    a = RocCurve([0, 0.2, 1], [0, 0.7, 1])
    b = RocCurve([0, 0.8, 1], [0, 0.95, 1])
    assert not dominates(a, b) and not dominates(b, a)


def test_dominance_sees_vertical_steps():
    a = RocCurve([0, 0.5, 0.5, 1], [0, 0.2, 0.8, 1])
    b = RocCurve([0, 0.5, 1], [0, 0.5, 1])
    assert not dominates(a, b) and not dominates(b, a)


def test_dominance_implies_higher_optimal_yield():
    rng = np.random.default_rng(31)
    for _ in range(100):
        low = random_curve(rng)
        high = RocCurve(low.fpr, 1 - (1 - low.tpr) ** 2)
        ctx = random_context(rng)
        if not dominates(high, low):
            continue
        assert (optimal_operating_point(high, ctx).utility_yield
                >= optimal_operating_point(low, ctx).utility_yield - 1e-12)


# -- AUC reversal fixture ---------------------------------------------------

def test_fixture_reverses_auc():
    a, b, meta = reversal_fixture()
    assert auc(a) < auc(b)
    ranks = compare_by_tangent([a, b], FIXTURE_CONTEXT)
    assert ranks[0].index == 0 and ranks[0].rank == 1 and ranks[1].rank == 2
    ya = optimal_operating_point(a, FIXTURE_CONTEXT).utility_yield
    yb = optimal_operating_point(b, FIXTURE_CONTEXT).utility_yield
    assert ya > yb
    assert meta["curves"]["a"]["auc"] == auc(a)
    assert meta["curves"]["b"]["optimal_yield"] == yb


def test_fixture_is_reproducible_from_parameters():
    a, b, meta = reversal_fixture()
    pa, pb = search_reversal_pair(FIXTURE_CONTEXT, n=meta["n_points"])
    assert pa == (meta["curves"]["a"]["a"], meta["curves"]["a"]["b"])
    assert pb == (meta["curves"]["b"]["a"], meta["curves"]["b"]["b"])
    regen = binormal_curve(*pa, n=meta["n_points"])
    assert np.array_equal(regen.fpr, a.fpr) and np.array_equal(regen.tpr, a.tpr)


def test_fixture_same_ranking_for_equivalent_context():
    a, b, _ = reversal_fixture()
    ranks = compare_by_tangent([a, b], OperatingContext(UtilityMatrix.identity(), 0.8))
    assert ranks[0].index == 0
