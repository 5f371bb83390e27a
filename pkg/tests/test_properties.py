"""Randomized checks of the interval layer against mpmath at four times the precision."""

from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from bhconst.forms import bh_ratio, complex_ascent, random_form, trial_seed
from bhconst.precision import CertifiedInterval, DomainError, Ordering, compare_strict, exact, pow_interval

PRECISION = 128
SETTINGS = dict(derandomize=True, deadline=None, suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow])

UNARY = ("exp", "log2")
BINARY = ("+", "-", "*", "/", "pow")

leaves = st.fractions(min_value=Fraction(-8), max_value=Fraction(8), max_denominator=64)


def trees(depth):
    if depth == 0:
        return leaves
    sub = trees(depth - 1)
    return st.one_of(
        leaves,
        st.tuples(st.sampled_from(UNARY), sub),
        st.tuples(st.sampled_from(BINARY), sub, sub),
    )


class NotEvaluable(Exception):
    pass


def evaluate(tree, p):
    """Interval value of ``tree`` at ``p`` bits; NotEvaluable outside the domain."""
    if isinstance(tree, Fraction):
        return exact(tree, p)
    op, *args = tree
    vals = [evaluate(a, p) for a in args]
    try:
        if op == "exp":
            if vals[0].hi > 64:
                raise NotEvaluable
            return vals[0].exp()
        if op == "log2":
            return vals[0].log2()
        a, b = vals
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a / b
        if abs(b.lo) > 16 or abs(b.hi) > 16:
            raise NotEvaluable
        return pow_interval(a, b)
    except (DomainError, ZeroDivisionError, ValueError) as exc:
        raise NotEvaluable from exc


def reference(tree):
    if isinstance(tree, Fraction):
        return mpmath.mpf(tree.numerator) / tree.denominator
    op, *args = tree
    vals = [reference(a) for a in args]
    if op == "exp":
        return mpmath.exp(vals[0])
    if op == "log2":
        return mpmath.log(vals[0], 2)
    a, b = vals
    return {"+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b, "/": lambda: a / b, "pow": lambda: a**b}[op]()


def depth(tree):
    return 0 if isinstance(tree, Fraction) else 1 + max(depth(a) for a in tree[1:])


def as_fraction(x):
    return Fraction(*map(int, x.as_integer_ratio()))


@settings(max_examples=1000, **SETTINGS)
@given(trees(6))
def test_expression_trees_enclose_high_precision_value(tree):
    assert depth(tree) <= 6
    try:
        value = evaluate(tree, PRECISION)
    except NotEvaluable:
        assume(False)
    with mpmath.workprec(4 * PRECISION):
        ref = reference(tree)
        assert isinstance(ref, mpmath.mpf)
        man, exp = ref.man_exp  # man_exp drops the sign
        ref = Fraction(int(mpmath.sign(ref)) * int(man)) * Fraction(2) ** int(exp)
    # the reference carries a relative error of order 2^-500
    slack = abs(ref) / 2 ** (4 * PRECISION - 16)
    assert as_fraction(value.lo) - slack <= ref <= as_fraction(value.hi) + slack


@settings(max_examples=200, **SETTINGS)
@given(trees(4))
def test_doubling_precision_never_widens(tree):
    try:
        coarse, fine = evaluate(tree, 64), evaluate(tree, 128)
    except NotEvaluable:
        assume(False)
    assert coarse.contains(fine)
    assert fine.width <= coarse.width


def intervals():
    return st.tuples(leaves, st.fractions(min_value=0, max_value=2, max_denominator=16)).map(
        lambda t: CertifiedInterval(exact(t[0], 64).lo, exact(t[0] + t[1], 64).hi, 64)
    )


@settings(max_examples=300, **SETTINGS)
@given(intervals(), intervals())
def test_compare_is_antisymmetric(a, b):
    forward, backward = compare_strict(a, b), compare_strict(b, a)
    flipped = {Ordering.LESS: Ordering.GREATER, Ordering.GREATER: Ordering.LESS, Ordering.INCONCLUSIVE: Ordering.INCONCLUSIVE}
    assert backward is flipped[forward]
    if forward is Ordering.LESS:
        assert a.hi < b.lo


@settings(max_examples=100, **SETTINGS)
@given(st.integers(0, 2**63), st.integers(0, 10**6), st.sampled_from(["real", "complex"]))
def test_seeding_is_a_pure_function(seed, trial, field):
    s = trial_seed(seed, trial)
    assert s == trial_seed(seed, trial)
    a, b = random_form(2, 3, field, s), random_form(2, 3, field, s)
    assert np.array_equal(a.coefficients, b.coefficients)


form_params = st.tuples(
    st.sampled_from([(2, 2), (2, 3), (3, 2), (3, 3)]),
    st.sampled_from(["real", "complex"]),
    st.integers(0, 2**32 - 1),
)


@settings(max_examples=60, **SETTINGS)
@given(form_params, st.floats(0.01, 100.0))
def test_ratio_is_homogeneous(params, t):
    (n, N), field, seed = params
    form = random_form(n, N, field, seed)
    assert bh_ratio(form.scaled(t)).ratio == pytest.approx(bh_ratio(form).ratio, rel=1e-9)


@settings(max_examples=60, **SETTINGS)
@given(form_params, st.randoms(use_true_random=False))
def test_ratio_is_slot_permutation_invariant(params, rnd):
    (n, N), field, seed = params
    form = random_form(n, N, field, seed)
    order = list(range(n))
    rnd.shuffle(order)
    assert bh_ratio(form.permuted(order)).ratio == pytest.approx(bh_ratio(form).ratio, rel=1e-9)


@settings(max_examples=60, **SETTINGS)
@given(form_params, st.integers(0, 2**32 - 1))
def test_ascent_never_decreases(params, start_seed):
    (n, N), _, seed = params
    form = random_form(n, N, "complex", seed)
    rng = np.random.default_rng(start_seed)
    run = complex_ascent(form, [np.exp(2j * np.pi * rng.random(N)) for _ in range(n)])
    assert all(b >= a * (1 - 1e-12) for a, b in zip(run.history, run.history[1:]))
