import math

import numpy as np
import pytest

from bhconst import forms
from bhconst.forms import (
    CoefficientTensor,
    OracleSizeError,
    bh_ratio,
    complex_ascent,
    littlewood_form,
    mixed_norm_lhs,
    random_form,
    sup_norm_complex_ascent,
    sup_norm_complex_grid,
    sup_norm_real_exact,
    sup_norm_real_grid,
    trial_seed,
    verify_batch,
)
from bhconst.precision import Field, d_constant, sqrt2


def single(n, N, value=1.0, field=Field.REAL):
    coeffs = np.zeros((N,) * n, dtype=complex if field is Field.COMPLEX else float)
    coeffs[(0,) * n] = value
    return CoefficientTensor(field, coeffs)


class TestTensor:
    def test_shape_checks(self):
        with pytest.raises(ValueError):
            CoefficientTensor(Field.REAL, np.zeros((2, 3)))
        with pytest.raises(ValueError):
            CoefficientTensor(Field.REAL, [[1.0, math.nan], [0.0, 0.0]])

    def test_evaluation(self):
        form = littlewood_form()
        assert form(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0
        assert form(np.array([0.0, 1.0]), np.array([0.0, 1.0])) == -1.0

    def test_json_round_trip(self, tmp_path):
        for field in Field:
            form = random_form(3, 2, field, seed=5)
            path = tmp_path / f"{field.value}.json"
            forms.save_tensor(form, path)
            loaded = forms.load_tensor(path)
            assert loaded.field is field
            assert np.array_equal(loaded.coefficients, form.coefficients)

    def test_json_rejects_floats(self):
        data = littlewood_form().to_dict()
        data["coefficients"][0] = 1.0
        with pytest.raises(ValueError):
            CoefficientTensor.from_dict(data)


class TestLhs:
    def test_single_coefficient(self):
        assert mixed_norm_lhs(single(3, 3, -2.5)) == 2.5

    def test_littlewood(self):
        assert mixed_norm_lhs(littlewood_form()) == pytest.approx(4**0.75, rel=1e-15)

    def test_homogeneous(self):
        form = random_form(3, 3, Field.COMPLEX, 1)
        assert mixed_norm_lhs(form.scaled(7.0)) == pytest.approx(7 * mixed_norm_lhs(form), rel=1e-14)

    def test_zero(self):
        assert mixed_norm_lhs(single(2, 2, 0.0)) == 0.0


class TestRealSup:
    def test_littlewood(self):
        assert sup_norm_real_exact(littlewood_form()) == 2.0

    def test_all_ones(self):
        assert sup_norm_real_exact(CoefficientTensor(Field.REAL, np.ones((2, 2, 2)))) == 8.0

    def test_cap(self):
        with pytest.raises(OracleSizeError):
            sup_norm_real_exact(random_form(4, 6, Field.REAL, 0))

    def test_complex_rejected(self):
        with pytest.raises(ValueError):
            sup_norm_real_exact(random_form(2, 2, Field.COMPLEX, 0))

    def test_matches_grid_oracle(self):
        # the grid at resolution 1/8 contains every vertex, so both oracles agree exactly
        rng = np.random.default_rng(11)
        for _ in range(200):
            form = random_form(2, 2, Field.REAL, int(rng.integers(2**32)))
            assert sup_norm_real_exact(form) == pytest.approx(sup_norm_real_grid(form), rel=1e-12)

    def test_slot_permutation_invariant(self):
        form = random_form(3, 3, Field.REAL, 9)
        base = sup_norm_real_exact(form)
        for order in [(1, 0, 2), (2, 1, 0), (1, 2, 0)]:
            assert sup_norm_real_exact(form.permuted(order)) == pytest.approx(base, rel=1e-12)


class TestComplexSup:
    def test_all_ones(self):
        form = CoefficientTensor(Field.COMPLEX, np.ones((2, 2)))
        assert sup_norm_complex_ascent(form) == pytest.approx(4.0, rel=1e-12)

    def test_littlewood(self):
        form = CoefficientTensor(Field.COMPLEX, littlewood_form().coefficients)
        value = sup_norm_complex_ascent(form)
        assert value == pytest.approx(2 * math.sqrt(2), rel=1e-8)
        assert abs(value - sup_norm_complex_grid(form, steps=128)) < 1e-3

    def test_single_coefficient(self):
        assert sup_norm_complex_ascent(single(3, 2, 3 - 4j, Field.COMPLEX)) == pytest.approx(5.0)

    def test_history_is_monotone(self):
        form = random_form(3, 3, Field.COMPLEX, 4)
        rng = np.random.default_rng(0)
        run = complex_ascent(form, [np.exp(2j * np.pi * rng.random(3)) for _ in range(3)])
        assert all(b >= a - 1e-12 for a, b in zip(run.history, run.history[1:]))
        assert not run.cap_reached

    def test_ascent_never_exceeds_bound(self):
        form = random_form(2, 3, Field.COMPLEX, 21)
        assert sup_norm_complex_ascent(form) <= np.abs(form.coefficients).sum() + 1e-12

    def test_grid_is_lower_bound_close_to_ascent(self):
        for s in range(10):
            form = random_form(2, 2, Field.COMPLEX, s)
            ascent, grid = sup_norm_complex_ascent(form), sup_norm_complex_grid(form, steps=64)
            assert grid <= ascent * (1 + 1e-12)
            assert ascent - grid < 0.02 * ascent


class TestRatio:
    def test_littlewood_real(self):
        assert bh_ratio(littlewood_form()).ratio == pytest.approx(math.sqrt(2), rel=1e-14)

    def test_littlewood_complex(self):
        form = CoefficientTensor(Field.COMPLEX, littlewood_form().coefficients)
        assert bh_ratio(form).ratio == pytest.approx(1.0, rel=1e-8)

    def test_all_ones(self):
        form = CoefficientTensor(Field.REAL, np.ones((2, 2)))
        assert bh_ratio(form).ratio == pytest.approx(4 ** (-0.25), rel=1e-14)

    def test_zero_form(self):
        with pytest.raises(ValueError):
            bh_ratio(single(2, 2, 0.0))

    def test_scale_invariant(self):
        form = random_form(2, 3, Field.REAL, 2)
        assert bh_ratio(form.scaled(-0.3)).ratio == pytest.approx(bh_ratio(form).ratio, rel=1e-12)

    def test_elementary_bounds(self):
        for s in range(30):
            form = random_form(3, 2, Field.REAL, s)
            a = np.abs(form.coefficients)
            sample = bh_ratio(form)
            assert sample.lhs <= form.N**form.n * a.max() * (1 + 1e-12)
            assert sample.sup_norm >= a.max() * (1 - 1e-12)


class TestRandomForms:
    def test_deterministic(self):
        for field in Field:
            a, b = random_form(3, 3, field, 42), random_form(3, 3, field, 42)
            assert np.array_equal(a.coefficients, b.coefficients)

    def test_distinct_seeds_differ(self):
        seen = {random_form(2, 2, Field.REAL, trial_seed(7, t)).coefficients.tobytes() for t in range(100)}
        assert len(seen) == 100

    def test_ranges(self):
        real = random_form(2, 10, Field.REAL, 3).coefficients
        cplx = random_form(2, 10, Field.COMPLEX, 3).coefficients
        assert np.all(np.abs(real) <= 1) and np.all(np.abs(cplx) <= 1)

    def test_trial_seed_depends_only_on_inputs(self):
        assert trial_seed(1, 5) == trial_seed(1, 5)
        assert trial_seed(1, 5) != trial_seed(2, 5)
        assert trial_seed(1, 5) != trial_seed(1, 6)


class TestVerifyBatch:
    def test_bilinear_real(self):
        result = verify_batch(2, 2, Field.REAL, 1000, 20240601, sqrt2(), extra_forms=[littlewood_form()])
        assert result.passed
        assert result.max_ratio == pytest.approx(math.sqrt(2), rel=1e-12)
        assert result.argmax_trial == 0

    def test_trilinear_real(self):
        bound = sqrt2() * d_constant(Field.REAL)
        result = verify_batch(3, 3, Field.REAL, 500, 1, bound)
        assert result.passed and result.max_ratio < result.bound

    def test_bilinear_complex(self):
        result = verify_batch(2, 2, Field.COMPLEX, 200, 3, 2 / math.sqrt(math.pi))
        assert result.passed

    def test_violation_reports_seed(self):
        result = verify_batch(2, 2, Field.REAL, 20, 5, 0.5)
        assert not result.passed
        v = result.violations[0]
        again = bh_ratio(random_form(2, 2, Field.REAL, v["seed"]))
        assert repr(again.ratio) == v["ratio"]

    def test_reproducible(self):
        a = verify_batch(3, 2, Field.COMPLEX, 30, 9, 2.0).to_record()
        b = verify_batch(3, 2, Field.COMPLEX, 30, 9, 2.0).to_record()
        assert a == b
