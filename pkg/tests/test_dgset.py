import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgsense.dgset import (
    BinSymMatrix,
    dg_matrix,
    dg_values,
    form_matrix,
    form_values,
    iter_dg_indices,
    kerdock_values,
    null_space,
    rank_gf2,
)
from dgsense.gf2m import FieldError, GF2m

F3 = GF2m(3)


def test_reference_matrices_m3():
    assert form_matrix(F3, 0, 0b001).to_array().tolist() == [[1, 0, 0], [0, 0, 1], [0, 1, 0]]
    assert form_matrix(F3, 1, 0b010).to_array().tolist() == [[0, 1, 0], [1, 0, 0], [0, 0, 0]]
    assert form_matrix(F3, 1, 0b001).to_array().tolist() == [[0, 0, 0], [0, 0, 1], [0, 1, 0]]
    assert dg_matrix(F3, (0b001, 0b001)).to_array().tolist() == [[1, 0, 0], [0, 0, 0], [0, 0, 0]]


def test_zero_and_reduction():
    for t in range(2):
        assert form_matrix(F3, t, 0).is_zero()
    assert dg_matrix(F3, (0, 0)).is_zero()
    assert dg_matrix(F3, (5,)) == form_matrix(F3, 0, 5)


def test_t_out_of_range():
    with pytest.raises(FieldError):
        form_matrix(F3, 2, 1)
    with pytest.raises(FieldError):
        dg_matrix(F3, (1, 0, 0))


def test_symmetry_enforced():
    with pytest.raises(ValueError):
        BinSymMatrix(2, (0b10, 0b00))


@pytest.mark.parametrize("m", [3, 5, 7])
def test_bilinear_identity(m):
    F = GF2m(m)
    rng = np.random.default_rng(m)
    for _ in range(6):
        t = int(rng.integers(0, (m - 1) // 2 + 1))
        a = int(rng.integers(0, F.size))
        P = form_matrix(F, t, a)
        for x in range(F.size):
            for y in range(0, F.size, 3):
                if t == 0:
                    s = F.mul(x, y)
                else:
                    s = F.mul(x, F.frob_pow(y, t)) ^ F.mul(F.frob_pow(x, t), y)
                assert P.bilinear(x, y) == F.trace(F.mul(s, a))


@pytest.mark.parametrize("m", [3, 5, 7, 9])
def test_kerdock_nonsingular(m):
    F = GF2m(m)
    for a in range(1, F.size):
        assert rank_gf2(form_matrix(F, 0, a)) == m
    assert rank_gf2(BinSymMatrix.zeros(m)) == 0


def test_dg71_rank_bound():
    F = GF2m(7)
    for coeffs in iter_dg_indices(7, 1):
        if any(coeffs):
            assert rank_gf2(dg_matrix(F, coeffs)) >= 5


@pytest.mark.parametrize("m", [3, 5])
def test_dg_injective_and_nested(m):
    F = GF2m(m)
    for r in range((m - 1) // 2 + 1):
        mats = {dg_matrix(F, c) for c in iter_dg_indices(m, r)}
        assert len(mats) == 2 ** ((r + 1) * m)
        if r:
            assert prev <= mats
        prev = mats


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 127), st.integers(0, 127), st.integers(0, 3))
def test_linearity_in_coefficients(a, b, t):
    F = GF2m(7)
    assert form_matrix(F, t, a ^ b) == form_matrix(F, t, a) ^ form_matrix(F, t, b)


def test_null_space():
    assert null_space(BinSymMatrix.zeros(3)) == list(range(8))
    for m in (3, 5, 7):
        F = GF2m(m)
        for a in range(1, F.size):
            assert null_space(form_matrix(F, 0, a)) == [0]
            ns = null_space(form_matrix(F, 1, a))
            assert len(ns) == 2 and ns[0] == 0
            x = ns[1]
            assert F.pow(x, 3) == F.inverse(a)


@pytest.mark.parametrize("m", [3, 5, 7])
def test_value_tables_match_quadratic_form(m):
    F = GF2m(m)
    for t in range((m - 1) // 2 + 1):
        T = form_values(F, t)
        for a in range(F.size):
            P = form_matrix(F, t, a)
            assert T[a].tolist() == [P.quadratic_form(x) for x in range(F.size)]
        if t:
            assert set(np.unique(T)) <= {0, 2}


def test_forms_add_across_orders():
    # off-diagonal-only forms add in Z4 without carries from the diagonal
    F = GF2m(5)
    rng = np.random.default_rng(1)
    for _ in range(20):
        coeffs = tuple(int(c) for c in rng.integers(0, 32, 3))
        P = dg_matrix(F, coeffs)
        assert dg_values(F, coeffs).tolist() == [P.quadratic_form(x) for x in range(32)]


def test_kerdock_values_row_subset():
    F = GF2m(5)
    rows = [0, 3, 17, 31]
    assert np.array_equal(kerdock_values(F, rows), kerdock_values(F)[:, rows])
