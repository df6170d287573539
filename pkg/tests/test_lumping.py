import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dualiga.assembly import Scheme, TrussModel, build_system
from dualiga.lumping import (NonPositiveMassError, diagonal_mass_fraction, is_diagonal,
                             is_diagonally_dominant, row_sum_lump)
from dualiga.splines import mesh_preset

BAR_M = np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])


@pytest.mark.parametrize("M, d", [
    ([[2, 1], [1, 2]], [3, 3]),
    (np.diag([1.0, 4.0, 2.0]), [1, 4, 2]),
    (BAR_M, [0.5, 0.5]),
])
def test_row_sum_lump_examples(M, d):
    np.testing.assert_allclose(row_sum_lump(M), d, atol=1e-15)


def test_row_sum_lump_rejects_nonpositive_rows():
    with pytest.raises(NonPositiveMassError, match="rows \\[0\\]"):
        row_sum_lump([[1.0, -2.0], [0.5, 1.0]])


@settings(max_examples=40)
@given(arrays(np.float64, (4, 4), elements=st.floats(0, 1)))
def test_row_sum_lump_conserves_mass(A):
    M = A + A.T + np.eye(4)
    d = row_sum_lump(M)
    assert d.sum() == pytest.approx(M.sum(), rel=1e-13)
    ones = np.ones(4)
    np.testing.assert_allclose(d * ones, M @ ones, rtol=1e-13)


@pytest.mark.parametrize("M, frac", [
    (np.diag([1.0, 2.0]), 1.0),
    (BAR_M, 2 / 3),
])
def test_diagonal_mass_fraction_examples(M, frac):
    assert diagonal_mass_fraction(M) == pytest.approx(frac)


def test_is_diagonal_examples():
    assert is_diagonal(np.eye(3), 1e-12)
    assert not is_diagonal(BAR_M, 1e-12)
    assert is_diagonal(np.array([1.0, 2.0]))
    ig = build_system(TrussModel(), mesh_preset("A", 3, 2), Scheme("ig")).M
    assert is_diagonal(ig, 1e-8)


def test_ad_mass_more_diagonal_than_nurbs():
    space = mesh_preset("A", 5, 2)
    model = TrussModel(bc=("fixed", "free"))
    nurbs = build_system(model, space, Scheme()).M
    ad = build_system(model, space, Scheme("ad", 5)).M
    assert diagonal_mass_fraction(ad) > diagonal_mass_fraction(nurbs)
    assert is_diagonally_dominant(ad)
    assert not is_diagonally_dominant(nurbs)


def test_bad_shapes():
    with pytest.raises(ValueError):
        diagonal_mass_fraction(np.ones((2, 3)))
    with pytest.raises(ValueError):
        diagonal_mass_fraction(-np.eye(2))
