import numpy as np
import numpy.testing as npt
import pytest

from nestfactor import (
    NotPositiveDefiniteError,
    admissibility,
    canonical_factor,
    cholesky_upper,
    compare_to_cholesky,
    op_norm,
    psd_sqrt,
    standard_nest,
    triangularity_defect,
)
from conftest import random_spd


def test_canonical_factor_identity():
    rep = canonical_factor(np.eye(3), standard_nest(3), schedule=3)
    npt.assert_allclose(rep.sqrt_c, np.eye(3), atol=1e-12)
    npt.assert_allclose(rep.d, np.eye(3), atol=1e-12)
    npt.assert_allclose(rep.v, np.eye(3), atol=1e-12)
    assert rep.residual <= 1e-12
    assert rep.admissibility[0] <= 1e-12
    assert rep.admissibility[1] == 0


def test_canonical_factor_two_level_diagonal():
    """diag(4,1) on the two-point nest: the diagonal of sqrt(C) is sqrt(C)
    itself, so V = C and the factorization misses by exactly the square."""
    rep = canonical_factor(np.diag([4.0, 1.0]), standard_nest(2), schedule=3)
    npt.assert_allclose(rep.d, np.diag([2.0, 1.0]), atol=1e-12)
    assert rep.admissibility[0] == pytest.approx(3.0, abs=1e-12)
    assert rep.admissibility[1] == 0
    npt.assert_allclose(rep.v, np.diag([4.0, 1.0]), atol=1e-12)
    assert rep.residual == pytest.approx(12.0, abs=1e-10)


def test_cholesky_examples():
    npt.assert_allclose(cholesky_upper(np.eye(3)), np.eye(3))
    npt.assert_allclose(cholesky_upper(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    c = np.array([[2.0, 1.0], [1.0, 2.0]])
    r = cholesky_upper(c)
    expected = np.array([[np.sqrt(2.0), 1.0 / np.sqrt(2.0)], [0.0, np.sqrt(1.5)]])
    npt.assert_allclose(r, expected, atol=1e-12)
    npt.assert_allclose(r.T @ r, c, atol=1e-12)


def test_cholesky_rejects_indefinite_with_pivot():
    c = np.diag([1.0, -1.0, 1.0])
    with pytest.raises(NotPositiveDefiniteError) as exc:
        cholesky_upper(c)
    assert exc.value.pivot == 2


def test_admissibility_examples():
    defect, rank_defect = admissibility(np.eye(4))
    assert defect == pytest.approx(0.0, abs=1e-14)
    assert rank_defect == 0
    defect, rank_defect = admissibility(np.diag([2.0, 1.0]))
    assert defect == pytest.approx(3.0, abs=1e-12)
    assert rank_defect == 0
    d = np.eye(3)
    d[:, 1] = 0.0
    assert admissibility(d)[1] == 1


def test_compare_to_cholesky_sign_gauge():
    r = cholesky_upper(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert compare_to_cholesky(r, r) == pytest.approx(0.0, abs=1e-14)
    assert compare_to_cholesky(-r, r) == pytest.approx(0.0, abs=1e-14)


def test_triangularity_defect_examples():
    nest = standard_nest(2)
    upper = np.array([[1.0, 2.0], [0.0, 3.0]])
    assert triangularity_defect(upper, nest) == pytest.approx(0.0, abs=1e-14)
    lower = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert triangularity_defect(lower, nest) == pytest.approx(1.0)


def test_residual_identity_on_seeded_operators():
    rng = np.random.default_rng(8)
    for _ in range(25):
        dim = int(rng.integers(2, 17))
        c = random_spd(rng, dim)
        rep = canonical_factor(c, standard_nest(dim), schedule=3)
        bound = op_norm(rep.sqrt_c) ** 2 * rep.admissibility[0] + 1e-9
        assert rep.residual <= bound
        npt.assert_allclose(rep.v, rep.d.T @ rep.sqrt_c, atol=1e-14)


def test_triangularity_exact_for_seeded_operators():
    rng = np.random.default_rng(13)
    for _ in range(25):
        dim = int(rng.integers(2, 65))
        c = random_spd(rng, dim)
        rep = canonical_factor(c, standard_nest(dim), schedule=4)
        assert rep.triangularity <= 1e-10


def test_rank_deficient_c_reports_rank_defect():
    c = np.diag([1.0, 0.0, 2.0])
    rep = canonical_factor(c, standard_nest(3), schedule=3)
    assert rep.admissibility[1] >= 1
    assert rep.triangularity <= 1e-10
    # Cholesky column is meaningless here and must be flagged, not faked
    assert np.isnan(rep.history[-1].cholesky_distance)


def test_volterra_refinement_trend(volterra128):
    c, nest, rep = volterra128
    res = [r.residual for r in rep.history]
    adm = [r.admissibility_defect for r in rep.history]
    chol = [r.cholesky_distance for r in rep.history]
    assert all(b < a for a, b in zip(res[:-1], res[1:]))
    assert all(b < a for a, b in zip(adm[:-1], adm[1:]))
    # Cholesky distance trends down, allowing 10% slack per step
    assert all(b <= 1.1 * a for a, b in zip(chol[:-1], chol[1:]))
    assert chol[-1] < chol[0]


def test_volterra_coarsest_level_matches_eigenvalue_oracle(volterra128):
    """At the coarsest partition D = sqrt(C), so the residual and the
    admissibility defect reduce to spectral quantities of C."""
    c, nest, rep = volterra128
    eigs = np.linalg.eigvalsh((c + c.T) / 2.0)
    first = rep.history[0]
    assert first.residual == pytest.approx(np.abs(eigs**2 - eigs).max(), rel=1e-9)
    assert first.admissibility_defect == pytest.approx(np.abs(eigs - 1.0).max(), rel=1e-9)


def test_psd_sqrt_feeds_factorization_consistently():
    c = np.array([[2.0, 1.0], [1.0, 2.0]])
    rep = canonical_factor(c, standard_nest(2), schedule=2)
    npt.assert_allclose(rep.sqrt_c, psd_sqrt(c), atol=1e-14)
