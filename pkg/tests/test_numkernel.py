"""Kernel checks: log determinants, solves, spectra."""

import math
from fractions import Fraction

import numpy as np
import pytest

from szegolab.numkernel import (
    DenseMatrix,
    DimensionError,
    SingularMatrixError,
    SymmetryError,
    eigvals_general,
    eigvals_hermitian,
    lu_logdet,
    singular_values,
    solve,
)


def exact_det(rows):
    """Cofactor expansion in exact rational arithmetic (test oracle)."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = Fraction(0)
    for j in range(n):
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        total += (-1) ** j * rows[0][j] * exact_det(minor)
    return total


def test_logdet_identity():
    ld = lu_logdet(np.eye(3))
    assert ld.log_abs == pytest.approx(0.0, abs=1e-14)
    assert ld.phase == pytest.approx(1.0)
    assert not ld.singular_flag


def test_logdet_diagonal():
    ld = lu_logdet(np.diag([2.0, 3.0]))
    assert ld.log_abs == pytest.approx(math.log(6.0), abs=1e-14)
    assert ld.phase == pytest.approx(1.0)


def test_logdet_hilbert_exact_oracle():
    rows = [[Fraction(1, i + j + 1) for j in range(3)] for i in range(3)]
    oracle = exact_det(rows)
    assert oracle == Fraction(1, 2160)
    h = np.array([[float(v) for v in r] for r in rows])
    ld = lu_logdet(h)
    assert ld.log_abs == pytest.approx(math.log(1 / 2160), rel=1e-12)
    assert ld.phase == pytest.approx(1.0)


def test_logdet_singular_flag():
    shift = np.diag(np.ones(2), -1)  # 3x3, det 0
    ld = lu_logdet(shift)
    assert ld.singular_flag
    assert ld.value == 0


def test_logdet_rejects_nonsquare():
    with pytest.raises(DimensionError):
        lu_logdet(np.ones((2, 3)))


def test_dense_matrix_rejects_nonfinite():
    with pytest.raises(ValueError):
        DenseMatrix(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_solve_identity():
    x = solve(np.eye(2), [1.0, 2.0])
    assert np.allclose(x, [1.0, 2.0])


def test_solve_diagonal():
    x = solve(np.diag([2.0, 4.0]), [1.0, 1.0])
    assert np.allclose(x, [0.5, 0.25])


def test_solve_residual_random():
    rng = np.random.default_rng(7)
    m = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)) + 4 * np.eye(8)
    rhs = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    x = solve(m, rhs)
    assert np.linalg.norm(m @ x - rhs) <= 1e-10


def test_solve_singular_raises_with_pivot():
    shift = np.diag(np.ones(2), -1)
    with pytest.raises(SingularMatrixError) as exc:
        solve(shift, np.ones(3))
    assert exc.value.smallest_pivot == 0.0


def test_eigvals_hermitian_examples():
    assert np.allclose(eigvals_hermitian(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])
    tri = np.diag(np.ones(2), 1) + np.diag(np.ones(2), -1)
    assert np.allclose(eigvals_hermitian(tri), [-math.sqrt(2), 0, math.sqrt(2)])
    assert np.allclose(eigvals_hermitian(np.array([[2.0, 1.0], [1.0, 2.0]])), [1, 3])


def test_eigvals_hermitian_rejects_asymmetric():
    with pytest.raises(SymmetryError):
        eigvals_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigvals_general_examples():
    assert np.allclose(sorted(eigvals_general(np.array([[0.0, 1.0], [0.0, 0.0]]))), [0, 0])
    vals = sorted(eigvals_general(np.array([[0.0, 1.0], [1.0, 0.0]])).real)
    assert np.allclose(vals, [-1, 1])


def test_eigvals_general_companion_golden():
    # companion matrix of z^2 - z - 1; roots from the quadratic formula
    comp = np.array([[1.0, 1.0], [1.0, 0.0]])
    roots = sorted(eigvals_general(comp).real)
    expected = sorted([(1 + math.sqrt(5)) / 2, (1 - math.sqrt(5)) / 2])
    assert np.allclose(roots, expected, atol=1e-12)


def test_singular_values_examples():
    assert np.allclose(singular_values(np.eye(4)), np.ones(4))
    shift = np.diag(np.ones(2), -1)
    assert np.allclose(singular_values(shift), [1, 1, 0], atol=1e-14)
    u = np.array([1.0, 2.0, 2.0])
    v = np.array([3.0, 4.0])
    sv = singular_values(np.outer(u, v.conj()))
    assert sv[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v))
    assert np.all(sv[1:] <= 1e-12)


def test_logdet_product_law_random():
    rng = np.random.default_rng(11)
    for _ in range(25):
        n = int(rng.integers(2, 9))
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        la, lb, lab = lu_logdet(a), lu_logdet(b), lu_logdet(a @ b)
        assert lab.log_abs == pytest.approx(la.log_abs + lb.log_abs, abs=1e-9)
        assert lab.phase == pytest.approx(la.phase * lb.phase, abs=1e-9)


def test_eigvals_sum_to_trace():
    rng = np.random.default_rng(13)
    for _ in range(20):
        n = int(rng.integers(2, 12))
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = (a + a.conj().T) / 2
        w = eigvals_hermitian(h)
        norm = np.linalg.norm(h, 2)
        assert abs(w.sum() - np.trace(h).real) <= 1e-9 * n * max(1.0, norm)


def test_singular_values_match_gram_eigenvalues():
    rng = np.random.default_rng(17)
    for _ in range(10):
        a = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
        sv = singular_values(a)
        gram = eigvals_hermitian(a.conj().T @ a)
        assert np.allclose(sv, np.sqrt(np.maximum(gram[::-1], 0.0)), atol=1e-8)


def test_solve_roundtrip_well_conditioned():
    rng = np.random.default_rng(19)
    for _ in range(10):
        n = int(rng.integers(2, 16))
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 3 * np.eye(n)
        if np.linalg.cond(a) > 1e6:
            continue
        rhs = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x = solve(a, rhs)
        assert np.linalg.norm(a @ x - rhs) <= 1e-9 * np.linalg.norm(rhs)
