import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wernerphi.linalg import (
    DimensionMismatch,
    NotHermitian,
    det_hermitian,
    hermitian_eig,
    is_psd,
    kron,
    matrix_from_json,
    matrix_to_json,
    random_complex,
    vec,
)
from wernerphi.werner import WernerFamily, flip_operator, werner_pair


def unit(d, i, j):
    m = np.zeros((d, d))
    m[i, j] = 1
    return m


def test_kron_examples():
    B = np.array([[1, 2j], [3, 4]])
    np.testing.assert_array_equal(kron(np.eye(1), B), B)
    np.testing.assert_array_equal(kron(np.diag([1, 2]), np.eye(2)), np.diag([1, 1, 2, 2]))
    k = kron(unit(2, 0, 1), unit(2, 1, 0))
    # one-based (2, 3)
    assert k[1, 2] == 1 and np.count_nonzero(k) == 1


def test_vec_examples():
    np.testing.assert_array_equal(vec(np.eye(2)), [1, 0, 0, 1])
    np.testing.assert_array_equal(vec([[1, 2], [3, 4]]), [1, 3, 2, 4])
    d = 3
    for i in range(d):
        for j in range(d):
            e = np.zeros(d * d)
            e[j * d + i] = 1
            np.testing.assert_array_equal(vec(unit(d, i, j)), e)


int_mats = arrays(np.int64, st.tuples(st.integers(1, 3), st.integers(1, 3)),
                  elements=st.integers(-5, 5))


@given(int_mats, int_mats, int_mats)
@settings(max_examples=50, deadline=None)
def test_kron_associative(a, b, c):
    np.testing.assert_array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_vec_kron_compatibility(d):
    rng = np.random.default_rng(d)
    A, Z, B = (random_complex((d, d), rng) for _ in range(3))
    np.testing.assert_allclose(vec(A @ Z @ B.T), kron(B, A) @ vec(Z), atol=1e-12)


def test_hermitian_eig_examples():
    np.testing.assert_allclose(hermitian_eig(np.diag([3, 1, 2])).eigenvalues, [1, 2, 3])
    np.testing.assert_allclose(hermitian_eig(np.zeros((4, 4))).eigenvalues, 0)


def test_flip_spectrum_against_exact_oracle():
    f = flip_operator(2)
    exact = sympy.Matrix(f.real.astype(int)).eigenvals()
    assert exact == {-1: 1, 1: 3}
    np.testing.assert_allclose(hermitian_eig(f).eigenvalues, [-1, 1, 1, 1], atol=1e-14)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DimensionMismatch):
        hermitian_eig(np.zeros((2, 3)))


@pytest.mark.parametrize("n", [1, 5, 17, 40])
def test_eig_reconstruction(n):
    rng = np.random.default_rng(n)
    m = random_complex((n, n), rng)
    m = m + m.conj().T
    e = hermitian_eig(m)
    v = e.eigenvectors
    recon = v @ np.diag(e.eigenvalues) @ v.conj().T
    assert np.linalg.norm(recon - m) <= 1e-10 * np.linalg.norm(m)
    assert np.linalg.norm(v.conj().T @ v - np.eye(n)) <= 1e-10
    assert np.all(np.diff(e.eigenvalues) >= 0)


def test_is_psd_examples():
    r = is_psd(np.eye(3), 1e-12)
    assert r.is_psd and r.lambda_min == pytest.approx(1)
    r = is_psd(np.diag([1, -1]), 1e-12)
    assert not r.is_psd and r.lambda_min == pytest.approx(-1)
    _, sigma = werner_pair(WernerFamily(3, 0.5))
    r = is_psd(sigma, 1e-12)
    assert not r and r.lambda_min == pytest.approx(-0.5, abs=1e-12)


def test_det_hermitian_examples():
    assert det_hermitian(np.eye(4)).value == pytest.approx(1)
    assert det_hermitian(np.diag([2, 3])).value == pytest.approx(6)
    r = det_hermitian(np.diag([1, -1, 2]))
    assert r.value == pytest.approx(-2) and r.sign == -1
    assert r.log_abs == pytest.approx(np.log(2))


def test_det_log_form_survives_overflow():
    r = det_hermitian(np.diag([1e200, 1e200, -1.0]))
    assert r.sign == -1
    assert r.log_abs == pytest.approx(400 * np.log(10))


@pytest.mark.parametrize("n", [3, 10, 30])
def test_det_matches_eigen_product(n):
    rng = np.random.default_rng(100 + n)
    m = random_complex((n, n), rng)
    m = m @ m.conj().T + 0.1 * np.eye(n)
    expected = np.prod(np.linalg.eigvalsh(m))
    assert det_hermitian(m).value == pytest.approx(expected, rel=1e-8)


def test_matrix_json_roundtrip_and_rejection():
    m = np.array([[1 + 2j, 3], [0.5j, -1]])
    np.testing.assert_array_equal(matrix_from_json(matrix_to_json(m)), m)
    bad = matrix_to_json(m)
    bad["rows"] = 3
    with pytest.raises(DimensionMismatch):
        matrix_from_json(bad)
    bad = matrix_to_json(m)
    bad["im"] = [[0, 0]]
    with pytest.raises(DimensionMismatch):
        matrix_from_json(bad)
