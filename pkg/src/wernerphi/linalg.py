"""Dense complex linear algebra shared by the rest of the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Indexing is
zero-based; ``vec`` stacks columns (Fortran order).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

HERM_TOL = 1e-10


class NotHermitian(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class PsdReport:
    is_psd: bool
    lambda_min: float
    threshold: float

    def __bool__(self):
        return self.is_psd


@dataclass(frozen=True)
class HermitianDet:
    value: float
    sign: int
    log_abs: float


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def fro_scale(m: np.ndarray) -> float:
    """max(1, ||m||_F), the reference magnitude for relative tolerances."""
    return max(1.0, float(np.linalg.norm(m)))


def kron(a, b) -> np.ndarray:
    """Block Kronecker product ``[a_ij * b]``."""
    return np.kron(as_matrix(a), as_matrix(b))


def vec(z) -> np.ndarray:
    """Column-stack ``z``: entry (i, j) lands at position j*rows + i."""
    z = as_matrix(z)
    return z.reshape(-1, order="F")


def unvec(v, rows: int) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    if v.size % rows:
        raise DimensionMismatch(f"length {v.size} is not a multiple of {rows}")
    return v.reshape(rows, -1, order="F")


def hermitian_part(m: np.ndarray, tol: float = HERM_TOL) -> np.ndarray:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"matrix is not square: {m.shape}")
    skew = np.linalg.norm(m - m.conj().T)
    if skew > tol * fro_scale(m):
        raise NotHermitian(f"||M - M^H|| = {skew:.3e} exceeds {tol:g} * {fro_scale(m):.3e}")
    return (m + m.conj().T) / 2


def hermitian_eig(m, tol: float = HERM_TOL) -> EigenResult:
    """Ascending eigendecomposition of a Hermitian matrix.

    The input is symmetrized before solving, so rounding-level asymmetry
    from assembly is absorbed.
    """
    h = hermitian_part(m, tol)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return EigenResult(w, v)


def eigvalsh(m, tol: float = HERM_TOL) -> np.ndarray:
    h = hermitian_part(m, tol)
    try:
        return np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc


def lambda_min(m, tol: float = HERM_TOL) -> float:
    return float(eigvalsh(m, tol)[0])


def is_psd(m, tol: float = 1e-12) -> PsdReport:
    """PSD test: lambda_min >= -tol * max(1, ||M||_F)."""
    m = as_matrix(m)
    lmin = lambda_min(m)
    threshold = -tol * fro_scale(m)
    return PsdReport(lmin >= threshold, lmin, threshold)


def det_hermitian(m) -> HermitianDet:
    """Determinant of a Hermitian matrix as the product of its eigenvalues.

    ``log_abs`` is ``-inf`` when an eigenvalue is exactly zero. ``value``
    may overflow to ``inf`` for large orders; ``sign`` and ``log_abs``
    never do.
    """
    w = eigvalsh(m)
    return det_from_eigenvalues(w)


def det_from_eigenvalues(w: np.ndarray) -> HermitianDet:
    if np.any(w == 0):
        return HermitianDet(0.0, 0, -np.inf)
    sign = int(np.prod(np.sign(w)))
    log_abs = float(np.sum(np.log(np.abs(w))))
    with np.errstate(over="ignore", under="ignore"):
        value = float(sign * np.exp(log_abs))
    return HermitianDet(value, sign, log_abs)


def lu_slogdet(m) -> tuple[float, float]:
    """(sign, log|det|) by LU factorization, independent of the eigensolver."""
    lu, _ = sla.lu_factor(as_matrix(m), check_finite=True)
    diag = np.diag(lu)
    if np.any(diag == 0):
        return 0.0, -np.inf
    return 1.0, float(np.sum(np.log(np.abs(diag))))


def is_unitary(a, tol: float = 1e-10) -> bool:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    return bool(np.linalg.norm(a.conj().T @ a - np.eye(a.shape[0])) <= tol * max(1, a.shape[0]))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_complex(shape, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


# --- matrix JSON ---------------------------------------------------------

def matrix_to_json(m) -> dict:
    m = as_matrix(m)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "re": m.real.tolist(),
        "im": m.imag.tolist(),
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if rows < 1 or cols < 1:
        raise DimensionMismatch("rows and cols must be positive")
    if re.shape != (rows, cols) or im.shape != (rows, cols):
        raise DimensionMismatch(
            f"declared {rows}x{cols}, got re{re.shape} im{im.shape}"
        )
    return as_matrix(re + 1j * im)


def dumps_matrix(m) -> str:
    return json.dumps(matrix_to_json(m))
