"""The 2d^2 x 2d^2 matrix H(X, Y) of Phi as a hermitian form in (U, V).

    Phi(X, Y, U, V) = [vec(U)^H vec(V)^H] H(X, Y) [vec(U); vec(V)]

with vec the column-stacking map. H = H1 - (H2 + H3)/2 + H4/4.

Note on labels: the blocks named ``H2`` and ``H3`` follow the usual
closed forms ``[X^H X ...] (x) I_d`` and ``[I_d (x) X* X^T ...]``. Under
column stacking ``H2`` is the matrix of Phi3 = |U X^T + V Y^T|^2 and
``H3`` that of Phi2 = |X^T U + Y^T V|^2. Both carry the same weight, so
H itself is unaffected; :data:`PHI_INDEX_OF_H` records the pairing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .biquadratic import NotUnitary, combine, phi_matrix_batch
from .linalg import (
    DimensionMismatch,
    PsdReport,
    as_matrix,
    eigvalsh,
    fro_scale,
    is_unitary,
    matrix_to_json,
    vec,
)

# H1 -> Phi1, H2 -> Phi3, H3 -> Phi2, H4 -> Phi4 (zero-based component index)
PHI_INDEX_OF_H = {1: 0, 2: 2, 3: 1, 4: 3}

IMAG_TOL = 1e-12


class SingularLambda(ValueError):
    pass


@dataclass(frozen=True)
class HForm:
    d: int
    X: np.ndarray
    Y: np.ndarray
    H: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    H3: np.ndarray
    H4: np.ndarray

    @property
    def order(self) -> int:
        return self.H.shape[0]

    @property
    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.H1, self.H2, self.H3, self.H4)

    def norm(self) -> float:
        return float(np.linalg.norm(self.H))

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "X": matrix_to_json(self.X),
            "Y": matrix_to_json(self.Y),
            "H": matrix_to_json(self.H),
        }


@dataclass(frozen=True)
class MoebiusParam:
    """Lambda = [[alpha, beta], [gamma, delta]] mixing (X, Y)."""

    alpha: complex
    beta: complex
    gamma: complex
    delta: complex

    @property
    def det(self) -> complex:
        return self.alpha * self.delta - self.beta * self.gamma

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.alpha, self.beta], [self.gamma, self.delta]], dtype=complex)

    def is_singular(self, tol: float = 1e-12) -> bool:
        big = max(abs(self.alpha), abs(self.beta), abs(self.gamma), abs(self.delta))
        return abs(self.det) < tol * big**2 or big == 0

    def apply(self, X, Y) -> tuple[np.ndarray, np.ndarray]:
        return self.alpha * X + self.beta * Y, self.gamma * X + self.delta * Y

    @classmethod
    def random(cls, rng: np.random.Generator) -> "MoebiusParam":
        z = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        return cls(*z)


def _pair(X, Y) -> tuple[np.ndarray, np.ndarray, int]:
    X, Y = as_matrix(X), as_matrix(Y)
    d = X.shape[0]
    if X.shape != (d, d) or Y.shape != (d, d):
        raise DimensionMismatch(f"X and Y must be d x d, got {X.shape}, {Y.shape}")
    return X, Y, d


def build_H(X, Y) -> HForm:
    X, Y, d = _pair(X, Y)
    eye_d = np.eye(d)
    eye_d2 = np.eye(d * d)
    xs, ys = (X, Y), (X, Y)

    gram = np.array([[np.vdot(a, b) for b in ys] for a in xs])  # tr(A^H B)
    H1 = np.kron(gram, eye_d2)
    H2 = np.block([[np.kron(a.conj().T @ b, eye_d) for b in ys] for a in xs])
    H3 = np.block([[np.kron(eye_d, a.conj() @ b.T) for b in ys] for a in xs])
    tilde = [vec(a) for a in xs]
    H4 = np.block([[np.outer(a.conj(), b) for b in tilde] for a in tilde])
    H = H1 - 0.5 * (H2 + H3) + 0.25 * H4
    return HForm(d, X, Y, H, H1, H2, H3, H4)


def stack_uv(U, V) -> np.ndarray:
    return np.concatenate([vec(U), vec(V)])


def hermitian_value(M: np.ndarray, w: np.ndarray) -> float:
    z = np.vdot(w, M @ w)
    scale = float(np.linalg.norm(M)) * float(np.vdot(w, w).real)
    if abs(z.imag) > IMAG_TOL * max(scale, 1.0):
        raise ArithmeticError(f"hermitian form has imaginary part {z.imag:.3e}")
    return float(z.real)


def quadratic_eval(h: HForm, U, V) -> float:
    U, V = as_matrix(U), as_matrix(V)
    if U.shape != (h.d, h.d) or V.shape != (h.d, h.d):
        raise DimensionMismatch(f"U, V must be {h.d}x{h.d}")
    return hermitian_value(h.H, stack_uv(U, V))


def polarize(form: Callable[[np.ndarray], np.ndarray], n: int) -> np.ndarray:
    """Recover the hermitian matrix G of q(z) = z^H G z from evaluations.

    ``form`` maps a batch of coordinate vectors, shape (m, n), to the m
    real values q(z). Uses q(e_p), q(e_p + e_q) and q(e_p + i e_q).
    """
    p_idx, q_idx = np.triu_indices(n, k=1)
    m = len(p_idx)
    eye = np.eye(n, dtype=complex)
    pts = np.concatenate([eye, eye[p_idx] + eye[q_idx], eye[p_idx] + 1j * eye[q_idx]])
    vals = np.asarray(form(pts), dtype=float)
    diag = vals[:n]
    base = diag[p_idx] + diag[q_idx]
    re = (vals[n : n + m] - base) / 2
    im = -(vals[n + m :] - base) / 2
    G = np.diag(diag).astype(complex)
    G[p_idx, q_idx] = re + 1j * im
    G[q_idx, p_idx] = re - 1j * im
    return G


def build_G_polarized(U, V) -> np.ndarray:
    """Matrix G(U, V) with Phi = [vec(X)^H vec(Y)^H] G [vec(X); vec(Y)]."""
    U, V, d = _pair(U, V)
    n2 = d * d

    def form(z):
        X = z[:, :n2].reshape(-1, d, d).transpose(0, 2, 1)
        Y = z[:, n2:].reshape(-1, d, d).transpose(0, 2, 1)
        return combine(phi_matrix_batch(X, Y, U, V))

    return polarize(form, 2 * n2)


def _check_unitary(d: int, **mats):
    for name, m in mats.items():
        if m.shape != (d, d) or not is_unitary(m):
            raise NotUnitary(f"{name} is not a {d}x{d} unitary")


def _rel_dev(a: np.ndarray, b: np.ndarray, ref: np.ndarray) -> float:
    return float(np.linalg.norm(a - b)) / fro_scale(ref)


def check_transform_AB(X, Y, A, B) -> float:
    """Residual of H(AXB, AYB) = (I2 (x) B^H (x) A*) H(X,Y) (I2 (x) B (x) A^T),
    maximized over H and its four components."""
    X, Y, d = _pair(X, Y)
    A, B = as_matrix(A), as_matrix(B)
    _check_unitary(d, A=A, B=B)
    left = np.kron(np.eye(2), np.kron(B.conj().T, A.conj()))
    right = np.kron(np.eye(2), np.kron(B, A.T))
    before = build_H(X, Y)
    after = build_H(A @ X @ B, A @ Y @ B)
    pairs = [(after.H, before.H)] + list(zip(after.components, before.components))
    return max(_rel_dev(new, left @ old @ right, old) for new, old in pairs)


def check_transform_lambda(X, Y, lam: MoebiusParam) -> float:
    """Residual of H(aX + bY, cX + dY) = (Lambda* (x) I) H(X,Y) (Lambda^T (x) I)."""
    X, Y, d = _pair(X, Y)
    if lam.is_singular():
        raise SingularLambda(f"|det Lambda| = {abs(lam.det):.3e}")
    L = lam.matrix
    eye = np.eye(d * d)
    before = build_H(X, Y).H
    after = build_H(*lam.apply(X, Y)).H
    expected = np.kron(L.conj(), eye) @ before @ np.kron(L.T, eye)
    return _rel_dev(after, expected, expected)


def diagonal_blocks_psd(h: HForm, tol: float = 1e-10) -> tuple[PsdReport, PsdReport]:
    """PSD reports for the (U, U) and (V, V) blocks of order d^2."""
    n = h.d * h.d
    threshold = -tol * fro_scale(h.H)
    out = []
    for sl in (slice(0, n), slice(n, 2 * n)):
        lmin = float(eigvalsh(h.H[sl, sl])[0])
        out.append(PsdReport(lmin >= threshold, lmin, threshold))
    return out[0], out[1]


def leading_minor_check(h: HForm, order: int) -> float:
    """Smallest eigenvalue of the leading principal submatrix of ``order``."""
    if not 1 <= order <= h.order:
        raise ValueError(f"order must lie in [1, {h.order}], got {order}")
    return float(eigvalsh(h.H[:order, :order])[0])
