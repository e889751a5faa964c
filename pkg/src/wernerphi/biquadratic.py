"""The hermitian biquadratic form Phi(X, Y, U, V) at t = 1/2.

Phi = Phi1 - (Phi2 + Phi3)/2 + Phi4/4, computed three independent ways:
column-vector sums, matrix norms, and the operator expectation
<psi| sigma^{(x)2} |psi>.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionMismatch, as_matrix, is_unitary, matrix_from_json, matrix_to_json
from .werner import WernerFamily, eval_sigma_form, rank2_vector

ORACLE_MAX_D = 5


class NotUnitary(ValueError):
    pass


class DimensionTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class MatrixQuadruple:
    X: np.ndarray
    Y: np.ndarray
    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        mats = [as_matrix(m) for m in (self.X, self.Y, self.U, self.V)]
        d = mats[0].shape[0]
        if any(m.shape != (d, d) for m in mats):
            raise DimensionMismatch(f"quadruple shapes differ: {[m.shape for m in mats]}")
        for name, m in zip("XYUV", mats):
            object.__setattr__(self, name, m)

    @property
    def d(self) -> int:
        return self.X.shape[0]

    def block_scale(self) -> float:
        """(|X|^2 + |Y|^2)(|U|^2 + |V|^2), the natural magnitude of Phi."""
        xy = np.linalg.norm(self.X) ** 2 + np.linalg.norm(self.Y) ** 2
        uv = np.linalg.norm(self.U) ** 2 + np.linalg.norm(self.V) ** 2
        return float(xy * uv)

    def to_json(self) -> dict:
        return {"d": self.d, **{k: matrix_to_json(getattr(self, k)) for k in "XYUV"}}

    @classmethod
    def from_json(cls, obj: dict) -> "MatrixQuadruple":
        q = cls(*(matrix_from_json(obj[k]) for k in "XYUV"))
        if int(obj["d"]) != q.d:
            raise DimensionMismatch(f"declared d={obj['d']} but matrices are {q.d}x{q.d}")
        return q

    @classmethod
    def random(cls, d: int, rng: np.random.Generator) -> "MatrixQuadruple":
        z = rng.standard_normal((4, d, d)) + 1j * rng.standard_normal((4, d, d))
        return cls(*z)


@dataclass(frozen=True)
class PhiBreakdown:
    phi1: float
    phi2: float
    phi3: float
    phi4: float

    @property
    def phi(self) -> float:
        return self.phi1 - 0.5 * (self.phi2 + self.phi3) + 0.25 * self.phi4

    def components(self) -> tuple[float, float, float, float]:
        return (self.phi1, self.phi2, self.phi3, self.phi4)


def phi_vector(q: MatrixQuadruple) -> PhiBreakdown:
    """Phi from sums of inner products of the columns x_i, y_i, u_j, v_j.

    <a|b> is conjugate-linear in a; ``b*`` is the entrywise conjugate.
    """
    x, y, u, v = (list(m.T) for m in (q.X, q.Y, q.U, q.V))
    d = q.d
    ip = np.vdot

    phi1 = (
        sum(ip(a, a) for a in x) * sum(ip(a, a) for a in u)
        + sum(ip(x[i], y[i]) for i in range(d)) * sum(ip(u[j], v[j]) for j in range(d))
        + sum(ip(y[i], x[i]) for i in range(d)) * sum(ip(v[j], u[j]) for j in range(d))
        + sum(ip(a, a) for a in y) * sum(ip(a, a) for a in v)
    )

    phi2 = 0j
    for i in range(d):
        for j in range(d):
            a = ip(x[i], u[j].conj())
            b = ip(y[i], v[j].conj())
            phi2 += abs(a) ** 2 + a * b.conjugate() + b * a.conjugate() + abs(b) ** 2

    phi3 = 0j
    for i in range(d):
        for j in range(d):
            phi3 += (
                ip(x[i], x[j]) * ip(u[i], u[j])
                + ip(x[i], y[j]) * ip(u[i], v[j])
                + ip(y[j], x[i]) * ip(v[j], u[i])
                + ip(y[i], y[j]) * ip(v[i], v[j])
            )

    # |sum_i <x_i|u_i*> + sum_j <y_j|v_j*>|^2, expanded
    sx = sum(ip(x[i], u[i].conj()) for i in range(d))
    sy = sum(ip(y[j], v[j].conj()) for j in range(d))
    phi4 = abs(sx) ** 2 + sx * sy.conjugate() + sx.conjugate() * sy + abs(sy) ** 2

    return PhiBreakdown(*(float(np.real(p)) for p in (phi1, phi2, phi3, phi4)))


def phi_matrix_batch(X, Y, U, V) -> np.ndarray:
    """Phi components for stacks of matrices; returns shape (..., 4).

    Leading axes broadcast, so a single (U, V) can be paired with many
    (X, Y) at once.
    """
    X, Y, U, V = (np.asarray(m, dtype=complex) for m in (X, Y, U, V))
    T = lambda m: np.swapaxes(m, -1, -2)  # noqa: E731

    k = np.einsum("...ab,...cd->...acbd", X, U) + np.einsum("...ab,...cd->...acbd", Y, V)
    phi1 = np.sum(np.abs(k) ** 2, axis=(-4, -3, -2, -1))
    m2 = T(X) @ U + T(Y) @ V
    phi2 = np.sum(np.abs(m2) ** 2, axis=(-2, -1))
    m3 = U @ T(X) + V @ T(Y)
    phi3 = np.sum(np.abs(m3) ** 2, axis=(-2, -1))
    phi4 = np.abs(np.trace(m2, axis1=-2, axis2=-1)) ** 2
    return np.stack([phi1, phi2, phi3, phi4], axis=-1)


def combine(components: np.ndarray) -> np.ndarray:
    c = np.asarray(components)
    return c[..., 0] - 0.5 * (c[..., 1] + c[..., 2]) + 0.25 * c[..., 3]


def phi_matrix(q: MatrixQuadruple) -> PhiBreakdown:
    """Phi from Frobenius norms and a trace:

    |X(x)U + Y(x)V|^2 - |X^T U + Y^T V|^2/2 - |U X^T + V Y^T|^2/2
    + |tr(X^T U + Y^T V)|^2/4
    """
    c = phi_matrix_batch(q.X, q.Y, q.U, q.V)
    return PhiBreakdown(*(float(v) for v in c))


def phi_oracle(q: MatrixQuadruple) -> float:
    """Phi as <psi| sigma_W(1/2)^{(x)2} |psi> with the operator built in full."""
    if q.d > ORACLE_MAX_D:
        raise DimensionTooLarge(f"oracle builds a d^4 operator; d={q.d} > {ORACLE_MAX_D}")
    psi = rank2_vector(q.X, q.U, q.Y, q.V)
    return eval_sigma_form(psi, WernerFamily(q.d, 0.5), 2).value


def _rel(a: float, b: float, ref: float) -> float:
    return abs(a - b) / max(1.0, abs(ref))


def check_unitary_invariance(q: MatrixQuadruple, A, B, tol: float = 1e-10) -> float:
    """Largest relative change of Phi and of each Phi_k under
    (X, Y, U, V) -> (AX, AY, A*U, A*V) and -> (XB, YB, UB*, VB*).
    """
    A, B = as_matrix(A), as_matrix(B)
    for name, m in (("A", A), ("B", B)):
        if m.shape != (q.d, q.d) or not is_unitary(m, tol):
            raise NotUnitary(f"{name} is not a {q.d}x{q.d} unitary")
    base = phi_matrix(q)
    moved = [
        MatrixQuadruple(A @ q.X, A @ q.Y, A.conj() @ q.U, A.conj() @ q.V),
        MatrixQuadruple(q.X @ B, q.Y @ B, q.U @ B.conj(), q.V @ B.conj()),
    ]
    worst = 0.0
    for m in moved:
        got = phi_matrix(m)
        worst = max(worst, _rel(got.phi, base.phi, base.phi))
        for g, b in zip(got.components(), base.components()):
            worst = max(worst, _rel(g, b, b))
    return worst
