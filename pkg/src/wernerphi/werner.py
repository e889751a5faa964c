"""Werner states on a d x d system and the distillability test form.

States are non-normalized: ``rho = 1 - t F`` and ``sigma = 1 - t d P``.
The direct operator evaluation in :func:`eval_sigma_form` is the
reference every other formulation of the biquadratic form is checked
against.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .linalg import DimensionMismatch, as_matrix

RANK_TOL = 1e-9
IMAG_TOL = 1e-10


class UnsupportedCopies(ValueError):
    pass


class WernerClass(enum.Enum):
    SEPARABLE = "Separable"
    NPT_NOT_ONE_DISTILLABLE = "NptNotOneDistillable"
    ONE_DISTILLABLE = "OneDistillable"


@dataclass(frozen=True)
class WernerFamily:
    d: int
    t: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")
        if not -1.0 <= self.t <= 1.0:
            raise ValueError(f"t must lie in [-1, 1], got {self.t}")


@dataclass(frozen=True)
class PureStateVector:
    """Vector on k copies of C^d (x) C^d.

    Amplitudes are ordered copy by copy, ``|i1, j1, i2, j2, ...>``, with
    ``i`` on Alice's side and ``j`` on Bob's.
    """

    d: int
    copies: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != self.d ** (2 * self.copies):
            raise DimensionMismatch(
                f"{amps.size} amplitudes for d={self.d}, k={self.copies}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def coefficient_matrix(self) -> np.ndarray:
        """Reshape to the A^k | B^k bipartition, a d^k x d^k matrix."""
        k, d = self.copies, self.d
        t = self.amplitudes.reshape((d,) * (2 * k))
        alice = list(range(0, 2 * k, 2))
        bob = list(range(1, 2 * k, 2))
        return t.transpose(alice + bob).reshape(d**k, d**k)


def flip_operator(d: int) -> np.ndarray:
    """F = sum_ij |i,j><j,i|."""
    f = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            f[i * d + j, j * d + i] = 1.0
    return f


def me_projector(d: int) -> np.ndarray:
    """Projector onto (1/sqrt d) sum_i |i,i>."""
    me = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return np.outer(me, me.conj())


def partial_transpose(m, d: int) -> np.ndarray:
    """Transpose the second tensor factor: <i,j|M'|r,s> = <i,s|M|r,j>."""
    m = as_matrix(m)
    if m.shape != (d * d, d * d):
        raise DimensionMismatch(f"expected {d*d}x{d*d}, got {m.shape}")
    return m.reshape(d, d, d, d).transpose(0, 3, 2, 1).reshape(d * d, d * d)


def werner_pair(fam: WernerFamily) -> tuple[np.ndarray, np.ndarray]:
    d, t = fam.d, fam.t
    eye = np.eye(d * d, dtype=complex)
    rho = eye - t * flip_operator(d)
    sigma = eye - t * d * me_projector(d)
    return rho, sigma


def classify(fam: WernerFamily) -> WernerClass:
    # t = 1/d counts as separable, t = 1/2 as not 1-distillable.
    if fam.t <= 1.0 / fam.d:
        return WernerClass.SEPARABLE
    if fam.t > 0.5:
        return WernerClass.ONE_DISTILLABLE
    return WernerClass.NPT_NOT_ONE_DISTILLABLE


@dataclass(frozen=True)
class FormValue:
    value: float
    imag_residual: float

    def __float__(self):
        return self.value


def eval_sigma_form(psi: PureStateVector, fam: WernerFamily, k: int | None = None) -> FormValue:
    """<psi| sigma^{(x)k} |psi> with sigma^{(x)k} built explicitly."""
    k = psi.copies if k is None else k
    if k not in (1, 2):
        raise UnsupportedCopies(f"only k in {{1, 2}} is supported, got {k}")
    if psi.copies != k or psi.d != fam.d:
        raise DimensionMismatch(
            f"state has d={psi.d}, k={psi.copies}; family d={fam.d}, k={k}"
        )
    _, sigma = werner_pair(fam)
    op = sigma if k == 1 else np.kron(sigma, sigma)
    a = psi.amplitudes
    z = np.vdot(a, op @ a)
    scale = psi.norm_sq * float(np.linalg.norm(sigma, 2)) ** k
    residual = abs(z.imag)
    if residual > IMAG_TOL * max(scale, 1e-300):
        raise ArithmeticError(f"form has imaginary part {residual:.3e}")
    return FormValue(float(z.real), residual)


def schmidt_rank(psi: PureStateVector, tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(psi.coefficient_matrix(), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def rank2_vector(x, u, y, v) -> PureStateVector:
    """psi = psi1 + psi2 with psi1 = sum_ij |i, j, x_i, u_j>, psi2 likewise.

    ``x_i`` is column i of ``x``. The first copy carries (i, j), the
    second carries the column vectors, so the amplitude at
    ``|i, j, a, b>`` is ``x[a, i] u[b, j] + y[a, i] v[b, j]``.
    """
    mats = [as_matrix(m) for m in (x, u, y, v)]
    d = mats[0].shape[0]
    if any(m.shape != (d, d) for m in mats):
        raise DimensionMismatch("x, u, y, v must all be d x d")
    x, u, y, v = mats
    amps = np.einsum("ai,bj->ijab", x, u) + np.einsum("ai,bj->ijab", y, v)
    return PureStateVector(d, 2, amps.reshape(-1))


def rank2_single(x, u, y, v) -> PureStateVector:
    """One-copy vector x (x) u + y (x) v."""
    x, u, y, v = (np.asarray(a, dtype=complex).ravel() for a in (x, u, y, v))
    d = x.size
    if any(a.size != d for a in (u, y, v)):
        raise DimensionMismatch("x, u, y, v must share one length")
    return PureStateVector(d, 1, np.kron(x, u) + np.kron(y, v))
