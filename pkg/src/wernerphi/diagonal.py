"""Block structure of H(X, Y) for diagonal X = diag(lam), Y = diag(mu).

After a simultaneous row/column permutation H splits into d^2 - d blocks
of order 2 (index pairs p, p + d^2 with p = (i-1)d + j, i != j, one-based)
and one block B of order 2d on the indices (i-1)d + i and (i-1)d + i + d^2.
Dropping the rank-one H4 part, B splits further into d blocks G(i).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hmatrix import build_H
from .linalg import as_matrix, eigvalsh, fro_scale, random_complex

PD_TOL = 1e-10
DECOMP_TOL = 1e-10
GRAM_TOL = 1e-10
DET_TOL = 1e-10
TRIAL_PAIRS = ((1, 0), (0, 1), (1, 1), (1, -1), (1, 1j))
RANDOM_TRIALS = 20


class DecompositionMismatch(RuntimeError):
    pass


def is_generic(X, Y, seed: int = 0) -> bool:
    """X, Y linearly independent and det(aX + bY) != 0 for some (a, b).

    det(aX + bY) is a binary form of degree d; it is declared identically
    zero only if it vanishes at every fixed trial pair and at 20 seeded
    random pairs.
    """
    X, Y = as_matrix(X), as_matrix(Y)
    d = X.shape[0]
    nx, ny = np.linalg.norm(X), np.linalg.norm(Y)
    if nx == 0 or ny == 0:
        return False
    gram = np.array([[np.vdot(X, X), np.vdot(X, Y)], [np.vdot(Y, X), np.vdot(Y, Y)]])
    if abs(np.linalg.det(gram)) <= GRAM_TOL * (nx * ny) ** 2:
        return False
    threshold = DET_TOL * (nx + ny) ** d
    rng = np.random.default_rng(seed)
    trials = [np.array(p, dtype=complex) for p in TRIAL_PAIRS]
    trials += list(random_complex((RANDOM_TRIALS, 2), rng))
    for ab in trials:
        a, b = ab / np.linalg.norm(ab)
        if abs(np.linalg.det(a * X + b * Y)) >= threshold:
            return True
    return False


@dataclass(frozen=True)
class DiagonalPair:
    lam: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=complex).ravel()
        mu = np.asarray(self.mu, dtype=complex).ravel()
        if lam.size != mu.size:
            raise ValueError("lam and mu must have the same length")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @property
    def d(self) -> int:
        return self.lam.size

    @property
    def X(self) -> np.ndarray:
        return np.diag(self.lam)

    @property
    def Y(self) -> np.ndarray:
        return np.diag(self.mu)

    def is_generic(self) -> bool:
        """Exact rule: lam, mu independent and no k with lam_k = mu_k = 0."""
        if np.any((self.lam == 0) & (self.mu == 0)):
            return False
        m = np.stack([self.lam, self.mu])
        s = np.linalg.svd(m, compute_uv=False)
        return bool(s[1] > GRAM_TOL * s[0])

    @classmethod
    def random(cls, d: int, rng: np.random.Generator) -> "DiagonalPair":
        return cls(random_complex(d, rng), random_complex(d, rng))


def _terms(pair: DiagonalPair) -> np.ndarray:
    """Per-k rank-one matrices [[|lam|^2, lam* mu], [lam mu*, |mu|^2]]."""
    w = np.stack([pair.lam.conj(), pair.mu.conj()], axis=1)
    return np.einsum("ka,kb->kab", w, w.conj())


def _check_index(pair: DiagonalPair, *idx: int):
    for i in idx:
        if not 1 <= i <= pair.d:
            raise IndexError(f"index {i} out of range 1..{pair.d}")


def small_block(pair: DiagonalPair, i: int, j: int) -> np.ndarray:
    """H(p), p = (i-1)d + j, indices one-based, i != j."""
    _check_index(pair, i, j)
    if i == j:
        raise IndexError("small blocks need i != j")
    c = np.ones(pair.d)
    c[[i - 1, j - 1]] = 0.5
    return np.einsum("k,kab->ab", c, _terms(pair))


def sub_block_G(pair: DiagonalPair, i: int) -> np.ndarray:
    """G(i): sum of the rank-one terms over k != i (one-based i)."""
    _check_index(pair, i)
    t = _terms(pair)
    return t.sum(axis=0) - t[i - 1]


@dataclass
class BlockDecomposition:
    d: int
    permutation: np.ndarray
    small_blocks: list = field(default_factory=list)  # (p, 2x2), p one-based
    weights: list = field(default_factory=list)  # c_k vector per small block
    big_block: np.ndarray | None = None
    big_block_prime: np.ndarray | None = None
    sub_blocks: list = field(default_factory=list)  # G(1) .. G(d)
    residual: float = 0.0
    norm_H: float = 0.0

    def direct_sum(self) -> np.ndarray:
        n = 2 * self.d * self.d
        out = np.zeros((n, n), dtype=complex)
        pos = 0
        for _, b in self.small_blocks:
            out[pos : pos + 2, pos : pos + 2] = b
            pos += 2
        out[pos:, pos:] = self.big_block
        return out


def permutation(d: int) -> np.ndarray:
    """Zero-based index order: small-block pairs by p, then the big block."""
    n2 = d * d
    order = []
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            if i != j:
                p = (i - 1) * d + j
                order += [p - 1, p - 1 + n2]
    diag = [(i - 1) * d + i - 1 for i in range(1, d + 1)]
    order += diag + [k + n2 for k in diag]
    return np.array(order)


def decompose(pair: DiagonalPair) -> BlockDecomposition:
    d = pair.d
    n2 = d * d
    h = build_H(pair.X, pair.Y)
    perm = permutation(d)
    ph = h.H[np.ix_(perm, perm)]
    norm_h = float(np.linalg.norm(h.H))
    tol = DECOMP_TOL * fro_scale(h.H)

    out = BlockDecomposition(d=d, permutation=perm, norm_H=norm_h)
    pos = 0
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            if i == j:
                continue
            block = ph[pos : pos + 2, pos : pos + 2]
            formula = small_block(pair, i, j)
            if np.linalg.norm(block - formula) > tol:
                raise DecompositionMismatch(f"H(p) formula disagrees at (i, j) = ({i}, {j})")
            c = np.ones(d)
            c[[i - 1, j - 1]] = 0.5
            out.small_blocks.append(((i - 1) * d + j, block))
            out.weights.append(c)
            pos += 2
    out.big_block = ph[pos:, pos:]

    big_idx = perm[pos:]
    prime = (h.H1 - 0.5 * (h.H2 + h.H3))[np.ix_(big_idx, big_idx)]
    out.big_block_prime = prime
    for i in range(1, d + 1):
        sel = [i - 1, d + i - 1]
        g = prime[np.ix_(sel, sel)]
        if np.linalg.norm(g - sub_block_G(pair, i)) > tol:
            raise DecompositionMismatch(f"G({i}) formula disagrees")
        out.sub_blocks.append(g)

    out.residual = float(np.linalg.norm(ph - out.direct_sum()))
    if out.residual > tol:
        raise DecompositionMismatch(
            f"off-block residual {out.residual:.3e} exceeds {tol:.3e}"
        )
    return out


def g_direct_sum_residual(dec: BlockDecomposition) -> float:
    """|| P B' P^T - (+)_i G(i) || with P interleaving (i, d + i)."""
    d = dec.d
    order = [k for i in range(d) for k in (i, d + i)]
    permuted = dec.big_block_prime[np.ix_(order, order)]
    target = np.zeros_like(permuted)
    for i, g in enumerate(dec.sub_blocks):
        target[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = g
    return float(np.linalg.norm(permuted - target))


def is_pd(block: np.ndarray, tol: float = PD_TOL) -> tuple[bool, float]:
    lmin = float(eigvalsh(block)[0])
    return lmin > tol * max(float(np.linalg.norm(block)), np.finfo(float).tiny), lmin


@dataclass(frozen=True)
class TheoremReport:
    d: int
    generic: bool
    all_small_pd: bool
    big_pd: bool
    lambda_min_H: float
    min_block_eig: float
    residual: float
    norm_H: float

    @property
    def holds(self) -> bool:
        """PD everywhere if generic; PSD to 1e-10 * ||H|| otherwise."""
        if self.generic:
            return self.all_small_pd and self.big_pd and self.lambda_min_H > 0
        return self.lambda_min_H >= -PD_TOL * max(1.0, self.norm_H)


def verify_theorem(pair: DiagonalPair) -> TheoremReport:
    dec = decompose(pair)
    small = [is_pd(b) for _, b in dec.small_blocks]
    big_ok, big_min = is_pd(dec.big_block)
    lmin = float(eigvalsh(build_H(pair.X, pair.Y).H)[0])
    return TheoremReport(
        d=pair.d,
        generic=pair.is_generic(),
        all_small_pd=all(ok for ok, _ in small),
        big_pd=big_ok,
        lambda_min_H=lmin,
        min_block_eig=min([m for _, m in small] + [big_min]),
        residual=dec.residual,
        norm_H=dec.norm_H,
    )
