"""Counterexample search by alternating smallest-eigenvector steps.

Phi is a hermitian form in (U, V) for fixed (X, Y) with matrix H(X, Y),
and in (X, Y) for fixed (U, V) with matrix G(U, V). Minimizing over one
block at unit norm is an eigenproblem, so alternating the two never
increases the objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .biquadratic import MatrixQuadruple, phi_matrix, phi_oracle
from .hmatrix import build_G_polarized, build_H, polarize
from .linalg import hermitian_eig, random_complex, unvec, vec
from .werner import WernerFamily, eval_sigma_form, rank2_single

CANDIDATE_TOL = 1e-6
MONOTONE_TOL = 1e-7


@dataclass(frozen=True)
class SearchConfig:
    d: int
    restarts: int = 100
    max_iters: int = 500
    tol: float = 1e-12
    seed: int = 0
    mode: str = "two_copy_phi"  # or "one_copy"
    t: float = 0.5

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.mode not in ("two_copy_phi", "one_copy"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class RestartResult:
    restart: int
    value: float
    point: tuple
    iterations: int
    trace: list
    lambda_H: float = math.nan
    lambda_G: float = math.nan


@dataclass
class SearchOutcome:
    best_value: float
    best_point: tuple
    iterations: int
    trace: list
    restarts: list = field(default_factory=list)
    candidates: list = field(default_factory=list)

    @property
    def best_quadruple(self) -> MatrixQuadruple:
        return MatrixQuadruple(*self.best_point)


def _split(z: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    n = d * d
    return unvec(z[:n], d), unvec(z[n:], d)


def _min_eigvec(M: np.ndarray) -> tuple[float, np.ndarray]:
    e = hermitian_eig(M)
    return float(e.eigenvalues[0]), e.eigenvectors[:, 0]


def _two_copy_start(d: int, restart: int, rng: np.random.Generator) -> np.ndarray:
    if restart % 2:
        # diagonal X with positive entries, Y unrestricted
        X = np.diag(rng.uniform(0.1, 1.0, d)).astype(complex)
        Y = random_complex((d, d), rng)
    else:
        X, Y = random_complex((d, d), rng), random_complex((d, d), rng)
    z = np.concatenate([vec(X), vec(Y)])
    return z / np.linalg.norm(z)


def _run_two_copy(cfg: SearchConfig, restart: int, seq: np.random.SeedSequence) -> RestartResult:
    d = cfg.d
    rng = np.random.default_rng(seq)
    X, Y = _split(_two_copy_start(d, restart, rng), d)
    trace = []
    prev = math.inf
    it = 0
    U = V = None
    lam_h = lam_g = math.nan
    for it in range(1, cfg.max_iters + 1):
        lam_h, w = _min_eigvec(build_H(X, Y).H)
        U, V = _split(w, d)
        trace.append(lam_h)
        lam_g, z = _min_eigvec(build_G_polarized(U, V))
        X, Y = _split(z, d)
        trace.append(lam_g)
        if prev - lam_g < cfg.tol:
            break
        prev = lam_g
    lam_h_final = float(hermitian_eig(build_H(X, Y).H).eigenvalues[0])
    return RestartResult(restart, trace[-1], (X, Y, U, V), it, trace, lam_h_final, lam_g)


def _serialize_point(point) -> list:
    return [[[float(v.real), float(v.imag)] for v in np.ravel(m, order="F")] for m in point]


def minimize_phi_alternating(cfg: SearchConfig, mapper=map) -> SearchOutcome:
    if cfg.mode != "two_copy_phi":
        raise ValueError("minimize_phi_alternating needs mode two_copy_phi")
    if cfg.d < 1:
        raise ValueError("d must be positive")
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    results = list(mapper(lambda a: _run_two_copy(cfg, *a), enumerate(seqs)))
    best = min(results, key=lambda r: (r.value, r.restart))
    out = SearchOutcome(best.value, best.point, best.iterations, best.trace, results)
    for r in results:
        if r.value < -CANDIDATE_TOL:
            q = MatrixQuadruple(*r.point)
            check = phi_oracle(q) if cfg.d <= 5 else phi_matrix(q).phi
            out.candidates.append(
                {"restart": r.restart, "value": r.value, "recheck": check,
                 "point": _serialize_point(r.point)}
            )
    return out


# --- one copy --------------------------------------------------------------

def _orthonormal_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rewrite sum_c a_c (x) b_c with orthonormal a-columns; psi is unchanged."""
    q, r = np.linalg.qr(a)
    return q, b @ r.T


def _one_copy_block(fam: WernerFamily, frozen: np.ndarray, free_first: bool) -> np.ndarray:
    """Matrix of z -> <psi|sigma|psi> where z stacks the free pair.

    ``frozen`` holds the orthonormal pair (as columns) of the other side.
    """
    d = fam.d

    def form(zs):
        out = []
        for z in zs:
            f0, f1 = z[:d], z[d:]
            if free_first:
                psi = rank2_single(f0, frozen[:, 0], f1, frozen[:, 1])
            else:
                psi = rank2_single(frozen[:, 0], f0, frozen[:, 1], f1)
            out.append(eval_sigma_form(psi, fam, 1).value)
        return np.array(out)

    return polarize(form, 2 * d)


def _run_one_copy(fam: WernerFamily, cfg: SearchConfig, seq: np.random.SeedSequence) -> RestartResult:
    d = fam.d
    rng = np.random.default_rng(seq)
    A = random_complex((d, 2), rng)  # columns x, y
    B = random_complex((d, 2), rng)  # columns u, v
    trace = []
    prev = math.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        A, B = _orthonormal_pair(A, B)
        lam_b, w = _min_eigvec(_one_copy_block(fam, A, free_first=False))
        B = np.stack([w[:d], w[d:]], axis=1)
        trace.append(lam_b)
        B, A = _orthonormal_pair(B, A)
        lam_a, w = _min_eigvec(_one_copy_block(fam, B, free_first=True))
        A = np.stack([w[:d], w[d:]], axis=1)
        trace.append(lam_a)
        if prev - lam_a < cfg.tol:
            break
        prev = lam_a
    return RestartResult(0, trace[-1], (A[:, 0], B[:, 0], A[:, 1], B[:, 1]), it, trace)


def minimize_one_copy(d: int, t: float, cfg: SearchConfig, seed_seq=None, mapper=map) -> SearchOutcome:
    """min <psi|sigma_W(t)|psi> / <psi|psi> over psi = x(x)u + y(x)v."""
    fam = WernerFamily(d, t)
    root = seed_seq if seed_seq is not None else np.random.SeedSequence(cfg.seed)
    seqs = root.spawn(cfg.restarts)
    results = list(mapper(lambda s: _run_one_copy(fam, cfg, s), seqs))
    for k, r in enumerate(results):
        r.restart = k
    best = min(results, key=lambda r: (r.value, r.restart))
    return SearchOutcome(best.value, best.point, best.iterations, best.trace, results)


def scan_one_distill(d: int, t_grid, cfg: SearchConfig, mapper=map) -> list[tuple[float, float]]:
    """Per-t minimum of the normalized one-copy form over Schmidt rank <= 2."""
    t_grid = [float(t) for t in t_grid]
    if any(not -1 <= t <= 1 for t in t_grid):
        raise ValueError("t values must lie in [-1, 1]")
    seqs = np.random.SeedSequence(cfg.seed).spawn(len(t_grid))
    return [
        (t, minimize_one_copy(d, t, cfg, s, mapper).best_value)
        for t, s in zip(t_grid, seqs)
    ]


def monotonicity_report(scan, tol: float = MONOTONE_TOL) -> bool:
    """True iff the minima never increase (beyond ``tol``) as t grows."""
    values = [v for _, v in scan]
    return all(b <= a + tol for a, b in zip(values, values[1:]))


def sign_change(scan, tol: float = 1e-8) -> tuple[float, float] | None:
    """First grid interval (t_prev, t] where the minimum turns negative."""
    for (t0, v0), (t1, v1) in zip(scan, scan[1:]):
        if v0 >= -tol and v1 < -tol:
            return t0, t1
    return None


def is_monotone_trace(trace, tol: float = 1e-12) -> bool:
    scale = max(1.0, max(abs(v) for v in trace))
    return all(b <= a + tol * scale for a, b in zip(trace, trace[1:]))
