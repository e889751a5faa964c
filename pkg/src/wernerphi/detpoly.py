"""D(X, Y) = det H(X, Y): identities, nonvanishing samples and the
continuation argument turning nonvanishing along a path into PD at its end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .biquadratic import NotUnitary
from .diagonal import DiagonalPair, is_generic
from .hmatrix import MoebiusParam, build_H
from .linalg import as_matrix, det_from_eigenvalues, eigvalsh, is_unitary, random_complex

ZERO_TOL = 1e-12
VERIFY_TOL = 1e-14
DISTRIBUTIONS = ("gaussian", "diag_perturbed", "lowrank_identity")


class GenericityLost(RuntimeError):
    pass


class CertificationInconclusive(RuntimeError):
    pass


def spectral_log_scale(w: np.ndarray) -> float:
    """log of ||H||_2 times the product of all |eigenvalues| but the smallest.

    |D| / scale is then |lambda|_min / ||H||_2, so a zero candidate is a
    matrix that is singular to working precision.
    """
    a = np.sort(np.abs(w))
    if a[-1] == 0:
        return -math.inf
    return float(np.log(a[-1]) + np.sum(np.log(a[1:])))


def gershgorin_log_scale(H: np.ndarray) -> float:
    """log of the product of all row Gershgorin bounds |h_ii| + sum_j!=i |h_ij|."""
    r = np.sum(np.abs(H), axis=1)
    if np.any(r == 0):
        return -math.inf
    return float(np.sum(np.log(r)))


@dataclass(frozen=True)
class DetRecord:
    d: int
    X: np.ndarray
    Y: np.ndarray
    value: float
    log_abs: float
    sign: int
    generic: bool
    log_scale: float
    lambda_min: float
    log_gershgorin: float

    @property
    def log_rel(self) -> float:
        """log(|D| / scale); -inf when D is exactly zero."""
        if self.log_scale == -math.inf:
            return -math.inf
        return self.log_abs - self.log_scale

    def is_zero_candidate(self, tol: float = ZERO_TOL) -> bool:
        return self.sign == 0 or self.log_rel < math.log(tol)


def detH(X, Y, generic_seed: int = 0) -> DetRecord:
    X, Y = as_matrix(X), as_matrix(Y)
    H = build_H(X, Y).H
    w = eigvalsh(H)
    det = det_from_eigenvalues(w)
    return DetRecord(
        d=X.shape[0],
        X=X,
        Y=Y,
        value=det.value,
        log_abs=det.log_abs,
        sign=det.sign,
        generic=is_generic(X, Y, generic_seed),
        log_scale=spectral_log_scale(w),
        lambda_min=float(w[0]),
        log_gershgorin=gershgorin_log_scale(H),
    )


@dataclass(frozen=True)
class DetIdentityReport:
    unitary_dev: float
    gl_dev: float
    gl_log_ratio: float
    expected_log_ratio: float
    singular_lambda: bool


def check_det_identities(X, Y, A, B, lam: MoebiusParam) -> DetIdentityReport:
    """Deviations of D(AXB, AYB) = D(X, Y) and
    D(aX + bY, cX + dY) = |ad - bc|^(2d^2) D(X, Y), both in natural-log space.

    For singular Lambda the mixed D must vanish; ``gl_dev`` is then
    |D| / scale of the mixed pair.
    """
    X, Y = as_matrix(X), as_matrix(Y)
    A, B = as_matrix(A), as_matrix(B)
    d = X.shape[0]
    for name, m in (("A", A), ("B", B)):
        if m.shape != (d, d) or not is_unitary(m):
            raise NotUnitary(f"{name} is not a {d}x{d} unitary")
    base = detH(X, Y)
    moved = detH(A @ X @ B, A @ Y @ B)
    unitary_dev = abs(moved.log_abs - base.log_abs)
    if moved.sign != base.sign:
        unitary_dev = math.inf

    mixed = detH(*lam.apply(X, Y))
    if lam.det == 0 or lam.is_singular():
        rel = 0.0 if mixed.sign == 0 else math.exp(mixed.log_rel)
        return DetIdentityReport(unitary_dev, rel, math.nan, math.nan, True)
    expected = 2 * d * d * math.log(abs(lam.det))
    ratio = mixed.log_abs - base.log_abs
    gl_dev = abs(ratio - expected)
    if mixed.sign != base.sign:
        gl_dev = math.inf
    return DetIdentityReport(unitary_dev, gl_dev, ratio, expected, False)


# --- sampling ------------------------------------------------------------

def sample_pair(d: int, distribution: str, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    if distribution == "gaussian":
        return random_complex((d, d), rng), random_complex((d, d), rng)
    if distribution == "diag_perturbed":
        eps = 0.1
        X = np.diag(random_complex(d, rng)) + eps * random_complex((d, d), rng)
        Y = np.diag(random_complex(d, rng)) + eps * random_complex((d, d), rng)
        return X, Y
    if distribution == "lowrank_identity":
        a, b, c, e = (random_complex((d, 1), rng) for _ in range(4))
        X = np.eye(d) + a @ b.conj().T
        Y = c @ e.conj().T + random_complex((d, 1), rng) @ random_complex((1, d), rng)
        return X, Y
    raise ValueError(f"unknown distribution {distribution!r}")


@dataclass
class DetSampleSummary:
    d: int
    n_samples: int
    n_generic: int
    n_excluded: int
    min_log_rel: float
    min_log_abs: float
    candidates: list = field(default_factory=list)
    confirmed: list = field(default_factory=list)

    @property
    def any_zero(self) -> bool:
        return bool(self.confirmed)


def reverify_zero(rec: DetRecord, tol: float = VERIFY_TOL) -> bool:
    """Second opinion on a zero candidate from singular values, at a tighter threshold."""
    s = sla.svdvals(build_H(rec.X, rec.Y).H)
    return s[0] == 0 or s[-1] < tol * s[0]


def sample_record(d: int, seed_seq: np.random.SeedSequence, distribution: str) -> DetRecord:
    rng = np.random.default_rng(seed_seq)
    X, Y = sample_pair(d, distribution, rng)
    return detH(X, Y)


def sample_conjecture5(d: int, n_samples: int, seed: int, mapper=map) -> tuple[DetSampleSummary, list]:
    """Draw ``n_samples`` pairs cycling through :data:`DISTRIBUTIONS`.

    Returns the summary and the per-sample ``(index, distribution, DetRecord)``
    list. Non-generic draws are excluded from the statistics.
    """
    if d < 3:
        raise ValueError("nonvanishing of D is only expected for d >= 3")
    children = np.random.SeedSequence(seed).spawn(n_samples)
    dists = [DISTRIBUTIONS[k % len(DISTRIBUTIONS)] for k in range(n_samples)]
    records = list(mapper(lambda a: sample_record(d, *a), zip(children, dists)))

    summary = DetSampleSummary(d, n_samples, 0, 0, math.inf, math.inf)
    rows = []
    for k, (dist, rec) in enumerate(zip(dists, records)):
        rows.append((k, dist, rec))
        if not rec.generic:
            summary.n_excluded += 1
            continue
        summary.n_generic += 1
        summary.min_log_rel = min(summary.min_log_rel, rec.log_rel)
        summary.min_log_abs = min(summary.min_log_abs, rec.log_abs)
        if rec.is_zero_candidate():
            summary.candidates.append(k)
            if reverify_zero(rec):
                summary.confirmed.append(k)
    return summary, rows


def sample_diagonal(d: int, n_samples: int, seed: int) -> list[DetRecord]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_samples):
        p = DiagonalPair.random(d, rng)
        out.append(detH(p.X, p.Y))
    return out


# --- continuation --------------------------------------------------------

@dataclass
class ContinuationPath:
    start: tuple[np.ndarray, np.ndarray]
    end: tuple[np.ndarray, np.ndarray]
    nodes: list  # corner points of the piecewise-linear path, t in [0, 1]
    samples: list = field(default_factory=list)  # (t, lambda_min, log|D|, generic)
    verdict: str = "inconclusive"
    retries: int = 0
    perturbed: bool = False
    max_depth: int = 0

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "retries": self.retries,
            "perturbed": self.perturbed,
            "max_depth": self.max_depth,
            "n_samples": len(self.samples),
            "samples": [
                {"t": t, "lambda_min": lm, "log_abs_D": la, "generic": g}
                for t, lm, la, g in self.samples
            ],
        }


def diagonal_start(d: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    while True:
        p = DiagonalPair.random(d, rng)
        if p.is_generic():
            return p.X, p.Y


def _point(nodes, t):
    for (t0, X0, Y0), (t1, X1, Y1) in zip(nodes, nodes[1:]):
        if t <= t1 or t1 == nodes[-1][0]:
            s = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            return (1 - s) * X0 + s * X1, (1 - s) * Y0 + s * Y1
    raise ValueError(t)


def _segment_breaks(nodes) -> list[float]:
    return [n[0] for n in nodes]


class _Walker:
    def __init__(self, nodes, max_depth, margin):
        self.nodes = nodes
        self.max_depth = max_depth
        self.margin = margin
        self.cache = {}
        self.deepest = 0

    def sample(self, t):
        if t not in self.cache:
            X, Y = _point(self.nodes, t)
            H = build_H(X, Y).H
            w = eigvalsh(H)
            det = det_from_eigenvalues(w)
            self.cache[t] = (H, float(w[0]), det.log_abs, is_generic(X, Y))
        return self.cache[t]

    def motion_bound(self, a, b) -> float:
        """Bound on ||H(s) - H(a)||_2 for s in [a, b] on one linear segment.

        With Z(s) linear, H(Z(s)) is quadratic in s and its curvature term
        is H(Z(b) - Z(a)).
        """
        Ha = self.sample(a)[0]
        Hb = self.sample(b)[0]
        Xa, Ya = _point(self.nodes, a)
        Xb, Yb = _point(self.nodes, b)
        curv = build_H(Xb - Xa, Yb - Ya).H
        return float(np.linalg.norm(Hb - Ha, 2) + 2 * np.linalg.norm(curv, 2))

    def interval(self, a, b, depth):
        self.deepest = max(self.deepest, depth)
        _, la, _, ga = self.sample(a)
        _, lb, _, gb = self.sample(b)
        if not (ga and gb):
            raise GenericityLost(f"non-generic point on [{a}, {b}]")
        if la <= 0 or lb <= 0:
            return False
        if min(la, lb) > self.margin * self.motion_bound(a, b):
            return True
        if depth >= self.max_depth:
            raise CertificationInconclusive(f"refinement depth {depth} reached on [{a}, {b}]")
        m = 0.5 * (a + b)
        return self.interval(a, m, depth + 1) and self.interval(m, b, depth + 1)


def certify_psd_continuation(
    X1,
    Y1,
    steps: int = 32,
    seed: int = 0,
    max_retries: int = 5,
    max_depth: int = 20,
    margin: float = 10.0,
) -> ContinuationPath:
    """Certify H(X1, Y1) positive definite by walking from a generic
    diagonal pair, where H is PD, while keeping lambda_min provably positive.

    Each interval [a, b] is accepted when min(lambda_min(a), lambda_min(b))
    exceeds ``margin`` times a bound on how far any eigenvalue can move
    inside it (Weyl); otherwise it is bisected.
    """
    X1, Y1 = as_matrix(X1), as_matrix(Y1)
    d = X1.shape[0]
    if not is_generic(X1, Y1):
        raise GenericityLost("target pair is not generic")
    ss = np.random.SeedSequence(seed)
    attempts = ss.spawn(max_retries + 1)

    last_error = None
    for attempt, child in enumerate(attempts):
        rng = np.random.default_rng(child)
        X0, Y0 = diagonal_start(d, rng)
        nodes = [(0.0, X0, Y0), (1.0, X1, Y1)]
        perturbed = attempt == max_retries
        if perturbed:
            scale = 0.1 * (np.linalg.norm(X1) + np.linalg.norm(X0))
            Xm = 0.5 * (X0 + X1) + scale * random_complex((d, d), rng)
            Ym = 0.5 * (Y0 + Y1) + scale * random_complex((d, d), rng)
            nodes = [(0.0, X0, Y0), (0.5, Xm, Ym), (1.0, X1, Y1)]
        path = ContinuationPath((X0, Y0), (X1, Y1), nodes, retries=attempt, perturbed=perturbed)
        walker = _Walker(nodes, max_depth, margin)
        try:
            ok = True
            for s0, s1 in zip(_segment_breaks(nodes), _segment_breaks(nodes)[1:]):
                grid = np.linspace(s0, s1, max(2, round(steps * (s1 - s0)) + 1))
                for a, b in zip(grid, grid[1:]):
                    ok = ok and walker.interval(float(a), float(b), 0)
        except GenericityLost as exc:
            last_error = exc
            continue
        path.max_depth = walker.deepest
        path.samples = [
            (t, lm, la, g) for t, (_, lm, la, g) in sorted(walker.cache.items())
        ]
        path.verdict = "PD" if ok else "not_PD"
        return path
    raise GenericityLost(f"no generic path after {max_retries} retries: {last_error}")
