"""Batch drivers behind the command line.

Every driver is a generator of plain-dict records and finishes with one
``{"type": "summary", ...}`` record. Records carry ``violation`` so the
caller can decide the exit code without knowing the command.
"""

from __future__ import annotations

import math
from typing import Callable, Iterator

import numpy as np

from .biquadratic import MatrixQuadruple, check_unitary_invariance, phi_matrix, phi_oracle, phi_vector
from .detpoly import (
    DISTRIBUTIONS,
    GenericityLost,
    CertificationInconclusive,
    certify_psd_continuation,
    check_det_identities,
    detH,
    reverify_zero,
    sample_pair,
)
from .diagonal import DiagonalPair, DecompositionMismatch, is_generic, verify_theorem
from .hmatrix import (
    MoebiusParam,
    build_H,
    check_transform_AB,
    check_transform_lambda,
    quadratic_eval,
)
from .linalg import eigvalsh, matrix_to_json, random_complex, random_unitary
from .search import (
    CANDIDATE_TOL,
    SearchConfig,
    minimize_phi_alternating,
    monotonicity_report,
    scan_one_distill,
    sign_change,
)

DEFAULT_TOLERANCES = {
    "phi": 1e-9,  # four-way equality, relative
    "invariance": 1e-10,  # unitary invariance of Phi
    "ab": 1e-10,  # H(AXB, AYB) covariance
    "lambda": 1e-10,  # H under GL2 mixing
    "det_log": 1e-6,  # determinant identities, log space
    "psd": 1e-9,  # lambda_min >= -tol * ||H||
    "decomp": 1e-10,
    "search": 1e-8,
    "monotone": 1e-7,
    "zero": 1e-12,
}

Mapper = Callable


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per (seed, index); results do not depend on scheduling."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _rel_spread(values) -> float:
    ref = max(1.0, max(abs(v) for v in values))
    return (max(values) - min(values)) / ref


def _summary(command: str, violations: int, message: str, **extra) -> dict:
    return {"type": "summary", "command": command, "violations": violations,
            "message": message, **extra}


# --- oracle-crosscheck -------------------------------------------------------

def four_way(q: MatrixQuadruple) -> dict:
    vals = {
        "phi_vector": phi_vector(q).phi,
        "phi_matrix": phi_matrix(q).phi,
        "quadratic_eval": quadratic_eval(build_H(q.X, q.Y), q.U, q.V),
    }
    if q.d <= 5:
        vals["phi_oracle"] = phi_oracle(q)
    vals["max_rel_dev"] = _rel_spread(list(vals.values()))
    return vals


def oracle_crosscheck(cfg, mapper: Mapper = map) -> Iterator[dict]:
    tol = cfg.tolerances["phi"]

    def one(k):
        q = MatrixQuadruple.random(cfg.d, sample_rng(cfg.seed, k))
        return k, four_way(q), q

    worst, bad = 0.0, 0
    for k, vals, q in mapper(one, range(cfg.samples)):
        violation = vals["max_rel_dev"] > tol
        worst = max(worst, vals["max_rel_dev"])
        bad += violation
        rec = {"type": "record", "seed": cfg.seed, "index": k, "d": cfg.d, **vals,
               "violation": violation}
        if violation:
            rec["quadruple"] = q.to_json()
        yield rec
    yield _summary("oracle-crosscheck", bad,
                   f"max relative deviation {worst:.3e} over {cfg.samples} quadruples (tol {tol:g})",
                   max_rel_dev=worst)


# --- identities --------------------------------------------------------------

def identity_sample(d: int, rng: np.random.Generator) -> dict:
    q = MatrixQuadruple.random(d, rng)
    A, B = random_unitary(d, rng), random_unitary(d, rng)
    lam = MoebiusParam.random(rng)
    det = check_det_identities(q.X, q.Y, A, B, lam) if d >= 3 else None
    return {
        "invariance": check_unitary_invariance(q, A, B),
        "ab": check_transform_AB(q.X, q.Y, A, B),
        "lambda": check_transform_lambda(q.X, q.Y, lam),
        "det_unitary": det.unitary_dev if det else None,
        "det_gl": det.gl_dev if det else None,
    }


def identities(cfg, mapper: Mapper = map) -> Iterator[dict]:
    tol = cfg.tolerances
    limits = {"invariance": tol["invariance"], "ab": tol["ab"], "lambda": tol["lambda"],
              "det_unitary": tol["det_log"], "det_gl": tol["det_log"]}
    worst = dict.fromkeys(limits, 0.0)
    bad = 0

    def one(k):
        return k, identity_sample(cfg.d, sample_rng(cfg.seed, k))

    for k, res in mapper(one, range(cfg.samples)):
        failed = [n for n, lim in limits.items() if res[n] is not None and not res[n] <= lim]
        for n in limits:
            if res[n] is not None:
                worst[n] = max(worst[n], res[n])
        bad += bool(failed)
        yield {"type": "record", "seed": cfg.seed, "index": k, "d": cfg.d, **res,
               "failed": failed, "violation": bool(failed)}
    parts = ", ".join(f"{n} {v:.2e}" for n, v in worst.items())
    yield _summary("identities", bad, f"worst residuals: {parts}", worst=worst)


# --- psd-scan ----------------------------------------------------------------

def psd_sample(d: int, rng: np.random.Generator, diagonal_x: bool, minor_order: int | None) -> dict:
    if diagonal_x:
        X = np.diag(rng.uniform(0.0, 1.0, d)).astype(complex)
    else:
        X = random_complex((d, d), rng)
    Y = random_complex((d, d), rng)
    H = build_H(X, Y).H
    norm = float(np.linalg.norm(H))
    out = {"lambda_min": float(eigvalsh(H)[0]), "norm_H": norm}
    if minor_order:
        out["lambda_min_minor"] = float(eigvalsh(H[:minor_order, :minor_order])[0])
    return out


def psd_scan(cfg, mapper: Mapper = map) -> Iterator[dict]:
    tol = cfg.tolerances["psd"]
    d = cfg.d
    modes = ["unrestricted", "diagonal"] if cfg.mode == "both" else [cfg.mode]
    minor = cfg.minor_order if cfg.minor_order and cfg.minor_order <= 2 * d * d else None
    counts = dict.fromkeys(modes, 0)
    worst = math.inf
    if d <= 2:
        yield {"type": "warning",
               "message": f"det H(X, Y) vanishes identically for d = {d}; H is PSD but never PD"}

    for m_idx, mode in enumerate(modes):
        def one(k, mode=mode, m_idx=m_idx):
            rng = sample_rng(cfg.seed, m_idx * 10**9 + k)
            return k, psd_sample(d, rng, mode == "diagonal", minor)

        for k, res in mapper(one, range(cfg.samples)):
            limit = -tol * res["norm_H"]
            violation = res["lambda_min"] < limit
            if minor:
                violation = violation or res["lambda_min_minor"] < limit
            counts[mode] += violation
            worst = min(worst, res["lambda_min"] / max(res["norm_H"], 1e-300))
            yield {"type": "record", "seed": cfg.seed, "index": k, "mode": mode, "d": d,
                   **res, "violation": violation}
    total = sum(counts.values())
    msg = f"min lambda_min/||H|| = {worst:.3e}; violations {counts}"
    if d <= 2:
        msg += f" (warning: D identically 0 at d = {d})"
    yield _summary("psd-scan", total, msg, violations_by_mode=counts,
                   modes_agree=len(set(counts.values())) == 1)


# --- diag-verify -------------------------------------------------------------

def diag_verify(cfg, mapper: Mapper = map) -> Iterator[dict]:
    tol = cfg.tolerances["decomp"]

    def one(k):
        rng = sample_rng(cfg.seed, k)
        pair = DiagonalPair.random(cfg.d, rng)
        try:
            return k, pair, verify_theorem(pair), None
        except DecompositionMismatch as exc:
            return k, pair, None, str(exc)

    bad = 0
    for k, pair, rep, err in mapper(one, range(cfg.samples)):
        if rep is None:
            bad += 1
            yield {"type": "record", "seed": cfg.seed, "index": k, "d": cfg.d,
                   "error": err, "violation": True}
            continue
        violation = not rep.holds or rep.residual > tol * max(1.0, rep.norm_H)
        bad += violation
        yield {"type": "record", "seed": cfg.seed, "index": k, "d": cfg.d,
               "generic": rep.generic, "lambda_min_H": rep.lambda_min_H,
               "min_block_eig": rep.min_block_eig, "residual": rep.residual,
               "all_small_pd": rep.all_small_pd, "big_pd": rep.big_pd,
               "violation": violation}
    yield _summary("diag-verify", bad, f"{cfg.samples - bad}/{cfg.samples} diagonal pairs consistent")


# --- det-sample --------------------------------------------------------------

def det_sample(cfg, mapper: Mapper = map) -> Iterator[dict]:
    tol = cfg.tolerances["zero"]
    d = cfg.d

    def one(k):
        dist = DISTRIBUTIONS[k % len(DISTRIBUTIONS)]
        X, Y = sample_pair(d, dist, sample_rng(cfg.seed, k))
        return k, dist, detH(X, Y)

    bad = n_generic = 0
    min_rel = math.inf
    if d <= 2:
        yield {"type": "warning", "message": f"D vanishes identically for d = {d}; zero records expected"}
    for k, dist, rec in mapper(one, range(cfg.samples)):
        candidate = rec.generic and rec.is_zero_candidate(tol)
        confirmed = candidate and reverify_zero(rec)
        if rec.generic:
            n_generic += 1
            min_rel = min(min_rel, rec.log_rel)
        violation = bool(confirmed) and d >= 3
        bad += violation
        out = {"type": "record", "seed": cfg.seed, "index": k, "d": d, "distribution": dist,
               "generic": rec.generic, "value": rec.value, "log_abs": rec.log_abs,
               "sign": rec.sign, "log_rel": rec.log_rel, "lambda_min": rec.lambda_min,
               "zero_candidate": bool(candidate), "violation": violation}
        if candidate:
            out["X"], out["Y"] = matrix_to_json(rec.X), matrix_to_json(rec.Y)
        yield out
    yield _summary("det-sample", bad,
                   f"{n_generic} generic pairs, min log(|D|/scale) = {min_rel:.3f}, "
                   f"{bad} confirmed zero candidates",
                   n_generic=n_generic, min_log_rel=min_rel)


# --- search ------------------------------------------------------------------

def search(cfg, mapper: Mapper = map) -> Iterator[dict]:
    tol = cfg.tolerances["search"]
    scfg = SearchConfig(cfg.d, cfg.restarts, cfg.max_iters, cfg.search_tol, cfg.seed)
    out = minimize_phi_alternating(scfg, mapper)
    bad = 0
    for r in out.restarts:
        violation = r.value < -tol
        bad += violation
        yield {"type": "record", "restart": r.restart, "value": r.value,
               "iterations": r.iterations, "lambda_H": r.lambda_H, "lambda_G": r.lambda_G,
               "trace": r.trace, "violation": violation}
    X, Y, U, V = out.best_point
    yield _summary(
        "search", bad,
        f"best normalized Phi = {out.best_value:.3e} over {cfg.restarts} restarts",
        best_value=out.best_value,
        best_point={k: matrix_to_json(m) for k, m in zip("XYUV", (X, Y, U, V))},
        n_candidates=len(out.candidates),
        candidates=out.candidates,
        candidate_tol=CANDIDATE_TOL,
    )


def onedistill_scan(cfg, mapper: Mapper = map) -> Iterator[dict]:
    n = int(round((cfg.t_max - cfg.t_min) / cfg.t_step)) + 1
    grid = [round(cfg.t_min + k * cfg.t_step, 12) for k in range(n)]
    scfg = SearchConfig(cfg.d, cfg.restarts, cfg.max_iters, cfg.search_tol, cfg.seed, mode="one_copy")
    scan = scan_one_distill(cfg.d, grid, scfg, mapper)
    for t, v in scan:
        yield {"type": "record", "t": t, "min_value": v, "violation": False}
    monotone = monotonicity_report(scan, cfg.tolerances["monotone"])
    bracket = sign_change(scan, cfg.tolerances["search"])
    expected = bracket is None if grid[-1] <= 0.5 else (
        bracket is not None and bracket[0] < 0.5 + 1e-12 and bracket[1] > 0.5
    )
    bad = int(not monotone) + int(not expected)
    if bad:
        yield {"type": "record", "check": "threshold", "monotone": monotone,
               "sign_change": bracket, "violation": True}
    yield _summary("onedistill-scan", bad,
                   f"monotone={monotone}, sign change in {bracket}",
                   monotone=monotone, sign_change=bracket)


# --- continuation ------------------------------------------------------------

def continuation(cfg, mapper: Mapper = map) -> Iterator[dict]:
    def one(k):
        rng = sample_rng(cfg.seed, k)
        while True:
            X, Y = random_complex((cfg.d, cfg.d), rng), random_complex((cfg.d, cfg.d), rng)
            if is_generic(X, Y):
                break
        try:
            path = certify_psd_continuation(X, Y, steps=cfg.steps, seed=cfg.seed * 7919 + k)
        except (GenericityLost, CertificationInconclusive) as exc:
            return k, None, type(exc).__name__ + ": " + str(exc), None
        direct = float(eigvalsh(build_H(X, Y).H)[0])
        return k, path, None, direct

    bad = 0
    for k, path, err, direct in mapper(one, range(cfg.samples)):
        if path is None:
            bad += 1
            yield {"type": "record", "seed": cfg.seed, "index": k, "error": err, "violation": True}
            continue
        consistent = path.verdict != "PD" or direct > 0
        violation = path.verdict != "PD" or not consistent
        bad += violation
        yield {"type": "record", "seed": cfg.seed, "index": k, "d": cfg.d,
               "lambda_min_direct": direct, "consistent": consistent,
               **path.to_json(), "violation": violation}
    yield _summary("continuation", bad, f"{cfg.samples - bad}/{cfg.samples} targets certified PD")


DRIVERS = {
    "identities": identities,
    "psd-scan": psd_scan,
    "diag-verify": diag_verify,
    "det-sample": det_sample,
    "search": search,
    "onedistill-scan": onedistill_scan,
    "oracle-crosscheck": oracle_crosscheck,
    "continuation": continuation,
}
