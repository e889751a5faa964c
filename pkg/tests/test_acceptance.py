"""Acceptance suite: ten criteria, each printing one PASS/FAIL line."""
import io
import math

import numpy as np
import pytest

from wernerphi.biquadratic import MatrixQuadruple
from wernerphi.cli import parse_config, run
from wernerphi.detpoly import check_det_identities, detH
from wernerphi.hmatrix import MoebiusParam, build_H, check_transform_AB, check_transform_lambda
from wernerphi.linalg import is_psd, random_complex, random_unitary
from wernerphi.runs import DRIVERS, four_way, sample_rng
from wernerphi.search import (
    SearchConfig,
    is_monotone_trace,
    minimize_one_copy,
    minimize_phi_alternating,
    monotonicity_report,
    scan_one_distill,
    sign_change,
)
from wernerphi.werner import WernerFamily, flip_operator, me_projector, partial_transpose, werner_pair


@pytest.fixture
def report(capsys):
    def _report(n, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail
    return _report


def drive(argv):
    cfg = parse_config(argv, {})
    recs = list(DRIVERS[cfg.command](cfg))
    return [r for r in recs if r["type"] == "record"], recs[-1]


def test_criterion_01_four_way_equality(report):
    worst = 0.0
    for d in (3, 4):
        for k in range(1000):
            q = MatrixQuadruple.random(d, sample_rng(2024 + d, k))
            vals = four_way(q)
            assert len(vals) == 5
            worst = max(worst, vals["max_rel_dev"])
    report(1, "four-way Phi equality, d=3,4 x 1000", worst <= 1e-9, f"max rel dev {worst:.2e}")


def test_criterion_02_structural_facts(report):
    worst = 0.0
    assert build_H(np.eye(3), np.zeros((3, 3))).order == 18
    for d in (2, 3, 4, 5):
        assert build_H(np.eye(d), np.eye(d)).order == 2 * d * d
        worst = max(worst, np.abs(partial_transpose(flip_operator(d), d) - d * me_projector(d)).max())
        for t in np.linspace(-1, 1, 21):
            rho, sigma = werner_pair(WernerFamily(d, float(t)))
            worst = max(worst, np.abs(partial_transpose(rho, d) - sigma).max())
    report(2, "order 2d^2, dP = PT(F), sigma = PT(rho)", worst <= 1e-12, f"max deviation {worst:.2e}")


def test_criterion_03_one_copy_threshold(report):
    grid_ok = True
    for d in (3, 4):
        for t in np.round(np.arange(-1, 1.0001, 0.01), 2):
            _, sigma = werner_pair(WernerFamily(d, float(t)))
            grid_ok &= bool(is_psd(sigma, 1e-12)) == (t <= 1 / d + 1e-12)
    cfg = SearchConfig(3, restarts=5, seed=0, mode="one_copy")
    grid = [round(0.3 + 0.01 * k, 2) for k in range(31)]
    scan = scan_one_distill(3, grid, cfg)
    bracket = sign_change(scan)
    witness = minimize_one_copy(3, 0.6, cfg).best_value
    ok = (grid_ok and bracket is not None and 0.5 <= bracket[0] and bracket[1] <= 0.51 + 1e-12
          and abs(witness + 0.2) <= 1e-6)
    report(3, "PPT boundary and one-copy sign change", ok,
           f"PPT grid {'ok' if grid_ok else 'mismatch'}, sign change in {bracket}, value at 0.6 = {witness:.9f}")


def test_criterion_04_diagonal_theorem(report):
    fails, worst_res = 0, 0.0
    for d in (3, 4, 5, 6):
        recs, summary = drive(["diag-verify", "--d", str(d), "--samples", "200", "--seed", "17"])
        assert len(recs) == 200
        for r in recs:
            ok = (r["generic"] and r["all_small_pd"] and r["big_pd"] and r["lambda_min_H"] > 0
                  and not r["violation"])
            fails += not ok
        worst_res = max(worst_res, max(r["residual"] for r in recs))
    report(4, "diagonal block decomposition, 200 pairs per d in 3..6", fails == 0,
           f"{fails} failures, max residual {worst_res:.2e}")


def test_criterion_05_covariance(report):
    worst_ab = worst_lam = 0.0
    for d in (3, 4):
        for k in range(200):
            rng = sample_rng(505 + d, k)
            X, Y = random_complex((d, d), rng), random_complex((d, d), rng)
            A, B = random_unitary(d, rng), random_unitary(d, rng)
            worst_ab = max(worst_ab, check_transform_AB(X, Y, A, B))
            worst_lam = max(worst_lam, check_transform_lambda(X, Y, MoebiusParam.random(rng)))
    ok = worst_ab <= 1e-10 and worst_lam <= 1e-10
    report(5, "H covariance under (A,B) and GL2 mixing", ok,
           f"AB incl. components {worst_ab:.2e}, mixing {worst_lam:.2e}")


def test_criterion_06_determinant_identities(report):
    log_zero = math.log(1e-9)
    worst_u = 0.0
    for k in range(100):
        rng = sample_rng(606, k)
        X, Y = random_complex((3, 3), rng), random_complex((3, 3), rng)
        r = check_det_identities(X, Y, random_unitary(3, rng), random_unitary(3, rng),
                                 MoebiusParam(1, 0, 0, 1))
        worst_u = max(worst_u, r.unitary_dev)
    rng = sample_rng(607, 0)
    X, Y = random_complex((3, 3), rng), random_complex((3, 3), rng)
    r = check_det_identities(X, Y, np.eye(3), np.eye(3), MoebiusParam(2, 0, 0, 1))
    log2_ratio = r.gl_log_ratio / math.log(2)

    def vanishes(rec):
        return rec.sign == 0 or rec.log_rel <= log_zero

    dependent = small = 0
    for k in range(100):
        rng = sample_rng(608, k)
        X = random_complex((3, 3), rng)
        c = complex(*rng.standard_normal(2))
        dependent += not vanishes(detH(X, c * X))
        for d in (1, 2):
            small += not vanishes(detH(random_complex((d, d), rng), random_complex((d, d), rng)))
    ok = worst_u <= 1e-6 and abs(log2_ratio - 18) <= 1e-6 and dependent == 0 and small == 0
    report(6, "determinant identities and vanishing", ok,
           f"unitary log dev {worst_u:.2e}, log2 ratio {log2_ratio:.9f}, "
           f"nonvanishing dependent {dependent}, nonvanishing d<=2 {small}")


def test_criterion_07_psd_scan(report):
    recs3, _ = drive(["psd-scan", "--d", "3", "--samples", "10000", "--seed", "7",
                      "--mode", "unrestricted", "--minor-order", "0"])
    recs4, _ = drive(["psd-scan", "--d", "4", "--samples", "1000", "--seed", "7",
                      "--mode", "unrestricted", "--minor-order", "0"])
    minor, _ = drive(["psd-scan", "--d", "3", "--samples", "1000", "--seed", "8",
                      "--mode", "unrestricted", "--minor-order", "10"])
    viol = sum(r["violation"] for r in recs3 + recs4 + minor)
    worst = min(r["lambda_min"] / r["norm_H"] for r in recs3 + recs4)
    worst_minor = min(r["lambda_min_minor"] / r["norm_H"] for r in minor)
    ok = viol == 0 and len(recs3) == 10000 and len(recs4) == 1000 and worst_minor >= -1e-9
    report(7, "lambda_min(H) >= -1e-9 ||H||, 10^4 (d=3) and 10^3 (d=4)", ok,
           f"{viol} violations, min lambda/||H|| {worst:.2e}, order-10 minor {worst_minor:.2e}")


def test_criterion_08_det_nonvanishing_and_continuation(report):
    recs, summary = drive(["det-sample", "--d", "3", "--samples", "1000", "--seed", "8"])
    generic = [r for r in recs if r["generic"]]
    dists = {r["distribution"] for r in generic}
    candidates = sum(r["zero_candidate"] for r in generic)
    paths, _ = drive(["continuation", "--d", "3", "--samples", "50", "--seed", "8"])
    certified = sum(r.get("verdict") == "PD" and r["consistent"] and not r["violation"] for r in paths)
    ok = len(generic) == 1000 and len(dists) == 3 and candidates == 0 and certified == 50
    report(8, "no D-zero candidates; continuation certificates", ok,
           f"{len(generic)} generic pairs over {len(dists)} distributions, {candidates} candidates, "
           f"min log rel {summary['min_log_rel']:.2f}, {certified}/50 paths PD")


def test_criterion_09_search(report):
    out = minimize_phi_alternating(SearchConfig(3, restarts=100, seed=9))
    monotone = all(is_monotone_trace(r.trace) for r in out.restarts)
    cfg = SearchConfig(3, restarts=5, seed=9, mode="one_copy")
    scan = scan_one_distill(3, [round(0.3 + 0.01 * k, 2) for k in range(31)], cfg)
    scan_ok = monotonicity_report(scan)
    ok = out.best_value >= -1e-8 and monotone and scan_ok
    report(9, "alternating minimization, 100 restarts", ok,
           f"best {out.best_value:.2e}, traces monotone {monotone}, t-scan monotone {scan_ok}")


COMMANDS = {
    "identities": ["--samples", "5"],
    "psd-scan": ["--samples", "5"],
    "diag-verify": ["--samples", "5"],
    "det-sample": ["--samples", "6"],
    "search": ["--restarts", "3", "--max-iters", "40"],
    "onedistill-scan": ["--restarts", "2", "--t-min", "0.48", "--t-max", "0.52", "--t-step", "0.02"],
    "oracle-crosscheck": ["--samples", "5"],
    "continuation": ["--samples", "1"],
}


def records_only(argv):
    buf = io.StringIO()
    run(parse_config(argv, {}), buf)
    return [line for line in buf.getvalue().splitlines() if not line.startswith('{"type": "header"')]


def test_criterion_10_determinism(report):
    differing = []
    for command, extra in COMMANDS.items():
        argv = [command, "--d", "3", "--seed", "10", *extra]
        a, b = records_only(argv), records_only(argv + ["--threads", "2"])
        if a != b or len(a) < 2:
            differing.append(command)
    report(10, "byte-identical records on rerun", not differing,
           f"{len(COMMANDS) - len(differing)}/{len(COMMANDS)} commands reproducible"
           + (f", differing: {differing}" if differing else ""))
