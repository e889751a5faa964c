from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from wernerphi.biquadratic import phi_matrix
from wernerphi.search import (
    SearchConfig,
    is_monotone_trace,
    minimize_one_copy,
    minimize_phi_alternating,
    monotonicity_report,
    scan_one_distill,
    sign_change,
)


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(3, restarts=0)
    with pytest.raises(ValueError):
        SearchConfig(3, tol=0)
    with pytest.raises(ValueError):
        SearchConfig(3, mode="three_copy")


def test_two_copy_search_small():
    out = minimize_phi_alternating(SearchConfig(3, restarts=8, seed=1))
    assert out.best_value >= -1e-8
    assert len(out.restarts) == 8 and not out.candidates
    for r in out.restarts:
        assert is_monotone_trace(r.trace)
        assert r.value >= -1e-8
    q = out.best_quadruple
    assert abs(phi_matrix(q).phi - out.best_value) <= 1e-9


def test_fixed_point_eigenvalues_agree():
    out = minimize_phi_alternating(SearchConfig(3, restarts=4, seed=2))
    for r in out.restarts:
        assert r.lambda_H == pytest.approx(r.lambda_G, abs=1e-8)


def test_search_deterministic_across_threads():
    cfg = SearchConfig(3, restarts=6, seed=3, max_iters=50)
    a = minimize_phi_alternating(cfg)
    with ThreadPoolExecutor(3) as ex:
        b = minimize_phi_alternating(cfg, ex.map)
    assert [r.trace for r in a.restarts] == [r.trace for r in b.restarts]
    assert a.best_value == b.best_value


def test_one_copy_witness_values():
    cfg = SearchConfig(3, restarts=5, seed=0, mode="one_copy")
    assert minimize_one_copy(3, 0.6, cfg).best_value == pytest.approx(-0.2, abs=1e-6)
    assert minimize_one_copy(3, 0.3, cfg).best_value == pytest.approx(0.4, abs=1e-6)
    assert minimize_one_copy(3, 0.5, cfg).best_value >= -1e-8


def test_one_copy_scan_bracket_and_monotone():
    cfg = SearchConfig(3, restarts=3, seed=0, mode="one_copy")
    scan = scan_one_distill(3, [0.48, 0.49, 0.5, 0.51, 0.52], cfg)
    assert monotonicity_report(scan)
    assert sign_change(scan) == (0.5, 0.51)
    with pytest.raises(ValueError):
        scan_one_distill(3, [1.5], cfg)


def test_monotonicity_report_negative_control():
    assert monotonicity_report([(0.1, 1.0), (0.2, 0.5), (0.3, 0.5)])
    assert not monotonicity_report([(0.1, 1.0), (0.2, 0.5), (0.3, 0.6)])
    assert sign_change([(0.1, 1.0), (0.2, 0.5)]) is None
    assert not is_monotone_trace([1.0, 0.5, 0.7])
    assert is_monotone_trace([1.0, 0.5, 0.5])


def test_random_points_nonnegative_below_half():
    # Schmidt rank two vectors on two copies at t <= 1/2
    from wernerphi.werner import WernerFamily, eval_sigma_form, rank2_vector
    rng = np.random.default_rng(4)
    for t in (0.3, 0.4, 0.5):
        fam = WernerFamily(3, t)
        for _ in range(10):
            mats = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(4)]
            assert eval_sigma_form(rank2_vector(*mats), fam).value >= -1e-8
