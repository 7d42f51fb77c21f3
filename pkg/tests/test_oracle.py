import numpy as np
import pytest

from pogorelov_ma.errors import ContractViolation, NonConvergenceError
from pogorelov_ma.geometry import laguerre_areas, mc_area
from pogorelov_ma.harness import REFERENCE_HEIGHTS
from pogorelov_ma.oracle import oracle_vs_scheme, pogorelov_solve
from pogorelov_ma.transport import DiracMeasure


def test_single_dirac():
    res = pogorelov_solve(DiracMeasure([(0.2, 0.1)], [np.pi]))
    assert res.heights.tolist() == [0.0] and res.max_area_error == 0.0


def test_three_dirac_printed_areas(three_dirac):
    res = pogorelov_solve(three_dirac)
    areas = laguerre_areas(three_dirac.locations, res.heights)
    assert np.allclose(areas, [1.17810586, 0.78540476, 1.17810586], atol=1e-7)
    assert np.allclose(res.heights, 0.0, atol=1e-6)


@pytest.mark.xfail(strict=True, reason="printed weights are 8.6e-6 off the equal-height areas")
def test_three_dirac_equal_heights(three_dirac):
    assert np.allclose(pogorelov_solve(three_dirac).heights, 0.0, atol=1e-8)


def test_three_dirac_exact_areas_give_equal_heights(three_dirac):
    exact = DiracMeasure(three_dirac.locations, [3 * np.pi / 8, np.pi / 4, 3 * np.pi / 8])
    assert np.allclose(pogorelov_solve(exact).heights, 0.0, atol=1e-8)


def test_five_dirac_pattern(five_dirac):
    res = pogorelov_solve(five_dirac)
    assert np.allclose(res.heights, [0.2, 0.2, 0.2, 0.0, 0.0], atol=1e-5)


def test_ten_dirac_values(ten_dirac):
    res = pogorelov_solve(ten_dirac)
    ref = REFERENCE_HEIGHTS["ten_dirac"]
    assert np.allclose(res.heights, ref - ref.min(), atol=1e-6)


def test_areas_match_at_tolerance():
    rng = np.random.default_rng(4)
    for _ in range(5):
        K = int(rng.integers(2, 8))
        d = DiracMeasure.normalized(rng.uniform(-0.8, 0.8, (K, 2)), rng.uniform(0.5, 1.5, K))
        res = pogorelov_solve(d, tolerance=1e-11)
        areas = laguerre_areas(d.locations, res.heights)
        assert np.max(np.abs(areas - d.weights)) <= 1e-11
        assert res.heights.min() == 0.0


def test_permutation_invariance(ten_dirac):
    base = pogorelov_solve(ten_dirac).heights
    perm = np.random.default_rng(0).permutation(10)
    moved = pogorelov_solve(DiracMeasure(ten_dirac.locations[perm], ten_dirac.weights[perm])).heights
    assert np.allclose(moved, base[perm], atol=1e-8)


def test_monte_carlo_spot_check(five_dirac):
    res = pogorelov_solve(five_dirac)
    for k in np.random.default_rng(1).choice(5, size=3, replace=False):
        est, se = mc_area(five_dirac.locations, res.heights, int(k), 1_000_000, seed=int(k))
        assert abs(est - five_dirac.weights[k]) <= 3 * se


def test_sweep_limit(ten_dirac):
    with pytest.raises(NonConvergenceError) as info:
        pogorelov_solve(ten_dirac, max_sweeps=1)
    details = info.value.details
    assert details["sweeps"] == 1 and len(details["area_errors"]) == 10


def test_weights_must_sum_to_pi():
    class Loose:
        locations = np.array([[0.0, 0.0], [0.5, 0.0]])
        weights = np.array([1.0, 1.0])
    with pytest.raises(ContractViolation):
        pogorelov_solve(Loose())


def test_oracle_vs_scheme(three_dirac):
    res = pogorelov_solve(three_dirac)
    same = oracle_vs_scheme(res, res.heights + 3.0, three_dirac)
    assert same.height_error == pytest.approx(0.0, abs=1e-14)
    assert same.area_linf < 1e-9
    off = oracle_vs_scheme(res, res.heights + np.array([0.0, 0.01, 0.0]), three_dirac)
    assert off.height_error == pytest.approx(0.01, abs=1e-6)
    assert off.area_rss >= off.area_linf > 0
    with pytest.raises(ContractViolation):
        oracle_vs_scheme(res, np.zeros(2), three_dirac)
