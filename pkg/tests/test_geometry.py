import numpy as np
import pytest
from hypothesis import given, strategies as st

from pogorelov_ma.errors import ContractViolation, DegenerateInputError
from pogorelov_ma.geometry import (Arc, ConvexTarget, HalfPlane, Segment, cell_area, disk_cell,
                                   laguerre_areas, laguerre_cell, mc_area, signed_distance,
                                   support_function)

SQUARE = ConvexTarget.polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)])
DISK = ConvexTarget.unit_disk()


def green_area(cell):
    """Area by Green's theorem along the boundary pieces."""
    total = 0.0
    for piece in cell.boundary:
        if isinstance(piece, Segment):
            (x0, y0), (x1, y1) = piece.start, piece.end
            total += 0.5 * (x0 * y1 - x1 * y0)
        else:
            total += 0.5 * piece.sweep
    return total


# --- support function -------------------------------------------------------

def test_support_function_examples():
    assert support_function(DISK, (1.0, 0.0)) == 1.0
    assert support_function(SQUARE, (1.0, 0.0)) == 1.0
    assert support_function(SQUARE, np.array([1.0, 1.0]) / np.sqrt(2)) == pytest.approx(np.sqrt(2), abs=1e-14)


def test_support_function_rejects_non_unit():
    with pytest.raises(ContractViolation):
        support_function(DISK, (2.0, 0.0))


@given(st.floats(0, 2 * np.pi), st.floats(0.1, 10))
def test_support_function_homogeneous(theta, scale):
    v = scale * np.array([np.cos(theta), np.sin(theta)])
    n = v / np.linalg.norm(v)
    direct = scale * support_function(SQUARE, n)
    assert direct == pytest.approx(np.max(SQUARE.vertices @ v), rel=1e-12)


def test_polygon_must_be_convex_ccw():
    with pytest.raises(ContractViolation):
        ConvexTarget.polygon([(-1, -1), (-1, 1), (1, 1), (1, -1)])


# --- signed distance ----------------------------------------------------------

@pytest.mark.parametrize("p, expected", [((0, 0), -1.0), ((0.5, 0), -0.5), ((3, 4), 4.0)])
def test_signed_distance_disk(p, expected):
    assert signed_distance(DISK, p) == pytest.approx(expected, abs=1e-15)


def test_signed_distance_square():
    assert signed_distance(SQUARE, (0, 0)) == -1.0
    assert signed_distance(SQUARE, (2, 0)) == 1.0
    assert signed_distance(SQUARE, (2, 2)) == pytest.approx(np.sqrt(2))


# --- cells ----------------------------------------------------------------------

def test_single_dirac_full_disk():
    cell = laguerre_cell([(0.3, -0.2)], [1.7], 0)
    assert cell.area == pytest.approx(np.pi, abs=1e-15)


def test_symmetric_pair_half_disk():
    cell = laguerre_cell([(-0.5, 0), (0.5, 0)], [0, 0], 0)
    assert cell.area == pytest.approx(np.pi / 2, abs=1e-14)
    assert all(p.start[0] <= 1e-15 for p in cell.boundary if isinstance(p, Segment))


def test_unequal_heights_against_monte_carlo():
    d, v = [(-0.5, 0), (0.5, 0)], [0.0, 0.2]
    exact = laguerre_cell(d, v, 0).area
    est, se = mc_area(d, v, 0, 10_000_000, seed=1)
    assert abs(exact - est) <= 3 * se
    # left cell grows when the right plane is lowered: boundary at y_1 = -0.2
    assert exact > np.pi / 2


def test_cell_area_examples():
    assert cell_area(disk_cell([])) == pytest.approx(np.pi)
    half = disk_cell([HalfPlane((1.0, 0.0), 0.0)])
    assert cell_area(half) == pytest.approx(np.pi / 2, abs=1e-14)
    quarter = disk_cell([HalfPlane((1.0, 0.0), 0.0), HalfPlane((0.0, 1.0), 0.0)])
    assert cell_area(quarter) == pytest.approx(np.pi / 4, abs=1e-14)


def test_empty_cell_has_zero_area():
    cell = disk_cell([HalfPlane((1.0, 0.0), -1.5)])
    assert cell.is_empty and cell.area == 0.0
    # dominated coincident Dirac
    assert laguerre_cell([(0.1, 0.1), (0.1, 0.1)], [1.0, 0.0], 0).area == 0.0


def test_coincident_equal_heights_is_degenerate():
    with pytest.raises(DegenerateInputError):
        laguerre_cell([(0.1, 0.1), (0.1, 0.1)], [0.0, 0.0], 0)


def test_arc_segment_area():
    assert Arc(0.0, np.pi).segment_area == pytest.approx(np.pi / 2)


def test_mc_area_examples(three_dirac):
    est, se = mc_area([(0.0, 0.0)], [0.0], 0, 1_000_000)
    assert est == pytest.approx(np.pi) and se == 0.0
    est, se = mc_area([(-0.5, 0), (0.5, 0)], [0, 0], 0, 1_000_000, seed=3)
    assert abs(est - np.pi / 2) <= 3 * se
    printed = [1.17810586, 0.78540476, 1.17810586]
    for k in range(3):
        est, se = mc_area(three_dirac.locations, np.zeros(3), k, 1_000_000, seed=k)
        assert abs(est - printed[k]) <= 3 * se


def random_config(rng, K):
    return rng.uniform(-0.9, 0.9, size=(K, 2)), rng.uniform(-0.4, 0.4, size=K)


@pytest.mark.parametrize("seed", range(40))
def test_cells_tile_disk(seed):
    rng = np.random.default_rng(seed)
    d, v = random_config(rng, int(rng.integers(1, 21)))
    assert laguerre_areas(d, v).sum() == pytest.approx(np.pi, abs=1e-9)


@pytest.mark.parametrize("seed", range(40))
def test_area_matches_green_theorem(seed):
    rng = np.random.default_rng(100 + seed)
    d, v = random_config(rng, int(rng.integers(2, 12)))
    for k in range(len(d)):
        cell = laguerre_cell(d, v, k)
        assert 0.0 <= cell.area <= np.pi
        assert cell.area == pytest.approx(green_area(cell), abs=1e-12)


def test_area_matches_monte_carlo_random():
    rng = np.random.default_rng(7)
    failures = 0
    for trial in range(200):
        d, v = random_config(rng, int(rng.integers(1, 21)))
        k = int(rng.integers(len(d)))
        est, se = mc_area(d, v, k, 20_000, seed=trial)
        exact = laguerre_cell(d, v, k).area
        if se == 0.0:
            assert exact == pytest.approx(est, abs=1e-12)
        elif abs(exact - est) > 3 * se:
            failures += 1
    # 3-sigma bands: expect ~0.3% misses, allow a handful
    assert failures <= 4


@given(st.integers(0, 10_000))
def test_lowering_height_grows_cell(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(2, 8))
    d, v = random_config(rng, K)
    k = int(rng.integers(K))
    before = laguerre_areas(d, v)
    if before[k] == 0.0 or before[k] == np.pi:
        return
    v2 = v.copy()
    v2[k] -= 0.05
    after = laguerre_areas(d, v2)
    assert after[k] > before[k]
    others = np.arange(K) != k
    assert np.all(after[others] <= before[others] + 1e-12)
