import numpy as np
import pytest
import scipy.sparse as sps

from _checks import jacobian_fd_check, random_potential
from pogorelov_ma import newton
from pogorelov_ma.errors import ContractViolation, SolverError, StagnationError
from pogorelov_ma.geometry import laguerre_areas
from pogorelov_ma.newton import (default_initialization, interpolate_to, newton_solve,
                                 sparse_solve)
from pogorelov_ma.scheme import MongeAmpereScheme, SchemeParams
from pogorelov_ma.stencil import INTERIOR
from pogorelov_ma.transport import DiracMeasure

ORIGIN = DiracMeasure([(0.0, 0.0)], [np.pi])


# --- linear solves ----------------------------------------------------------------

@pytest.mark.parametrize("method", ["lu", "amg"])
def test_sparse_solve_identity(method):
    b = np.arange(5.0)
    assert np.allclose(sparse_solve(sps.identity(5), b, method=method), b)


def test_sparse_solve_two_by_two():
    x = sparse_solve(sps.csr_matrix([[2.0, -1.0], [-1.0, 2.0]]), [1.0, 0.0])
    assert np.allclose(x, [2 / 3, 1 / 3], atol=1e-14)


@pytest.mark.parametrize("method", ["lu", "amg", "auto"])
def test_sparse_solve_diagonally_dominant(method):
    rng = np.random.default_rng(0)
    A = sps.random(500, 500, density=0.01, random_state=1, format="csr")
    A = A + sps.diags(np.abs(A).sum(axis=1).A1 + 1.0)
    b = rng.normal(size=500)
    x = sparse_solve(A, b, method=method)
    rel = np.linalg.norm(b - A @ x, np.inf) / (np.abs(A).sum(axis=1).max() * np.abs(x).max() + np.abs(b).max())
    assert rel <= 1e-10


def test_sparse_solve_errors():
    with pytest.raises(SolverError):
        sparse_solve(sps.csr_matrix(np.ones((2, 3))), [1.0, 1.0])
    with pytest.raises(SolverError):
        sparse_solve(sps.csr_matrix([[1.0, 1.0], [1.0, 1.0]]), [1.0, 0.0])
    with pytest.raises(ContractViolation):
        sparse_solve(sps.identity(2), [1.0, 1.0], method="cg")


# --- initialisation ---------------------------------------------------------------

def test_default_initialization():
    s = MongeAmpereScheme(SchemeParams(17), ORIGIN)
    g = s.grid
    assert np.allclose(default_initialization(g, ORIGIN), np.hypot(g.X, g.Y))
    two = DiracMeasure([(-0.5, 0), (0.5, 0)], [np.pi / 2, np.pi / 2])
    from pogorelov_ma.harness import two_dirac_exact
    u0 = g.restrict(default_initialization(g, two))
    assert np.max(np.abs(u0 - g.restrict(two_dirac_exact(g.X, g.Y)))) < 1.0


def test_interpolation_is_exact_on_bilinear():
    c = MongeAmpereScheme(SchemeParams(17), ORIGIN).grid
    f = MongeAmpereScheme(SchemeParams(33), ORIGIN).grid
    lin = lambda g: 1 + 2 * g.X - g.Y + 0.5 * g.X * g.Y
    assert np.allclose(interpolate_to(c, lin(c), f), lin(f), atol=1e-12)


def test_continuation_start_beats_cold_start(five_dirac):
    coarse = newton_solve(SchemeParams(33), five_dirac)
    fine = MongeAmpereScheme(SchemeParams(65), five_dirac)
    cold = fine.residual(default_initialization(fine.grid, five_dirac)).norm()
    warm = fine.residual(interpolate_to(coarse.grid, coarse.potential, fine.grid)).norm()
    assert warm < cold


# --- Newton -----------------------------------------------------------------------------

def mean_aligned_error(report, exact):
    g = report.grid
    u, ue = g.restrict(report.potential), g.restrict(exact(g.X, g.Y))
    return np.max(np.abs((u - u.mean()) - (ue - ue.mean())))


@pytest.mark.xfail(strict=True, reason="the sampled cone leaves O(0.1) interior residuals")
def test_exact_cone_start_converges_fast():
    s = MongeAmpereScheme(SchemeParams(33), ORIGIN)
    rep = newton_solve(SchemeParams(33), ORIGIN, initial=np.hypot(s.grid.X, s.grid.Y))
    assert rep.converged and rep.iterations <= 3


def test_near_solution_start_converges_fast():
    ref = newton_solve(SchemeParams(33), ORIGIN)
    bumped = ref.potential + 1e-6 * np.random.default_rng(0).normal(size=ref.potential.shape)
    rep = newton_solve(SchemeParams(33), ORIGIN, initial=bumped)
    assert rep.converged and rep.iterations <= 3
    assert np.max(np.abs(rep.potential - ref.potential)) < 1e-8


def test_one_dirac_error_at_65():
    rep = newton_solve(SchemeParams(65), ORIGIN)
    err = mean_aligned_error(rep, lambda x, y: np.hypot(x, y))
    assert 6.29e-3 / 2 <= err <= 2 * 6.29e-3


def test_residual_history_strictly_decreases(five_dirac):
    rep = newton_solve(SchemeParams(33), five_dirac)
    assert rep.converged and rep.residual_history[-1] <= 1e-8
    assert np.all(np.diff(rep.residual_history) < 0)
    assert all(0 < lam <= 1 for lam in rep.damping_history)


def test_converged_solution_is_discretely_convex(three_dirac):
    rep = newton_solve(SchemeParams(33), three_dirac)
    s = rep.scheme
    inner = s.grid.kind[s._block] == INTERIOR
    worst = min(s.second_differences(rep.potential, k)[inner].min() for k in range(len(s.stencil)))
    assert worst >= -1e-6


def test_row_order_invariance(three_dirac):
    a = newton_solve(SchemeParams(33), three_dirac)
    n = a.grid.size
    b = newton_solve(SchemeParams(33), three_dirac, row_order=np.random.default_rng(0).permutation(n))
    assert np.max(np.abs(a.potential - b.potential)) <= 1e-7


def test_heights_give_feasible_cells(five_dirac):
    errs = []
    for n in (33, 65):
        rep = newton_solve(SchemeParams(n), five_dirac)
        areas = laguerre_areas(five_dirac.locations, rep.heights)
        assert areas.sum() == pytest.approx(np.pi, abs=1e-9)
        assert rep.heights.min() == 0.0
        errs.append(np.max(np.abs(areas - five_dirac.weights)))
    assert errs[1] < errs[0]


def test_shift_satisfies_mean_term_equation():
    rep = newton_solve(SchemeParams(33), ORIGIN)
    s, u = rep.scheme, rep.potential
    mask = s.augmented_mask()
    # the augmented system for v = u - c is solved; with the mean term it reads F[u] - h^2 sum(u) = 0
    F = s.residual(u).values
    F[mask] -= s.h**2 * u[mask].sum()
    assert np.abs(F).max() <= 1e-8


@pytest.mark.xfail(strict=True, reason="the sum-based mean term fixes a constant but not a zero mean")
def test_one_dirac_solution_has_zero_mean():
    rep = newton_solve(SchemeParams(33), ORIGIN)
    assert abs(rep.potential[rep.scheme.augmented_mask()].mean()) <= 1e-8


def test_stagnation_error():
    with pytest.raises(StagnationError) as info:
        newton_solve(SchemeParams(17), ORIGIN, max_backtracks=0)
    assert info.value.iteration == 0 and info.value.residual_norm > 0


def test_solver_error_carries_context(monkeypatch):
    def broken(*args, **kwargs):
        raise SolverError("singular")
    monkeypatch.setattr(newton, "sparse_solve", broken)
    with pytest.raises(SolverError) as info:
        newton_solve(SchemeParams(17), ORIGIN)
    assert info.value.iteration == 0 and "Newton iteration 0" in str(info.value)


def test_initial_guess_contract():
    with pytest.raises(ContractViolation):
        newton_solve(SchemeParams(17), ORIGIN, initial=np.zeros((3, 3)))
    s = MongeAmpereScheme(SchemeParams(17), ORIGIN)
    bad = np.full(s.grid.X.shape, np.nan)
    with pytest.raises(ContractViolation):
        newton_solve(SchemeParams(17), ORIGIN, initial=bad)


# --- Jacobian ------------------------------------------------------------------------------

@pytest.mark.parametrize("baseline", [False, True])
def test_jacobian_matches_finite_differences(five_dirac, baseline):
    s = MongeAmpereScheme(SchemeParams(33, viscosity_baseline=baseline), five_dirac)
    rng = np.random.default_rng(3)
    errs, kinds = jacobian_fd_check(s, random_potential(s, rng), rng)
    assert len(errs) >= 90 and kinds == {0, 1, 2}
    assert errs.max() <= 1e-5


def test_jacobian_structure():
    s = MongeAmpereScheme(SchemeParams(33), ORIGIN)
    u = np.hypot(s.grid.X, s.grid.Y)
    J = s.jacobian(u, s.residual(u))
    diag = J.diagonal()
    assert np.all(diag > 0)
    off = J - sps.diags(diag)
    assert off.max() <= 0.0
    # differences annihilate constants: only the h^2 u augmentation remains
    lin = 0.2 * s.grid.X
    J = s.jacobian(lin, s.residual(lin))
    ones = (J @ np.ones(s.grid.size)).reshape(lin.shape)
    aug = s.augmented_mask()
    assert np.allclose(ones[aug], s.h**2, atol=1e-9)
    assert np.allclose(ones[~aug], 0.0, atol=1e-9)
