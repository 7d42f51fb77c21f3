"""Experiment configuration, error metrics and convergence tables."""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from .errors import ConfigError, ContractViolation
from .geometry import laguerre_areas
from .newton import newton_solve
from .oracle import OracleResult, pogorelov_solve
from .scheme import SchemeParams
from .transport import DiracMeasure, MaxOfPlanesPotential, transport_map

log = logging.getLogger(__name__)

THREADS_ENV = "POGORELOV_THREADS"
MODES = {"aleksandrov": False, "viscosity_baseline": True, "viscosity": True}
SOLVER_KEYS = {"tol", "max_iter", "max_backtracks", "continuation", "min_coarse"}
SCHEME_KEYS = {"width", "n_y", "r_minus_mode", "quadrature_order"}

THREE_DIRAC = ([(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5)],
               [1.17810586, 0.78540476, 1.17810586])
FIVE_DIRAC = ([(0.5, 0.5), (0.5, -0.5), (-0.5, 0.5), (-0.5, -0.5), (0.0, 0.0)],
              [0.70539704, 0.56674540, 0.56674541, 1.142723415, 0.16000240])
# the fourth location is (-0.5, -0.5): the mirror image of the first
TEN_DIRAC = ([(0.5, 0.5), (0.5, -0.5), (-0.5, 0.5), (-0.5, -0.5), (0.25, 0.25),
              (0.25, -0.25), (-0.25, 0.25), (-0.25, -0.25), (0.75, 0.6875), (-0.75, -0.75)],
             [0.24497863, 0.59721306, 0.69141129, 0.23, 0.225, 0.225, 0.045, 0.045,
              0.36462036, 0.47337968])

# reference potential values at the Diracs, up to a shift
REFERENCE_HEIGHTS = {
    "three_dirac": np.array([0.0, 0.0, 0.0]),
    "five_dirac": np.array([1.0, 1.0, 1.0, 0.8, 0.8]),
    "ten_dirac": np.array([1.0, 1.0, 1.0, 1.0, 0.85, 0.85, 0.9, 0.9, 1.2, 1.2]),
}


def one_dirac_exact(x, y):
    return np.hypot(x, y)


def two_dirac_exact(x, y):
    cones = np.minimum(np.hypot(x + 0.5, y), np.hypot(x - 0.5, y))
    return np.where(np.abs(x) > 0.5, cones, np.abs(y))


def random_diracs(count: int, seed: int, lattice: int = 65, extent: float = 0.7) -> DiracMeasure:
    """``count`` distinct nodes of the ``lattice``-point grid inside ``[-extent, extent]^2``.

    Weights are equal, ``pi / count``.  Placing the Diracs on nodes of a
    coarse lattice keeps them on every grid that refines it.
    """
    if count < 1:
        raise ConfigError("random_k needs a positive count")
    if lattice < 3 or (lattice - 1) % 2:
        raise ConfigError("lattice must be an odd node count")
    h = 2.0 / (lattice - 1)
    m = int(np.floor(extent / h + 1e-9))
    ks = np.arange(-m, m + 1)
    pts = np.stack(np.meshgrid(ks, ks, indexing="ij"), axis=-1).reshape(-1, 2) * h
    if count > len(pts):
        raise ConfigError(f"only {len(pts)} lattice nodes available for {count} Diracs")
    rng = np.random.default_rng(seed)
    loc = pts[rng.choice(len(pts), size=count, replace=False)]
    return DiracMeasure(loc, np.full(count, np.pi / count))


@dataclass
class ExperimentConfig:
    """One experiment: a problem, a list of grid sizes and a mode.

    ``problem`` is one of ``one_dirac``, ``two_dirac``, ``three_dirac``,
    ``five_dirac``, ``ten_dirac``, ``random_k`` (with ``count``, ``seed`` and
    ``lattice``) or ``custom`` (with ``custom_file``, a JSON file holding
    ``locations`` and ``weights``).
    """

    problem: str
    sizes: List[int]
    mode: str = "aleksandrov"
    count: int = 100
    seed: int = 0
    lattice: int = 65
    custom_file: Optional[str] = None
    solver: dict = field(default_factory=dict)
    output_dir: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not self.sizes:
            raise ConfigError("need at least one grid size")
        for n in self.sizes:
            if int(n) != n or n < 5 or n % 2 == 0:
                raise ConfigError(f"grid sizes must be odd integers >= 5, got {n}")
        self.sizes = [int(n) for n in self.sizes]
        bad = set(self.solver) - SOLVER_KEYS - SCHEME_KEYS
        if bad:
            raise ConfigError(f"unknown solver options {sorted(bad)}")
        if self.problem == "random_k":
            for n in self.sizes:
                if (n - 1) % (self.lattice - 1):
                    raise ConfigError(f"grid size {n} does not refine the {self.lattice}-node lattice")
        if self.problem == "custom" and not self.custom_file:
            raise ConfigError("custom problem needs custom_file")

    @property
    def viscosity_baseline(self) -> bool:
        return MODES[self.mode]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown configuration keys {sorted(extra)}")
        if "problem" not in data or "sizes" not in data:
            raise ConfigError("configuration needs 'problem' and 'sizes'")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
        return cls.from_dict(data)

    def diracs(self) -> DiracMeasure:
        return PROBLEMS[self.problem](self)

    def exact(self) -> Optional[Callable]:
        return EXACT.get(self.problem)


def _custom(cfg: ExperimentConfig) -> DiracMeasure:
    try:
        with open(cfg.custom_file) as fh:
            data = json.load(fh)
        return DiracMeasure.normalized(data["locations"], data["weights"])
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot read custom problem {cfg.custom_file}: {exc}") from exc
    except ContractViolation as exc:
        raise ConfigError(str(exc)) from exc


PROBLEMS = {
    "one_dirac": lambda cfg: DiracMeasure([(0.0, 0.0)], [np.pi]),
    "two_dirac": lambda cfg: DiracMeasure([(-0.5, 0.0), (0.5, 0.0)], [np.pi / 2, np.pi / 2]),
    "three_dirac": lambda cfg: DiracMeasure.normalized(*THREE_DIRAC),
    "five_dirac": lambda cfg: DiracMeasure.normalized(*FIVE_DIRAC),
    "ten_dirac": lambda cfg: DiracMeasure.normalized(*TEN_DIRAC),
    "random_k": lambda cfg: random_diracs(cfg.count, cfg.seed, cfg.lattice),
    "custom": _custom,
}
EXACT = {"one_dirac": one_dirac_exact, "two_dirac": two_dirac_exact}


@dataclass
class ErrorRow:
    """Metrics for one grid size.

    ``max_error``/``l2_error`` compare the potential with the analytic
    solution when one exists; otherwise they hold the cell-area max and
    root-sum-square errors.  ``height_error`` is the shift-aligned max
    height error against the geometric oracle, left NaN for ``random_k``.
    """

    n_x: int
    max_error: float = float("nan")
    l2_error: float = float("nan")
    height_error: float = float("nan")
    area_linf: float = float("nan")
    area_rss: float = float("nan")
    iterations: int = -1
    runtime: float = float("nan")
    ok: bool = False
    message: str = ""


@dataclass
class ErrorTable:
    rows: List[ErrorRow]
    order: Optional[float] = None
    r2: Optional[float] = None
    metric: str = "max_error"

    @property
    def failures(self) -> int:
        return sum(not r.ok for r in self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_csv(self, path):
        # wall time is left out so reruns give identical files; it goes to run.json
        names = [n for n in ErrorRow.__dataclass_fields__ if n != "runtime"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(names)
            for r in self.rows:
                writer.writerow([getattr(r, n) for n in names])

    def format(self) -> str:
        lines = [f"{'n_x':>5} {'max_error':>11} {'l2_error':>11} {'height_err':>11} "
                 f"{'area_linf':>11} {'iters':>6} {'time[s]':>8}"]
        for r in self.rows:
            if not r.ok:
                lines.append(f"{r.n_x:>5}  failed: {r.message}")
                continue
            lines.append(f"{r.n_x:>5} {r.max_error:11.4e} {r.l2_error:11.4e} {r.height_error:11.4e} "
                         f"{r.area_linf:11.4e} {r.iterations:6d} {r.runtime:8.2f}")
        if self.order is None:
            lines.append(f"order ({self.metric}): fit unavailable")
        else:
            lines.append(f"order ({self.metric}): {self.order:.3f} (r^2 = {self.r2:.3f})")
        return "\n".join(lines)


def convergence_fit(table, metric: str = "max_error"):
    """Least-squares slope of ``log(error)`` against ``log(h)``.

    Accepts an :class:`ErrorTable` or a sequence of ``(n_x, error)`` pairs.
    Returns ``(order, r2)``, or ``None`` when fewer than three rows have a
    finite positive error.
    """
    if isinstance(table, ErrorTable):
        pairs = [(r.n_x, getattr(r, metric)) for r in table.rows if r.ok]
    else:
        pairs = list(table)
    pairs = [(n, e) for n, e in pairs if np.isfinite(e) and e > 0]
    if len(pairs) < 3:
        return None
    n, e = np.array(pairs, dtype=float).T
    x, y = np.log(2.0 / (n - 1)), np.log(e)
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    ss = np.sum((y - y.mean())**2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return float(slope), float(r2)


def cell_raster(u: np.ndarray, diracs: DiracMeasure, grid) -> np.ndarray:
    """Label grid points of the unit disk by the Dirac they are sent to.

    Heights are read off ``u`` at the Dirac nodes.  Labels are 1-based and
    points outside the disk get 0.  The raster covers the ``n_x`` square.
    """
    idx = [grid.index_of(p) for p in diracs.locations]
    heights = np.array([u[i, j] for i, j in idx])
    phi = MaxOfPlanesPotential(diracs, heights)
    X, Y = grid.restrict(grid.X), grid.restrict(grid.Y)
    pts = np.stack([X, Y], axis=-1)
    # argmax keeps the first maximiser, so ties go to the lower index
    labels = phi.values(pts).argmax(axis=-1) + 1
    labels[X**2 + Y**2 > 1.0] = 0
    return labels


def _solve_row(cfg: ExperimentConfig, n_x: int, diracs: DiracMeasure,
               oracle: Optional[OracleResult], out: Optional[Path]) -> ErrorRow:
    scheme_opts = {k: v for k, v in cfg.solver.items() if k in SCHEME_KEYS}
    solver_opts = {k: v for k, v in cfg.solver.items() if k in SOLVER_KEYS}
    params = SchemeParams(n_x, viscosity_baseline=cfg.viscosity_baseline, **scheme_opts)
    row = ErrorRow(n_x)
    t0 = time.perf_counter()
    try:
        report = newton_solve(params, diracs, **solver_opts)
    except (RuntimeError, ArithmeticError, ValueError) as exc:
        row.message = f"{type(exc).__name__}: {exc}"
        row.runtime = time.perf_counter() - t0
        log.warning("n_x=%d failed: %s", n_x, row.message)
        return row
    row.runtime = time.perf_counter() - t0
    row.iterations = report.iterations
    row.ok = report.converged
    if not report.converged:
        row.message = f"no convergence in {report.iterations} iterations"

    grid = report.grid
    u = grid.restrict(report.potential)
    areas = laguerre_areas(diracs.locations, report.heights) - diracs.weights
    row.area_linf = float(np.max(np.abs(areas)))
    row.area_rss = float(np.sqrt(np.sum(areas**2)))
    exact = cfg.exact()
    if exact is not None:
        diff = u - u.mean()
        ref = exact(grid.restrict(grid.X), grid.restrict(grid.Y))
        diff -= ref - ref.mean()
        row.max_error = float(np.max(np.abs(diff)))
        row.l2_error = float(grid.h * np.sqrt(np.sum(diff**2)))
    else:
        row.max_error, row.l2_error = row.area_linf, row.area_rss
    if oracle is not None:
        row.height_error = float(np.max(np.abs(report.heights - oracle.heights)))

    if out is not None:
        np.savetxt(out / f"potential_{n_x}.csv", u, delimiter=",")
        np.savetxt(out / f"cells_{n_x}.csv", cell_raster(report.potential, diracs, grid),
                   delimiter=",", fmt="%d")
    return row


def thread_count() -> int:
    """Worker count from the ``POGORELOV_THREADS`` environment variable (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def run_experiment(cfg: ExperimentConfig, oracle: Optional[OracleResult] = None) -> ErrorTable:
    """Solve at every grid size and tabulate the errors.

    Failed sizes are recorded in their row and the run carries on.  When
    ``cfg.output_dir`` is set, the table (CSV), run metadata (JSON), and the
    potential and cell raster of each size (CSV) are written there.
    """
    diracs = cfg.diracs()
    # random_k is scored on cell areas alone; coordinate sweeps crawl at K ~ 100
    if oracle is None and cfg.exact() is None and cfg.problem != "random_k":
        oracle = pogorelov_solve(diracs)
    out = None
    if cfg.output_dir:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)

    workers = min(thread_count(), len(cfg.sizes))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_solve_row, cfg, n, diracs, oracle, out) for n in cfg.sizes]
            rows = [f.result() for f in futures]
    else:
        rows = [_solve_row(cfg, n, diracs, oracle, out) for n in cfg.sizes]

    metric = "max_error" if cfg.exact() is not None else "height_error"
    if cfg.problem in ("random_k", "custom"):
        metric = "area_linf"
    table = ErrorTable(rows, metric=metric)
    fit = convergence_fit(table, metric)
    if fit is not None:
        table.order, table.r2 = fit

    if out is not None:
        table.to_csv(out / "errors.csv")
        meta = {"config": asdict(cfg), "order": table.order, "r2": table.r2, "metric": metric,
                "locations": diracs.locations.tolist(), "weights": diracs.weights.tolist(),
                "runtime": {r.n_x: r.runtime for r in rows}}
        if oracle is not None:
            meta["oracle_heights"] = oracle.heights.tolist()
        with open(out / "run.json", "w") as fh:
            json.dump(meta, fh, indent=2)
    return table
