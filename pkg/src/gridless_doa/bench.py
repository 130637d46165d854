"""Monte-Carlo benchmark harness: scenes, trials, RMSE aggregation, CSV.

Each trial draws a scene (and, for non-uniform geometries, a fresh array),
synthesizes measurements, runs every configured solver on the same data,
and scores the estimates with an assignment-matched RMSE capped at 10
degrees per source. Trials are keyed by deterministic per-trial seeds, so
results are independent of execution order and safe to compute in parallel.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import permutations
from typing import Literal, Optional, Union, get_args

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.optimize import linear_sum_assignment

from .arrays import (
    ArrayGeometry,
    SourceScene,
    as_generator,
    perturbed_nua,
    sample_covariance,
    steering_matrix,
    synthesize,
    ula_positions,
)
from .errors import ConfigError, GridlessDoaError
from .ivd import classic_root_music, irregular_root_music
from .solvers import admm_gridless, ap_gridless, ap_ula

__all__ = [
    "SolverSpec",
    "ExperimentConfig",
    "TrialResult",
    "ExperimentResult",
    "SOLVER_NAMES",
    "random_scene",
    "pair_and_rmse",
    "cbf_estimate",
    "run_experiment",
    "write_rows_csv",
    "write_estimates_csv",
]

CSV_SCHEMA_COMMENT = "# gridless-doa results v1"
MSE_CAP_DEG2 = 100.0  # squared 10-degree penalty per missed source

SolverName = Literal[
    "ap_gridless", "ap_ula", "admm", "root_music", "irregular_root_music", "cbf"
]
SOLVER_NAMES = get_args(SolverName)
_ULA_ONLY = ("ap_ula", "admm", "root_music")
_NEEDS_L_GE_K = ("root_music", "irregular_root_music")


class SolverSpec(BaseModel):
    """One solver entry of an experiment; bare strings coerce to defaults."""

    model_config = ConfigDict(extra="forbid")

    name: SolverName
    tau: float = 0.01
    rho: float = 1.0
    label: Optional[str] = None

    @model_validator(mode="before")
    @classmethod
    def _coerce_string(cls, value):
        if isinstance(value, str):
            return {"name": value}
        return value

    @property
    def display(self) -> str:
        return self.label or self.name


class ExperimentConfig(BaseModel):
    """Declarative experiment description (JSON-friendly).

    ``snr_db`` is a single value or a sweep list; null means noiseless.
    ``separation_min`` is in the normalized [0, 1) draw domain and defaults
    to 1/M. ``freeze_geometry`` reuses one random non-uniform array across
    all trials instead of redrawing per trial.
    """

    model_config = ConfigDict(extra="forbid")

    geometry: Literal["ula", "nua"]
    m: int = Field(ge=2)
    k: int = Field(ge=1)
    l: int = Field(ge=1)
    snr_db: Union[float, None, list[Union[float, None]]] = None
    sigma_s: float = Field(default=5.0, gt=0)
    n_trials: int = Field(default=1, ge=1)
    solvers: list[SolverSpec]
    seed: int = 0
    separation_min: Optional[float] = Field(default=None, gt=0)
    coherent: bool = False
    freeze_geometry: bool = False
    max_iter: Optional[int] = Field(default=None, ge=1)
    tol: float = Field(default=1e-7, gt=0)

    @field_validator("snr_db")
    @classmethod
    def _non_empty_sweep(cls, value):
        if isinstance(value, list) and not value:
            raise ValueError("SNR sweep list must be non-empty")
        return value

    @model_validator(mode="after")
    def _cross_checks(self):
        if self.k >= self.m:
            raise ValueError("need K < M")
        if not self.solvers:
            raise ValueError("at least one solver is required")
        labels = [spec.display for spec in self.solvers]
        if len(set(labels)) != len(labels):
            raise ValueError("solver labels must be unique; set 'label' to "
                             "distinguish repeated solvers")
        for spec in self.solvers:
            if spec.name in _ULA_ONLY and self.geometry != "ula":
                raise ValueError(f"solver {spec.name!r} requires ULA geometry")
            if spec.name in _NEEDS_L_GE_K and self.l < self.k:
                raise ValueError(f"solver {spec.name!r} requires L >= K")
        return self

    @property
    def sweep(self) -> list[float]:
        raw = self.snr_db if isinstance(self.snr_db, list) else [self.snr_db]
        return [math.inf if v is None else float(v) for v in raw]


@dataclass(frozen=True)
class TrialResult:
    """Scored outcome of one solver on one trial."""

    sweep_var: float
    trial_index: int
    solver: str
    theta_true: np.ndarray
    theta_hat: np.ndarray
    per_trial_mse: float  # deg^2, capped at 100 per source
    runtime: float
    failed: bool = False


@dataclass(frozen=True)
class ExperimentResult:
    rows: list[dict]
    trials: list[TrialResult]
    failures: int


def random_scene(
    m: int,
    k: int,
    seed,
    sigma_s: float = 5.0,
    separation_min: float | None = None,
) -> SourceScene:
    """Scene with DOAs drawn in [0,1), separated by at least 1/M, scaled
    to [-90, 90) degrees, and per-source amplitudes sigma_s**x, x~U(0,1).

    Draws are rejected until the separation holds; persistent failure
    (separation infeasible for K sources) raises ``ValueError``.
    """
    if k < 1 or m < 2:
        raise ValueError("need K >= 1 and M >= 2")
    sep = 1.0 / m if separation_min is None else separation_min
    if (k - 1) * sep >= 1.0:
        raise ValueError(f"cannot separate {k} draws by {sep} within [0, 1)")
    rng = as_generator(seed)
    for _ in range(10_000):
        draws = np.sort(rng.uniform(size=k))
        if k == 1 or np.min(np.diff(draws)) >= sep:
            thetas = np.deg2rad(-90.0 + 180.0 * draws)
            amplitudes = sigma_s ** rng.uniform(size=k)
            return SourceScene(thetas=thetas, amplitudes=amplitudes)
    raise ValueError(
        f"failed to draw {k} DOAs with separation {sep} in 10000 attempts"
    )


def _assignment_errors(true_deg: np.ndarray, hat_deg: np.ndarray) -> np.ndarray:
    """Per-source squared errors under the min-cost matching, padded with
    the cap for unmatched sources."""
    k = true_deg.size
    cost = (true_deg[:, None] - hat_deg[None, :]) ** 2
    if k <= 4 and hat_deg.size == k:
        best = None
        for perm in permutations(range(k)):
            total = cost[np.arange(k), perm].sum()
            if best is None or total < best[0]:
                best = (total, perm)
        matched = cost[np.arange(k), best[1]]
    else:
        rows, cols = linear_sum_assignment(cost)
        matched = np.full(k, MSE_CAP_DEG2)
        matched[rows] = cost[rows, cols]
    return np.minimum(matched, MSE_CAP_DEG2)


def pair_and_rmse(theta_true, theta_hat) -> float:
    """RMSE in degrees between true and estimated DOAs (both radians).

    Estimates are matched to truths by the assignment minimizing total
    squared error; each matched squared error is capped at 100 deg^2 and
    missing estimates (shortfall) count as capped errors.
    """
    true_deg = np.rad2deg(np.atleast_1d(np.asarray(theta_true, dtype=float)))
    hat_deg = np.rad2deg(np.atleast_1d(np.asarray(theta_hat, dtype=float)))
    if true_deg.size == 0 or hat_deg.size == 0:
        raise ValueError("need at least one true and one estimated DOA")
    errors = _assignment_errors(true_deg, hat_deg)
    return float(np.sqrt(errors.mean()))


def cbf_estimate(y: np.ndarray, geom, k: int, n_grid: int = 1801) -> np.ndarray:
    """Conventional (Bartlett) beamformer peaks as DOA estimates.

    Scans a(theta)^H R a(theta) / M^2 over an evenly spaced angle grid and
    returns the angles of the K largest local maxima, sorted ascending;
    fewer are returned when the spectrum has fewer peaks (e.g. merged
    sources inside a beamwidth).
    """
    if k < 1:
        raise ValueError("need K >= 1")
    r = sample_covariance(y)
    grid = np.deg2rad(np.linspace(-90.0, 90.0, n_grid))
    a = steering_matrix(geom, grid)
    power = (a.conj() * (r @ a)).sum(axis=0).real / r.shape[0] ** 2

    peaks = [
        i
        for i in range(n_grid)
        if (i == 0 or power[i] > power[i - 1])
        and (i == n_grid - 1 or power[i] > power[i + 1])
    ]
    if not peaks:
        return np.empty(0)
    ranked = sorted(peaks, key=lambda i: power[i], reverse=True)[:k]
    return np.sort(grid[np.asarray(ranked)])


def _dispatch(spec: SolverSpec, y, geom: ArrayGeometry, cfg: ExperimentConfig):
    name = spec.name
    if name == "ap_gridless":
        return ap_gridless(y, geom.positions, cfg.k, tol=cfg.tol,
                           max_iter=cfg.max_iter).theta_hat
    if name == "ap_ula":
        return ap_ula(y, cfg.k, tol=cfg.tol, max_iter=cfg.max_iter).theta_hat
    if name == "admm":
        return admm_gridless(y, cfg.k, tau=spec.tau, rho=spec.rho,
                             max_iter=cfg.max_iter).theta_hat
    if name == "root_music":
        return classic_root_music(y, cfg.k)
    if name == "irregular_root_music":
        return irregular_root_music(y, geom.positions, cfg.k)
    if name == "cbf":
        return cbf_estimate(y, geom, cfg.k)
    raise ConfigError(f"unknown solver {name!r}")


def _trial_seed(cfg: ExperimentConfig, sweep_idx: int, trial: int):
    return np.random.SeedSequence(entropy=cfg.seed, spawn_key=(1, sweep_idx, trial))


def trial_geometry(cfg: ExperimentConfig, sweep_idx: int, trial: int) -> ArrayGeometry:
    """Geometry used by one trial (fixed for ULA / frozen configs)."""
    if cfg.geometry == "ula":
        return ula_positions(cfg.m)
    if cfg.freeze_geometry:
        rng = as_generator(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(2,)))
        return perturbed_nua(cfg.m, rng)
    rng = as_generator(_trial_seed(cfg, sweep_idx, trial))
    return perturbed_nua(cfg.m, rng)


def synthesize_trial(cfg: ExperimentConfig, sweep_idx: int, trial: int):
    """Reproduce the (geometry, scene, measurements) of one trial."""
    sweep = cfg.sweep
    if not 0 <= sweep_idx < len(sweep):
        raise ConfigError(f"sweep index {sweep_idx} out of range")
    if not 0 <= trial < cfg.n_trials:
        raise ConfigError(f"trial index {trial} out of range")
    rng = as_generator(_trial_seed(cfg, sweep_idx, trial))
    if cfg.geometry == "nua" and not cfg.freeze_geometry:
        geom = perturbed_nua(cfg.m, rng)
    else:
        geom = trial_geometry(cfg, sweep_idx, trial)
    scene = random_scene(cfg.m, cfg.k, rng, sigma_s=cfg.sigma_s,
                         separation_min=cfg.separation_min)
    meas = synthesize(geom, scene, cfg.l, sweep[sweep_idx], rng,
                      coherent=cfg.coherent)
    return geom, scene, meas


def _run_trial(cfg: ExperimentConfig, sweep_idx: int, trial: int) -> list[TrialResult]:
    snr = cfg.sweep[sweep_idx]
    geom, scene, meas = synthesize_trial(cfg, sweep_idx, trial)
    results = []
    for spec in cfg.solvers:
        start = time.perf_counter()
        failed = False
        try:
            theta_hat = _dispatch(spec, meas.Y, geom, cfg)
        except GridlessDoaError:
            theta_hat = np.empty(0)
            failed = True
        runtime = time.perf_counter() - start
        if theta_hat.size == 0:
            mse = MSE_CAP_DEG2
        else:
            mse = pair_and_rmse(scene.thetas, theta_hat) ** 2
        results.append(
            TrialResult(
                sweep_var=snr,
                trial_index=trial,
                solver=spec.display,
                theta_true=scene.thetas,
                theta_hat=theta_hat,
                per_trial_mse=min(mse, MSE_CAP_DEG2),
                runtime=runtime,
                failed=failed,
            )
        )
    return results


def _worker_count() -> int:
    available = os.cpu_count() or 1
    cap = os.environ.get("GRIDLESS_DOA_THREADS")
    if cap is not None:
        try:
            available = min(available, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"GRIDLESS_DOA_THREADS={cap!r} is not an integer")
    return available


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run all (sweep point, trial) combinations and aggregate RMSE rows.

    Trials are independent and keyed by (seed, sweep index, trial index), so
    the aggregate is invariant to execution order; the worker count is
    capped by the GRIDLESS_DOA_THREADS environment variable.
    """
    tasks = [(s, t) for s in range(len(cfg.sweep)) for t in range(cfg.n_trials)]
    workers = min(_worker_count(), len(tasks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(lambda st: _run_trial(cfg, *st), tasks))
    else:
        batches = [_run_trial(cfg, s, t) for s, t in tasks]
    by_key = {task: batch for task, batch in zip(tasks, batches)}

    trials: list[TrialResult] = []
    rows: list[dict] = []
    failures = 0
    for sweep_idx, snr in enumerate(cfg.sweep):
        per_solver: dict[str, list[TrialResult]] = {}
        for trial in range(cfg.n_trials):
            for result in by_key[(sweep_idx, trial)]:
                trials.append(result)
                failures += result.failed
                per_solver.setdefault(result.solver, []).append(result)
        for spec in cfg.solvers:
            scored = per_solver[spec.display]
            rows.append(
                {
                    "sweep_var": snr,
                    "solver": spec.display,
                    "rmse_deg": float(
                        np.sqrt(np.mean([r.per_trial_mse for r in scored]))
                    ),
                    "mean_runtime_s": float(np.mean([r.runtime for r in scored])),
                    "n_trials": cfg.n_trials,
                    "seed": cfg.seed,
                }
            )
    return ExperimentResult(rows=rows, trials=trials, failures=failures)


_ROW_FIELDS = ["sweep_var", "solver", "rmse_deg", "mean_runtime_s", "n_trials", "seed"]


def write_rows_csv(path, rows: list[dict]) -> None:
    """Write aggregate rows as UTF-8 CSV with a schema-version comment."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_SCHEMA_COMMENT + "\n")
        writer = csv.DictWriter(fh, fieldnames=_ROW_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_estimates_csv(path, trials: list[TrialResult]) -> None:
    """Per-trial raw DOAs (degrees, ';'-joined) for histogram-style plots."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_SCHEMA_COMMENT + "\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["sweep_var", "solver", "trial", "theta_true_deg", "theta_hat_deg",
             "mse_deg2"]
        )
        for t in trials:
            writer.writerow(
                [
                    t.sweep_var,
                    t.solver,
                    t.trial_index,
                    ";".join(f"{v:.6f}" for v in np.rad2deg(t.theta_true)),
                    ";".join(f"{v:.6f}" for v in np.rad2deg(t.theta_hat)),
                    f"{t.per_trial_mse:.8f}",
                ]
            )
