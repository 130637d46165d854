"""FastAPI application wrapping the estimation library.

Endpoints are stateless: every request carries its full problem data (or a
declarative experiment config), and numerics run synchronously in the
worker. Domain errors map to 400 for bad inputs/configs and 422 for
numerical failures, so clients can distinguish usage bugs from hard
instances.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..arrays import (
    ArrayGeometry,
    SourceScene,
    perturbed_nua,
    sample_covariance,
    synthesize,
    ula_positions,
    z_to_theta,
)
from ..bench import cbf_estimate, random_scene, run_experiment, synthesize_trial
from ..errors import ConfigError, GridlessDoaError
from ..ivd import classic_root_music, irregular_root_music
from ..solvers import admm_gridless, ap_gridless, ap_ula
from ..spectrum import (
    circle_samples,
    noise_projector,
    subspace_split,
    unit_circle_minima,
)
from . import models


def _geometry_from_spec(spec: models.GeometrySpec) -> ArrayGeometry:
    if spec.positions is not None:
        positions = np.asarray(spec.positions, dtype=float)
        gaps = np.diff(positions)
        if spec.kind == "ula":
            if positions.size >= 2 and np.all(np.abs(gaps - gaps[0]) <= 1e-9):
                return ula_positions(positions.size, float(gaps[0]), float(positions[0]))
            raise ValueError("positions are not uniformly spaced but kind is 'ula'")
        return ArrayGeometry(positions, "nua")
    if spec.kind == "ula":
        return ula_positions(spec.m, spec.alpha, spec.beta)
    return perturbed_nua(spec.m, spec.seed)


def _wire_snr(value: float) -> float | None:
    return None if math.isinf(value) else value


def create_app() -> FastAPI:
    app = FastAPI(title="gridless-doa", version=__version__)

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400,
                            content={"detail": str(exc), "kind": "config"})

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError):
        return JSONResponse(status_code=400,
                            content={"detail": str(exc), "kind": "config"})

    @app.exception_handler(GridlessDoaError)
    async def _numerical_error(request: Request, exc: GridlessDoaError):
        return JSONResponse(status_code=422,
                            content={"detail": str(exc), "kind": "numerical"})

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/synthesize", response_model=models.SynthesizeResponse)
    def synthesize_endpoint(req: models.SynthesizeRequest):
        geom = _geometry_from_spec(req.geometry)
        if req.thetas_deg is not None:
            thetas = np.deg2rad(req.thetas_deg)
            amplitudes = (np.asarray(req.amplitudes, dtype=float)
                          if req.amplitudes is not None
                          else np.ones(thetas.size))
            scene = SourceScene(thetas=thetas, amplitudes=amplitudes)
        else:
            scene = random_scene(geom.m, req.k, req.seed, sigma_s=req.sigma_s,
                                 separation_min=req.separation_min)
        snr = math.inf if req.snr_db is None else req.snr_db
        meas = synthesize(geom, scene, req.l, snr, req.seed, coherent=req.coherent)
        return models.SynthesizeResponse(
            positions=geom.positions.tolist(),
            geometry_kind=geom.kind,
            thetas_true_deg=np.rad2deg(scene.thetas).tolist(),
            amplitudes=scene.amplitudes.tolist(),
            snr_db=_wire_snr(meas.snr_db),
            y=models.ComplexMatrix.from_numpy(meas.Y),
        )

    @app.post("/estimate", response_model=models.EstimateResponse)
    def estimate(req: models.EstimateRequest):
        y = req.y.to_numpy()
        gamma = np.asarray(req.positions, dtype=float)
        if y.shape[0] != gamma.size:
            raise ValueError("Y row count must match the number of positions")

        iterations = converged = residuals = None
        if req.solver == "ap_gridless":
            rep = ap_gridless(y, gamma, req.k, tol=req.tol, max_iter=req.max_iter)
        elif req.solver == "ap_ula":
            rep = ap_ula(y, req.k, tol=req.tol, max_iter=req.max_iter)
        elif req.solver == "admm":
            rep = admm_gridless(y, req.k, tau=req.tau, rho=req.rho,
                                max_iter=req.max_iter)
        else:
            rep = None

        if rep is not None:
            theta = rep.theta_hat
            shortfall = rep.shortfall
            iterations = rep.iterations
            converged = rep.converged
            if req.include_residuals:
                residuals = rep.residual_history.tolist()
        elif req.solver == "root_music":
            theta = classic_root_music(y, req.k)
            shortfall = theta.size < req.k
        elif req.solver == "irregular_root_music":
            theta = irregular_root_music(y, gamma, req.k)
            shortfall = theta.size < req.k
        else:  # cbf
            theta = cbf_estimate(y, gamma, req.k)
            shortfall = theta.size < req.k

        return models.EstimateResponse(
            solver=req.solver,
            theta_deg=np.rad2deg(theta).tolist(),
            theta_rad=theta.tolist(),
            shortfall=shortfall,
            iterations=iterations,
            converged=converged,
            residuals=residuals,
        )

    @app.post("/spectrum", response_model=models.SpectrumResponse)
    def spectrum(req: models.SpectrumRequest):
        y = req.y.to_numpy()
        gamma = np.asarray(req.positions, dtype=float)
        if y.shape[0] != gamma.size:
            raise ValueError("Y row count must match the number of positions")
        if req.k >= gamma.size:
            raise ValueError("need K < M")
        r = sample_covariance(y)
        basis = subspace_split(r, req.k)
        g = noise_projector(basis)
        phases, values = circle_samples(g, gamma, req.n_points)
        z = unit_circle_minima(g, gamma, req.k)
        minima_phases = np.angle(z)
        return models.SpectrumResponse(
            phase_deg=np.rad2deg(phases).tolist(),
            value=values.tolist(),
            minima_phase_deg=np.rad2deg(minima_phases).tolist(),
            minima_theta_deg=np.rad2deg(z_to_theta(z)).tolist(),
        )

    @app.post("/experiment/trial", response_model=models.SynthesizeResponse)
    def experiment_trial(req: models.TrialRequest):
        geom, scene, meas = synthesize_trial(req.config, req.sweep_index,
                                             req.trial_index)
        return models.SynthesizeResponse(
            positions=geom.positions.tolist(),
            geometry_kind=geom.kind,
            thetas_true_deg=np.rad2deg(scene.thetas).tolist(),
            amplitudes=scene.amplitudes.tolist(),
            snr_db=_wire_snr(meas.snr_db),
            y=models.ComplexMatrix.from_numpy(meas.Y),
        )

    @app.post("/experiment/run", response_model=models.ExperimentResponse)
    def experiment_run(req: models.ExperimentRequest):
        result = run_experiment(req.config)
        rows = [dict(row, sweep_var=_wire_snr(row["sweep_var"]))
                for row in result.rows]
        estimates = None
        if req.include_estimates:
            estimates = [
                models.TrialEstimateRow(
                    sweep_var=_wire_snr(t.sweep_var),
                    solver=t.solver,
                    trial=t.trial_index,
                    theta_true_deg=np.rad2deg(t.theta_true).tolist(),
                    theta_hat_deg=np.rad2deg(t.theta_hat).tolist(),
                    mse_deg2=t.per_trial_mse,
                )
                for t in result.trials
            ]
        return models.ExperimentResponse(rows=rows, failures=result.failures,
                                         estimates=estimates)

    return app
