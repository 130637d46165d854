"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..bench import ExperimentConfig, SolverName


class ComplexMatrix(BaseModel):
    """Complex matrix on the wire as separate real and imaginary parts."""

    model_config = ConfigDict(extra="forbid")

    re: list[list[float]]
    im: list[list[float]]

    @model_validator(mode="after")
    def _consistent_shape(self):
        rows = len(self.re)
        if rows == 0 or len(self.im) != rows:
            raise ValueError("re and im must have the same non-zero row count")
        width = len(self.re[0])
        for part in (self.re, self.im):
            if any(len(row) != width for row in part):
                raise ValueError("all rows must have equal length")
        if width == 0:
            raise ValueError("matrix must have at least one column")
        return self

    def to_numpy(self) -> np.ndarray:
        return np.asarray(self.re, dtype=float) + 1j * np.asarray(self.im, dtype=float)

    @classmethod
    def from_numpy(cls, a: np.ndarray) -> "ComplexMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=complex))
        return cls(re=a.real.tolist(), im=a.imag.tolist())


class GeometrySpec(BaseModel):
    """Array geometry: either explicit positions or a generated layout."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["ula", "nua"] = "ula"
    m: Optional[int] = Field(default=None, ge=2)
    alpha: float = 1.0
    beta: float = 0.0
    seed: int = 0
    positions: Optional[list[float]] = None

    @model_validator(mode="after")
    def _positions_or_m(self):
        if self.positions is None and self.m is None:
            raise ValueError("provide either explicit positions or m")
        if self.positions is not None and len(self.positions) < 2:
            raise ValueError("need at least 2 positions")
        return self


class SynthesizeRequest(BaseModel):
    """Simulate measurements for an explicit scene or a random one."""

    model_config = ConfigDict(extra="forbid")

    geometry: GeometrySpec
    l: int = Field(default=1, ge=1)
    snr_db: Optional[float] = None  # null = noiseless
    seed: int = 0
    coherent: bool = False
    # explicit scene
    thetas_deg: Optional[list[float]] = None
    amplitudes: Optional[list[float]] = None
    # random scene
    k: Optional[int] = Field(default=None, ge=1)
    sigma_s: float = Field(default=5.0, gt=0)
    separation_min: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _scene_given(self):
        if self.thetas_deg is None and self.k is None:
            raise ValueError("provide thetas_deg for an explicit scene or k "
                             "for a random one")
        return self


class SynthesizeResponse(BaseModel):
    positions: list[float]
    geometry_kind: str
    thetas_true_deg: list[float]
    amplitudes: list[float]
    snr_db: Optional[float]
    y: ComplexMatrix


class EstimateRequest(BaseModel):
    """One-shot DOA estimation from posted measurements."""

    model_config = ConfigDict(extra="forbid")

    y: ComplexMatrix
    positions: list[float]
    k: int = Field(ge=1)
    solver: SolverName = "irregular_root_music"
    tau: float = Field(default=0.01, gt=0)
    rho: float = Field(default=1.0, gt=0)
    tol: float = Field(default=1e-7, gt=0)
    max_iter: Optional[int] = Field(default=None, ge=1)
    include_residuals: bool = False


class EstimateResponse(BaseModel):
    solver: str
    theta_deg: list[float]
    theta_rad: list[float]
    shortfall: bool = False
    iterations: Optional[int] = None
    converged: Optional[bool] = None
    residuals: Optional[list[float]] = None


class SpectrumRequest(BaseModel):
    """Unit-circle null-spectrum samples from posted measurements."""

    model_config = ConfigDict(extra="forbid")

    y: ComplexMatrix
    positions: list[float]
    k: int = Field(ge=1)
    n_points: int = Field(default=3600, ge=2)


class SpectrumResponse(BaseModel):
    phase_deg: list[float]
    value: list[float]
    minima_phase_deg: list[float]
    minima_theta_deg: list[float]


class TrialRequest(BaseModel):
    """Reproduce one trial of an experiment (for dumps and debugging)."""

    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    sweep_index: int = Field(default=0, ge=0)
    trial_index: int = Field(default=0, ge=0)


class ExperimentRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    include_estimates: bool = False


class TrialEstimateRow(BaseModel):
    sweep_var: Optional[float]  # None = noiseless
    solver: str
    trial: int
    theta_true_deg: list[float]
    theta_hat_deg: list[float]
    mse_deg2: float


class ExperimentResponse(BaseModel):
    rows: list[dict]
    failures: int
    estimates: Optional[list[TrialEstimateRow]] = None


class HealthResponse(BaseModel):
    status: str
    version: str
