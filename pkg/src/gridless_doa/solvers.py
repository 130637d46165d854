"""Gridless DOA solvers: alternating projections and an ADMM baseline.

Both AP variants iterate between the PSD cone and a structured block set
that pins the measurements and constrains the covariance block; they differ
only in that constraint (rank-K harmonic set for arbitrary geometries,
Hermitian Toeplitz for half-wavelength ULAs). The ADMM solver addresses the
convex trace relaxation for ULAs with closed-form updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .arrays import z_to_theta
from .errors import DivergenceError
from .ivd import ivd
from .projections import (
    assemble_block,
    project_irregular_toeplitz,
    project_psd,
    project_toeplitz,
    toeplitz_first_row,
)

__all__ = [
    "SolverReport",
    "AdmmState",
    "default_max_iter",
    "ap_gridless",
    "ap_ula",
    "admm_solve",
    "admm_gridless",
]

_DEFAULT_TOL = 1e-7
_DIVERGENCE_FACTOR = 1e6


def default_max_iter(k: int) -> int:
    """Iteration cap used when none is given (10000, independent of K)."""
    if k < 1:
        raise ValueError("need K >= 1")
    return 10000


@dataclass(frozen=True)
class SolverReport:
    """Result of one solver run.

    ``theta_hat`` is sorted ascending and has K entries, or fewer with
    ``shortfall`` set when the final decomposition found fewer minima.
    ``residual_history`` records the per-iteration convergence measure
    (iterate change for AP, constraint residual for ADMM); ``gap_history``
    records the AP inter-set distance and is empty for ADMM.
    """

    theta_hat: np.ndarray
    t_opt: np.ndarray
    iterations: int
    converged: bool
    residual_history: np.ndarray
    gap_history: np.ndarray = field(default_factory=lambda: np.empty(0))
    shortfall: bool = False


@dataclass(frozen=True)
class AdmmState:
    """ADMM variables after an update sweep; S is PSD by construction."""

    q: np.ndarray
    u: np.ndarray
    y_hat: np.ndarray
    s: np.ndarray
    lam: np.ndarray
    tau: float
    rho: float

    def __post_init__(self):
        if self.tau <= 0 or self.rho <= 0:
            raise ValueError("tau and rho must be strictly positive")


def _initial_block(y: np.ndarray) -> np.ndarray:
    m, l = y.shape
    return assemble_block(np.zeros((m, m), dtype=complex), y, np.eye(l, dtype=complex))


def _final_report(t_final, gamma, k, iterations, converged, residuals, gaps):
    model = ivd(t_final, gamma, k, allow_shortfall=True)
    theta = np.sort(z_to_theta(model.z))
    return SolverReport(
        theta_hat=theta,
        t_opt=t_final,
        iterations=iterations,
        converged=converged,
        residual_history=np.asarray(residuals),
        gap_history=np.asarray(gaps),
        shortfall=model.k < k,
    )


def _ap_run(y, project_t, tol, max_iter):
    m, l = y.shape
    l_prev = _initial_block(y)
    yh = y.conj().T
    limit = _DIVERGENCE_FACTOR * max(1.0, float(np.linalg.norm(y)))
    residuals, gaps = [], []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        h = project_psd(l_prev)
        t_new = project_t(h[:m, :m])
        l_cur = np.empty_like(l_prev)
        l_cur[:m, :m] = t_new
        l_cur[:m, m:] = y
        l_cur[m:, :m] = yh
        l_cur[m:, m:] = h[m:, m:]
        res = float(np.linalg.norm(l_cur - l_prev))
        gaps.append(float(np.linalg.norm(l_cur - h)))
        residuals.append(res)
        if not math.isfinite(res) or res > limit:
            raise DivergenceError(
                f"iterate change {res:.3e} exceeds divergence threshold"
            )
        l_prev = l_cur
        if res <= tol:
            converged = True
            break
    return l_prev, iterations, converged, residuals, gaps


def ap_gridless(
    y: np.ndarray,
    gamma,
    k: int,
    tol: float = _DEFAULT_TOL,
    max_iter: int | None = None,
) -> SolverReport:
    """Alternate between the PSD cone and the rank-K harmonic block set.

    Works for any sensor positions ``gamma``. Starts from the block matrix
    with zero covariance, pinned measurements, and identity free block;
    stops when the iterate change drops below ``tol`` or the cap is hit.
    The DOAs come from decomposing the final covariance block.
    """
    y = np.asarray(y, dtype=complex)
    gamma = np.asarray(gamma, dtype=float)
    m = gamma.size
    if y.ndim != 2 or y.shape[0] != m:
        raise ValueError("Y must be M x L with M matching gamma")
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= K < M, got K={k}, M={m}")
    if max_iter is None:
        max_iter = default_max_iter(k)

    project_t = lambda t: project_irregular_toeplitz(t, gamma, k)
    l_final, iterations, converged, residuals, gaps = _ap_run(
        y, project_t, tol, max_iter
    )
    return _final_report(
        l_final[:m, :m], gamma, k, iterations, converged, residuals, gaps
    )


def ap_ula(
    y: np.ndarray,
    k: int,
    tol: float = _DEFAULT_TOL,
    max_iter: int | None = None,
) -> SolverReport:
    """AP with the Toeplitz projection, for half-wavelength ULA snapshots.

    The caller guarantees the measurements come from sensor positions
    [0, 1, ..., M-1]. The constraint set here (all Hermitian Toeplitz
    matrices, any rank) is convex, which makes this variant robust at the
    cost of less sharply rank-limited solutions.
    """
    y = np.asarray(y, dtype=complex)
    if y.ndim != 2:
        raise ValueError("Y must be an M x L matrix")
    m = y.shape[0]
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= K < M, got K={k}, M={m}")
    if max_iter is None:
        max_iter = default_max_iter(k)

    l_final, iterations, converged, residuals, gaps = _ap_run(
        y, project_toeplitz, tol, max_iter
    )
    gamma = np.arange(m, dtype=float)
    return _final_report(
        l_final[:m, :m], gamma, k, iterations, converged, residuals, gaps
    )


def admm_solve(
    y: np.ndarray,
    tau: float,
    rho: float,
    max_iter: int,
    tol: float = 1e-6,
    state: AdmmState | None = None,
) -> tuple[AdmmState, np.ndarray, int, bool]:
    """Run the ADMM update sweeps for the convex trace relaxation.

    Closed-form updates for the free block Q, the Toeplitz parameter u, and
    the denoised measurements, followed by a PSD projection for S and dual
    ascent for the multiplier. Stops when the constraint residual
    ||S - block(u, Y_hat, Q)||_F falls below ``tol`` or after ``max_iter``
    sweeps. Returns (state, residual history, iterations, converged).
    """
    y = np.asarray(y, dtype=complex)
    m, l = y.shape
    if state is None:
        s = project_psd(_initial_block(y))
        lam = np.zeros((m + l, m + l), dtype=complex)
    else:
        s, lam = state.s, state.lam
        tau, rho = state.tau, state.rho

    eye_l = np.eye(l)
    eye_m = np.eye(m)
    residuals = []
    converged = False
    iterations = 0
    q = np.eye(l, dtype=complex)
    t_u = np.zeros((m, m), dtype=complex)
    y_hat = y.copy()
    for iterations in range(1, max_iter + 1):
        s_t, s_y, s_q = s[:m, :m], s[:m, m:], s[m:, m:]
        lam_t, lam_y, lam_q = lam[:m, :m], lam[:m, m:], lam[m:, m:]

        q = (s_q + s_q.conj().T) / 2 + (lam_q - (tau / 2) * eye_l) / rho
        t_u = project_toeplitz(s_t + lam_t / rho) - (tau / (2 * rho)) * eye_m
        y_hat = (y + rho * (s_y + s[m:, :m].conj().T) + 2 * lam_y) / (2 * rho + 1)

        b = assemble_block(t_u, y_hat, q)
        s = project_psd(b - lam / rho)
        lam = lam + rho * (s - b)

        res = float(np.linalg.norm(s - b))
        residuals.append(res)
        if not math.isfinite(res):
            raise DivergenceError("ADMM produced a non-finite iterate")
        if res <= tol:
            converged = True
            break

    final = AdmmState(
        q=q, u=t_u[:, 0].copy(), y_hat=y_hat, s=s, lam=lam, tau=tau, rho=rho
    )
    return final, np.asarray(residuals), iterations, converged


def admm_gridless(
    y: np.ndarray,
    k: int,
    tau: float = 0.01,
    rho: float = 1.0,
    max_iter: int | None = None,
    tol: float = 1e-6,
) -> SolverReport:
    """ADMM baseline for ULA measurements; DOAs from the optimal Toeplitz.

    ``tau`` balances data fit against the trace penalty (the paper's
    simulations use 0.01 generally and 1e-5 in the high-SNR single-snapshot
    study); ``rho`` is the augmented-Lagrangian weight.
    """
    y = np.asarray(y, dtype=complex)
    if y.ndim != 2:
        raise ValueError("Y must be an M x L matrix")
    m = y.shape[0]
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= K < M, got K={k}, M={m}")
    if tau <= 0 or rho <= 0:
        raise ValueError("tau and rho must be strictly positive")
    if max_iter is None:
        max_iter = default_max_iter(k)

    state, residuals, iterations, converged = admm_solve(
        y, tau, rho, max_iter, tol=tol
    )
    t_final = toeplitz(state.u, state.u.conj())
    gamma = np.arange(m, dtype=float)
    return _final_report(t_final, gamma, k, iterations, converged, residuals, [])
