"""Harmonic decomposition of structured covariance matrices.

A matrix of the form W diag(c) W^H, where the columns of W are unit-circle
harmonics raised to the (possibly non-integer) sensor positions, is fully
described by its harmonics ``z`` and powers ``c``. This module recovers that
description from the matrix (``ivd``), rebuilds the matrix from it
(``reconstruct``), and wraps both into DOA estimators for non-uniform and
uniform arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .arrays import sample_covariance, z_to_theta
from .errors import DecompositionShortfallError, IllConditionedHarmonicsError
from .spectrum import (
    _check_hermitian,
    _hermitize,
    _irregular_powers,
    _signal_basis_minima,
    noise_projector,
    null_spectrum_poly,
    poly_roots,
    select_music_roots,
    subspace_split,
)

__all__ = [
    "HarmonicModel",
    "irregular_vandermonde",
    "reconstruct",
    "estimate_powers",
    "ivd",
    "irregular_root_music",
    "classic_root_music",
]


def irregular_vandermonde(gamma, z) -> np.ndarray:
    """M x K matrix with columns z_k^gamma (principal branch powers)."""
    gamma = np.asarray(gamma, dtype=float)
    return _irregular_powers(gamma, z)


@dataclass(frozen=True)
class HarmonicModel:
    """Unit-circle harmonics ``z``, real powers ``c``, sensor positions ``gamma``.

    Powers of a valid set member are non-negative; noisy inputs can produce
    negative estimates, which are kept as-is and flagged only when a clamped
    copy is made for projection purposes.
    """

    z: np.ndarray
    c: np.ndarray
    gamma: np.ndarray
    clamped: bool = field(default=False)

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=complex))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        gamma = np.asarray(self.gamma, dtype=float)
        for name, arr in (("z", z), ("c", c), ("gamma", gamma)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if z.size < 1 or z.shape != c.shape:
            raise ValueError("z and c must be non-empty vectors of equal length")
        if np.any(np.abs(np.abs(z) - 1) >= 1e-9):
            raise ValueError("harmonics must lie on the unit circle")
        phases = np.sort(np.angle(z))
        if z.size > 1:
            gaps = np.diff(phases)
            wrap = 2 * np.pi - (phases[-1] - phases[0])
            if min(gaps.min(), wrap) <= 1e-12:
                raise ValueError("harmonics must be pairwise distinct")

    @property
    def k(self) -> int:
        return self.z.size

    @property
    def thetas(self) -> np.ndarray:
        return z_to_theta(self.z)

    def clamped_nonnegative(self) -> "HarmonicModel":
        """Copy with negative powers clamped to zero (set membership)."""
        return replace(self, c=np.clip(self.c, 0, None), clamped=True)


def reconstruct(model: HarmonicModel) -> np.ndarray:
    """W diag(c) W^H; Hermitian, PSD whenever all powers are non-negative."""
    w = irregular_vandermonde(model.gamma, model.z)
    return _hermitize((w * model.c) @ w.conj().T)


def estimate_powers(t: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Least-squares powers c = diag(W† T W†^H) with W† = (W^H W)^{-1} W^H.

    Requires W to have full column rank; the tiny imaginary parts of the
    diagonal (projector round-off) are discarded.
    """
    t = np.asarray(t, dtype=complex)
    w = np.asarray(w, dtype=complex)
    sv = np.linalg.svd(w, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise IllConditionedHarmonicsError(
            f"harmonic matrix is rank deficient (sv ratio {sv[-1] / sv[0]:.2e})"
        )
    w_dag = np.linalg.solve(w.conj().T @ w, w.conj().T)
    return np.diag(w_dag @ t @ w_dag.conj().T).real


def _circular_gap_matrix(phases: np.ndarray) -> np.ndarray:
    d = np.abs(phases[:, None] - phases[None, :]) % (2 * np.pi)
    return np.minimum(d, 2 * np.pi - d)


def _ivd_core(t, gamma, k, grid_mult, tol):
    """Harmonic phases and powers, without validation or model wrapping.

    The spectrum search uses the identity G = I - U_S U_S^H, so only the K
    signal eigenvectors are needed. A harmonic set too close to collinear
    for the power estimate is thinned to its best-conditioned subset, which
    downgrades the result to a shortfall. Returns possibly fewer than K
    phases; raises only when no usable minimum exists.
    """
    m = gamma.size
    _, v = np.linalg.eigh(t)  # ascending eigenvalues
    u_signal = v[:, m - k:]
    phases = _signal_basis_minima(u_signal, gamma, k, grid_mult, tol)
    if phases.size == 0:
        raise DecompositionShortfallError(
            "found no spectrum minima", found=0, requested=k
        )
    while True:
        w = np.exp(1j * np.outer(gamma, phases))
        try:
            c = estimate_powers(t, w)
            return phases, c
        except IllConditionedHarmonicsError:
            if phases.size == 1:
                raise
            # phases arrive ordered by spectrum value; drop the worse member
            # of the closest pair and retry
            gaps = _circular_gap_matrix(phases)
            np.fill_diagonal(gaps, np.inf)
            i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
            phases = np.delete(phases, max(i, j))


def ivd(
    t: np.ndarray,
    gamma,
    k: int,
    grid_mult: int = 10,
    tol: float = 1e-10,
    allow_shortfall: bool = False,
) -> HarmonicModel:
    """Decompose a Hermitian matrix into K unit-circle harmonics and powers.

    The trailing M-K eigenvectors span the noise subspace; the harmonics are
    the arguments of the K smallest local minima of the resulting null
    spectrum on the unit circle, and the powers follow by least squares.
    For an exact set member with distinct harmonics this recovers the
    generating model to search tolerance.

    Fewer than K minima raise ``DecompositionShortfallError`` unless
    ``allow_shortfall`` is set, in which case the partial model is returned.
    """
    gamma = np.asarray(gamma, dtype=float)
    t = _check_hermitian(t, "T")
    m = gamma.size
    if t.shape[0] != m:
        raise ValueError("T and gamma disagree on the number of sensors")
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= K < M, got K={k}, M={m}")

    phases, c = _ivd_core(t, gamma, k, grid_mult, tol)
    if phases.size < k and not allow_shortfall:
        raise DecompositionShortfallError(
            f"found {phases.size} spectrum minima, need {k}",
            found=phases.size,
            requested=k,
        )
    z = np.exp(1j * phases)
    order = np.argsort(z_to_theta(z))
    return HarmonicModel(z=z[order], c=c[order], gamma=gamma)


def irregular_root_music(y: np.ndarray, gamma, k: int) -> np.ndarray:
    """DOAs from non-uniform array snapshots via harmonic decomposition.

    The snapshot count must be at least K, otherwise the noise subspace of
    the sample covariance cannot be estimated.
    """
    y = np.asarray(y, dtype=complex)
    if y.ndim != 2:
        raise ValueError("Y must be an M x L matrix")
    if y.shape[1] < k:
        raise ValueError(f"need L >= K snapshots, got L={y.shape[1]}, K={k}")
    t = sample_covariance(y)
    model = ivd(t, gamma, k)
    return np.sort(model.thetas)


def classic_root_music(y: np.ndarray, k: int) -> np.ndarray:
    """Polynomial root-MUSIC for half-wavelength ULA snapshots.

    Assumes sensor positions [0, 1, ..., M-1] in half-wavelengths. The null
    spectrum polynomial is rooted via the companion matrix, and the K
    in-circle roots with largest modulus map to DOAs.
    """
    y = np.asarray(y, dtype=complex)
    if y.ndim != 2:
        raise ValueError("Y must be an M x L matrix")
    if y.shape[1] < k:
        raise ValueError(f"need L >= K snapshots, got L={y.shape[1]}, K={k}")
    r = sample_covariance(y)
    basis = subspace_split(r, k)
    g = noise_projector(basis)
    roots = poly_roots(null_spectrum_poly(g))
    z = select_music_roots(roots, k)
    return np.sort(z_to_theta(z))
