"""Set projections used by the alternating-projection and ADMM solvers.

Three building blocks: the orthogonal projection onto Hermitian Toeplitz
matrices (diagonal averaging), the orthogonal projection onto the PSD cone
(eigenvalue clamping), and the rank-K harmonic-set projection (decompose,
clamp powers, rebuild — not orthogonal, but always lands in the set). The
block-set projection composes one of these with fixed off-diagonal data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .errors import NumericalWarning
from .ivd import _ivd_core
from .spectrum import _hermitize

__all__ = [
    "AugmentedBlock",
    "project_toeplitz",
    "toeplitz_first_row",
    "project_psd",
    "project_irregular_toeplitz",
    "project_block_set",
    "assemble_block",
]


@dataclass(frozen=True)
class AugmentedBlock:
    """Hermitian (M+L)x(M+L) matrix with T / Y / Q block views."""

    s: np.ndarray
    m: int
    l: int

    def __post_init__(self):
        s = np.array(self.s, dtype=complex)
        s.setflags(write=False)
        object.__setattr__(self, "s", s)
        n = self.m + self.l
        if s.shape != (n, n):
            raise ValueError(f"S must be {n}x{n} for M={self.m}, L={self.l}")
        scale = max(1.0, float(np.linalg.norm(s)))
        if np.linalg.norm(s - s.conj().T) > 1e-10 * scale:
            raise ValueError("S must be Hermitian")

    @property
    def t_block(self) -> np.ndarray:
        return self.s[: self.m, : self.m]

    @property
    def y_block(self) -> np.ndarray:
        return self.s[: self.m, self.m:]

    @property
    def q_block(self) -> np.ndarray:
        return self.s[self.m:, self.m:]


def assemble_block(t: np.ndarray, y: np.ndarray, q: np.ndarray) -> np.ndarray:
    """[[T, Y], [Y^H, Q]] as one matrix."""
    return np.block([[t, y], [y.conj().T, q]])


def toeplitz_first_row(a: np.ndarray) -> np.ndarray:
    """First row of the nearest Hermitian Toeplitz matrix to ``a``.

    Entry k is the mean of the k-th upper diagonal of (A + A^H)/2; the lower
    diagonals of the projection are the conjugates.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("input must be a square matrix")
    h = _hermitize(a)
    row = np.array([h.diagonal(i).mean() for i in range(a.shape[0])])
    row[0] = row[0].real
    return row


def project_toeplitz(a: np.ndarray) -> np.ndarray:
    """Orthogonal (Frobenius-nearest) projection onto Hermitian Toeplitz."""
    row = toeplitz_first_row(a)
    return toeplitz(row.conj(), row)


def project_psd(a: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the PSD cone by clamping eigenvalues.

    Inputs are symmetrized first; asymmetry beyond round-off is reported as
    a warning because it signals an upstream error rather than iteration
    noise.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("input must be a square matrix")
    scale = max(1.0, float(np.linalg.norm(a)))
    if np.linalg.norm(a - a.conj().T) > 1e-10 * scale:
        warnings.warn("projecting a visibly non-Hermitian matrix; symmetrizing",
                      NumericalWarning)
    w, v = np.linalg.eigh(_hermitize(a))
    w = np.clip(w, 0, None)
    return _hermitize((v * w) @ v.conj().T)


def project_irregular_toeplitz(
    a: np.ndarray,
    gamma,
    k: int,
    grid_mult: int = 10,
    tol: float = 1e-10,
) -> np.ndarray:
    """Projection onto the rank-K harmonic set for sensor positions gamma.

    Decomposes the (Hermitized) input, clamps negative powers to zero so the
    result stays in the set, and rebuilds. The output has rank at most K but
    is not in general the Frobenius-nearest set member. When fewer than K
    spectrum minima exist, the found subset is used (the set only bounds the
    rank from above).
    """
    gamma = np.asarray(gamma, dtype=float)
    m = gamma.size
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= K < M, got K={k}, M={m}")
    h = _hermitize(np.asarray(a, dtype=complex))
    if h.shape != (m, m):
        raise ValueError("input and gamma disagree on the number of sensors")
    phases, c = _ivd_core(h, gamma, k, grid_mult, tol)
    c = np.clip(c, 0, None)
    w = np.exp(1j * np.outer(gamma, phases))
    return _hermitize((w * c) @ w.conj().T)


def project_block_set(
    blk: AugmentedBlock,
    y: np.ndarray,
    gamma,
    k: int,
    mode: str = "irregular",
) -> AugmentedBlock:
    """Replace the T block with its set projection and pin the Y blocks.

    ``mode`` selects the rank-K harmonic projection ("irregular") or the
    plain Toeplitz projection ("toeplitz"). The Q block passes through
    untouched and the off-diagonal blocks are overwritten with the
    measurements exactly.
    """
    y = np.asarray(y, dtype=complex)
    if y.shape != (blk.m, blk.l):
        raise ValueError("Y shape disagrees with the block partition")
    if mode == "irregular":
        t_new = project_irregular_toeplitz(blk.t_block, gamma, k)
    elif mode == "toeplitz":
        t_new = project_toeplitz(blk.t_block)
    else:
        raise ValueError(f"unknown projection mode {mode!r}")
    s_new = assemble_block(t_new, y, blk.q_block)
    return AugmentedBlock(s=s_new, m=blk.m, l=blk.l)
