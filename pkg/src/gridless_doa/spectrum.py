"""Subspace splitting, null spectra, polynomial rooting, and minima search.

The null spectrum of a covariance matrix is the quadratic form of its noise
projector evaluated along the unit circle. For equally spaced sensors it
expands into a Laurent polynomial that can be rooted; for arbitrary sensor
positions it is a sum of non-integer powers and is instead minimized
numerically on the circle (dense grid bracketing plus golden-section
refinement).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSplitWarning, EstimationFailureError, NumericalWarning

__all__ = [
    "SubspaceBasis",
    "NoiseProjector",
    "NullSpectrumPoly",
    "subspace_split",
    "noise_projector",
    "null_spectrum_poly",
    "poly_roots",
    "select_music_roots",
    "irregular_null_spectrum",
    "circle_samples",
    "unit_circle_minima",
    "golden_section_minimize",
]

# Width below which two samples count as one plateau value.
_PLATEAU_TOL = 1e-14
# Phase gap below which two roots are numerical copies of one double root.
_ROOT_MERGE_GAP = 1e-5


def _hermitize(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def _check_hermitian(a: np.ndarray, name: str, tol: float = 1e-8) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    scale = max(1.0, float(np.linalg.norm(a)))
    if np.linalg.norm(a - a.conj().T) > tol * scale:
        raise ValueError(f"{name} must be Hermitian")
    return _hermitize(a)


@dataclass(frozen=True)
class SubspaceBasis:
    """Signal/noise eigenpairs of a Hermitian covariance, split at rank K."""

    u_signal: np.ndarray
    u_noise: np.ndarray
    lambda_signal: np.ndarray
    lambda_noise: np.ndarray
    degenerate: bool = False

    @property
    def m(self) -> int:
        return self.u_signal.shape[0]

    @property
    def k(self) -> int:
        return self.u_signal.shape[1]


@dataclass(frozen=True)
class NoiseProjector:
    """Orthogonal projector G = U_N U_N^H onto the noise subspace."""

    g: np.ndarray

    def __post_init__(self):
        g = _check_hermitian(self.g, "G")
        scale = max(1.0, float(np.linalg.norm(g)))
        if np.linalg.norm(g @ g - g) > 1e-8 * scale:
            raise ValueError("G must be an orthogonal projector (G^2 = G)")
        object.__setattr__(self, "g", g)

    @property
    def m(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True)
class NullSpectrumPoly:
    """Laurent polynomial D(z) = sum_i d_i z^i for i in -(M-1)..(M-1).

    ``coeffs[i + M - 1]`` stores d_i. Conjugate symmetry d_{-i} = conj(d_i)
    holds because the generating projector is Hermitian.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        c.setflags(write=False)
        if c.ndim != 1 or c.size % 2 != 1:
            raise ValueError("coefficient vector must have odd length 2M-1")
        object.__setattr__(self, "coeffs", c)

    @property
    def m(self) -> int:
        return (self.coeffs.size + 1) // 2

    def __call__(self, z):
        """Evaluate D(z) = z^{-(M-1)} * sum_j coeffs[j] z^j."""
        z = np.asarray(z, dtype=complex)
        # polyval wants the highest power first
        return np.polyval(self.coeffs[::-1], z) * z ** (-(self.m - 1))


def subspace_split(r: np.ndarray, k: int) -> SubspaceBasis:
    """Split the eigenpairs of Hermitian ``r`` into signal and noise parts.

    Eigenvalues are sorted descending; the top ``k`` pairs form the signal
    subspace. A ``degenerate`` flag is set when the k-th and (k+1)-th
    eigenvalues coincide at working precision, in which case the split is
    arbitrary.
    """
    r = _check_hermitian(r, "R")
    m = r.shape[0]
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= K < M, got K={k}, M={m}")
    w, v = np.linalg.eigh(r)
    w, v = w[::-1], v[:, ::-1]
    gap = w[k - 1] - w[k]
    degenerate = gap <= 1e-12 * max(1.0, abs(w[0]))
    if degenerate:
        warnings.warn(
            f"eigenvalues {k} and {k + 1} coincide (gap {gap:.3e}); "
            "signal/noise split is ambiguous",
            DegenerateSplitWarning,
        )
    return SubspaceBasis(
        u_signal=v[:, :k],
        u_noise=v[:, k:],
        lambda_signal=w[:k],
        lambda_noise=w[k:],
        degenerate=degenerate,
    )


def noise_projector(basis: SubspaceBasis) -> NoiseProjector:
    """G = U_N U_N^H for the noise eigenvectors of a subspace split."""
    un = basis.u_noise
    return NoiseProjector(_hermitize(un @ un.conj().T))


def _projector_matrix(g) -> np.ndarray:
    return g.g if isinstance(g, NoiseProjector) else np.asarray(g, dtype=complex)


def null_spectrum_poly(g) -> NullSpectrumPoly:
    """Diagonal sums of the noise projector as Laurent coefficients.

    d_i collects the entries G_{m,n} with n - m = i, which makes the
    unit-circle zeros of D(z) coincide with the harmonics of the underlying
    Vandermonde decomposition under z = exp(-j*pi*sin(theta)).
    """
    gm = _projector_matrix(g)
    m = gm.shape[0]
    coeffs = np.empty(2 * m - 1, dtype=complex)
    for i in range(-(m - 1), m):
        coeffs[i + m - 1] = gm.diagonal(i).sum()
    return NullSpectrumPoly(coeffs)


def poly_roots(poly: NullSpectrumPoly) -> np.ndarray:
    """All roots of z^{M-1} D(z), via the companion-matrix eigenvalues.

    Near-zero leading coefficients are deflated (with a warning) before
    rooting, since they produce spurious near-infinite roots.
    """
    # descending powers: coeffs[::-1][0] multiplies z^{2M-2}
    c = poly.coeffs[::-1].copy()
    scale = np.max(np.abs(c))
    if scale == 0:
        raise ValueError("zero polynomial has no roots")
    n_deflate = 0
    while c.size > 1 and abs(c[0]) < 1e-14 * scale:
        c = c[1:]
        n_deflate += 1
    if n_deflate:
        warnings.warn(
            f"leading coefficient below 1e-14; deflated degree by {n_deflate}",
            NumericalWarning,
        )
    return np.roots(c)


def _circular_gap(a: float, b: float) -> float:
    d = abs(a - b) % (2 * np.pi)
    return min(d, 2 * np.pi - d)


def select_music_roots(roots: np.ndarray, k: int) -> np.ndarray:
    """The K roots on or inside the unit circle with largest modulus.

    Ties are broken toward smaller |angle(z)|. Numerical twins of a double
    root that both landed inside the circle (phase gap below 1e-5 rad) are
    collapsed so that K distinct harmonics are returned whenever possible.
    """
    roots = np.asarray(roots, dtype=complex)
    candidates = roots[np.abs(roots) <= 1 + 1e-9]
    if candidates.size < k:
        raise EstimationFailureError(
            f"only {candidates.size} roots inside the unit circle, need {k}"
        )
    order = np.lexsort((np.abs(np.angle(candidates)), -np.abs(candidates)))
    ranked = candidates[order]
    chosen: list[complex] = []
    skipped: list[complex] = []
    for z in ranked:
        if len(chosen) == k:
            break
        phase = np.angle(z)
        if any(_circular_gap(phase, np.angle(c)) < _ROOT_MERGE_GAP for c in chosen):
            skipped.append(z)
        else:
            chosen.append(z)
    for z in skipped:
        if len(chosen) == k:
            break
        chosen.append(z)
    return np.asarray(chosen[:k], dtype=complex)


def _irregular_powers(gamma: np.ndarray, z: np.ndarray) -> np.ndarray:
    """w(gamma, z) columns: z^gamma via the principal logarithm."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return np.exp(np.outer(gamma, np.log(z)))


def irregular_null_spectrum(g, gamma, z):
    """Evaluate sum_{m,n} g_{m,n} z^{gamma_n - gamma_m} at one or more z.

    Implemented as the quadratic form w(gamma, 1/z)^T G w(gamma, z), with
    non-integer powers on the principal branch. On the unit circle the
    value is real and equals ||U_N^H w(gamma, z)||^2 >= 0, and a real
    result is returned; off the circle the complex value is returned.
    """
    gm = _projector_matrix(g)
    gamma = np.asarray(gamma, dtype=float)
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z_arr == 0):
        raise ValueError("the null spectrum is undefined at z = 0")
    w_right = _irregular_powers(gamma, z_arr)
    w_left = _irregular_powers(gamma, 1 / z_arr)
    vals = (w_left * (gm @ w_right)).sum(axis=0)
    if np.all(np.abs(np.abs(z_arr) - 1) <= 1e-12):
        vals = vals.real
    return vals[0] if np.isscalar(z) or np.ndim(z) == 0 else vals


def _circle_values(gm: np.ndarray, gamma: np.ndarray, phases: np.ndarray,
                   w: np.ndarray | None = None) -> np.ndarray:
    """Real null-spectrum values at z = exp(j*phase) for a phase vector."""
    if w is None:
        w = np.exp(1j * np.outer(gamma, phases))
    return (w.conj() * (gm @ w)).sum(axis=0).real


# The phase grid (and its power matrix) is identical across the thousands of
# minima searches inside an AP solve; keep a few recent grids around.
_GRID_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
_GRID_CACHE_MAX = 8


def _phase_grid(gamma: np.ndarray, n_points: int,
                closed: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Evenly spaced phases over (-pi, pi] (or [-pi, pi] when closed) with
    the matching power matrix, cached per geometry."""
    key = (gamma.tobytes(), n_points, closed)
    hit = _GRID_CACHE.get(key)
    if hit is None:
        start = 0 if closed else 1
        phases = -np.pi + 2 * np.pi * np.arange(start, n_points + 1) / n_points
        hit = (phases, np.exp(1j * np.outer(gamma, phases)))
        if len(_GRID_CACHE) >= _GRID_CACHE_MAX:
            _GRID_CACHE.pop(next(iter(_GRID_CACHE)))
        _GRID_CACHE[key] = hit
    return hit


def circle_samples(g, gamma, n_points: int = 3600) -> tuple[np.ndarray, np.ndarray]:
    """Evenly spaced unit-circle samples (phases in (-pi, pi], values)."""
    if n_points < 2:
        raise ValueError("need at least 2 sample points")
    gm = _projector_matrix(g)
    gamma = np.asarray(gamma, dtype=float)
    phases, w = _phase_grid(gamma, n_points)
    return phases, _circle_values(gm, gamma, phases, w)


def golden_section_minimize(f, lo: float, hi: float, tol: float = 1e-10):
    """Golden-section search for the minimum of a unimodal scalar function.

    Returns ``(x, f(x))`` with the bracket narrowed below ``tol``.
    """
    x, v = _golden_batch(lambda xs: np.array([f(x) for x in xs]),
                         np.array([lo]), np.array([hi]), tol)
    return float(x[0]), float(v[0])


_INVPHI = (np.sqrt(5) - 1) / 2
_INVPHI2 = (3 - np.sqrt(5)) / 2


def _golden_batch(f_batch, lo: np.ndarray, hi: np.ndarray, tol: float):
    """Golden-section refinement run in lockstep over equal-width brackets.

    ``f_batch`` maps a vector of points to a vector of values; each
    iteration evaluates one new point per bracket.
    """
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    width = float(np.max(hi - lo))
    x1 = lo + _INVPHI2 * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1 = f_batch(x1)
    f2 = f_batch(x2)
    while width > tol:
        left = f1 < f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        x_old1, f_old1 = x1, f1
        x1 = np.where(left, lo + _INVPHI2 * (hi - lo), x2)
        f1 = np.where(left, np.nan, f2)
        x2 = np.where(left, x_old1, lo + _INVPHI * (hi - lo))
        f2 = np.where(left, f_old1, np.nan)
        fresh = np.where(left, x1, x2)
        f_fresh = f_batch(fresh)
        f1 = np.where(left, f_fresh, f1)
        f2 = np.where(left, f2, f_fresh)
        width *= _INVPHI
    mid = (lo + hi) / 2
    return mid, f_batch(mid)


def _minima_engine(val_fn, gamma, k, grid_mult, tol):
    """Grid bracketing plus golden-section refinement of circle minima.

    ``val_fn(phases, w)`` returns real spectrum values; ``w`` is the
    precomputed power matrix for the standing grid and None elsewhere.

    The grid spans the closed interval [-pi, pi] (both endpoint values are
    evaluated; they differ for non-integer sensor positions). Interior grid
    points bracket in the usual way; a value decreasing into an endpoint
    brackets against that endpoint, so harmonics hugging the boundary are
    still found. No wraparound pairing across +/-pi is performed.

    Returns refined phases of the K smallest local minima (possibly fewer).
    """
    m = gamma.size
    n_grid = grid_mult * m
    phases, w_grid = _phase_grid(gamma, n_grid, closed=True)
    vals = val_fn(phases, w_grid)

    dl = vals[:-2] - vals[1:-1]  # left neighbor minus center
    dr = vals[2:] - vals[1:-1]   # right neighbor minus center
    idx = 1 + np.nonzero((dl > _PLATEAU_TOL) & (dr >= -_PLATEAU_TOL))[0]
    lo = list(phases[idx - 1])
    hi = list(phases[idx + 1])
    if vals[1] - vals[0] > _PLATEAU_TOL:
        lo.append(phases[0])
        hi.append(phases[1])
    if vals[-2] - vals[-1] > _PLATEAU_TOL:
        lo.append(phases[-2])
        hi.append(phases[-1])
    if not lo:
        return np.empty(0, dtype=float)

    refined, refined_vals = _golden_batch(
        lambda ph: val_fn(ph, None), np.asarray(lo), np.asarray(hi), tol
    )
    # Minima whose circular distance is below half a grid cell sit in one
    # basin reached from both ends of the interval (or correspond to the
    # endfire z-ambiguity); keep the best representative. Returned phases
    # are ordered by ascending spectrum value.
    merge_gap = np.pi / n_grid
    order = np.argsort(refined_vals, kind="stable")
    chosen: list[int] = []
    for j in order:
        if len(chosen) == k:
            break
        if all(_circular_gap(refined[j], refined[c]) > merge_gap for c in chosen):
            chosen.append(j)
    return refined[np.asarray(chosen, dtype=int)]


def _signal_basis_minima(u_signal, gamma, k, grid_mult, tol):
    """Minima via the complement identity D = M - ||U_S^H w||^2 on |z|=1.

    Cheaper than forming the noise projector when K << M; used by the
    decomposition hot path.
    """
    m = gamma.size
    us_h = np.ascontiguousarray(u_signal.conj().T)
    gamma_col = 1j * gamma[:, None]

    def val_fn(phases, w):
        if w is None:
            w = np.exp(gamma_col * phases)
        b = us_h @ w
        return m - np.einsum("ij,ij->j", b.conj(), b).real

    return _minima_engine(val_fn, gamma, k, grid_mult, tol)


def unit_circle_minima(
    g,
    gamma,
    k: int,
    grid_mult: int = 10,
    tol: float = 1e-10,
) -> np.ndarray:
    """Arguments of the K smallest local minima of the null spectrum on |z|=1.

    A grid of ``grid_mult * M`` evenly spaced phases over (-pi, pi] locates
    brackets; each is refined by golden-section search to phase tolerance
    ``tol``. The phase pi is a domain boundary (the spectrum is
    discontinuous there for non-uniform arrays), so no wraparound
    bracketing is performed. Plateaus resolve to their leftmost sample.

    Returns the unit-modulus harmonics for the minima found; the result is
    shorter than K when fewer local minima exist, and callers decide how to
    treat the shortfall.
    """
    if k < 1:
        raise ValueError("need K >= 1")
    gm = _projector_matrix(g)
    gamma = np.asarray(gamma, dtype=float)
    gamma_col = 1j * gamma[:, None]

    def val_fn(phases, w):
        if w is None:
            w = np.exp(gamma_col * phases)
        return np.einsum("ij,ij->j", w.conj(), gm @ w).real

    refined = _minima_engine(val_fn, gamma, k, grid_mult, tol)
    return np.exp(1j * refined)
