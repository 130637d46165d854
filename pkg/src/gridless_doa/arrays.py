"""Array geometries, steering vectors, and the measurement synthesis model.

Positions are always expressed in half-wavelengths, so no carrier frequency
or wavelength parameter appears anywhere. Angles are radians measured from
broadside, restricted to [-pi/2, pi/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ArrayGeometry",
    "SourceScene",
    "MeasurementSet",
    "ula_positions",
    "perturbed_nua",
    "steering_vector",
    "steering_matrix",
    "theta_to_z",
    "z_to_theta",
    "synthesize",
    "sample_covariance",
    "snr_of",
    "save_geometry",
    "load_geometry",
    "as_generator",
]


def as_generator(seed) -> np.random.Generator:
    """Accept an integer seed or an existing Generator; never global state."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ArrayGeometry:
    """Linear array described by sensor positions in half-wavelengths.

    ``kind`` is "ula" for equally spaced sensors (with spacing ``alpha`` and
    offset ``beta``) and "nua" otherwise.
    """

    positions: np.ndarray
    kind: str  # "ula" | "nua"
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        pos = _readonly(np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "positions", pos)
        if pos.ndim != 1 or pos.size < 2:
            raise ValueError("geometry needs at least 2 sensor positions")
        if not np.all(np.isfinite(pos)):
            raise ValueError("sensor positions must be finite")
        if self.kind not in ("ula", "nua"):
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if self.kind == "ula":
            if self.alpha is None or self.beta is None:
                raise ValueError("ULA geometry requires alpha and beta")
            expected = self.alpha * np.arange(pos.size) + self.beta
            if not np.array_equal(pos, expected):
                raise ValueError("ULA positions must equal alpha*[0..M-1] + beta")

    @property
    def m(self) -> int:
        return self.positions.size

    @property
    def is_ula(self) -> bool:
        return self.kind == "ula"


@dataclass(frozen=True)
class SourceScene:
    """True source directions (radians) and per-source amplitudes."""

    thetas: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        th = _readonly(np.asarray(self.thetas, dtype=float))
        am = _readonly(np.asarray(self.amplitudes, dtype=float))
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "amplitudes", am)
        if th.ndim != 1 or th.size < 1:
            raise ValueError("scene needs at least one source")
        if np.any(np.abs(th) >= np.pi / 2):
            raise ValueError("all DOAs must satisfy |theta| < pi/2")
        if am.shape != th.shape:
            raise ValueError("amplitudes must match thetas in length")
        if np.any(am <= 0):
            raise ValueError("amplitudes must be strictly positive")

    @property
    def k(self) -> int:
        return self.thetas.size


@dataclass(frozen=True)
class MeasurementSet:
    """Snapshots Y = Z + N with the noiseless part and noise kept separate."""

    Y: np.ndarray
    Z: np.ndarray
    N: np.ndarray
    snr_db: float = field(default=math.inf)

    def __post_init__(self):
        for name in ("Y", "Z", "N"):
            arr = _readonly(np.asarray(getattr(self, name), dtype=complex))
            object.__setattr__(self, name, arr)
        if self.Y.shape != self.Z.shape or self.Y.shape != self.N.shape:
            raise ValueError("Y, Z, N must share the same shape")
        if not np.allclose(self.Y, self.Z + self.N, rtol=0, atol=1e-12):
            raise ValueError("Y must equal Z + N")
        if np.any(self.N != 0):
            actual = snr_of(self.Z, self.N)
            if abs(actual - self.snr_db) > 1e-9:
                raise ValueError(
                    f"stored snr_db={self.snr_db} but measured {actual}"
                )

    @property
    def m(self) -> int:
        return self.Y.shape[0]

    @property
    def l(self) -> int:
        return self.Y.shape[1]


def ula_positions(m: int, alpha: float = 1.0, beta: float = 0.0) -> ArrayGeometry:
    """Uniform linear array: positions alpha*[0, 1, ..., M-1] + beta."""
    if m < 2:
        raise ValueError("ULA needs at least 2 sensors")
    if alpha <= 0:
        raise ValueError("ULA spacing alpha must be positive")
    return ArrayGeometry(alpha * np.arange(m) + beta, "ula", alpha=alpha, beta=beta)


def perturbed_nua(m: int, seed, spread: float = 0.5) -> ArrayGeometry:
    """Non-uniform array: integer grid plus Uniform[-spread, spread) offsets.

    No minimum-spacing constraint is applied, so two sensors may land
    arbitrarily close. ``spread=0`` reproduces the unperturbed integer grid
    (useful for tests). Deterministic for a given seed.
    """
    if m < 2:
        raise ValueError("array needs at least 2 sensors")
    if spread < 0:
        raise ValueError("spread must be non-negative")
    rng = as_generator(seed)
    offsets = rng.uniform(-spread, spread, size=m) if spread > 0 else np.zeros(m)
    return ArrayGeometry(np.arange(m) + offsets, "nua")


def _positions_of(geom) -> np.ndarray:
    if isinstance(geom, ArrayGeometry):
        return geom.positions
    return np.asarray(geom, dtype=float)


def steering_vector(geom, theta: float) -> np.ndarray:
    """Phase pattern exp(-j*pi*r_i*sin(theta)) across the array."""
    r = _positions_of(geom)
    return np.exp(-1j * np.pi * r * np.sin(theta))


def steering_matrix(geom, thetas) -> np.ndarray:
    """M x K matrix whose k-th column is the steering vector of theta_k."""
    r = _positions_of(geom)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    return np.exp(-1j * np.pi * np.outer(r, np.sin(thetas)))


def theta_to_z(theta):
    """Map a DOA to its unit-circle harmonic z = exp(-j*pi*sin(theta))."""
    return np.exp(-1j * np.pi * np.sin(np.asarray(theta, dtype=float)))


def z_to_theta(z):
    """Inverse harmonic map theta = -asin(angle(z)/pi).

    Only the phase of ``z`` is used. The principal branch puts angle(z) in
    (-pi, pi], so angle(z) = pi maps to theta = -pi/2.
    """
    return -np.arcsin(np.angle(z) / np.pi)


def synthesize(
    geom: ArrayGeometry,
    scene: SourceScene,
    l: int,
    snr_db: float,
    seed,
    coherent: bool = False,
) -> MeasurementSet:
    """Simulate L snapshots from the scene at the requested SNR.

    Source signals have uniformly random phase and the per-source constant
    amplitude from the scene. Incoherent sources redraw phases every
    snapshot; coherent sources reuse one draw, rotated by a common
    unit-modulus factor per snapshot (rank-1 source covariance). Noise is
    complex Gaussian rescaled so that the Frobenius-energy SNR holds
    exactly; infinite ``snr_db`` means no noise.
    """
    if l < 1:
        raise ValueError("snapshot count l must be >= 1")
    rng = as_generator(seed)
    k = scene.k

    if coherent:
        base = np.exp(2j * np.pi * rng.uniform(size=k))
        rotations = np.exp(2j * np.pi * rng.uniform(size=l))
        phases = np.outer(base, rotations)
    else:
        phases = np.exp(2j * np.pi * rng.uniform(size=(k, l)))
    x = scene.amplitudes[:, None] * phases

    a = steering_matrix(geom, scene.thetas)
    z = a @ x

    if math.isinf(snr_db):
        n = np.zeros_like(z)
    else:
        n = rng.standard_normal(z.shape) + 1j * rng.standard_normal(z.shape)
        scale = np.linalg.norm(z) / (np.linalg.norm(n) * 10 ** (snr_db / 20))
        n = n * scale
    return MeasurementSet(Y=z + n, Z=z, N=n, snr_db=snr_db)


def sample_covariance(y: np.ndarray) -> np.ndarray:
    """Sample covariance (1/L) Y Y^H, symmetrized to be exactly Hermitian."""
    y = np.asarray(y, dtype=complex)
    if y.ndim != 2 or y.shape[1] < 1:
        raise ValueError("Y must be an M x L matrix with L >= 1")
    r = y @ y.conj().T / y.shape[1]
    return (r + r.conj().T) / 2


def snr_of(z: np.ndarray, n: np.ndarray) -> float:
    """Frobenius-energy ratio in dB; +inf for zero noise, -inf for zero signal."""
    ez = float(np.linalg.norm(z)) ** 2
    en = float(np.linalg.norm(n)) ** 2
    if en == 0.0:
        return math.inf
    if ez == 0.0:
        return -math.inf
    return 10 * math.log10(ez / en)


def save_geometry(path, geom) -> None:
    """Write sensor positions as plain text, one decimal value per line."""
    positions = _positions_of(geom)
    with open(path, "w", encoding="utf-8") as fh:
        for p in positions:
            fh.write(f"{float(p)!r}\n")


def load_geometry(path) -> ArrayGeometry:
    """Read a plain-text geometry file (one position per line).

    Equal spacing (within 1e-9) is recognized as a ULA and snapped to the
    exact alpha*[0..M-1] + beta grid; anything else loads as a NUA.
    """
    with open(path, "r", encoding="utf-8") as fh:
        values = [float(line) for line in fh if line.strip()]
    pos = np.asarray(values, dtype=float)
    if pos.size < 2:
        raise ValueError("geometry file must contain at least 2 positions")
    gaps = np.diff(pos)
    if np.all(np.abs(gaps - gaps[0]) <= 1e-9) and gaps[0] > 0:
        return ula_positions(pos.size, alpha=float(gaps[0]), beta=float(pos[0]))
    return ArrayGeometry(pos, "nua")
