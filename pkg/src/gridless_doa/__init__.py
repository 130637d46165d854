"""Gridless DOA estimation for uniform and non-uniform linear arrays."""

__version__ = "0.1.0"

from .arrays import (
    ArrayGeometry,
    MeasurementSet,
    SourceScene,
    load_geometry,
    perturbed_nua,
    sample_covariance,
    save_geometry,
    snr_of,
    steering_matrix,
    steering_vector,
    synthesize,
    theta_to_z,
    ula_positions,
    z_to_theta,
)
from .bench import (
    ExperimentConfig,
    SolverSpec,
    cbf_estimate,
    pair_and_rmse,
    random_scene,
    run_experiment,
)
from .errors import (
    ConfigError,
    DecompositionShortfallError,
    DivergenceError,
    EstimationFailureError,
    GridlessDoaError,
    IllConditionedHarmonicsError,
)
from .ivd import (
    HarmonicModel,
    classic_root_music,
    estimate_powers,
    irregular_root_music,
    irregular_vandermonde,
    ivd,
    reconstruct,
)
from .projections import (
    AugmentedBlock,
    project_block_set,
    project_irregular_toeplitz,
    project_psd,
    project_toeplitz,
)
from .solvers import (
    SolverReport,
    admm_gridless,
    ap_gridless,
    ap_ula,
    default_max_iter,
)
from .spectrum import (
    NoiseProjector,
    NullSpectrumPoly,
    SubspaceBasis,
    circle_samples,
    irregular_null_spectrum,
    noise_projector,
    null_spectrum_poly,
    poly_roots,
    select_music_roots,
    subspace_split,
    unit_circle_minima,
)
