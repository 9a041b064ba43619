"""Chaos diagnostics for finite-dimensional quantum dynamics.

Quantifies chaos through continuous weak-measurement tomography (information
gain), dynamical correlators (OTOC, Loschmidt echo, error OTOC), Krylov
operator spreading, and random-matrix spectral statistics.
"""

__version__ = "0.1.0"

from .config import ExperimentConfig, derive_seed, load_config
from .dynamics import (
    FloquetUnitary,
    PerturbationSpec,
    effective_error_unitary,
    heisenberg_sequence,
    kicked_top_unitary,
    perturb,
)
from .errors import ConfigError, NumericalError
from .metrics import (
    MetricReport,
    effective_rank,
    fidelity,
    fisher_information,
    hs_distance,
    mutual_information,
    shannon_entropy,
)
from .operator_space import (
    OperatorBasis,
    QuantumState,
    SpinSystem,
    angular_momentum,
    bloch_compose,
    bloch_decompose,
    hermitian_basis,
    hs_inner,
    hs_norm,
    random_hermitian,
    random_pure_ket,
    random_pure_state,
    tracelessize,
)
from .rmt import (
    EnsembleSpec,
    SpacingSample,
    haar_unitary,
    joint_eigen_density,
    ks_distance,
    level_spacings,
    poisson_pdf,
    sample_circular,
    sample_gaussian,
    spacing_ratios,
    spectral_form_factor,
    surmise_cdf,
    surmise_pdf,
)
from .runner import RunManifest, build_observable, run
from .scrambling import (
    AverageOtoc,
    KrylovBasis,
    SchmidtSpectrum,
    average_otoc,
    error_otoc,
    krylov_basis,
    krylov_complexity,
    loschmidt_echo,
    operator_echo,
    operator_schmidt,
    otoc,
)
from .tomography import (
    DesignMatrix,
    InverseCovariance,
    MeasurementModel,
    MeasurementRecord,
    ReconstructionResult,
    design_matrix,
    inverse_covariance,
    ml_estimate,
    positivity_projection,
    reconstruct,
    simulate_record,
)
