"""Hong-Ou-Mandel bunching of two single photons stored in a tripod quantum memory."""
from .core import DimensionlessParams, TimeGrid, UnitsConfig, make_grid, to_dimensionless
from .errors import (
    DegenerateKernelError,
    FastProtocolWarning,
    InsufficientModesError,
    InvalidParameterError,
    NonSymmetricKernelError,
    TripodHomError,
    UndefinedConditionalWarning,
    UnphysicalKernelError,
)
from .interference import (
    HomMetrics,
    OutputStatistics,
    TwoPhotonInput,
    analytic_statistics,
    delay_sweep,
    fock_oracle,
    hom_metrics,
)
from .kernel import (
    MemoryKernel,
    commutator_matrix,
    kernel_fast_memory,
    kernel_from_matrix,
    kernel_gaussian_toy,
    kernel_ideal,
)
from .schmidt import (
    ModeAmplitudes,
    SchmidtDecomposition,
    TemporalEnvelope,
    decompose,
    gaussian_envelope,
    mode_envelope,
    project,
    reconstruct,
    schmidt_number,
)

__version__ = "0.1.0"
