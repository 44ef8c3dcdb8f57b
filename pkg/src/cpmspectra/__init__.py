"""Average power spectral density of multi-h CPM signals via polyphase Markov chains."""

from .errors import (
    CpmError,
    ClassificationError,
    ConfigError,
    InvalidDimensionError,
    InvalidFormatError,
    InvalidSymbolError,
    NearSingularResolventError,
    StructureViolationError,
)
from .model import (
    CpmFormat,
    ModulationIndexSet,
    PhaseResponse,
    normalize_indices,
    phase,
    synthesize_waveform,
)
from .machine import build_machine, build_tpm, build_conditional_matrices, format_tpm
from .chain import (
    build_polyphase,
    cyclo_period,
    parity_partition,
    stationary_distribution,
    trajectory_tpms,
)
from .spectrum import (
    SpectrumResult,
    closed_form_psd,
    correlation_ladder,
    pulse_transforms,
    series_psd_oracle,
    spectral_line_test,
)

__version__ = "0.1.0"
