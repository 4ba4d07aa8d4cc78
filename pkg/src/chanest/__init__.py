"""OFDM channel-estimation workbench.

Power-delay-profile design with envelope dominance, Rayleigh fading
simulation, LS/MMSE estimation, eigen-spectrum analysis, dataset generation
for learned estimators, and a Monte Carlo evaluation harness.
"""
from .profiles import (
    BUILTIN_NAMES,
    CDL_NAMES,
    CdlProfile,
    ChannelSpec,
    PowerDelayProfile,
    builtin_profile,
    cdl_profile,
    load_profile,
    normalize_power,
    resolve_profile,
    save_profile,
    scale_cdl,
)
from .link import (
    ALT_PATTERN,
    DEFAULT_FRAME,
    DEFAULT_PATTERN,
    DmrsPattern,
    FrameConfig,
    build_slot,
    extract_pilots,
    load_grid,
    save_grid,
    transmit_receive_fd,
    transmit_receive_td,
)
from .fading import (
    ChannelRealization,
    freq_response,
    generate_realization,
    response_from_taps,
)
from .estimators import (
    CorrelationSet,
    PilotEstimate,
    analytic_correlations,
    bilinear_to_slot,
    frequency_correlation,
    ls_estimate,
    ls_slot_estimate,
    mmse_estimate,
    mmse_slot_estimate,
    mse,
)
from .design import (
    ApplicabilityReport,
    EigenComparison,
    EigenSpectrum,
    PdpEnvelope,
    Violation,
    autocorrelation_matrix,
    eigen_compare,
    eigen_spectrum,
    is_applicable,
    pdp_envelope,
    suggest_envelope,
)
from .dataset import (
    DatasetError,
    DatasetManifest,
    Sample,
    generate_dataset,
    read_dataset,
    read_predictions,
    write_predictions,
)
from .evaluate import (
    EvalPoint,
    ds_sweep,
    emit_report,
    generalization_grid,
    get_estimator,
    mse_vs_snr,
    read_report,
    score_predictions,
)

__version__ = "0.1.0"
