"""hbtsim: photon-bunching (HBT) experiment simulator.

Thermal/coherent field synthesis, photon emission, optics chain, detector
model, time-tag files, streaming cross-correlation, and the area-rescaled
jitter-curve prediction of the smeared bunching peak.  All internal times
are femtoseconds.
"""

from .bunching import (
    EnvelopeCurve,
    JitterCurve,
    PredictedPeak,
    extract_envelope,
    normalize_jitter,
    predict_smeared_peak,
    squared_envelope_area_fs,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    dump_config,
    load_config,
    reference_config,
)
from .correlate import (
    CorrelationHistogram,
    G2Estimate,
    PeakReport,
    cross_correlate,
    merge_histograms,
    normalize,
    peak_stats,
)
from .detector import (
    DetectorConfig,
    EmpiricalJitter,
    GaussianJitter,
    TagStream,
    detect,
    merge_tag_streams,
)
from .field import (
    FieldTrace,
    PhotonStream,
    SpectrumModel,
    SpectrumShape,
    ThermalDistribution,
    analytic_g1,
    analytic_g2,
    emit_photons,
    empirical_g1,
    g1_squared_area_fs,
    sample_poisson_arrivals,
    sample_thermal_arrivals,
    synthesize_coherent_field,
    synthesize_thermal_field,
    thermal_pn,
)
from .multiphoton import (
    FockExpansion,
    FourPhotonState,
    adaptive_n_max,
    fock_amplitudes,
    marginal_distribution,
    multiphoton_report,
    same_polarization_probability,
    sister_state,
    twin_state,
)
from .optics import (
    Interferogram,
    ScanConfig,
    attenuate,
    beam_split,
    delay_stream,
    michelson_scan,
    simulate_pair_source,
)
from .pipeline import (
    PipelineError,
    PipelineResult,
    calibrate_jitter,
    measure_envelope,
    reference_prediction_report,
    run_hbt_measurement,
    run_pipeline,
)
from .selftest import selftest
from .tagfile import (
    BadMagicError,
    TagFileError,
    TruncatedFileError,
    UnsortedRecordsError,
    VersionMismatchError,
    read_tags,
    write_tags,
)

__version__ = "0.1.0"
