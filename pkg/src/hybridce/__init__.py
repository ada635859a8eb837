"""Wideband channel estimation for hybrid mmWave MIMO receivers with low-precision ADCs."""

from .channel_model import (
    ArrayGeometry,
    ChannelKind,
    ChannelRealization,
    DictionarySet,
    PathSet,
    build_dictionaries,
    frequency_response,
    generate_rayleigh_channel,
    generate_sparse_channel,
    steering_vector,
    virtual_channel,
)
from .config import INF_BITS, ConfigError, DimensionError, RankDeficiencyError, SystemConfig
from .estimation import (
    DigitalCombiner,
    EstimationResult,
    SupportSelection,
    analytic_mse,
    conventional_baselines,
    default_threshold,
    estimate_channel,
    lmmse_combiner,
    mse_gradient,
    omp_support,
)
from .frontend import (
    AnalogCodebook,
    MeasurementOperator,
    PilotBook,
    assemble_measurement,
    generate_analog_codewords,
    generate_pilots,
    min_pilot_spacing,
    simulate_unquantized_rx,
)
from .quantization import (
    AGCMode,
    QuantizerModel,
    build_codebook,
    bussgang_linearize,
    distortion_factor,
    quantize,
    quantizer_model,
)

__version__ = "0.1.0"
