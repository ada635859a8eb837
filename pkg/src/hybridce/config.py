"""System configuration shared by every stage of the estimation chain."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Union

Bits = Union[int, float]

INF_BITS: float = math.inf


class ConfigError(ValueError):
    """Raised for invalid or inconsistent system parameters."""


class DimensionError(ValueError):
    """Raised when array shapes do not agree."""


class RankDeficiencyError(ValueError):
    """Raised when a linear system required by an estimator is singular."""


def is_infinite_bits(bits: Bits) -> bool:
    return isinstance(bits, float) and math.isinf(bits) and bits > 0


def parse_bits(value) -> Bits:
    """Parse an ADC resolution: a positive integer, or ``"inf"``/``inf``."""
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "infinite", "infinity"):
            return INF_BITS
        value = int(text)
    if isinstance(value, float):
        if math.isinf(value) and value > 0:
            return INF_BITS
        if not value.is_integer():
            raise ConfigError(f"ADC bits must be an integer or inf, got {value!r}")
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"ADC bits must be an integer or inf, got {value!r}")
    if value <= 0:
        raise ConfigError(f"ADC bits must be positive, got {value}")
    return value


def format_bits(bits: Bits) -> str:
    return "inf" if is_infinite_bits(bits) else str(int(bits))


def default_num_uses(n_t: int, n_r: int, n_rf_t: int, n_rf_r: int) -> int:
    """Smallest multiple of ``n_rf_t`` that covers all ``n_r * n_t`` coefficients."""
    return n_rf_t * math.ceil(n_r * n_t / (n_rf_r * n_rf_t))


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions, powers and ADC precision of one hybrid MIMO-OFDM link.

    ``num_uses`` (channel uses M) defaults to the smallest multiple of
    ``n_rf_t`` that gives at least ``n_r * n_t`` observations.
    """

    n_t: int
    n_r: int
    n_rf_t: int
    n_rf_r: int
    num_subcarriers: int = 1
    num_taps: int = 1
    num_uses: Optional[int] = None
    pilot_power: float = 1.0
    noise_var: float = 0.0
    channel_var: float = 1.0
    adc_bits: Bits = INF_BITS

    def __post_init__(self):
        if self.num_uses is None:
            object.__setattr__(
                self, "num_uses", default_num_uses(self.n_t, self.n_r, self.n_rf_t, self.n_rf_r)
            )
        object.__setattr__(self, "adc_bits", parse_bits(self.adc_bits))
        for name in ("n_t", "n_r", "n_rf_t", "n_rf_r", "num_subcarriers", "num_taps", "num_uses"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.n_rf_t > self.n_t:
            raise ConfigError("n_rf_t must not exceed n_t")
        if self.n_rf_r > self.n_r:
            raise ConfigError("n_rf_r must not exceed n_r")
        if self.num_taps > self.num_subcarriers:
            raise ConfigError("num_taps must not exceed num_subcarriers")
        if self.num_uses % self.n_rf_t:
            raise ConfigError("num_uses must be a multiple of n_rf_t")
        if not self.pilot_power > 0:
            raise ConfigError("pilot_power must be positive")
        if not self.noise_var >= 0:
            raise ConfigError("noise_var must be non-negative")
        if not self.channel_var >= 0:
            raise ConfigError("channel_var must be non-negative")

    @property
    def num_groups(self) -> int:
        """Number of orthogonal pilot groups, M / N_RFt."""
        return self.num_uses // self.n_rf_t

    @property
    def num_trainings(self) -> int:
        return math.ceil(self.n_r * self.n_t / (self.n_rf_r * self.n_rf_t))

    @property
    def num_observations(self) -> int:
        return self.num_uses * self.n_rf_r

    @property
    def num_coefficients(self) -> int:
        return self.n_r * self.n_t

    def with_snr_db(self, snr_db: float) -> "SystemConfig":
        return replace(self, noise_var=noise_var_from_snr(snr_db, self))

    def replace(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


def noise_var_from_snr(snr_db: float, config: SystemConfig) -> float:
    """Thermal noise variance giving per-RF-chain SNR ``sigma_h^2 P N_RFt / sigma_v^2``."""
    if math.isinf(snr_db):
        if snr_db > 0:
            return 0.0
        raise ConfigError("SNR of -inf dB is not supported")
    return config.channel_var * config.pilot_power * config.n_rf_t / 10.0 ** (snr_db / 10.0)
