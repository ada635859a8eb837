"""Wideband geometric and Rayleigh channels, and their angular-domain view.

Matrices are vectorized column-major throughout, so ``vec(A X B)`` equals
``np.kron(B.T, A) @ vec(X)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from .config import ConfigError, DimensionError, SystemConfig


def vec(matrix: np.ndarray) -> np.ndarray:
    return np.asarray(matrix).reshape(-1, order="F")


def unvec(vector: np.ndarray, n_rows: int, n_cols: int) -> np.ndarray:
    return np.asarray(vector).reshape((n_rows, n_cols), order="F")


@dataclass(frozen=True)
class ArrayGeometry:
    num_elements: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.num_elements < 1:
            raise ConfigError("an array needs at least one element")
        if self.spacing_over_wavelength < 0.5:
            raise ConfigError("element spacing must be at least half a wavelength")

    def directional_cosine(self, angle_rad: float) -> float:
        """Spatial frequency ``(s / lambda) cos(phi)`` of a plane wave at ``angle_rad``."""
        return self.spacing_over_wavelength * float(np.cos(angle_rad))


@dataclass(frozen=True)
class PathSet:
    """Per-path gains, integer tap delays and directional cosines."""

    gains: np.ndarray
    delays: np.ndarray
    aoa_cosines: np.ndarray
    aod_cosines: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gains", np.asarray(self.gains, dtype=complex).ravel())
        object.__setattr__(self, "delays", np.asarray(self.delays, dtype=int).ravel())
        object.__setattr__(self, "aoa_cosines", np.asarray(self.aoa_cosines, dtype=float).ravel())
        object.__setattr__(self, "aod_cosines", np.asarray(self.aod_cosines, dtype=float).ravel())
        n = self.gains.size
        if n < 1:
            raise ConfigError("a path set needs at least one path")
        if not (self.delays.size == self.aoa_cosines.size == self.aod_cosines.size == n):
            raise ConfigError("path parameter lists differ in length")
        if np.any(self.delays < 0):
            raise ConfigError("path delays must be non-negative")
        for cosines in (self.aoa_cosines, self.aod_cosines):
            if np.any(np.abs(cosines) >= 0.5):
                raise ConfigError("directional cosines must lie in (-0.5, 0.5)")

    @property
    def num_paths(self) -> int:
        return self.gains.size


class ChannelKind(str, enum.Enum):
    SPARSE = "sparse"
    RAYLEIGH = "rayleigh"


@dataclass(frozen=True)
class ChannelRealization:
    """Delay-domain taps ``(N_c, N_r, N_t)`` and subcarrier responses ``(K, N_r, N_t)``."""

    taps: np.ndarray
    freq_responses: np.ndarray
    kind: ChannelKind
    paths: Optional[PathSet] = None

    @property
    def n_r(self) -> int:
        return self.taps.shape[1]

    @property
    def n_t(self) -> int:
        return self.taps.shape[2]

    @property
    def num_subcarriers(self) -> int:
        return self.freq_responses.shape[0]


@dataclass(frozen=True)
class DictionarySet:
    """Unitary ULA dictionaries on the uniform angle grid.

    The Kronecker projection ``A_t^* kron A_r`` has ``(N_r N_t)^2`` entries, so it
    is built on first access only.
    """

    tx_dictionary: np.ndarray
    rx_dictionary: np.ndarray
    tx_grid: np.ndarray = field(repr=False)
    rx_grid: np.ndarray = field(repr=False)

    @cached_property
    def kron_projection(self) -> np.ndarray:
        return np.kron(self.tx_dictionary.conj(), self.rx_dictionary)

    @property
    def n_t(self) -> int:
        return self.tx_dictionary.shape[0]

    @property
    def n_r(self) -> int:
        return self.rx_dictionary.shape[0]

    def project(self, h_virtual: np.ndarray) -> np.ndarray:
        """Return ``Psi @ h_virtual`` without forming ``Psi``."""
        hv = unvec(h_virtual, self.n_r, self.n_t)
        return vec(self.rx_dictionary @ hv @ self.tx_dictionary.conj().T)


def steering_vector(directional_cosine: float, num_elements: int) -> np.ndarray:
    """ULA response ``exp(-j 2 pi n theta) / sqrt(N)`` for ``n = 0 .. N-1``."""
    if num_elements < 1:
        raise ConfigError("num_elements must be positive")
    n = np.arange(num_elements)
    return np.exp(-2j * np.pi * n * directional_cosine) / np.sqrt(num_elements)


def grid_angles(num_elements: int) -> np.ndarray:
    p = np.arange(1, num_elements + 1)
    return (p - (num_elements + 1) / 2) / num_elements


def steering_matrix(cosines: np.ndarray, num_elements: int) -> np.ndarray:
    n = np.arange(num_elements)[:, None]
    return np.exp(-2j * np.pi * n * np.asarray(cosines)[None, :]) / np.sqrt(num_elements)


def build_dictionaries(n_t: int, n_r: int) -> DictionarySet:
    if n_t < 1 or n_r < 1:
        raise ConfigError("dictionary sizes must be positive")
    tx_grid = grid_angles(n_t)
    rx_grid = grid_angles(n_r)
    return DictionarySet(
        tx_dictionary=steering_matrix(tx_grid, n_t),
        rx_dictionary=steering_matrix(rx_grid, n_r),
        tx_grid=tx_grid,
        rx_grid=rx_grid,
    )


def frequency_response(taps: np.ndarray, k: int, num_subcarriers: int) -> np.ndarray:
    """``sum_d H_d exp(-j 2 pi k d / K)`` for a single subcarrier."""
    if not 0 <= k < num_subcarriers:
        raise IndexError(f"subcarrier {k} outside 0..{num_subcarriers - 1}")
    taps = np.asarray(taps)
    d = np.arange(taps.shape[0])
    phases = np.exp(-2j * np.pi * k * d / num_subcarriers)
    return np.tensordot(phases, taps, axes=(0, 0))


def all_frequency_responses(taps: np.ndarray, num_subcarriers: int) -> np.ndarray:
    return np.fft.fft(np.asarray(taps, dtype=complex), n=num_subcarriers, axis=0)


def channel_from_paths(config: SystemConfig, paths: PathSet) -> ChannelRealization:
    if np.any(paths.delays >= config.num_taps):
        raise ConfigError("path delay exceeds the maximal delay tap")
    a_r = steering_matrix(paths.aoa_cosines, config.n_r)
    a_t = steering_matrix(paths.aod_cosines, config.n_t)
    taps = np.zeros((config.num_taps, config.n_r, config.n_t), dtype=complex)
    for l in range(paths.num_paths):
        taps[paths.delays[l]] += paths.gains[l] * np.outer(a_r[:, l], a_t[:, l].conj())
    return ChannelRealization(
        taps=taps,
        freq_responses=all_frequency_responses(taps, config.num_subcarriers),
        kind=ChannelKind.SPARSE,
        paths=paths,
    )


def _complex_normal(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_sparse_channel(
    config: SystemConfig,
    num_paths: int,
    rng=None,
    geometry: Optional[Tuple[ArrayGeometry, ArrayGeometry]] = None,
) -> ChannelRealization:
    """Draw a random ``num_paths`` geometric channel.

    Gains are CN(0, sigma_h^2 N_r N_t / N_p) so that each subcarrier response
    carries ``N_r N_t sigma_h^2`` energy on average. ``geometry`` is an optional
    ``(rx, tx)`` pair checked against the configured array sizes.
    """
    n_coeff = config.n_r * config.n_t
    if num_paths < 1 or num_paths > n_coeff:
        raise ConfigError(f"num_paths must be in 1..{n_coeff}, got {num_paths}")
    if geometry is not None:
        rx, tx = geometry
        if rx.num_elements != config.n_r or tx.num_elements != config.n_t:
            raise ConfigError("array geometry does not match the configuration")
    rng = np.random.default_rng(rng)
    paths = PathSet(
        gains=_complex_normal(rng, num_paths, config.channel_var * n_coeff / num_paths),
        delays=rng.integers(0, config.num_taps, size=num_paths),
        aoa_cosines=rng.uniform(-0.5, 0.5, size=num_paths),
        aod_cosines=rng.uniform(-0.5, 0.5, size=num_paths),
    )
    return channel_from_paths(config, paths)


def generate_rayleigh_channel(config: SystemConfig, rng=None) -> ChannelRealization:
    """Frequency-flat channel with i.i.d. CN(0, sigma_h^2) entries on tap 0."""
    rng = np.random.default_rng(rng)
    taps = np.zeros((config.num_taps, config.n_r, config.n_t), dtype=complex)
    taps[0] = _complex_normal(rng, (config.n_r, config.n_t), config.channel_var)
    return ChannelRealization(
        taps=taps,
        freq_responses=all_frequency_responses(taps, config.num_subcarriers),
        kind=ChannelKind.RAYLEIGH,
    )


def virtual_channel(h_freq: np.ndarray, dictionaries: DictionarySet) -> np.ndarray:
    """``vec(A_r^H H A_t)``, the angular-domain coefficients of one subcarrier."""
    h_freq = np.asarray(h_freq)
    if h_freq.shape != (dictionaries.n_r, dictionaries.n_t):
        raise DimensionError(
            f"channel of shape {h_freq.shape} does not match dictionaries "
            f"({dictionaries.n_r}, {dictionaries.n_t})"
        )
    return vec(dictionaries.rx_dictionary.conj().T @ h_freq @ dictionaries.tx_dictionary)
