"""Pilot design, phase-shifter codebooks and the linear measurement operator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import hadamard

from .channel_model import ChannelRealization, DictionarySet
from .config import ConfigError, DimensionError, SystemConfig


@dataclass(frozen=True)
class PilotBook:
    """Pilot vectors indexed ``[m, k, :]`` with shape ``(M, K, N_RFt)``."""

    pilots: np.ndarray

    @property
    def num_uses(self) -> int:
        return self.pilots.shape[0]

    @property
    def num_subcarriers(self) -> int:
        return self.pilots.shape[1]

    @property
    def n_rf_t(self) -> int:
        return self.pilots.shape[2]

    def group_matrix(self, group: int, k: int) -> np.ndarray:
        """Pilots of one orthogonal group stacked as columns, ``N_RFt x N_RFt``."""
        n = self.n_rf_t
        return self.pilots[group * n:(group + 1) * n, k, :].T


@dataclass(frozen=True)
class AnalogCodeword:
    precoder: np.ndarray
    combiner: np.ndarray


@dataclass(frozen=True)
class AnalogCodebook:
    """Per-channel-use phase-shifter matrices, shared by every subcarrier.

    ``precoders`` is ``(M, N_t, N_RFt)`` and ``combiners`` is ``(M, N_r, N_RFr)``;
    every entry has modulus ``1/sqrt(N_t)`` or ``1/sqrt(N_r)``.
    """

    precoders: np.ndarray
    combiners: np.ndarray

    def __len__(self) -> int:
        return self.precoders.shape[0]

    def __getitem__(self, m: int) -> AnalogCodeword:
        return AnalogCodeword(self.precoders[m], self.combiners[m])

    def __iter__(self):
        return (self[m] for m in range(len(self)))


@dataclass(frozen=True)
class MeasurementOperator:
    per_use_blocks: np.ndarray
    stacked: np.ndarray
    projected: np.ndarray
    support: np.ndarray


def _orthogonal_basis(n: int) -> np.ndarray:
    # Sylvester-Hadamard keeps the Gram matrix exact for powers of two.
    if n & (n - 1) == 0:
        return hadamard(n).astype(complex)
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n)


def generate_pilots(config: SystemConfig) -> PilotBook:
    """Orthogonal pilots: each group of N_RFt uses has Gram matrix ``P N_RFt I``.

    The same pilots are used on every subcarrier.
    """
    basis = math.sqrt(config.pilot_power) * _orthogonal_basis(config.n_rf_t)
    group = basis.T  # row j is the pilot of the j-th use within a group
    per_use = np.tile(group, (config.num_groups, 1))
    pilots = np.broadcast_to(per_use[:, None, :], (config.num_uses, config.num_subcarriers, config.n_rf_t))
    return PilotBook(np.ascontiguousarray(pilots))


def _unimodular(rng: np.random.Generator, shape, n_antennas: int) -> np.ndarray:
    phases = rng.uniform(0.0, 2.0 * np.pi, size=shape)
    return np.exp(1j * phases) / math.sqrt(n_antennas)


def generate_analog_codewords(config: SystemConfig, rng=None) -> AnalogCodebook:
    """Random-phase precoders and combiners, one pair per channel use."""
    rng = np.random.default_rng(rng)
    m = config.num_uses
    return AnalogCodebook(
        precoders=_unimodular(rng, (m, config.n_t, config.n_rf_t), config.n_t),
        combiners=_unimodular(rng, (m, config.n_r, config.n_rf_r), config.n_r),
    )


def _support_indices(support, n_coeff: int) -> np.ndarray:
    if support is None:
        return np.arange(n_coeff)
    indices = np.asarray(getattr(support, "indices", support), dtype=int).ravel()
    if indices.size and (indices.min() < 0 or indices.max() >= n_coeff):
        raise DimensionError("support index out of range")
    if np.unique(indices).size != indices.size:
        raise DimensionError("support indices must be distinct")
    return indices


def _check_shapes(pilots: PilotBook, codebook: AnalogCodebook, dictionaries: Optional[DictionarySet] = None):
    m, n_t, n_rf_t = codebook.precoders.shape
    if pilots.num_uses != m or pilots.n_rf_t != n_rf_t:
        raise DimensionError("pilot book and codebook disagree on M or N_RFt")
    if dictionaries is not None:
        if dictionaries.n_t != n_t or dictionaries.n_r != codebook.combiners.shape[1]:
            raise DimensionError("dictionaries do not match the antenna counts")


def transmit_beams(pilots: PilotBook, codebook: AnalogCodebook, k: int) -> np.ndarray:
    """``F_Am s_m[k]`` for every use, shape ``(M, N_t)``."""
    return np.einsum("mij,mj->mi", codebook.precoders, pilots.pilots[:, k, :])


def measurement_blocks(pilots: PilotBook, codebook: AnalogCodebook, k: int) -> np.ndarray:
    """``Phi_m[k] = (s_m^T F_Am^T) kron W_Am^H`` for all uses, ``(M, N_RFr, N_r N_t)``."""
    _check_shapes(pilots, codebook)
    beams = transmit_beams(pilots, codebook, k)
    w_h = codebook.combiners.conj().transpose(0, 2, 1)
    m, n_rf_r, n_r = w_h.shape
    blocks = beams[:, None, :, None] * w_h[:, :, None, :]
    return blocks.reshape(m, n_rf_r, beams.shape[1] * n_r)


def sensing_matrix(pilots: PilotBook, codebook: AnalogCodebook, dictionaries: DictionarySet, k: int) -> np.ndarray:
    """``Phi[k] Psi`` built from the factorized Kronecker rows.

    Row ``(m, i)`` equals ``((F s)^T A_t^*) kron (w_i^H A_r)``; this never forms
    the ``(N_r N_t)^2`` projection.
    """
    _check_shapes(pilots, codebook, dictionaries)
    beams = transmit_beams(pilots, codebook, k) @ dictionaries.tx_dictionary.conj()
    w_h = codebook.combiners.conj().transpose(0, 2, 1) @ dictionaries.rx_dictionary
    m, n_rf_r, n_r = w_h.shape
    rows = beams[:, None, :, None] * w_h[:, :, None, :]
    return rows.reshape(m * n_rf_r, beams.shape[1] * n_r)


def assemble_measurement(
    pilots: PilotBook,
    codebook: AnalogCodebook,
    dictionaries: DictionarySet,
    support=None,
    k: int = 0,
) -> MeasurementOperator:
    """Per-use blocks, stacked operator and the support-restricted projection."""
    _check_shapes(pilots, codebook, dictionaries)
    if not 0 <= k < pilots.num_subcarriers:
        raise IndexError(f"subcarrier {k} outside the pilot book")
    blocks = measurement_blocks(pilots, codebook, k)
    stacked = blocks.reshape(-1, blocks.shape[2])
    indices = _support_indices(support, stacked.shape[1])
    projected = sensing_matrix(pilots, codebook, dictionaries, k)[:, indices]
    return MeasurementOperator(per_use_blocks=blocks, stacked=stacked, projected=projected, support=indices)


def simulate_unquantized_rx(
    channel: ChannelRealization,
    pilots: PilotBook,
    codebook: AnalogCodebook,
    noise_var: float,
    rng=None,
    subcarriers: Optional[Sequence[int]] = None,
    return_clean: bool = False,
):
    """Pre-ADC signals ``W_Am^H (H[k] F_Am s_m[k] + v_m[k])``.

    Returns an array ``(len(subcarriers), M, N_RFr)``; reshaping one subcarrier
    slice C-order gives the stacked observation ``y[k]``. Noise is drawn
    independently per ``(k, m)``. With ``return_clean`` the noiseless part is
    returned as a second array.
    """
    _check_shapes(pilots, codebook)
    if channel.n_t != codebook.precoders.shape[1] or channel.n_r != codebook.combiners.shape[1]:
        raise DimensionError("channel and codebook disagree on antenna counts")
    if noise_var < 0:
        raise ConfigError("noise variance must be non-negative")
    rng = np.random.default_rng(rng)
    ks = list(range(channel.num_subcarriers)) if subcarriers is None else list(subcarriers)
    w_h = codebook.combiners.conj().transpose(0, 2, 1)
    m, n_rf_r, n_r = w_h.shape
    clean = np.empty((len(ks), m, n_rf_r), dtype=complex)
    noisy = np.empty_like(clean)
    for i, k in enumerate(ks):
        received = np.einsum("rt,mt->mr", channel.freq_responses[k], transmit_beams(pilots, codebook, k))
        clean[i] = np.einsum("mar,mr->ma", w_h, received)
        if noise_var > 0:
            v = math.sqrt(noise_var / 2.0) * (
                rng.standard_normal((m, n_r)) + 1j * rng.standard_normal((m, n_r))
            )
            noisy[i] = np.einsum("mar,mr->ma", w_h, received + v)
        else:
            noisy[i] = clean[i]
    if return_clean:
        return noisy, clean
    return noisy


def min_pilot_spacing(num_subcarriers: int, subcarrier_spacing: float, coherence_bandwidth: float) -> int:
    """Minimum number of pilot subcarriers, ``ceil(K df / B_c)``."""
    if num_subcarriers <= 0 or subcarrier_spacing <= 0 or coherence_bandwidth <= 0:
        raise ConfigError("subcarrier count, spacing and coherence bandwidth must be positive")
    ratio = num_subcarriers * subcarrier_spacing / coherence_bandwidth
    # absorb rounding such as 3 * 0.1 / 0.3 = 1.0000000000000002
    return max(1, math.ceil(ratio * (1.0 - 1e-12)))


def isotropy_diagonal(
    pilots: PilotBook, codebook: AnalogCodebook, dictionaries: DictionarySet, k: int = 0
) -> np.ndarray:
    """Diagonal of ``Phi[k] Psi Psi^H Phi[k]^H`` for one realization of the codebook."""
    _check_shapes(pilots, codebook, dictionaries)
    beams = transmit_beams(pilots, codebook, k) @ dictionaries.tx_dictionary.conj()
    w_h = codebook.combiners.conj().transpose(0, 2, 1) @ dictionaries.rx_dictionary
    tx_energy = np.sum(np.abs(beams) ** 2, axis=1)
    rx_energy = np.sum(np.abs(w_h) ** 2, axis=2)
    return (tx_energy[:, None] * rx_energy).reshape(-1)

