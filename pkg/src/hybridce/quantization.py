"""Low-precision ADC model: Lloyd-Max scalar quantizer and its Bussgang gain."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import ndtr, ndtri

from .config import Bits, ConfigError, SystemConfig, format_bits, is_infinite_bits, parse_bits

# Normalized MSE of the optimal non-uniform quantizer for a unit-variance Gaussian (Max, 1960).
DISTORTION_TABLE = {1: 0.3634, 2: 0.1175, 3: 0.03454, 4: 0.009497, 5: 0.002499}

MAX_CODEBOOK_BITS = 12


class LloydConvergenceError(RuntimeError):
    pass


class AGCMode(str, enum.Enum):
    ANALYTIC = "analytic"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class Codebook:
    """Reconstruction levels and decision thresholds for N(0, 1) input."""

    bits: int
    levels: np.ndarray
    thresholds: np.ndarray
    mse: float
    iterations: int

    def to_dict(self) -> dict:
        return {
            "bits": self.bits,
            "levels": self.levels.tolist(),
            "thresholds": self.thresholds.tolist(),
            "mse": self.mse,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class EffectiveNoiseStats:
    per_element_var: float
    num_observations: int

    @property
    def total_var(self) -> float:
        return self.num_observations * self.per_element_var


@dataclass(frozen=True)
class QuantizerModel:
    bits: Bits
    distortion_factor: float
    codebook: Optional[Codebook]
    agc_mode: AGCMode = AGCMode.ANALYTIC

    @property
    def gain(self) -> float:
        return 1.0 - self.distortion_factor

    @property
    def is_ideal(self) -> bool:
        return self.codebook is None


def distortion_factor(bits: Bits) -> float:
    """Distortion factor eta_b of a ``bits``-bit optimal ADC.

    Tabulated for 1..5 bits; beyond that the high-resolution approximation
    ``(pi sqrt(3) / 2) 4^-b`` is used, and ideal ADCs give 0.
    """
    bits = parse_bits(bits)
    if is_infinite_bits(bits):
        return 0.0
    if bits in DISTORTION_TABLE:
        return DISTORTION_TABLE[bits]
    return math.pi * math.sqrt(3.0) / 2.0 * 2.0 ** (-2 * bits)


def _pdf(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _cell_stats(edges: np.ndarray):
    """Probability and first moment of N(0, 1) over ``[edges[i], edges[i+1])``."""
    a, b = edges[:-1], edges[1:]
    # upper-tail differences keep precision for cells far out on the positive side
    prob = np.where(a >= 0, ndtr(-a) - ndtr(-b), ndtr(b) - ndtr(a))
    first = _pdf(a) - _pdf(b)
    return prob, first


def _lloyd_step(levels: np.ndarray):
    thresholds = 0.5 * (levels[1:] + levels[:-1])
    edges = np.concatenate(([-np.inf], thresholds, [np.inf]))
    prob, first = _cell_stats(edges)
    new = first / prob
    return 0.5 * (new - new[::-1]), edges, prob


def _newton_step(levels: np.ndarray) -> np.ndarray:
    """Newton update for ``levels = centroids(levels)``; the Jacobian is tridiagonal."""
    mapped, edges, prob = _lloyd_step(levels)
    a, b = edges[:-1], edges[1:]
    pa = np.where(np.isfinite(a), _pdf(np.where(np.isfinite(a), a, 0.0)), 0.0)
    pb = np.where(np.isfinite(b), _pdf(np.where(np.isfinite(b), b, 0.0)), 0.0)
    # d centroid / d lower edge and / d upper edge
    d_lo = np.where(np.isfinite(a), pa * (mapped - np.where(np.isfinite(a), a, 0.0)) / prob, 0.0)
    d_hi = np.where(np.isfinite(b), pb * (np.where(np.isfinite(b), b, 0.0) - mapped) / prob, 0.0)
    n = levels.size
    banded = np.zeros((3, n))
    banded[1] = 1.0 - 0.5 * (d_lo + d_hi)
    banded[0, 1:] = -0.5 * d_hi[:-1]
    banded[2, :-1] = -0.5 * d_lo[1:]
    return levels - solve_banded((1, 1), banded, levels - mapped)


def _lloyd(n_levels: int, tol: float, max_iter: int):
    # Companding start: the optimal level density scales as pdf^(1/3), i.e. quantiles of N(0, 3).
    levels = math.sqrt(3.0) * ndtri((np.arange(n_levels) + 0.5) / n_levels)
    for it in range(1, max_iter + 1):
        new, _, _ = _lloyd_step(levels)
        step = np.max(np.abs(new - levels))
        if step < tol:
            return new, it
        if it > 10 and step < 1e-2:
            # Lloyd converges linearly and slows down as levels are added; Newton
            # on the same fixed-point equations finishes the job.
            candidate = _newton_step(levels)
            if np.all(np.diff(candidate) > 0):
                new = candidate
        levels = new
    raise LloydConvergenceError(f"Lloyd iteration did not converge for {n_levels} levels")


@lru_cache(maxsize=None)
def build_codebook(bits: int, tol: float = 1e-10, max_iter: int = 100_000) -> Codebook:
    """Lloyd-Max quantizer with ``2**bits`` levels for a unit-variance Gaussian."""
    bits = parse_bits(bits)
    if is_infinite_bits(bits) or not 1 <= bits <= MAX_CODEBOOK_BITS:
        raise ConfigError(f"codebooks are built for 1..{MAX_CODEBOOK_BITS} bits, got {format_bits(bits)}")
    levels, iterations = _lloyd(2 ** bits, tol, max_iter)
    thresholds = 0.5 * (levels[1:] + levels[:-1])
    thresholds[len(thresholds) // 2] = 0.0
    edges = np.concatenate(([-np.inf], thresholds, [np.inf]))
    prob, first = _cell_stats(edges)
    mse = float(1.0 - 2.0 * np.dot(levels, first) + np.dot(levels ** 2, prob))
    levels.setflags(write=False)
    thresholds.setflags(write=False)
    return Codebook(bits=bits, levels=levels, thresholds=thresholds, mse=mse, iterations=iterations)


def quantizer_model(bits: Bits, agc_mode: AGCMode = AGCMode.ANALYTIC) -> QuantizerModel:
    bits = parse_bits(bits)
    codebook = None if is_infinite_bits(bits) else build_codebook(bits)
    return QuantizerModel(bits=bits, distortion_factor=distortion_factor(bits), codebook=codebook, agc_mode=AGCMode(agc_mode))


def quantize_real(x: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Nearest-level quantization of unit-variance real samples, odd-symmetric."""
    half = codebook.levels.size // 2
    pos_levels = codebook.levels[half:]
    pos_thresholds = codebook.thresholds[half:]
    magnitude = np.abs(x)
    idx = np.searchsorted(pos_thresholds, magnitude, side="left")
    return np.where(x < 0, -1.0, 1.0) * pos_levels[idx]


def quantize(signal: np.ndarray, model: QuantizerModel, input_variance: Optional[float] = None) -> np.ndarray:
    """Quantize I and Q separately after scaling to unit variance, then scale back.

    ``input_variance`` is the per-real-dimension variance the ADC gain control
    is matched to. It is required in analytic mode; in empirical mode the
    sample variance of ``signal`` is used instead.
    """
    signal = np.asarray(signal)
    if model.is_ideal:
        return signal.copy()
    if model.agc_mode is AGCMode.EMPIRICAL:
        input_variance = float(np.mean(signal.real ** 2 + signal.imag ** 2) / 2.0)
    if input_variance is None or not input_variance > 0:
        raise ConfigError("quantizer input variance must be positive")
    scale = math.sqrt(input_variance)
    re = quantize_real(signal.real / scale, model.codebook)
    im = quantize_real(signal.imag / scale, model.codebook)
    return scale * (re + 1j * im)


def analytic_input_variance(config: SystemConfig) -> float:
    """Model-predicted pre-ADC variance per real dimension."""
    return (config.channel_var * config.pilot_power * config.n_rf_t + config.noise_var) / 2.0


def effective_noise_var(eta: float, noise_var: float, channel_var: float, pilot_power: float, n_rf_t: int) -> float:
    return (1.0 - eta) * (noise_var + eta * channel_var * pilot_power * n_rf_t)


def bussgang_linearize(config: SystemConfig, model: Optional[QuantizerModel] = None):
    """Linear gain ``1 - eta_b`` and effective noise statistics of the quantized link.

    The result is purely statistical; no samples are involved.
    """
    eta = model.distortion_factor if model is not None else distortion_factor(config.adc_bits)
    var = effective_noise_var(eta, config.noise_var, config.channel_var, config.pilot_power, config.n_rf_t)
    return 1.0 - eta, EffectiveNoiseStats(per_element_var=var, num_observations=config.num_observations)
