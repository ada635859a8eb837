"""Statistical and algebraic self-checks of the estimator's modelling steps.

Each suite returns a small report object; ``passed`` applies the tolerance the
check is designed around.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import channel_model as cm
from . import estimation as est
from . import frontend as fe
from . import quantization as qz
from .config import Bits, SystemConfig, format_bits

EFFECTIVE_NOISE_CONFIG = SystemConfig(
    n_t=64, n_r=64, n_rf_t=4, n_rf_r=4, num_subcarriers=1, num_taps=1, num_uses=16, pilot_power=1.0, channel_var=1.0
)


@dataclass(frozen=True)
class EffectiveNoiseReport:
    bits: str
    noise_var: float
    empirical_var: float
    analytic_var: float
    relative_error: float
    trials: int
    tolerance: float = 0.08

    @property
    def passed(self) -> bool:
        return self.relative_error < self.tolerance


def verify_effective_noise(
    config: SystemConfig,
    bits: Bits,
    trials: int,
    rng=None,
    agc_mode: qz.AGCMode = qz.AGCMode.ANALYTIC,
    tolerance: float = 0.08,
) -> EffectiveNoiseReport:
    """Compare the simulated effective-noise energy with its closed form.

    Each trial draws a flat Rayleigh channel, a fresh codebook and noise, runs
    the nonlinear quantizer and measures ``||y - (1 - eta) Phi Psi h_v||^2``.
    """
    rng = np.random.default_rng(rng)
    config = config.replace(adc_bits=bits)
    model = qz.quantizer_model(bits, agc_mode)
    _, stats = qz.bussgang_linearize(config, model)
    pilots = fe.generate_pilots(config)
    agc_var = qz.analytic_input_variance(config)
    energy = np.empty(trials)
    for t in range(trials):
        channel = cm.generate_rayleigh_channel(config, rng)
        codebook = fe.generate_analog_codewords(config, rng)
        noisy, clean = fe.simulate_unquantized_rx(
            channel, pilots, codebook, config.noise_var, rng, subcarriers=[0], return_clean=True
        )
        y = qz.quantize(noisy[0].reshape(-1), model, agc_var)
        e_hat = y - model.gain * clean[0].reshape(-1)
        energy[t] = np.vdot(e_hat, e_hat).real
    empirical = float(energy.mean())
    analytic = stats.total_var
    return EffectiveNoiseReport(
        bits=format_bits(config.adc_bits),
        noise_var=config.noise_var,
        empirical_var=empirical,
        analytic_var=analytic,
        relative_error=abs(empirical - analytic) / analytic,
        trials=trials,
        tolerance=tolerance,
    )


@dataclass(frozen=True)
class IsotropyReport:
    mean_diagonal: np.ndarray
    target: float
    max_relative_error: float
    draws: int
    tolerance: float = 0.05

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def verify_isotropy(config: SystemConfig, draws: int, rng=None, tolerance: float = 0.05) -> IsotropyReport:
    """Monte Carlo diagonal of ``E{Phi Psi Psi^H Phi^H}`` against ``P N_RFt``."""
    rng = np.random.default_rng(rng)
    pilots = fe.generate_pilots(config)
    dictionaries = cm.build_dictionaries(config.n_t, config.n_r)
    total = np.zeros(config.num_observations)
    for _ in range(draws):
        codebook = fe.generate_analog_codewords(config, rng)
        total += fe.isotropy_diagonal(pilots, codebook, dictionaries)
    mean = total / draws
    target = config.pilot_power * config.n_rf_t
    return IsotropyReport(
        mean_diagonal=mean,
        target=target,
        max_relative_error=float(np.max(np.abs(mean - target)) / target),
        draws=draws,
        tolerance=tolerance,
    )


def random_complex(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def random_instance(rng: np.random.Generator, rows: Optional[int] = None, cols: Optional[int] = None):
    """Random ``(Omega, eta, sigma_e^2, sigma_h^2)`` for combiner checks."""
    rows = int(rng.integers(2, 17)) if rows is None else rows
    cols = int(rng.integers(1, rows + 1)) if cols is None else cols
    omega = random_complex(rng, (rows, cols))
    eta = float(rng.choice(list(qz.DISTORTION_TABLE.values()) + [0.0]))
    return omega, eta, float(rng.uniform(0.05, 2.0)), float(rng.uniform(0.2, 2.0))


@dataclass(frozen=True)
class StationarityReport:
    max_relative_gradient: float
    instances: int
    tolerance: float = 1e-9

    @property
    def passed(self) -> bool:
        return self.max_relative_gradient < self.tolerance


def verify_stationarity(instances: int, rng=None, tolerance: float = 1e-9) -> StationarityReport:
    """Gradient of the MSE at the closed-form combiner, relative to its norm."""
    rng = np.random.default_rng(rng)
    worst = 0.0
    for _ in range(instances):
        omega, eta, noise, chan = random_instance(rng)
        w = est.lmmse_combiner(omega, eta, noise, chan).matrix
        grad = est.mse_gradient(w, omega, eta, chan, noise)
        worst = max(worst, np.linalg.norm(grad) / np.linalg.norm(w))
    return StationarityReport(max_relative_gradient=float(worst), instances=instances, tolerance=tolerance)


def descend_mse(
    omega: np.ndarray, eta: float, channel_var: float, noise_var_eff: float, start: np.ndarray, iterations: int = 5000
) -> np.ndarray:
    """Plain gradient descent on the MSE surface with a ``1/L`` step."""
    gain = 1.0 - eta
    curvature = gain * gain * channel_var * np.linalg.norm(omega, 2) ** 2 + noise_var_eff
    w = start.copy()
    for _ in range(iterations):
        w = w - est.mse_gradient(w, omega, eta, channel_var, noise_var_eff) / curvature
    return w


@dataclass(frozen=True)
class OptimalityReport:
    max_improvement: float
    starts: int
    tolerance: float = 1e-8

    @property
    def passed(self) -> bool:
        return self.max_improvement <= self.tolerance


def verify_global_optimality(starts: int, rng=None, iterations: int = 5000, tolerance: float = 1e-8) -> OptimalityReport:
    """How far gradient descent from random starts gets below the closed form."""
    rng = np.random.default_rng(rng)
    worst = -math.inf
    for _ in range(starts):
        omega, eta, noise, chan = random_instance(rng, rows=8, cols=4)
        w_opt = est.lmmse_combiner(omega, eta, noise, chan).matrix
        best = est.analytic_mse(w_opt, omega, eta, chan, noise)
        w = descend_mse(omega, eta, chan, noise, 3.0 * random_complex(rng, w_opt.shape), iterations)
        worst = max(worst, best - est.analytic_mse(w, omega, eta, chan, noise))
    return OptimalityReport(max_improvement=float(worst), starts=starts, tolerance=tolerance)


def sampled_mse(
    w: np.ndarray, omega: np.ndarray, eta: float, channel_var: float, noise_var_eff: float, trials: int, rng=None
) -> float:
    """Monte Carlo MSE of ``W^H y`` with Gaussian channel and effective noise."""
    rng = np.random.default_rng(rng)
    rows, cols = omega.shape
    h = math.sqrt(channel_var) * random_complex(rng, (cols, trials))
    noise = math.sqrt(noise_var_eff) * random_complex(rng, (rows, trials))
    y = (1.0 - eta) * omega @ h + noise
    err = w.conj().T @ y - h
    return float(np.mean(np.sum(np.abs(err) ** 2, axis=0)))


@dataclass(frozen=True)
class MSEConsistencyReport:
    max_relative_error: float
    instances: int
    trials: int
    tolerance: float = 0.03

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def verify_mse_consistency(instances: int, trials: int, rng=None, tolerance: float = 0.03) -> MSEConsistencyReport:
    """Closed-form MSE against sampling under the linearized model, random combiners."""
    rng = np.random.default_rng(rng)
    worst = 0.0
    for _ in range(instances):
        omega, eta, noise, chan = random_instance(rng)
        w = random_complex(rng, omega.shape) / math.sqrt(omega.shape[0])
        analytic = est.analytic_mse(w, omega, eta, chan, noise)
        sampled = sampled_mse(w, omega, eta, chan, noise, trials, rng)
        worst = max(worst, abs(sampled - analytic) / analytic)
    return MSEConsistencyReport(max_relative_error=float(worst), instances=instances, trials=trials, tolerance=tolerance)


def sparse_virtual_instance(config: SystemConfig, sparsity: int, rng: np.random.Generator):
    """Noise-free, ideal-ADC measurement of an on-grid ``sparsity``-sparse virtual channel."""
    dictionaries = cm.build_dictionaries(config.n_t, config.n_r)
    pilots = fe.generate_pilots(config)
    codebook = fe.generate_analog_codewords(config, rng)
    sensing = fe.sensing_matrix(pilots, codebook, dictionaries, 0)
    support = np.sort(rng.choice(config.num_coefficients, size=sparsity, replace=False))
    h_v = np.zeros(config.num_coefficients, dtype=complex)
    h_v[support] = random_complex(rng, sparsity)
    return sensing, h_v, support


def best_subset(y: np.ndarray, sensing: np.ndarray, size: int) -> np.ndarray:
    """Exhaustive search for the ``size``-column subset with the smallest LS residual."""
    best, best_res = None, math.inf
    for cols in itertools.combinations(range(sensing.shape[1]), size):
        sub = sensing[:, cols]
        coef, *_ = np.linalg.lstsq(sub, y, rcond=None)
        res = np.linalg.norm(y - sub @ coef)
        if res < best_res:
            best, best_res = cols, res
    return np.array(best)


@dataclass(frozen=True)
class OMPRecoveryReport:
    success_rate: float
    trials: int
    threshold: float = 0.95

    @property
    def passed(self) -> bool:
        return self.success_rate >= self.threshold


def verify_omp_recovery(config: SystemConfig, sparsity: int, trials: int, rng=None, threshold: float = 0.95) -> OMPRecoveryReport:
    """Exact-support recovery rate of OMP on noise-free on-grid sparse channels."""
    rng = np.random.default_rng(rng)
    hits = 0
    for _ in range(trials):
        sensing, h_v, support = sparse_virtual_instance(config, sparsity, rng)
        y = sensing @ h_v
        found = est.omp_support(y, sensing, 1e-20 * float(np.vdot(y, y).real))
        hits += np.array_equal(found.indices, support)
    return OMPRecoveryReport(success_rate=hits / trials, trials=trials, threshold=threshold)
