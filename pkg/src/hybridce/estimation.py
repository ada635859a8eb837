"""Support selection, the quantization-aware LMMSE combiner and its MSE surface.

Notation follows the linearized observation model

    y = (1 - eta) * Omega @ h + e_hat,    h ~ CN(0, sigma_h^2 I),  e_hat ~ CN(0, sigma_e^2 I)

where ``Omega`` is the sensing matrix restricted to the selected support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import linalg

from .channel_model import DictionarySet
from .config import DimensionError, RankDeficiencyError
from .quantization import EffectiveNoiseStats


@dataclass(frozen=True)
class SupportSelection:
    """Sorted angular-domain indices kept for estimation (0-based)."""

    indices: np.ndarray
    num_coefficients: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int).ravel()
        if idx.size and (idx.min() < 0 or idx.max() >= self.num_coefficients):
            raise DimensionError("support index out of range")
        if np.any(np.diff(idx) <= 0):
            raise DimensionError("support indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def full(cls, num_coefficients: int) -> "SupportSelection":
        return cls(np.arange(num_coefficients), num_coefficients)

    @classmethod
    def from_indices(cls, indices, num_coefficients: int) -> "SupportSelection":
        return cls(np.unique(np.asarray(indices, dtype=int)), num_coefficients)

    @property
    def size(self) -> int:
        return self.indices.size

    @property
    def is_full(self) -> bool:
        return self.size == self.num_coefficients

    def selection_matrix(self) -> np.ndarray:
        """Tall 0/1 matrix whose columns are the selected standard-basis vectors."""
        p = np.zeros((self.num_coefficients, self.size))
        p[self.indices, np.arange(self.size)] = 1.0
        return p

    def embed(self, values: np.ndarray) -> np.ndarray:
        """Zero-filling right inverse of the selection."""
        values = np.asarray(values)
        if values.shape != (self.size,):
            raise DimensionError(f"expected {self.size} support values, got shape {values.shape}")
        out = np.zeros(self.num_coefficients, dtype=np.result_type(values, complex))
        out[self.indices] = values
        return out


@dataclass(frozen=True)
class DigitalCombiner:
    matrix: np.ndarray
    regularization: float


@dataclass(frozen=True)
class EstimationResult:
    support: SupportSelection
    h_v_nz_hat: np.ndarray
    h_virtual_hat: np.ndarray
    h_hat: np.ndarray
    analytic_mse: float = field(default=math.nan)


def omp_support(
    y: np.ndarray,
    sensing: np.ndarray,
    epsilon: float,
    max_atoms: Optional[int] = None,
) -> SupportSelection:
    """Greedy orthogonal matching pursuit on ``y ~ sensing @ h``.

    Atoms are picked by largest normalized correlation ``|a_j^H r| / ||a_j||``,
    lowest index on ties. The residual is the projection of ``y`` off the span
    of the picked atoms, maintained with twice-applied Gram-Schmidt (the same
    residual a least-squares refit gives). Iteration stops once
    ``||r||^2 <= epsilon`` or when ``max_atoms`` (default: number of rows)
    atoms are selected.
    """
    y = np.asarray(y)
    sensing = np.asarray(sensing)
    m, n = sensing.shape
    if y.shape != (m,):
        raise DimensionError(f"observation of shape {y.shape} does not match {m} sensing rows")
    if epsilon < 0:
        raise ValueError("stopping threshold must be non-negative")
    limit = min(m, n) if max_atoms is None else min(max_atoms, m, n)
    basis = np.zeros((m, limit), dtype=complex)
    selected: list[int] = []
    residual = y.astype(complex)
    col_norms = np.linalg.norm(sensing, axis=0)
    # zero columns can never be selected
    inv_norms = np.divide(1.0, col_norms, out=np.zeros_like(col_norms), where=col_norms > 0)
    while len(selected) < limit and np.vdot(residual, residual).real > epsilon:
        corr = np.abs(sensing.conj().T @ residual) * inv_norms
        corr[selected] = -np.inf
        j = int(np.argmax(corr))
        q = sensing[:, j].astype(complex)
        q_basis = basis[:, :len(selected)]
        for _ in range(2):
            q = q - q_basis @ (q_basis.conj().T @ q)
        norm = np.linalg.norm(q)
        if norm <= 1e-12 * max(col_norms[j], np.finfo(float).tiny):
            break  # the best remaining atom is already in the span
        basis[:, len(selected)] = q / norm
        selected.append(j)
        q_basis = basis[:, :len(selected)]
        residual = y - q_basis @ (q_basis.conj().T @ y)
    return SupportSelection.from_indices(selected, n)


def default_threshold(stats: EffectiveNoiseStats) -> float:
    """Expected effective-noise energy ``M N_RFr sigma_e^2``."""
    return stats.total_var


def lmmse_combiner(omega: np.ndarray, eta: float, noise_var_eff: float, channel_var: float) -> DigitalCombiner:
    """Closed-form MMSE digital combiner.

    ``W = Omega / (1 - eta) @ inv(Omega^H Omega + rho I)`` with
    ``rho = sigma_e^2 / ((1 - eta)^2 sigma_h^2)``; the Hermitian system is
    solved rather than inverted.
    """
    omega = np.asarray(omega)
    if channel_var <= 0:
        raise ValueError("channel variance must be positive")
    gain = 1.0 - eta
    if gain <= 0:
        raise ValueError("distortion factor must be below 1")
    rho = noise_var_eff / (gain * gain * channel_var)
    n_v = omega.shape[1]
    if n_v == 0:
        return DigitalCombiner(np.zeros_like(omega, dtype=complex), rho)
    gram = omega.conj().T @ omega
    gram[np.diag_indices(n_v)] += rho
    if rho > 0:
        solved = linalg.cho_solve(linalg.cho_factor(gram), omega.conj().T)
    else:
        try:
            lu = linalg.lu_factor(gram, check_finite=True)
        except linalg.LinAlgError as exc:
            raise RankDeficiencyError("noiseless combiner needs full column rank sensing") from exc
        if np.any(np.abs(np.diag(lu[0])) <= n_v * np.finfo(float).eps * np.abs(np.diag(lu[0])).max()):
            raise RankDeficiencyError("noiseless combiner needs full column rank sensing")
        solved = linalg.lu_solve(lu, omega.conj().T)
    return DigitalCombiner(solved.conj().T / gain, rho)


def _as_projection(projection: Union[DictionarySet, np.ndarray]):
    if isinstance(projection, DictionarySet):
        return projection.project
    psi = np.asarray(projection)
    return lambda h: psi @ h


def estimate_channel(
    y: np.ndarray,
    combiner: Union[DigitalCombiner, np.ndarray],
    support: SupportSelection,
    projection: Union[DictionarySet, np.ndarray],
    analytic_mse: float = math.nan,
) -> EstimationResult:
    """Apply the combiner and map the support estimate back to antenna domain.

    ``projection`` is either the dictionary set or the explicit Kronecker
    projection matrix.
    """
    w = combiner.matrix if isinstance(combiner, DigitalCombiner) else np.asarray(combiner)
    y = np.asarray(y)
    if w.shape != (y.shape[0], support.size):
        raise DimensionError(f"combiner of shape {w.shape} does not match y ({y.shape[0]}) and support ({support.size})")
    nz_hat = w.conj().T @ y
    h_virtual = support.embed(nz_hat)
    return EstimationResult(
        support=support,
        h_v_nz_hat=nz_hat,
        h_virtual_hat=h_virtual,
        h_hat=_as_projection(projection)(h_virtual),
        analytic_mse=analytic_mse,
    )


def analytic_mse(
    w: np.ndarray,
    omega: np.ndarray,
    eta: float,
    channel_var: float,
    noise_var_eff: float,
    num_support: Optional[int] = None,
) -> float:
    """MSE of ``W^H y`` as an estimate of ``h`` under the linearized model."""
    w = np.asarray(w)
    omega = np.asarray(omega)
    n_v = omega.shape[1] if num_support is None else num_support
    gain = 1.0 - eta
    cross = np.trace(w @ omega.conj().T + omega @ w.conj().T)
    quad = np.trace(w.conj().T @ omega @ omega.conj().T @ w)
    value = gain * channel_var * (gain * quad - cross) + channel_var * n_v + noise_var_eff * np.vdot(w, w)
    scale = max(1.0, abs(value.real))
    assert abs(value.imag) < 1e-12 * scale * max(1, w.size), "MSE has a non-negligible imaginary part"
    return float(value.real)


def mse_gradient(w: np.ndarray, omega: np.ndarray, eta: float, channel_var: float, noise_var_eff: float) -> np.ndarray:
    """Derivative of :func:`analytic_mse` with respect to ``conj(W)``."""
    w = np.asarray(w)
    omega = np.asarray(omega)
    gain = 1.0 - eta
    return (
        gain * gain * channel_var * omega @ (omega.conj().T @ w)
        - gain * channel_var * omega
        + noise_var_eff * w
    )


def ls_estimate(y: np.ndarray, sensing: np.ndarray) -> np.ndarray:
    """Least-squares virtual-channel estimate, blind to quantization."""
    sensing = np.asarray(sensing)
    rank = np.linalg.matrix_rank(sensing)
    if rank < sensing.shape[1]:
        raise RankDeficiencyError(f"LS needs full column rank, sensing has rank {rank} < {sensing.shape[1]}")
    solution, *_ = np.linalg.lstsq(sensing, y, rcond=None)
    return solution


def unaware_lmmse_combiner(sensing: np.ndarray, noise_var: float, channel_var: float) -> DigitalCombiner:
    """The same closed form with the ADC treated as ideal."""
    return lmmse_combiner(sensing, 0.0, noise_var, channel_var)


def conventional_baselines(y: np.ndarray, sensing: np.ndarray, noise_var: float, channel_var: float) -> dict:
    """Quantization-unaware reference estimates of the virtual channel.

    Returns ``{"ls": ..., "unaware_lmmse": ...}``; LS raises
    :class:`RankDeficiencyError` on column-rank-deficient sensing.
    """
    combiner = unaware_lmmse_combiner(sensing, noise_var, channel_var)
    return {
        "ls": ls_estimate(y, sensing),
        "unaware_lmmse": combiner.matrix.conj().T @ y,
    }
