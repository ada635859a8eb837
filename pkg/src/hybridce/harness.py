"""Seeded Monte Carlo NMSE sweeps over SNR and ADC resolution."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import channel_model as cm
from . import estimation as est
from . import frontend as fe
from . import quantization as qz
from .config import (
    Bits,
    ConfigError,
    RankDeficiencyError,
    SystemConfig,
    format_bits,
    noise_var_from_snr,
    parse_bits,
)

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib


class Estimator(str, enum.Enum):
    PROPOSED_LMMSE = "ProposedLMMSE"
    PROPOSED_OMP_LMMSE = "ProposedOMP_LMMSE"
    LS = "LS"
    UNAWARE_LMMSE = "UnawareLMMSE"


class SimulationMode(str, enum.Enum):
    LINEARIZED = "linearized"
    NONLINEAR = "nonlinear"


CSV_COLUMNS = ("estimator", "snr_db", "bits", "nmse_mean", "nmse_stderr", "trials")

DESK_SYSTEM = SystemConfig(
    n_t=16, n_r=16, n_rf_t=4, n_rf_r=4, num_subcarriers=16, num_taps=4, pilot_power=1.0, channel_var=1.0
)


@dataclass(frozen=True)
class ExperimentSpec:
    system: SystemConfig = DESK_SYSTEM
    channel_kind: cm.ChannelKind = cm.ChannelKind.RAYLEIGH
    num_paths: int = 3
    snr_grid_db: Sequence[float] = (0.0, 10.0, 20.0, 30.0)
    bits_grid: Sequence[Bits] = (1, 2, 3, math.inf)
    estimators: Sequence[Estimator] = (Estimator.PROPOSED_LMMSE, Estimator.UNAWARE_LMMSE)
    trials: int = 500
    master_seed: int = 0
    subcarriers: Sequence[int] = (0,)
    mode: SimulationMode = SimulationMode.NONLINEAR
    agc_mode: qz.AGCMode = qz.AGCMode.ANALYTIC
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "channel_kind", cm.ChannelKind(self.channel_kind))
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "bits_grid", tuple(parse_bits(b) for b in self.bits_grid))
        object.__setattr__(self, "estimators", tuple(Estimator(e) for e in self.estimators))
        object.__setattr__(self, "subcarriers", tuple(int(k) for k in self.subcarriers))
        object.__setattr__(self, "mode", SimulationMode(self.mode))
        object.__setattr__(self, "agc_mode", qz.AGCMode(self.agc_mode))
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.snr_grid_db or not self.bits_grid or not self.estimators or not self.subcarriers:
            raise ConfigError("sweep grids must be non-empty")
        if any(not 0 <= k < self.system.num_subcarriers for k in self.subcarriers):
            raise ConfigError("evaluated subcarrier outside 0..K-1")
        if self.num_paths < 1 or self.num_paths > self.system.num_coefficients:
            raise ConfigError("num_paths out of range")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    def replace(self, **changes) -> "ExperimentSpec":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return ExperimentSpec(**values)


@dataclass
class ResultRecord:
    estimator: str
    snr_db: float
    bits: Bits
    nmse_mean: float
    nmse_stderr: float
    trials: int
    failures: int = 0
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bits"] = format_bits(self.bits)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ResultRecord":
        d = dict(d)
        d["bits"] = parse_bits(d["bits"])
        return cls(**d)


def nmse(estimate: np.ndarray, truth: np.ndarray) -> float:
    """``||estimate - truth||^2 / ||truth||^2``."""
    truth = np.asarray(truth)
    energy = float(np.vdot(truth, truth).real)
    if energy == 0.0:
        raise ValueError("NMSE is undefined for an all-zero reference")
    diff = np.asarray(estimate) - truth
    return float(np.vdot(diff, diff).real) / energy


def trial_rng(master_seed: int, trial: int, snr_index: int, bits_index: int) -> np.random.Generator:
    """Independent stream per work item, insensitive to execution order."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, trial, snr_index, bits_index]))


@lru_cache(maxsize=8)
def _dictionaries(n_t: int, n_r: int) -> cm.DictionarySet:
    return cm.build_dictionaries(n_t, n_r)


def _draw_channel(spec: ExperimentSpec, config: SystemConfig, rng) -> cm.ChannelRealization:
    if spec.channel_kind is cm.ChannelKind.SPARSE:
        return cm.generate_sparse_channel(config, spec.num_paths, rng)
    return cm.generate_rayleigh_channel(config, rng)


def observe(
    config: SystemConfig,
    model: qz.QuantizerModel,
    noisy: np.ndarray,
    clean: np.ndarray,
    mode: SimulationMode,
    rng: np.random.Generator,
) -> np.ndarray:
    """Digital observation ``y[k]`` from the pre-ADC signals of one subcarrier."""
    if mode is SimulationMode.NONLINEAR:
        return qz.quantize(noisy.reshape(-1), model, qz.analytic_input_variance(config))
    gain, stats = qz.bussgang_linearize(config, model)
    shape = clean.size
    noise = math.sqrt(stats.per_element_var / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return gain * clean.reshape(-1) + noise


def estimate_virtual(
    estimator: Estimator,
    y: np.ndarray,
    sensing: np.ndarray,
    config: SystemConfig,
    model: qz.QuantizerModel,
) -> np.ndarray:
    """Angular-domain channel estimate (zero-filled off-support) for one subcarrier."""
    gain, stats = qz.bussgang_linearize(config, model)
    n_coeff = sensing.shape[1]
    if estimator is Estimator.PROPOSED_LMMSE:
        w = est.lmmse_combiner(sensing, model.distortion_factor, stats.per_element_var, config.channel_var)
        return w.matrix.conj().T @ y
    if estimator is Estimator.PROPOSED_OMP_LMMSE:
        support = est.omp_support(y, gain * sensing, est.default_threshold(stats))
        omega = sensing[:, support.indices]
        w = est.lmmse_combiner(omega, model.distortion_factor, stats.per_element_var, config.channel_var)
        return support.embed(w.matrix.conj().T @ y) if support.size else np.zeros(n_coeff, dtype=complex)
    if estimator is Estimator.LS:
        return est.ls_estimate(y, sensing)
    if estimator is Estimator.UNAWARE_LMMSE:
        w = est.unaware_lmmse_combiner(sensing, config.noise_var, config.channel_var)
        return w.matrix.conj().T @ y
    raise ValueError(f"unknown estimator {estimator!r}")


def run_trial(spec: ExperimentSpec, snr_index: int, bits_index: int, trial: int) -> Dict[Estimator, Optional[float]]:
    """NMSE of every estimator on one channel/codebook/noise draw (``None`` on failure)."""
    bits = spec.bits_grid[bits_index]
    config = spec.system.replace(
        noise_var=noise_var_from_snr(spec.snr_grid_db[snr_index], spec.system), adc_bits=bits
    )
    rng = trial_rng(spec.master_seed, trial, snr_index, bits_index)
    dictionaries = _dictionaries(config.n_t, config.n_r)
    model = qz.quantizer_model(bits, spec.agc_mode)
    channel = _draw_channel(spec, config, rng)
    codebook = fe.generate_analog_codewords(config, rng)
    pilots = fe.generate_pilots(config)
    noisy, clean = fe.simulate_unquantized_rx(
        channel, pilots, codebook, config.noise_var, rng, subcarriers=spec.subcarriers, return_clean=True
    )
    errors: Dict[Estimator, List[float]] = {e: [] for e in spec.estimators}
    failed = set()
    for i, k in enumerate(spec.subcarriers):
        sensing = fe.sensing_matrix(pilots, codebook, dictionaries, k)
        h_v = cm.virtual_channel(channel.freq_responses[k], dictionaries)
        y = observe(config, model, noisy[i], clean[i], spec.mode, rng)
        for e in spec.estimators:
            if e in failed:
                continue
            try:
                errors[e].append(nmse(estimate_virtual(e, y, sensing, config, model), h_v))
            except (RankDeficiencyError, np.linalg.LinAlgError):
                failed.add(e)
    return {e: (None if e in failed else float(np.mean(errors[e]))) for e in spec.estimators}


def _work_items(spec: ExperimentSpec):
    return [
        (s, b, t)
        for b in range(len(spec.bits_grid))
        for s in range(len(spec.snr_grid_db))
        for t in range(spec.trials)
    ]


def _timed_trial(args):
    spec, s, b, t = args
    start = time.perf_counter()
    out = run_trial(spec, s, b, t)
    return out, time.perf_counter() - start


def run_experiment(spec: ExperimentSpec, workers: Optional[int] = None) -> List[ResultRecord]:
    """Average NMSE for every (estimator, SNR, bits) grid point.

    Records are ordered by estimator, then bits, then SNR. Results depend only
    on ``spec`` (not on ``workers``): each trial has its own seed and
    per-trial values are reduced in a fixed order.
    """
    workers = spec.workers if workers is None else workers
    items = _work_items(spec)
    jobs = [(spec, s, b, t) for s, b, t in items]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_timed_trial, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        outputs = [_timed_trial(job) for job in jobs]

    samples: Dict[tuple, List[Optional[float]]] = {}
    timing: Dict[tuple, float] = {}
    for (s, b, _), (out, elapsed) in zip(items, outputs):
        timing[(s, b)] = timing.get((s, b), 0.0) + elapsed
        for e, value in out.items():
            samples.setdefault((e, s, b), []).append(value)

    records = []
    for e in spec.estimators:
        for b, bits in enumerate(spec.bits_grid):
            for s, snr in enumerate(spec.snr_grid_db):
                values = samples[(e, s, b)]
                ok = np.array([v for v in values if v is not None])
                n = ok.size
                mean = float(ok.mean()) if n else math.nan
                stderr = float(ok.std(ddof=1) / math.sqrt(n)) if n > 1 else (0.0 if n else math.nan)
                records.append(
                    ResultRecord(
                        estimator=e.value,
                        snr_db=snr,
                        bits=bits,
                        nmse_mean=mean,
                        nmse_stderr=stderr,
                        trials=n,
                        failures=len(values) - n,
                        wall_time=timing[(s, b)] / len(spec.estimators),
                    )
                )
    return records


def find_record(records: Sequence[ResultRecord], estimator, snr_db: float, bits) -> ResultRecord:
    estimator = Estimator(estimator).value
    bits = parse_bits(bits)
    for r in records:
        if r.estimator == estimator and r.snr_db == snr_db and r.bits == bits:
            return r
    raise KeyError((estimator, snr_db, bits))


# -- output ---------------------------------------------------------------


def records_to_csv(records: Sequence[ResultRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([r.estimator, repr(float(r.snr_db)), format_bits(r.bits), repr(r.nmse_mean), repr(r.nmse_stderr), r.trials])
    return buf.getvalue()


def records_to_json(records: Sequence[ResultRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], indent=2) + "\n"


def read_records(path) -> List[ResultRecord]:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return [ResultRecord.from_dict(d) for d in json.loads(text)]
    rows = csv.DictReader(io.StringIO(text))
    return [
        ResultRecord(
            estimator=row["estimator"],
            snr_db=float(row["snr_db"]),
            bits=parse_bits(row["bits"]),
            nmse_mean=float(row["nmse_mean"]),
            nmse_stderr=float(row["nmse_stderr"]),
            trials=int(row["trials"]),
        )
        for row in rows
    ]


PLOT_SCRIPT = '''"""Plot NMSE against SNR from {data_name}.

Usage: python {script_name} [output.png]
"""
import csv
import json
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

DATA = Path(__file__).with_name("{data_name}")

if DATA.suffix == ".json":
    rows = json.loads(DATA.read_text())
else:
    with DATA.open(newline="") as fh:
        rows = list(csv.DictReader(fh))

curves = defaultdict(list)
for row in rows:
    curves[(row["estimator"], str(row["bits"]))].append((float(row["snr_db"]), float(row["nmse_mean"])))

fig, ax = plt.subplots(figsize=(5, 3.6))
for (estimator, bits), points in sorted(curves.items()):
    points.sort()
    snr, value = zip(*points)
    ax.plot(snr, 10 * np.log10(value), marker="o", label=f"{{estimator}}, b={{bits}}")
ax.set_xlabel("SNR [dB]")
ax.set_ylabel("NMSE [dB]")
ax.grid(True, alpha=0.3)
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else DATA.with_suffix(".png"), dpi=150)
'''


def plot_script_path(data_path) -> Path:
    data_path = Path(data_path)
    return data_path.with_name(data_path.stem + "_plot.py")


def emit_results(records: Sequence[ResultRecord], path, fmt: str = "csv") -> Path:
    """Write records as CSV or JSON plus a companion plotting script.

    Returns the path of the plot script.
    """
    path = Path(path)
    if fmt == "csv":
        text = records_to_csv(records)
    elif fmt == "json":
        text = records_to_json(records)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    path.write_text(text)
    script = plot_script_path(path)
    script.write_text(PLOT_SCRIPT.format(data_name=path.name, script_name=script.name))
    return script


# -- config files ----------------------------------------------------------

_SYSTEM_KEYS = {
    "n_t", "n_r", "n_rf_t", "n_rf_r", "num_subcarriers", "num_taps", "num_uses", "pilot_power", "channel_var",
}
_SPEC_KEYS = {
    "channel_kind", "num_paths", "snr_grid_db", "bits_grid", "estimators", "trials", "master_seed",
    "subcarriers", "mode", "agc_mode", "workers",
}


def spec_from_mapping(values: dict) -> ExperimentSpec:
    unknown = set(values) - _SYSTEM_KEYS - _SPEC_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        system_values = {k: values[k] for k in _SYSTEM_KEYS if k in values}
        base = {f: getattr(DESK_SYSTEM, f) for f in DESK_SYSTEM.__dataclass_fields__}
        if any(k in system_values for k in ("n_t", "n_r", "n_rf_t", "n_rf_r")) and "num_uses" not in system_values:
            base["num_uses"] = None
        base.update(system_values)
        system = SystemConfig(**base)
        return ExperimentSpec(system=system, **{k: values[k] for k in _SPEC_KEYS if k in values})
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_spec(path) -> ExperimentSpec:
    """Read a flat TOML experiment description."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            values = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return spec_from_mapping(values)
