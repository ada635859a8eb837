"""End-to-end acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines are
printed even when output capture is on.
"""

import math
import time

import numpy as np
import pytest

from hybridce import channel_model as cm
from hybridce import estimation as est
from hybridce import frontend as fe
from hybridce import harness as hx
from hybridce import quantization as qz
from hybridce import verification as vf
from hybridce.config import SystemConfig

pytestmark = pytest.mark.slow

TABLE = {1: 0.3634, 2: 0.1175, 3: 0.03454, 4: 0.009497, 5: 0.002499}


@pytest.fixture
def report(capsys):
    def emit(number, passed, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number:>2}] {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return emit


def test_01_quantizer_table(report):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    errors = {}
    for bits, eta in TABLE.items():
        x = rng.standard_normal(1_000_000)
        mse = np.mean((x - qz.quantize_real(x, qz.build_codebook(bits))) ** 2)
        errors[bits] = abs(mse - eta) / eta
    elapsed = time.perf_counter() - start
    ok = max(errors.values()) < 0.02 and elapsed < 10
    detail = ", ".join(f"b={b}: {e:.2%}" for b, e in errors.items())
    assert report(1, ok, f"Lloyd-Max MSE vs table ({detail}), {elapsed:.1f}s"), errors


def test_02_effective_noise_variance(report):
    start = time.perf_counter()
    results = []
    for noise_var in (0.1, 1.0):
        for bits in (1, 2, 3):
            r = vf.verify_effective_noise(vf.EFFECTIVE_NOISE_CONFIG.replace(noise_var=noise_var), bits, 10_000, rng=[2, bits, int(10 * noise_var)])
            results.append(r)
    elapsed = time.perf_counter() - start
    worst = max(r.relative_error for r in results)
    ok = all(r.passed for r in results) and elapsed < 300
    assert report(2, ok, f"effective noise energy, worst relative error {worst:.2%} over 6 cases, {elapsed:.0f}s")


def test_03_isotropy(report):
    r = vf.verify_isotropy(vf.EFFECTIVE_NOISE_CONFIG, 10_000, rng=3)
    assert report(3, r.passed, f"mean diagonal vs P N_RFt = {r.target}, max relative error {r.max_relative_error:.2%}")


def test_04_dictionary_unitarity(report):
    worst = 0.0
    for n in (4, 8, 16):
        psi = cm.build_dictionaries(n, n).kron_projection
        worst = max(worst, np.linalg.norm(psi @ psi.conj().T - np.eye(n * n)))
    assert report(4, worst < 1e-10, f"max ||Psi Psi^H - I||_F = {worst:.1e}")


def test_05_combiner_optimality(report):
    stationary = vf.verify_stationarity(100, rng=5)
    descent = vf.verify_global_optimality(20, rng=50)
    ok = stationary.passed and descent.passed
    assert report(
        5, ok,
        f"max relative gradient {stationary.max_relative_gradient:.1e}, "
        f"best descent improvement {descent.max_improvement:.1e}",
    )


def test_06_mse_consistency(report):
    r = vf.verify_mse_consistency(10, 10_000, rng=6)
    assert report(6, r.passed, f"closed-form vs sampled MSE, max relative error {r.max_relative_error:.2%}")


def test_07_omp_recovery(report):
    cfg = SystemConfig(n_t=8, n_r=8, n_rf_t=2, n_rf_r=2, num_uses=8)
    assert cfg.num_coefficients == 64 and cfg.num_observations == 16
    recovery = vf.verify_omp_recovery(cfg, 3, 200, rng=7)

    small = SystemConfig(n_t=4, n_r=4, n_rf_t=2, n_rf_r=2, num_uses=8)
    rng = np.random.default_rng(70)
    agree = 0
    instances = 20
    for _ in range(instances):
        sensing, h_v, _ = vf.sparse_virtual_instance(small, 3, rng)
        y = sensing @ h_v
        found = est.omp_support(y, sensing, 1e-20 * np.vdot(y, y).real)
        agree += np.array_equal(found.indices, vf.best_subset(y, sensing, 3))
    ok = recovery.passed and agree == instances
    assert report(
        7, ok, f"exact support in {recovery.success_rate:.1%} of 200 trials; subset oracle agrees {agree}/{instances}"
    )


def test_08_low_resolution_trends(report):
    start = time.perf_counter()
    spec = hx.ExperimentSpec(
        system=hx.DESK_SYSTEM,
        channel_kind="rayleigh",
        snr_grid_db=(0.0, 10.0, 20.0, 30.0),
        bits_grid=(1, 2),
        estimators=("ProposedLMMSE", "UnawareLMMSE"),
        trials=500,
        master_seed=8,
    )
    records = hx.run_experiment(spec)
    elapsed = time.perf_counter() - start
    lo = hx.find_record(records, "UnawareLMMSE", 0.0, 1)
    hi = hx.find_record(records, "UnawareLMMSE", 30.0, 1)
    grows = hi.nmse_mean > lo.nmse_mean
    worst_gap = -math.inf
    for bits in spec.bits_grid:
        for snr in spec.snr_grid_db:
            p = hx.find_record(records, "ProposedLMMSE", snr, bits)
            u = hx.find_record(records, "UnawareLMMSE", snr, bits)
            slack = 2 * math.hypot(p.nmse_stderr, u.nmse_stderr)
            worst_gap = max(worst_gap, p.nmse_mean - u.nmse_mean - slack)
    ok = grows and worst_gap <= 0 and elapsed < 600
    assert report(
        8, ok,
        f"unaware b=1 NMSE {lo.nmse_mean:.3f} at 0 dB -> {hi.nmse_mean:.3f} at 30 dB; "
        f"worst proposed-minus-unaware beyond 2 stderr {worst_gap:+.4f}; {elapsed:.0f}s",
    )


def test_09_sparse_support_gain(report):
    spec = hx.ExperimentSpec(
        system=hx.DESK_SYSTEM,
        channel_kind="sparse",
        num_paths=3,
        snr_grid_db=(10.0,),
        bits_grid=(2,),
        estimators=("ProposedLMMSE", "ProposedOMP_LMMSE"),
        trials=500,
        master_seed=9,
    )
    full, omp = hx.run_experiment(spec)
    margin = full.nmse_mean - omp.nmse_mean
    combined = math.hypot(full.nmse_stderr, omp.nmse_stderr)
    ok = margin >= 2 * combined
    assert report(
        9, ok, f"full-support {full.nmse_mean:.4f} vs OMP {omp.nmse_mean:.4f}, margin {margin / combined:.1f} stderr"
    )


def test_10_ideal_adc_reduction(report):
    spec = hx.ExperimentSpec(
        system=hx.DESK_SYSTEM,
        snr_grid_db=(0.0, 20.0),
        bits_grid=("inf",),
        estimators=("ProposedLMMSE", "UnawareLMMSE"),
        trials=5,
        master_seed=10,
    )
    identical = True
    for s in range(2):
        for t in range(spec.trials):
            config = spec.system.replace(noise_var=hx.noise_var_from_snr(spec.snr_grid_db[s], spec.system))
            rng = hx.trial_rng(spec.master_seed, t, s, 0)
            channel = cm.generate_rayleigh_channel(config, rng)
            codebook = fe.generate_analog_codewords(config, rng)
            pilots = fe.generate_pilots(config)
            noisy, clean = fe.simulate_unquantized_rx(channel, pilots, codebook, config.noise_var, rng, [0], True)
            model = qz.quantizer_model("inf")
            y = hx.observe(config, model, noisy[0], clean[0], spec.mode, rng)
            sensing = fe.sensing_matrix(pilots, codebook, cm.build_dictionaries(config.n_t, config.n_r), 0)
            a = hx.estimate_virtual(hx.Estimator.PROPOSED_LMMSE, y, sensing, config, model)
            b = hx.estimate_virtual(hx.Estimator.UNAWARE_LMMSE, y, sensing, config, model)
            identical &= a.tobytes() == b.tobytes()
    records = hx.run_experiment(spec)
    for snr in spec.snr_grid_db:
        p = hx.find_record(records, "ProposedLMMSE", snr, "inf")
        u = hx.find_record(records, "UnawareLMMSE", snr, "inf")
        identical &= p.nmse_mean == u.nmse_mean and p.nmse_stderr == u.nmse_stderr
    assert report(10, identical, "ideal-ADC proposed and unaware estimates bit-identical")


def test_11_determinism(report):
    spec = hx.ExperimentSpec(
        system=SystemConfig(n_t=8, n_r=8, n_rf_t=2, n_rf_r=2, num_subcarriers=8, num_taps=2),
        channel_kind="sparse",
        snr_grid_db=(0.0, 10.0, 20.0),
        bits_grid=(1, 3, "inf"),
        estimators=("ProposedLMMSE", "ProposedOMP_LMMSE", "LS", "UnawareLMMSE"),
        trials=12,
        master_seed=11,
        subcarriers=(0, 5),
    )
    first = hx.records_to_csv(hx.run_experiment(spec, workers=1))
    second = hx.records_to_csv(hx.run_experiment(spec, workers=1))
    parallel = hx.records_to_csv(hx.run_experiment(spec, workers=3))
    ok = first == second == parallel
    assert report(11, ok, f"serial, repeated and 3-worker CSV identical ({len(first)} bytes)")
