import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from cmpbench.devices import Precision, memory_bandwidth, theoretical_peak
from cmpbench.fingerprint import classify
from cmpbench.kernels import run_fingerprint_campaign
from cmpbench.roofline import FmaMode, make_descriptor, operational_intensity
from cmpbench.sim import (
    Measurement,
    SimExecutor,
    SimProfile,
    simulate,
    simulate_power,
)


def heavy(prec=Precision.FP32, mode=FmaMode.FUSED, c=1024):
    return make_descriptor(prec, c, mode, buffer_bytes=16 * 1024 * 1024)


class TestSimulate:
    def test_fp32_fused_lands_near_published_value(self, cmp_truth):
        m = simulate(cmp_truth, heavy())
        assert m.gops == pytest.approx(0.39e12, rel=0.03)

    def test_determinism_zero_noise(self, cmp_truth):
        d = heavy()
        assert simulate(cmp_truth, d) == simulate(cmp_truth, d)

    def test_determinism_with_noise(self, cmp_truth):
        noisy = dataclasses.replace(cmp_truth, noise_rel=0.02, seed=42)
        d = heavy()
        m1, m2 = simulate(noisy, d), simulate(noisy, d)
        assert m1 == m2
        assert m1.gops != simulate(cmp_truth, d).gops

    def test_memory_sweep_recovers_bandwidth(self, cmp_truth):
        m = simulate(cmp_truth, heavy(c=0))
        assert m.gbps == pytest.approx(1493e9, rel=5e-3)

    def test_missing_truth_entry(self, cmp_truth):
        with pytest.raises(ValueError, match="no truth entry"):
            simulate(cmp_truth, heavy(prec=Precision.INT16))

    def test_gops_consistent_with_flop_count(self, cmp_truth):
        d = heavy()
        m = simulate(cmp_truth, d)
        assert m.gops == pytest.approx(d.total_flops / m.exec_time_s, rel=1e-6)

    @settings(max_examples=200)
    @given(c=st.integers(min_value=0, max_value=4096),
           noise=st.floats(min_value=0, max_value=0.05),
           seed=st.integers(min_value=0, max_value=2**63))
    def test_envelope_respected(self, cmp_truth, c, noise, seed):
        profile = dataclasses.replace(cmp_truth, noise_rel=noise, seed=seed)
        d = heavy(c=c)
        m = simulate(profile, d)
        peak = theoretical_peak(profile.spec, d.precision)
        envelope = min(
            peak * profile.truth[(d.precision, d.fma_mode)],
            operational_intensity(d) * memory_bandwidth(profile.spec),
        )
        assert m.gops <= (1 + noise) * envelope * (1 + 1e-12)


class TestSimulatePower:
    def test_full_envelope_hits_tdp(self, cmp_truth):
        # fp16 is unthrottled: a compute-bound fp16 run is at full utilization
        assert simulate_power(cmp_truth, heavy(prec=Precision.FP16)) == pytest.approx(250.0)

    def test_zero_work_idles_at_floor(self, cmp_truth):
        d = dataclasses.replace(heavy(c=0), extra_flops=0)
        assert simulate_power(cmp_truth, d) == pytest.approx(50.0)

    def test_half_utilization(self, cmp_truth):
        half = dataclasses.replace(
            cmp_truth,
            truth={**cmp_truth.truth, (Precision.FP16, FmaMode.FUSED): 0.5},
        )
        assert simulate_power(half, heavy(prec=Precision.FP16)) == pytest.approx(150.0)


class TestProfileValidation:
    def test_rejects_ratio_above_one(self, cmp170hx):
        with pytest.raises(ValueError):
            SimProfile(cmp170hx, {(Precision.FP32, FmaMode.FUSED): 1.5})

    def test_rejects_zero_ratio(self, cmp170hx):
        with pytest.raises(ValueError):
            SimProfile(cmp170hx, {(Precision.FP32, FmaMode.FUSED): 0.0})


class TestPipelineClosure:
    def test_campaign_recovers_truth_exactly(self, cmp170hx, cmp_truth):
        fp = run_fingerprint_campaign(
            SimExecutor(cmp_truth),
            cmp170hx,
            [Precision.FP32, Precision.FP64, Precision.FP16],
        )
        for key, truth_ratio in cmp_truth.truth.items():
            if key[0] not in cmp170hx.rates:
                continue
            entry = fp.entries[key]
            assert entry.ratio == pytest.approx(truth_ratio, rel=0.01)
            assert entry.bin == classify(truth_ratio)
        assert fp.bandwidth_entry.ratio == pytest.approx(1.0, rel=0.01)

    def test_campaign_recovers_truth_within_noise(self, cmp170hx, cmp_truth):
        noisy = dataclasses.replace(cmp_truth, noise_rel=0.02, seed=7)
        fp = run_fingerprint_campaign(SimExecutor(noisy), cmp170hx, [Precision.FP32])
        for key in ((Precision.FP32, FmaMode.FUSED), (Precision.FP32, FmaMode.UNFUSED)):
            assert fp.entries[key].ratio == pytest.approx(
                cmp_truth.truth[key], rel=0.02 + 0.01
            )
