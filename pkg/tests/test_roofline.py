import pytest
from hypothesis import given, strategies as st

from cmpbench.devices import Precision
from cmpbench.roofline import (
    Bound,
    FmaMode,
    KernelDescriptor,
    attainable,
    make_descriptor,
    operational_intensity,
    ridge_point,
    sweep,
    sweep_to_csv,
)

PEAK_FP32 = 12.63e12
PEAK_FP16 = 50.53e12
BW = 1493e9


def fp32_descriptor(c, **kw):
    return make_descriptor(Precision.FP32, c, **kw)


class TestOperationalIntensity:
    def test_heavy_point(self):
        # (2 * 1024 + 1) / 4
        assert operational_intensity(fp32_descriptor(1024)) == 512.250

    def test_memory_endpoint(self):
        assert operational_intensity(fp32_descriptor(0)) == 0.25

    def test_fp64_heavy_point(self):
        # Oracle: explicit sum of one mul and one add per iteration plus the
        # trailing op, over one 8-byte element.
        flops = sum(2 for _ in range(1024)) + 1
        d = make_descriptor(Precision.FP64, 1024)
        assert operational_intensity(d) == flops / 8 == 256.125

    @given(c=st.integers(min_value=0, max_value=10**6))
    def test_linear_in_iters(self, c):
        d0, d1 = fp32_descriptor(c), fp32_descriptor(c + 1)
        slope = d0.flops_per_iter / d0.element_bytes
        assert operational_intensity(d1) - operational_intensity(d0) == pytest.approx(slope)


class TestDescriptorInvariants:
    def test_buffer_divisibility(self):
        with pytest.raises(ValueError):
            KernelDescriptor(Precision.FP32, 1, FmaMode.FUSED, buffer_bytes=10, element_bytes=4)

    def test_negative_iters(self):
        with pytest.raises(ValueError):
            fp32_descriptor(-1)

    def test_flop_count(self):
        d = fp32_descriptor(1024, buffer_bytes=4096)
        assert d.total_flops == (2 * 1024 + 1) * 1024


class TestAttainable:
    def test_memory_bound_point(self):
        pt = attainable(0.25, PEAK_FP32, BW)
        assert pt.attainable_ops_s == pytest.approx(373.25e9)
        assert pt.bound is Bound.MEMORY

    def test_compute_bound_point(self):
        pt = attainable(512.25, PEAK_FP32, BW)
        assert pt.attainable_ops_s == PEAK_FP32
        assert pt.bound is Bound.COMPUTE

    def test_tie_is_compute(self):
        r = ridge_point(PEAK_FP32, BW)
        pt = attainable(r, PEAK_FP32, BW)
        assert pt.attainable_ops_s == PEAK_FP32
        assert pt.bound is Bound.COMPUTE


class TestRidgePoint:
    def test_fp32(self):
        assert ridge_point(PEAK_FP32, BW) == pytest.approx(8.459, rel=1e-3)

    def test_fp16(self):
        assert ridge_point(PEAK_FP16, BW) == pytest.approx(33.85, rel=1e-3)

    def test_equal_peak_and_bw(self):
        assert ridge_point(1e9, 1e9) == 1.0


positive = st.floats(min_value=1e3, max_value=1e15, allow_nan=False)


class TestEnvelopeProperties:
    @given(peak=positive, bw=positive, i=st.floats(min_value=0, max_value=1e6))
    def test_never_exceeds_either_roof(self, peak, bw, i):
        pt = attainable(i, peak, bw)
        assert pt.attainable_ops_s <= peak
        assert pt.attainable_ops_s <= i * bw or pt.attainable_ops_s == peak
        assert (pt.bound is Bound.MEMORY) == (i < ridge_point(peak, bw))

    @given(peak=positive, bw=positive,
           i1=st.floats(min_value=0, max_value=1e6),
           i2=st.floats(min_value=0, max_value=1e6))
    def test_monotone_in_intensity(self, peak, bw, i1, i2):
        lo, hi = sorted((i1, i2))
        assert attainable(lo, peak, bw).attainable_ops_s <= attainable(hi, peak, bw).attainable_ops_s

    @given(peak=positive, bw=positive)
    def test_ridge_attains_peak_exactly(self, peak, bw):
        assert attainable(ridge_point(peak, bw), peak, bw).attainable_ops_s == peak

    @given(peak=positive, bw=positive, i=st.floats(min_value=0, max_value=1e9))
    def test_constant_at_peak_past_ridge(self, peak, bw, i):
        r = ridge_point(peak, bw)
        pt = attainable(r + i, peak, bw)
        assert pt.attainable_ops_s == peak


class TestSweep:
    def test_three_points_increasing(self):
        results = sweep(fp32_descriptor(0), [0, 1, 1024], PEAK_FP32, BW)
        intensities = [pt.intensity_flops_per_byte for _, pt in results]
        assert len(results) == 3
        assert intensities == sorted(intensities)
        assert len(set(intensities)) == 3

    def test_single_element(self):
        assert len(sweep(fp32_descriptor(0), [7], PEAK_FP32, BW)) == 1

    def test_doubling_ladder_formula(self):
        ladder = [0] + [2**k for k in range(11)]
        results = sweep(fp32_descriptor(0), ladder, PEAK_FP32, BW)
        for (d, pt), c in zip(results, ladder):
            assert pt.intensity_flops_per_byte == (2 * c + 1) / 4

    def test_non_ascending_rejected(self):
        with pytest.raises(ValueError, match="sweep must be ascending"):
            sweep(fp32_descriptor(0), [4, 2], PEAK_FP32, BW)
        with pytest.raises(ValueError, match="sweep must be ascending"):
            sweep(fp32_descriptor(0), [], PEAK_FP32, BW)


def test_sweep_csv_layout():
    results = sweep(fp32_descriptor(0), [0, 1024], PEAK_FP32, BW)
    text = sweep_to_csv(results)
    lines = text.strip().splitlines()
    assert lines[0] == "compute_iters,flops_per_byte,ex_time_s,gops,gbps"
    assert lines[1].startswith("0,0.25,")
    assert lines[2].startswith("1024,512.25,")
    # identical input yields identical bytes
    assert text == sweep_to_csv(results)
