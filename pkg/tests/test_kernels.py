import dataclasses

import pytest

from cmpbench.devices import Precision, memory_bandwidth, theoretical_peak
from cmpbench.kernels import (
    CONTRACT_OFF_PRAGMA,
    FMA_REWRITE_MACRO,
    FMAD_DISABLE_FLAG,
    CampaignError,
    build_plan,
    campaign_buffer_bytes,
    generate_kernel,
    kernel_filename,
    run_fingerprint_campaign,
    write_kernel,
)
from cmpbench.roofline import FmaMode, make_descriptor, operational_intensity, ridge_point
from cmpbench.sim import SimExecutor, simulate


def desc(prec=Precision.FP32, c=1024, mode=FmaMode.FUSED):
    return make_descriptor(prec, c, mode, buffer_bytes=1024)


class TestGenerateKernel:
    def test_fused_has_no_guard(self):
        src = generate_kernel(desc())
        assert not src.contraction_guard
        assert CONTRACT_OFF_PRAGMA not in src.source_text
        assert FMA_REWRITE_MACRO not in src.source_text
        assert "for (int i = 0; i < 1024; ++i)" in src.source_text

    def test_unfused_has_both_directives(self):
        src = generate_kernel(desc(mode=FmaMode.UNFUSED))
        assert src.contraction_guard
        assert CONTRACT_OFF_PRAGMA in src.source_text
        assert FMA_REWRITE_MACRO in src.source_text

    def test_fp16_uses_half2(self):
        src = generate_kernel(desc(prec=Precision.FP16, c=256))
        assert "half2" in src.source_text

    def test_unsupported_precision(self):
        with pytest.raises(ValueError, match="no template"):
            generate_kernel(desc(prec=Precision.INT16))

    def test_golden_stability(self):
        d = desc()
        assert generate_kernel(d).source_text == generate_kernel(d).source_text

    def test_diff_is_exactly_the_two_directives(self):
        for prec in (Precision.FP32, Precision.FP64, Precision.FP16, Precision.INT32,
                     Precision.INT8):
            fused = generate_kernel(desc(prec=prec)).source_text.splitlines()
            unfused = generate_kernel(desc(prec=prec, mode=FmaMode.UNFUSED)).source_text.splitlines()
            assert unfused[:2] == [CONTRACT_OFF_PRAGMA, FMA_REWRITE_MACRO]
            assert unfused[2:] == fused

    def test_flop_annotation_matches_formula(self):
        d = desc(c=77)
        src = generate_kernel(d)
        assert f"// flops-per-element: {2 * 77 + 1}" in src.source_text

    def test_filename_layout(self, tmp_path):
        d = desc(mode=FmaMode.UNFUSED)
        assert kernel_filename(d) == "fp32_1024_unfused.clc"
        path = write_kernel(generate_kernel(d), tmp_path / "kernels")
        assert path.read_text() == generate_kernel(d).source_text


class TestBuildPlan:
    def test_unfused_cuda_like(self):
        plan = build_plan(desc(mode=FmaMode.UNFUSED), "cuda-like")
        assert plan.compiler_flags == [FMAD_DISABLE_FLAG]

    def test_fused_cuda_like(self):
        assert build_plan(desc(), "cuda-like").compiler_flags == []

    def test_unfused_opencl_like_uses_source_guard(self):
        plan = build_plan(desc(mode=FmaMode.UNFUSED), "opencl-like")
        assert plan.compiler_flags == []
        # the guard must live in the source for this toolchain
        assert generate_kernel(desc(mode=FmaMode.UNFUSED)).contraction_guard

    def test_unknown_toolchain(self):
        with pytest.raises(ValueError):
            build_plan(desc(), "hip-like")


class TestArithmeticNeutrality:
    def test_equal_flop_counts_when_unrestricted(self, cmp170hx, cmp_truth):
        # with restriction disabled, fused and unfused variants do the same work
        unrestricted = dataclasses.replace(
            cmp_truth, truth={k: 1.0 for k in cmp_truth.truth}
        )
        fused = make_descriptor(Precision.FP32, 1024, FmaMode.FUSED)
        unfused = make_descriptor(Precision.FP32, 1024, FmaMode.UNFUSED)
        assert fused.total_flops == unfused.total_flops
        m_f = simulate(unrestricted, fused)
        m_u = simulate(unrestricted, unfused)
        assert m_f.gops * m_f.exec_time_s == pytest.approx(
            m_u.gops * m_u.exec_time_s
        )


class TestCampaign:
    def test_ratios_match_published_ladder(self, cmp170hx, cmp_truth):
        fp = run_fingerprint_campaign(
            SimExecutor(cmp_truth), cmp170hx, [Precision.FP32, Precision.FP64, Precision.FP16]
        )
        get = lambda p, m: fp.entries[(p, m)].ratio
        assert get(Precision.FP32, FmaMode.FUSED) == pytest.approx(1 / 32)
        assert get(Precision.FP32, FmaMode.UNFUSED) == pytest.approx(1 / 2)
        assert get(Precision.FP64, FmaMode.FUSED) == pytest.approx(1 / 64)
        assert get(Precision.FP64, FmaMode.UNFUSED) == pytest.approx(1 / 128)
        assert get(Precision.FP16, FmaMode.FUSED) == pytest.approx(1.0)
        assert get(Precision.FP16, FmaMode.UNFUSED) == pytest.approx(1.0)

    def test_probes_are_compute_bound(self, cmp170hx, cmp_truth):
        seen = []

        class Spy(SimExecutor):
            def __call__(self, d):
                seen.append(d)
                return super().__call__(d)

        run_fingerprint_campaign(Spy(cmp_truth), cmp170hx, [Precision.FP16])
        bw = memory_bandwidth(cmp170hx)
        for d in seen:
            if d.compute_iters == 0:
                continue  # bandwidth probe
            ridge = ridge_point(theoretical_peak(cmp170hx, d.precision), bw)
            assert operational_intensity(d) >= 4 * ridge

    def test_buffer_cap(self, cmp170hx):
        assert campaign_buffer_bytes(cmp170hx, 4) == min(256 * 2**20, cmp170hx.vram_bytes // 4)

    def test_executor_failure_carries_descriptor(self, cmp170hx):
        def broken(d):
            raise RuntimeError("device fell off the bus")

        with pytest.raises(CampaignError) as exc_info:
            run_fingerprint_campaign(broken, cmp170hx, [Precision.FP32])
        assert exc_info.value.descriptor.precision is Precision.FP32
