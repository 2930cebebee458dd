"""Microbenchmark kernel generation and fingerprint campaigns.

Kernel bodies use a fixed accumulator-chain pattern (s = fma(s, x, x)
repeated, plus one trailing add) so the flop count per scalar element is
exactly ``2 * compute_iters + 1`` for every precision; vector templates
(half2, char4) only change how many scalar elements one work-item carries,
never the per-element accounting.

The unfused variant differs from the fused one by exactly two added lines:
the contract-off pragma and the multiply-add rewrite macro.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .devices import DeviceSpec, Precision, memory_bandwidth, theoretical_peak
from .fingerprint import BandwidthEntry, Fingerprint, make_entry
from .roofline import FmaMode, KernelDescriptor, operational_intensity, ridge_point
from .sim import Measurement

CONTRACT_OFF_PRAGMA = "#pragma OPENCL FP_CONTRACT OFF"
FMA_REWRITE_MACRO = "#define fma(a, b, c) ((a) * (b) + (c))"

FMAD_DISABLE_FLAG = "-fmad=false"

# Minimum compute intensity for a campaign descriptor; matches the
# known-good heavy point (c = 1024 at 4-byte elements) so CUDA-style
# under-pressure artifacts cannot bite even on huge-ridge devices.
CAMPAIGN_MIN_INTENSITY = 512.25

DEFAULT_CAMPAIGN_BUFFER = 256 * 1024 * 1024

Toolchain = str  # "cuda-like" | "opencl-like"


@dataclass(frozen=True)
class KernelSource:
    descriptor: KernelDescriptor
    source_text: str
    entry_point: str
    contraction_guard: bool

    def __post_init__(self) -> None:
        has_pragma = CONTRACT_OFF_PRAGMA in self.source_text
        has_macro = FMA_REWRITE_MACRO in self.source_text
        if self.descriptor.fma_mode is FmaMode.UNFUSED:
            if not (self.contraction_guard and has_pragma and has_macro):
                raise ValueError("unfused source must carry both anti-fusion directives")
        else:
            if self.contraction_guard or has_pragma or has_macro:
                raise ValueError("fused source must carry no anti-fusion directives")


@dataclass(frozen=True)
class BuildPlan:
    compiler_flags: List[str]
    defines: Dict[str, str] = field(default_factory=dict)
    target_arch: str = ""


# entry-point suffix, element declaration, loop body, trailing op
_TEMPLATES: Dict[Precision, Dict[str, str]] = {
    Precision.FP32: {
        "header": "",
        "elem_type": "float",
        "init": "float s = buf[gid];\n    const float x = seed;",
        "iter": "s = fma(s, x, x);",
        "extra": "s = s + x;",
    },
    Precision.FP64: {
        "header": "#pragma OPENCL EXTENSION cl_khr_fp64 : enable\n",
        "elem_type": "double",
        "init": "double s = buf[gid];\n    const double x = (double)seed;",
        "iter": "s = fma(s, x, x);",
        "extra": "s = s + x;",
    },
    Precision.FP16: {
        "header": "#pragma OPENCL EXTENSION cl_khr_fp16 : enable\n",
        "elem_type": "half2",
        "init": "half2 s = buf[gid];\n    const half2 x = (half2)(seed, seed);",
        "iter": "s = fma(s, x, x);",
        "extra": "s = s + x;",
    },
    Precision.INT32: {
        "header": "",
        "elem_type": "int",
        "init": "int s = buf[gid];\n    const int x = (int)seed;",
        "iter": "s = s * x + x;",
        "extra": "s = s + x;",
    },
    Precision.INT8: {
        "header": "",
        "elem_type": "char4",
        "init": (
            "char4 v = buf[gid];\n    int s = 0;\n    const char4 x = "
            "(char4)((char)seed, (char)seed, (char)seed, (char)seed);"
        ),
        "iter": (
            "v.x = (char)(v.x * x.x + x.x); v.y = (char)(v.y * x.y + x.y); "
            "v.z = (char)(v.z * x.z + x.z); v.w = (char)(v.w * x.w + x.w);"
        ),
        "extra": "s = s + v.x + v.y + v.z + v.w;",
    },
}


def generate_kernel(d: KernelDescriptor) -> KernelSource:
    """Instantiate the source variant for one descriptor.

    The generated text is a pure function of the descriptor, so repeated
    calls are byte-identical (golden-file stable).
    """
    tpl = _TEMPLATES.get(d.precision)
    if tpl is None:
        raise ValueError(f"no template for precision: {d.precision.value}")

    unfused = d.fma_mode is FmaMode.UNFUSED
    guard = f"{CONTRACT_OFF_PRAGMA}\n{FMA_REWRITE_MACRO}\n" if unfused else ""
    entry = f"mad_bench_{d.precision.value}"
    body = (
        f"{guard}{tpl['header']}"
        f"// flops-per-element: {d.flops_per_element}\n"
        f"__kernel void {entry}(__global {tpl['elem_type']}* buf, const float seed) {{\n"
        f"    const size_t gid = get_global_id(0);\n"
        f"    {tpl['init']}\n"
        f"    for (int i = 0; i < {d.compute_iters}; ++i) {{\n"
        f"        {tpl['iter']}\n"
        f"    }}\n"
        f"    {tpl['extra']}\n"
        f"    buf[gid] = {'v' if d.precision is Precision.INT8 else 's'};\n"
        f"}}\n"
    )
    return KernelSource(d, body, entry, contraction_guard=unfused)


def kernel_filename(d: KernelDescriptor) -> str:
    return f"{d.precision.value}_{d.compute_iters}_{d.fma_mode.value}.clc"


def write_kernel(src: KernelSource, out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / kernel_filename(src.descriptor)
    path.write_text(src.source_text)
    return path


def build_plan(d: KernelDescriptor, toolchain: Toolchain = "cuda-like") -> BuildPlan:
    """Compiler flags for one descriptor.

    CUDA-like toolchains disable contraction at the compiler (-fmad=false);
    OpenCL-like ones rely on the source-level guard and need no flags.
    """
    if toolchain not in ("cuda-like", "opencl-like"):
        raise ValueError(f"unknown toolchain: {toolchain}")
    flags: List[str] = []
    if d.fma_mode is FmaMode.UNFUSED and toolchain == "cuda-like":
        flags.append(FMAD_DISABLE_FLAG)
    arch = "sm_80" if toolchain == "cuda-like" else "generic"
    return BuildPlan(compiler_flags=flags, target_arch=arch)


class CampaignError(RuntimeError):
    """Executor failure, with the offending descriptor attached."""

    def __init__(self, descriptor: KernelDescriptor, cause: BaseException):
        super().__init__(f"executor failed on {kernel_filename(descriptor)}: {cause}")
        self.descriptor = descriptor


Executor = Callable[[KernelDescriptor], Measurement]


def campaign_buffer_bytes(spec: DeviceSpec, element_bytes: int) -> int:
    """256 MiB or a quarter of VRAM, whichever is smaller."""
    raw = min(DEFAULT_CAMPAIGN_BUFFER, spec.vram_bytes // 4)
    return raw - raw % element_bytes


def _campaign_descriptor(
    spec: DeviceSpec, prec: Precision, mode: FmaMode, iters: int
) -> KernelDescriptor:
    eb = prec.element_bytes
    proto = KernelDescriptor(
        precision=prec,
        compute_iters=0,
        fma_mode=mode,
        buffer_bytes=campaign_buffer_bytes(spec, eb),
        element_bytes=eb,
    )
    target = CAMPAIGN_MIN_INTENSITY
    if prec in spec.rates:
        bw = memory_bandwidth(spec)
        target = max(target, 4.0 * ridge_point(theoretical_peak(spec, prec), bw))
    c_min = math.ceil((target * eb - proto.extra_flops) / proto.flops_per_iter)
    return KernelDescriptor(
        precision=prec,
        compute_iters=max(iters, c_min),
        fma_mode=mode,
        buffer_bytes=proto.buffer_bytes,
        element_bytes=eb,
    )


def _measure(executor: Executor, d: KernelDescriptor, repeats: int = 5) -> Measurement:
    """One discarded warmup run, then the median-throughput timed run."""
    try:
        executor(d)  # warmup
        runs = [executor(d) for _ in range(repeats)]
    except Exception as exc:
        raise CampaignError(d, exc) from exc
    runs.sort(key=lambda m: m.gops)
    return runs[len(runs) // 2]


def run_fingerprint_campaign(
    executor: Executor,
    spec: DeviceSpec,
    precisions: Iterable[Precision],
    iters: int = 1024,
    modes: Sequence[FmaMode] = (FmaMode.FUSED, FmaMode.UNFUSED),
    measure_bandwidth: bool = True,
) -> Fingerprint:
    """Run compute-bound probes per (precision, mode) and classify ratios.

    Each probe sits at intensity >= 4x the ridge point so the measured
    throughput is the device's compute ceiling, not the memory roof.
    Precisions without a configured rate yield throughput-only entries.
    """
    fp = Fingerprint(device=spec.name)
    for prec in precisions:
        theo = theoretical_peak(spec, prec) if prec in spec.rates else None
        for mode in modes:
            d = _campaign_descriptor(spec, prec, mode, iters)
            meas = _measure(executor, d)
            fp.entries[(prec, mode)] = make_entry(meas.gops, theo)
    if measure_bandwidth:
        eb = Precision.FP32.element_bytes
        probe = KernelDescriptor(
            precision=Precision.FP32,
            compute_iters=0,
            fma_mode=FmaMode.FUSED,
            buffer_bytes=campaign_buffer_bytes(spec, eb),
            element_bytes=eb,
        )
        meas = _measure(executor, probe)
        theo_bw = memory_bandwidth(spec)
        fp.bandwidth_entry = BandwidthEntry(meas.gbps, theo_bw, meas.gbps / theo_bw)
    return fp


def sweep_descriptors(
    spec: DeviceSpec,
    prec: Precision,
    mode: FmaMode,
    iters_list: Sequence[int],
) -> List[KernelDescriptor]:
    """Descriptors for a mixbench-style intensity ladder."""
    eb = prec.element_bytes
    buf = campaign_buffer_bytes(spec, eb)
    return [
        KernelDescriptor(
            precision=prec, compute_iters=c, fma_mode=mode, buffer_bytes=buf, element_bytes=eb
        )
        for c in iters_list
    ]
