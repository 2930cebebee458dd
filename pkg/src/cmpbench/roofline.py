"""Operational-intensity math and roofline envelopes.

A kernel descriptor carries everything needed to count its work exactly:
``flops_per_iter * compute_iters + extra_flops`` ops per element, over
``buffer_bytes / element_bytes`` elements.  The attainable throughput at a
given intensity is the classic min-envelope of the compute peak and
``intensity * bandwidth``; there is deliberately a single memory ceiling
(global memory only, no cache rooflines).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, List, Sequence, Tuple

from .devices import Precision


class FmaMode(str, Enum):
    FUSED = "fused"
    UNFUSED = "unfused"


class Bound(str, Enum):
    MEMORY = "memory"
    COMPUTE = "compute"


@dataclass(frozen=True)
class KernelDescriptor:
    """One microbenchmark point.

    ``flops_per_iter`` defaults to 2 (one multiply-add per iteration) and
    ``extra_flops`` to 1; with 4-byte elements this yields intensity
    (2c + 1) / 4, i.e. 512.250 at c = 1024.  Unfused mode keeps the flop
    count identical — a*b+c is still 2 flops — only throughput differs.
    """

    precision: Precision
    compute_iters: int
    fma_mode: FmaMode
    buffer_bytes: int
    element_bytes: int
    flops_per_iter: int = 2
    extra_flops: int = 1

    def __post_init__(self) -> None:
        if self.compute_iters < 0:
            raise ValueError("compute_iters must be non-negative")
        if self.element_bytes <= 0:
            raise ValueError("element_bytes must be positive")
        if self.flops_per_iter <= 0:
            raise ValueError("flops_per_iter must be positive")
        if self.extra_flops < 0:
            raise ValueError("extra_flops must be non-negative")
        if self.buffer_bytes <= 0:
            raise ValueError("buffer_bytes must be positive")
        if self.buffer_bytes % self.element_bytes != 0:
            raise ValueError("buffer_bytes must be divisible by element_bytes")

    @property
    def elements(self) -> int:
        return self.buffer_bytes // self.element_bytes

    @property
    def flops_per_element(self) -> int:
        return self.flops_per_iter * self.compute_iters + self.extra_flops

    @property
    def total_flops(self) -> int:
        return self.flops_per_element * self.elements


def make_descriptor(
    precision: Precision,
    compute_iters: int,
    fma_mode: FmaMode = FmaMode.FUSED,
    buffer_bytes: int = 64 * 1024 * 1024,
    element_bytes: int = 0,
) -> KernelDescriptor:
    """Build a descriptor with the per-precision default element width."""
    eb = element_bytes or precision.element_bytes
    buffer_bytes -= buffer_bytes % eb
    return KernelDescriptor(
        precision=precision,
        compute_iters=compute_iters,
        fma_mode=fma_mode,
        buffer_bytes=buffer_bytes,
        element_bytes=eb,
    )


@dataclass(frozen=True)
class RooflinePoint:
    intensity_flops_per_byte: float
    attainable_ops_s: float
    bound: Bound


def operational_intensity(d: KernelDescriptor) -> float:
    """Flops per byte of memory traffic for one element."""
    return (d.flops_per_iter * d.compute_iters + d.extra_flops) / d.element_bytes


def attainable(intensity: float, peak: float, bw: float) -> RooflinePoint:
    """Min-envelope of compute and memory roofs; ties tagged compute."""
    if peak <= 0 or bw <= 0:
        raise ValueError("peak and bandwidth must be positive")
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    mem_roof = intensity * bw
    if mem_roof >= peak:
        return RooflinePoint(intensity, peak, Bound.COMPUTE)
    return RooflinePoint(intensity, mem_roof, Bound.MEMORY)


def ridge_point(peak: float, bw: float) -> float:
    """Intensity where the memory roof meets the compute roof."""
    if bw <= 0:
        raise ValueError("bandwidth must be positive")
    return peak / bw


def sweep(
    template: KernelDescriptor,
    iters_list: Sequence[int],
    peak: float,
    bw: float,
) -> List[Tuple[KernelDescriptor, RooflinePoint]]:
    """One roofline point per iteration count, intensities strictly increasing."""
    if not iters_list:
        raise ValueError("sweep must be ascending")
    if any(b <= a for a, b in zip(iters_list, iters_list[1:])):
        raise ValueError("sweep must be ascending")
    out = []
    for c in iters_list:
        d = replace(template, compute_iters=c)
        out.append((d, attainable(operational_intensity(d), peak, bw)))
    return out


SWEEP_CSV_HEADER = "compute_iters,flops_per_byte,ex_time_s,gops,gbps"


def sweep_to_csv(results: Iterable[Tuple[KernelDescriptor, RooflinePoint]]) -> str:
    """Render sweep results in the mixbench-style report layout.

    ``gops``/``gbps`` columns are in units of 1e9; execution time is the
    ideal time at the envelope throughput.
    """
    buf = io.StringIO()
    buf.write(SWEEP_CSV_HEADER + "\n")
    for d, pt in results:
        ops = pt.attainable_ops_s
        ex_time = d.total_flops / ops if ops > 0 else 0.0
        gbps = ops / pt.intensity_flops_per_byte if pt.intensity_flops_per_byte > 0 else 0.0
        buf.write(
            f"{d.compute_iters},{pt.intensity_flops_per_byte:.6g},"
            f"{ex_time:.6g},{ops / 1e9:.6g},{gbps / 1e9:.6g}\n"
        )
    return buf.getvalue()
