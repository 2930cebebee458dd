"""Hardware specifications and the theoretical quantities derived from them.

A :class:`DeviceSpec` is a plain description of a GPU (core counts, clocks,
memory geometry, per-precision issue rates).  Everything "theoretical" —
compute peaks, memory bandwidth, texture fill rate, PCIe ceiling — is a pure
function of the spec, so one spec format can describe any vendor's part.

Unit conventions: 1 GB/s = 10^9 bytes/s and 1 TFLOPS = 10^12 ops/s.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Mapping, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_DATA_DIR = Path(__file__).parent / "data"


class Precision(str, Enum):
    FP64 = "fp64"
    FP32 = "fp32"
    FP16 = "fp16"
    INT32 = "int32"
    INT16 = "int16"
    INT8 = "int8"

    @property
    def element_bytes(self) -> int:
        return {
            Precision.FP64: 8,
            Precision.FP32: 4,
            Precision.FP16: 2,
            Precision.INT32: 4,
            Precision.INT16: 2,
            Precision.INT8: 1,
        }[self]


# Per-lane usable rate in bytes/s for each PCIe generation.  Gen 1/2 use
# 8b/10b encoding (2.5 / 5.0 GT/s -> 250 / 500 MB/s per lane); gen 3+ use
# 128b/130b.
PCIE_LANE_RATE_BPS: Dict[int, float] = {
    1: 250e6,
    2: 500e6,
    3: 984.6e6,
    4: 1969.2e6,
    5: 3938.4e6,
}

_VALID_LANES = (1, 2, 4, 8, 16)


@dataclass(frozen=True)
class DeviceSpec:
    """Full hardware description of one device.

    ``rates`` maps each precision to ops issued per CUDA core per clock;
    precisions with no known rate are simply absent (their theoretical
    peak is then unavailable, not zero).
    """

    name: str
    architecture: str
    sm_count: int
    cuda_cores: int
    tmu_count: int
    base_clock_hz: float
    boost_clock_hz: float
    mem_bus_width_bits: int
    mem_clock_hz: float
    mem_pump_factor: int
    vram_bytes: int
    tdp_watts: float
    pcie_gen: int
    pcie_lanes: int
    rates: Mapping[Precision, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.sm_count <= 0 or self.cuda_cores <= 0 or self.tmu_count <= 0:
            raise ValueError("core counts must be positive")
        if self.cuda_cores % self.sm_count != 0:
            raise ValueError("cuda_cores must be divisible by sm_count")
        if self.base_clock_hz <= 0 or self.mem_clock_hz <= 0:
            raise ValueError("all clocks must be positive")
        if self.boost_clock_hz < self.base_clock_hz:
            raise ValueError("boost clock below base clock")
        if self.mem_bus_width_bits <= 0 or self.mem_pump_factor <= 0:
            raise ValueError("memory geometry must be positive")
        if self.vram_bytes <= 0:
            raise ValueError("vram_bytes must be positive")
        if self.tdp_watts <= 0:
            raise ValueError("tdp_watts must be positive")
        if self.pcie_gen not in PCIE_LANE_RATE_BPS:
            raise ValueError("unsupported PCIe generation")
        if self.pcie_lanes not in _VALID_LANES:
            raise ValueError(f"pcie_lanes must be one of {_VALID_LANES}")
        for prec, rate in self.rates.items():
            if rate <= 0:
                raise ValueError(f"rate for {prec.value} must be positive")


@dataclass(frozen=True)
class TheoreticalProfile:
    """All derived ceilings for one device at a chosen clock."""

    peak_per_precision: Mapping[Precision, float]  # ops/s
    mem_bandwidth_Bps: float
    texture_fill_rate_texels_s: float
    pcie_bandwidth_Bps: float


def theoretical_peak(spec: DeviceSpec, p: Precision, *, base_clock: bool = False) -> float:
    """Peak throughput in ops/s: cores x clock x per-core issue rate."""
    if p not in spec.rates:
        raise ValueError(f"unknown precision rate: {p.value}")
    clock = spec.base_clock_hz if base_clock else spec.boost_clock_hz
    return spec.cuda_cores * clock * spec.rates[p]


def memory_bandwidth(spec: DeviceSpec) -> float:
    """Peak DRAM bandwidth in bytes/s."""
    return spec.mem_bus_width_bits * spec.mem_clock_hz * spec.mem_pump_factor / 8.0


def texture_fill_rate(spec: DeviceSpec, clock_hz: float) -> float:
    """Texels/s at the given core clock."""
    if clock_hz <= 0:
        raise ValueError("clock must be positive")
    return spec.tmu_count * clock_hz


def pcie_theoretical(gen: int, lanes: int) -> float:
    """Usable PCIe bandwidth ceiling in bytes/s for one direction."""
    if gen not in PCIE_LANE_RATE_BPS:
        raise ValueError("unsupported PCIe generation")
    if lanes not in _VALID_LANES:
        raise ValueError(f"pcie_lanes must be one of {_VALID_LANES}")
    return PCIE_LANE_RATE_BPS[gen] * lanes


def theoretical_profile(spec: DeviceSpec, *, base_clock: bool = False) -> TheoreticalProfile:
    """Derive every theoretical ceiling from the spec in one shot."""
    clock = spec.base_clock_hz if base_clock else spec.boost_clock_hz
    return TheoreticalProfile(
        peak_per_precision={
            p: theoretical_peak(spec, p, base_clock=base_clock) for p in spec.rates
        },
        mem_bandwidth_Bps=memory_bandwidth(spec),
        texture_fill_rate_texels_s=texture_fill_rate(spec, clock),
        pcie_bandwidth_Bps=pcie_theoretical(spec.pcie_gen, spec.pcie_lanes),
    )


def load_device_spec(path: Union[str, Path]) -> DeviceSpec:
    """Read a device spec from a TOML file (one device per file)."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    rates = {Precision(k): float(v) for k, v in raw.pop("rates", {}).items()}
    return DeviceSpec(
        name=raw["name"],
        architecture=raw["architecture"],
        sm_count=int(raw["sm_count"]),
        cuda_cores=int(raw["cuda_cores"]),
        tmu_count=int(raw["tmu_count"]),
        base_clock_hz=float(raw["base_clock_hz"]),
        boost_clock_hz=float(raw["boost_clock_hz"]),
        mem_bus_width_bits=int(raw["mem_bus_width_bits"]),
        mem_clock_hz=float(raw["mem_clock_hz"]),
        mem_pump_factor=int(raw["mem_pump_factor"]),
        vram_bytes=int(raw["vram_bytes"]),
        tdp_watts=float(raw["tdp_watts"]),
        pcie_gen=int(raw["pcie_gen"]),
        pcie_lanes=int(raw["pcie_lanes"]),
        rates=rates,
    )


def bundled_spec_path(name: str) -> Path:
    path = _DATA_DIR / "specs" / f"{name}.toml"
    if not path.exists():
        available = sorted(p.stem for p in (_DATA_DIR / "specs").glob("*.toml"))
        raise FileNotFoundError(f"no bundled spec '{name}' (have: {', '.join(available)})")
    return path


def load_bundled_spec(name: str) -> DeviceSpec:
    """Load one of the specs shipped with the package (e.g. ``cmp170hx``)."""
    return load_device_spec(bundled_spec_path(name))


def resolve_device(name_or_path: Union[str, Path]) -> DeviceSpec:
    """Accept either a bundled spec name or a path to a spec file."""
    p = Path(name_or_path)
    if p.exists():
        return load_device_spec(p)
    return load_bundled_spec(str(name_or_path))
