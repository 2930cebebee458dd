"""Deterministic simulated device.

Couples a :class:`DeviceSpec` with a ground-truth restriction table and
produces synthetic measurements that respect the roofline envelope:

    throughput = min(peak * truth_ratio, intensity * bw * bandwidth_ratio)

optionally perturbed by multiplicative noise.  The noise generator is
SplitMix64 seeded from (profile seed, descriptor fields), so identical
inputs give bitwise-identical measurements on every platform.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .devices import DeviceSpec, Precision, memory_bandwidth, theoretical_peak
from .roofline import FmaMode, KernelDescriptor, operational_intensity

_DATA_DIR = Path(__file__).parent / "data"

# Fixed timestamp for simulated measurements: determinism beats provenance.
_SIM_TIMESTAMP = "1970-01-01T00:00:00+00:00"

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> Tuple[int, int]:
    """One SplitMix64 step: returns (next_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _descriptor_key(d: KernelDescriptor) -> int:
    """Stable 64-bit mix of every descriptor field (FNV-1a over a tuple)."""
    h = 0xCBF29CE484222325
    parts = (
        d.precision.value,
        d.fma_mode.value,
        str(d.compute_iters),
        str(d.buffer_bytes),
        str(d.element_bytes),
        str(d.flops_per_iter),
        str(d.extra_flops),
    )
    for part in parts:
        for b in part.encode():
            h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


@dataclass(frozen=True)
class Measurement:
    """One benchmark result; ``gops``/``gbps`` are in ops/s and bytes/s."""

    descriptor: KernelDescriptor
    gops: float
    gbps: float
    exec_time_s: float
    power_watts: Optional[float] = None
    api: str = "simulated"
    timestamp: str = _SIM_TIMESTAMP

    def __post_init__(self) -> None:
        if self.gops < 0 or self.gbps < 0:
            raise ValueError("throughputs must be non-negative")
        if self.exec_time_s <= 0:
            raise ValueError("exec_time_s must be positive")


@dataclass(frozen=True)
class SimProfile:
    """Device spec plus the ground-truth restriction ratios to simulate."""

    spec: DeviceSpec
    truth: Mapping[Tuple[Precision, FmaMode], float]
    bandwidth_ratio: float = 1.0
    noise_rel: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for key, ratio in self.truth.items():
            if not 0 < ratio <= 1:
                raise ValueError(f"truth ratio for {key} must be in (0, 1]")
        if not 0 < self.bandwidth_ratio <= 1:
            raise ValueError("bandwidth_ratio must be in (0, 1]")
        if self.noise_rel < 0:
            raise ValueError("noise_rel must be non-negative")


def _noise_factor(profile: SimProfile, d: KernelDescriptor) -> float:
    if profile.noise_rel == 0:
        return 1.0
    state = (profile.seed ^ _descriptor_key(d)) & _MASK64
    _, value = _splitmix64(state)
    unit = value / float(1 << 64)  # [0, 1)
    return 1.0 + (2.0 * unit - 1.0) * profile.noise_rel


def _envelope(profile: SimProfile, d: KernelDescriptor) -> Tuple[float, float]:
    """(restricted envelope, unrestricted envelope) in ops/s."""
    key = (d.precision, d.fma_mode)
    if key not in profile.truth:
        raise ValueError(f"no truth entry for ({d.precision.value}, {d.fma_mode.value})")
    peak = theoretical_peak(profile.spec, d.precision)
    bw = memory_bandwidth(profile.spec)
    i = operational_intensity(d)
    restricted = min(peak * profile.truth[key], i * bw * profile.bandwidth_ratio)
    unrestricted = min(peak, i * bw)
    return restricted, unrestricted


def simulate(profile: SimProfile, d: KernelDescriptor) -> Measurement:
    """Synthesize the measurement the restricted device would report."""
    restricted, _ = _envelope(profile, d)
    bw = memory_bandwidth(profile.spec) * profile.bandwidth_ratio
    i = operational_intensity(d)
    if d.total_flops == 0 or restricted == 0:
        # Pure memory traffic, no countable ops.
        exec_time = d.buffer_bytes / bw
        return Measurement(d, 0.0, d.buffer_bytes / exec_time, exec_time)
    throughput = restricted * _noise_factor(profile, d)
    exec_time = d.total_flops / throughput
    return Measurement(
        descriptor=d,
        gops=d.total_flops / exec_time,
        gbps=throughput / i,
        exec_time_s=exec_time,
    )


def simulate_power(
    profile: SimProfile, d: KernelDescriptor, idle_floor_fraction: float = 0.2
) -> float:
    """Linear utilization power model between an idle floor and TDP."""
    restricted, unrestricted = _envelope(profile, d)
    if d.total_flops == 0 or unrestricted == 0:
        utilization = 0.0
    else:
        utilization = min(1.0, restricted / unrestricted)
    floor = idle_floor_fraction * profile.spec.tdp_watts
    return floor + (profile.spec.tdp_watts - floor) * utilization


class SimExecutor:
    """Callable executor over one profile, for fingerprint campaigns."""

    api = "simulated"

    def __init__(self, profile: SimProfile):
        self.profile = profile

    def __call__(self, d: KernelDescriptor) -> Measurement:
        return simulate(self.profile, d)


def load_sim_profile(path: Union[str, Path], spec: DeviceSpec) -> SimProfile:
    """Read a ground-truth profile from TOML and bind it to a device spec."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    truth: Dict[Tuple[Precision, FmaMode], float] = {}
    for prec_name, modes in raw.get("truth", {}).items():
        for mode_name, ratio in modes.items():
            truth[(Precision(prec_name), FmaMode(mode_name))] = float(ratio)
    return SimProfile(
        spec=spec,
        truth=truth,
        bandwidth_ratio=float(raw.get("bandwidth_ratio", 1.0)),
        noise_rel=float(raw.get("noise_rel", 0.0)),
        seed=int(raw.get("seed", 0)),
    )


def bundled_profile_path(name: str) -> Path:
    path = _DATA_DIR / "profiles" / f"{name}.toml"
    if not path.exists():
        available = sorted(p.stem for p in (_DATA_DIR / "profiles").glob("*.toml"))
        raise FileNotFoundError(f"no bundled profile '{name}' (have: {', '.join(available)})")
    return path


def load_bundled_profile(name: str, spec: DeviceSpec) -> SimProfile:
    return load_sim_profile(bundled_profile_path(name), spec)
