"""Analytical LLM inference models: footprint, scaling, attainment, efficiency.

Prefill is compute-bound, so throughput scales with SM count between two
devices of the same core architecture; decode is memory-bound and scales
with DRAM bandwidth.  Footprint is weights (params x bits-per-weight) plus
the KV cache (2 x layers x kv_heads x head_dim x context x element bytes,
the GQA layout).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .devices import DeviceSpec, memory_bandwidth

_DATA_DIR = Path(__file__).parent / "data"

# Advisory attainment bands observed on one restricted GA100 part; reports
# flag rows inside them, nothing asserts on them.
PREFILL_BAND = (0.14, 0.45)
DECODE_BAND = (0.39, 0.78)

# KV cache elements default to f16 regardless of weight quantization.
DEFAULT_KV_ELEM_BYTES = 2


class Phase(str, Enum):
    PREFILL = "prefill"
    DECODE = "decode"


@dataclass(frozen=True)
class LlmModelSpec:
    name: str
    params_total: int
    params_nonembedding: int
    layers: int
    q_heads: int
    kv_heads: int
    head_dim: int
    max_context: int

    def __post_init__(self) -> None:
        counts = (
            self.params_total,
            self.params_nonembedding,
            self.layers,
            self.q_heads,
            self.kv_heads,
            self.head_dim,
            self.max_context,
        )
        if any(c <= 0 for c in counts):
            raise ValueError("all model counts must be positive")
        if self.kv_heads > self.q_heads:
            raise ValueError("kv_heads must not exceed q_heads")


@dataclass(frozen=True)
class QuantFormat:
    name: str
    bits_per_weight: float
    kv_cache_bytes_per_elem: int = DEFAULT_KV_ELEM_BYTES

    def __post_init__(self) -> None:
        if not 0 < self.bits_per_weight <= 32:
            raise ValueError("bits_per_weight must be in (0, 32]")
        if self.name == "f32" and self.bits_per_weight != 32:
            raise ValueError("f32 must be exactly 32 bits")
        if self.name == "f16" and self.bits_per_weight != 16:
            raise ValueError("f16 must be exactly 16 bits")
        if self.kv_cache_bytes_per_elem <= 0:
            raise ValueError("kv_cache_bytes_per_elem must be positive")


@dataclass(frozen=True)
class ScalingBasis:
    reference_device: DeviceSpec
    target_device: DeviceSpec
    reference_tps: float

    def __post_init__(self) -> None:
        if self.reference_tps < 0:
            raise ValueError("reference_tps must be non-negative")


@dataclass(frozen=True)
class PredictionResult:
    phase: Phase
    predicted_tps: float
    measured_tps: Optional[float] = None
    attainment: Optional[float] = None
    efficiency_tps_per_watt: Optional[float] = None


def scale_prefill(basis: ScalingBasis) -> float:
    """Compute-bound cross-device scaling: tps x (target SMs / reference SMs)."""
    return basis.reference_tps / basis.reference_device.sm_count * basis.target_device.sm_count


def scale_decode(basis: ScalingBasis) -> float:
    """Memory-bound cross-device scaling by derived DRAM bandwidth."""
    ref_bw = memory_bandwidth(basis.reference_device)
    tgt_bw = memory_bandwidth(basis.target_device)
    return basis.reference_tps / ref_bw * tgt_bw


def weights_footprint(m: LlmModelSpec, q: QuantFormat) -> float:
    """Bytes needed to hold all weights under a quantization format."""
    return m.params_total * q.bits_per_weight / 8.0


def kv_cache_bytes(
    m: LlmModelSpec, context: int, elem_bytes: int = DEFAULT_KV_ELEM_BYTES
) -> int:
    """K and V per layer per KV head per token: 2 * L * H_kv * d * n * bytes."""
    if context < 0:
        raise ValueError("context must be non-negative")
    if context > m.max_context:
        raise ValueError("context exceeds model maximum")
    return 2 * m.layers * m.kv_heads * m.head_dim * context * elem_bytes


@dataclass(frozen=True)
class FitResult:
    fits: bool
    total_bytes: float
    headroom_bytes: float


def fits_in_vram(
    m: LlmModelSpec,
    q: QuantFormat,
    context: int,
    spec: DeviceSpec,
    overhead_fraction: float = 0.05,
) -> FitResult:
    """Weights + KV cache + a VRAM-fraction overhead against device VRAM."""
    if not 0 <= overhead_fraction < 1:
        raise ValueError("overhead_fraction must be in [0, 1)")
    total = (
        weights_footprint(m, q)
        + kv_cache_bytes(m, context, q.kv_cache_bytes_per_elem)
        + overhead_fraction * spec.vram_bytes
    )
    return FitResult(
        fits=total <= spec.vram_bytes,
        total_bytes=total,
        headroom_bytes=spec.vram_bytes - total,
    )


def attainment(measured: float, predicted: float) -> float:
    """Fraction of the predicted throughput actually reached."""
    if predicted <= 0:
        raise ValueError("predicted throughput must be positive")
    return measured / predicted


def band_flag(a: float, phase: Phase) -> str:
    """Advisory in-band/out-of-band flag for an attainment value."""
    lo, hi = PREFILL_BAND if phase is Phase.PREFILL else DECODE_BAND
    return f"in-band({phase.value})" if lo <= a <= hi else f"out-of-band({phase.value})"


def fma_off_speedup(tps_fma_on: float, tps_fma_off: float) -> float:
    """FMA-off throughput as a fraction of the FMA-on rate (2.31 = 231%)."""
    if tps_fma_on <= 0:
        raise ValueError("tps_fma_on must be positive")
    return tps_fma_off / tps_fma_on


def mean_power(
    samples: Sequence[Tuple[float, float]],
    window: Optional[Tuple[float, float]] = None,
) -> float:
    """Arithmetic mean of (timestamp, watts) samples inside a window."""
    if window is not None:
        lo, hi = window
        samples = [s for s in samples if lo <= s[0] <= hi]
    if not samples:
        raise ValueError("no power samples in window")
    return sum(w for _, w in samples) / len(samples)


def efficiency(tps: float, watts: float) -> float:
    """Tokens per second per watt."""
    if watts <= 0:
        raise ValueError("watts must be positive")
    return tps / watts


def predict(
    basis: ScalingBasis,
    phase: Phase,
    measured_tps: Optional[float] = None,
    avg_watts: Optional[float] = None,
) -> PredictionResult:
    predicted = scale_prefill(basis) if phase is Phase.PREFILL else scale_decode(basis)
    att = attainment(measured_tps, predicted) if measured_tps is not None else None
    eff = None
    if avg_watts is not None and measured_tps is not None:
        eff = efficiency(measured_tps, avg_watts)
    return PredictionResult(phase, predicted, measured_tps, att, eff)


def load_model_spec(path: Union[str, Path]) -> LlmModelSpec:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return LlmModelSpec(
        name=raw["name"],
        params_total=int(raw["params_total"]),
        params_nonembedding=int(raw["params_nonembedding"]),
        layers=int(raw["layers"]),
        q_heads=int(raw["q_heads"]),
        kv_heads=int(raw["kv_heads"]),
        head_dim=int(raw["head_dim"]),
        max_context=int(raw["max_context"]),
    )


def load_bundled_model(name: str) -> LlmModelSpec:
    path = _DATA_DIR / "models" / f"{name}.toml"
    if not path.exists():
        available = sorted(p.stem for p in (_DATA_DIR / "models").glob("*.toml"))
        raise FileNotFoundError(f"no bundled model '{name}' (have: {', '.join(available)})")
    return load_model_spec(path)


def resolve_model(name_or_path: Union[str, Path]) -> LlmModelSpec:
    p = Path(name_or_path)
    if p.exists():
        return load_model_spec(p)
    return load_bundled_model(str(name_or_path))


def load_quant_table(path: Optional[Union[str, Path]] = None) -> Dict[str, QuantFormat]:
    """Quantization formats keyed by name, from the bundled table by default."""
    path = Path(path) if path is not None else _DATA_DIR / "quants.toml"
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    table = {}
    for name, fields in raw.items():
        table[name] = QuantFormat(
            name=name,
            bits_per_weight=float(fields["bits_per_weight"]),
            kv_cache_bytes_per_elem=int(
                fields.get("kv_cache_bytes_per_elem", DEFAULT_KV_ELEM_BYTES)
            ),
        )
    return table
