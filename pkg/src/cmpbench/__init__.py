"""cmpbench: modeling and benchmarking toolkit for restricted mining-class GPUs.

Derives theoretical peaks from device specs, sweeps roofline envelopes,
fingerprints per-precision restriction ratios (fused vs unfused multiply-add),
predicts LLM inference throughput and footprint, and estimates fleet
economics — all verifiable against a deterministic simulated device.
"""

from .devices import (
    DeviceSpec,
    Precision,
    TheoreticalProfile,
    load_bundled_spec,
    load_device_spec,
    memory_bandwidth,
    pcie_theoretical,
    texture_fill_rate,
    theoretical_peak,
    theoretical_profile,
)
from .fingerprint import Fingerprint, RestrictionBin, classify, restriction_report
from .kernels import BuildPlan, KernelSource, build_plan, generate_kernel, run_fingerprint_campaign
from .llm import LlmModelSpec, QuantFormat, ScalingBasis, fits_in_vram, kv_cache_bytes, scale_decode, scale_prefill, weights_footprint
from .roofline import Bound, FmaMode, KernelDescriptor, RooflinePoint, attainable, operational_intensity, ridge_point, sweep
from .sim import Measurement, SimExecutor, SimProfile, load_bundled_profile, simulate, simulate_power

__version__ = "0.1.0"
