"""Parsers for external benchmark outputs.

Every parser is drop-free: each input row either becomes a typed item or an
enumerated :class:`RowError` with its line number, so
``rows_in == items_out + len(errors)`` always holds.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

from .devices import Precision
from .roofline import FmaMode, KernelDescriptor
from .sim import Measurement


class IngestError(ValueError):
    """File-level failure: unreadable input or unrecognized schema."""


@dataclass(frozen=True)
class RowError:
    line: int
    message: str


@dataclass
class IngestResult:
    items: list
    errors: List[RowError] = field(default_factory=list)


# --- mixbench-style CSV ----------------------------------------------------

# Accept both the upstream report names and our own sweep-export header.
_MIXBENCH_ALIASES = {
    "compute iters": "compute_iters",
    "compute_iters": "compute_iters",
    "flops/byte": "flops_per_byte",
    "flops_per_byte": "flops_per_byte",
    "ex.time": "ex_time_s",
    "ex_time_s": "ex_time_s",
    "gflops": "gops",
    "gops": "gops",
    "gb/sec": "gbps",
    "gbps": "gbps",
}
_MIXBENCH_COLUMNS = ("compute_iters", "flops_per_byte", "ex_time_s", "gops", "gbps")


def _normalize_header(cells: List[str]) -> List[str]:
    out = []
    for cell in cells:
        key = cell.strip().lower()
        if key not in _MIXBENCH_ALIASES:
            raise IngestError(f"unrecognized schema: unknown column {cell.strip()!r}")
        out.append(_MIXBENCH_ALIASES[key])
    for required in _MIXBENCH_COLUMNS:
        if required not in out:
            raise IngestError(f"unrecognized schema: missing column {required!r}")
    return out


def ingest_mixbench_csv(
    path: Union[str, Path],
    precision: Precision = Precision.FP32,
    fma_mode: FmaMode = FmaMode.FUSED,
    api: str = "cuda-like",
) -> IngestResult:
    """Parse a mixbench-style intensity-sweep CSV into Measurements.

    GFLOPS and GB/sec columns are normalized to ops/s and bytes/s.  The
    tool reports no buffer size, so each descriptor's buffer is
    reconstructed from throughput x time / per-element flops.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in csv.reader(text.splitlines())]
    rows = [(i + 1, r) for i, r in enumerate(rows)]
    rows = [(n, r) for n, r in rows if any(c.strip() for c in r)]
    if not rows:
        return IngestResult(items=[])
    header_no, header = rows[0]
    columns = _normalize_header(header)

    result = IngestResult(items=[])
    eb = precision.element_bytes
    for line_no, cells in rows[1:]:
        try:
            if len(cells) != len(columns):
                raise ValueError(f"expected {len(columns)} fields, got {len(cells)}")
            vals = dict(zip(columns, (c.strip() for c in cells)))
            compute_iters = int(vals["compute_iters"])
            ex_time = float(vals["ex_time_s"])
            ops_per_s = float(vals["gops"]) * 1e9
            bytes_per_s = float(vals["gbps"]) * 1e9
            if ex_time <= 0:
                raise ValueError("ex_time_s must be positive")
            flops_per_elem = 2 * compute_iters + 1
            elements = max(1, round(ops_per_s * ex_time / flops_per_elem))
            descriptor = KernelDescriptor(
                precision=precision,
                compute_iters=compute_iters,
                fma_mode=fma_mode,
                buffer_bytes=elements * eb,
                element_bytes=eb,
            )
            result.items.append(
                Measurement(
                    descriptor=descriptor,
                    gops=ops_per_s,
                    gbps=bytes_per_s,
                    exec_time_s=ex_time,
                    api=api,
                )
            )
        except (ValueError, KeyError) as exc:
            result.errors.append(RowError(line_no, str(exc)))
    return result


# --- llama-bench rows ------------------------------------------------------

# Pinned llama-bench export schema (one documented header set; other
# versions must be converted before ingest): model, quant, test, avg_ts,
# stddev_ts, plus optional fma and power_avg_watts columns.
LLAMA_BENCH_REQUIRED = ("model", "quant", "test", "avg_ts", "stddev_ts")
LLAMA_BENCH_OPTIONAL = ("fma", "power_avg_watts")

_TEST_RE = re.compile(r"^(?:pp(\d+)|tg(\d+)|pg(\d+)\+(\d+))$")


@dataclass(frozen=True)
class LlmBenchRow:
    model: str
    quant: str
    test_kind: str  # "pp" | "tg" | "pg"
    prompt_tokens: int
    gen_tokens: int
    tps_mean: float
    tps_stddev: float
    fma_mode: FmaMode = FmaMode.FUSED
    power_avg_watts: Optional[float] = None

    def __post_init__(self) -> None:
        if self.test_kind not in ("pp", "tg", "pg"):
            raise ValueError(f"unknown test kind: {self.test_kind}")
        if self.tps_mean <= 0:
            raise ValueError("tps_mean must be positive")
        if self.tps_stddev < 0:
            raise ValueError("tps_stddev must be non-negative")

    @property
    def test_label(self) -> str:
        if self.test_kind == "pp":
            return f"pp{self.prompt_tokens}"
        if self.test_kind == "tg":
            return f"tg{self.gen_tokens}"
        return f"pg{self.prompt_tokens}+{self.gen_tokens}"


def parse_test_label(label: str) -> Tuple[str, int, int]:
    """Split a llama-bench test label into (kind, prompt_tokens, gen_tokens)."""
    m = _TEST_RE.match(label.strip())
    if not m:
        raise ValueError(f"unknown test label: {label!r}")
    pp, tg, pg_p, pg_n = m.groups()
    if pp is not None:
        return "pp", int(pp), 0
    if tg is not None:
        return "tg", 0, int(tg)
    return "pg", int(pg_p), int(pg_n)


def _row_from_mapping(raw: dict) -> LlmBenchRow:
    missing = [k for k in LLAMA_BENCH_REQUIRED if k not in raw or raw[k] in ("", None)]
    if missing:
        raise ValueError(f"missing fields: {', '.join(missing)}")
    kind, p, n = parse_test_label(str(raw["test"]))
    fma_raw = str(raw.get("fma", "on") or "on").lower()
    if fma_raw not in ("on", "off"):
        raise ValueError(f"fma must be on or off, got {fma_raw!r}")
    power = raw.get("power_avg_watts")
    return LlmBenchRow(
        model=str(raw["model"]),
        quant=str(raw["quant"]),
        test_kind=kind,
        prompt_tokens=p,
        gen_tokens=n,
        tps_mean=float(raw["avg_ts"]),
        tps_stddev=float(raw["stddev_ts"]),
        fma_mode=FmaMode.FUSED if fma_raw == "on" else FmaMode.UNFUSED,
        power_avg_watts=float(power) if power not in ("", None) else None,
    )


def ingest_llama_bench(path: Union[str, Path], format: str = "csv") -> IngestResult:
    """Parse llama-bench results; bad rows become errors, ingest continues."""
    if format not in ("csv", "jsonl"):
        raise IngestError(f"unknown format: {format}")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc

    result = IngestResult(items=[])
    if format == "jsonl":
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                result.items.append(_row_from_mapping(json.loads(line)))
            except (ValueError, KeyError) as exc:
                result.errors.append(RowError(line_no, str(exc)))
        return result

    lines = [l for l in text.splitlines() if l.strip()]
    if not lines:
        return IngestResult(items=[])
    reader = csv.reader(lines)
    header = [c.strip() for c in next(reader)]
    unknown = [c for c in header if c not in LLAMA_BENCH_REQUIRED + LLAMA_BENCH_OPTIONAL]
    if unknown:
        raise IngestError(f"unrecognized schema: unknown columns {unknown}")
    for required in LLAMA_BENCH_REQUIRED:
        if required not in header:
            raise IngestError(f"unrecognized schema: missing column {required!r}")
    for line_no, cells in enumerate(reader, start=2):
        try:
            if len(cells) != len(header):
                raise ValueError(f"expected {len(header)} fields, got {len(cells)}")
            result.items.append(_row_from_mapping(dict(zip(header, cells))))
        except (ValueError, KeyError) as exc:
            result.errors.append(RowError(line_no, str(exc)))
    return result


# --- power logs ------------------------------------------------------------


def ingest_power_log(path: Union[str, Path]) -> List[Tuple[float, float]]:
    """Read two-column (timestamp_s, watts) samples; timestamps must ascend."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    samples: List[Tuple[float, float]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p for p in re.split(r"[,\s]+", line) if p]
        if len(parts) != 2:
            raise IngestError(f"line {line_no}: expected 'timestamp watts', got {line!r}")
        try:
            ts, watts = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise IngestError(f"line {line_no}: {exc}") from exc
        if samples and ts <= samples[-1][0]:
            raise IngestError("unordered power log")
        samples.append((ts, watts))
    return samples
