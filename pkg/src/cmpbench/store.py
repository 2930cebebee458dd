"""Append-only JSONL results store.

One record per line, each carrying a ``schema_version`` field; appends are
serialized with an advisory file lock, reads are unrestricted.  The store
path can be overridden with the ``CMPBENCH_STORE`` environment variable.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Union

from filelock import FileLock

from .devices import Precision
from .ingest import LlmBenchRow
from .roofline import FmaMode, KernelDescriptor
from .sim import Measurement

SCHEMA_VERSION = 1
DEFAULT_STORE = "results.jsonl"
STORE_ENV_VAR = "CMPBENCH_STORE"

SOURCES = ("mixbench-like", "opencl-bench-like", "llama-bench", "simulated")


@dataclass(frozen=True)
class BenchRecord:
    source: str
    device: str
    payload: Union[Measurement, LlmBenchRow]
    ingested_at: str

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise ValueError(f"unknown source: {self.source}")


def _payload_to_dict(payload: Union[Measurement, LlmBenchRow]) -> dict:
    d = dataclasses.asdict(payload)
    if isinstance(payload, Measurement):
        d["kind"] = "measurement"
        d["descriptor"]["precision"] = payload.descriptor.precision.value
        d["descriptor"]["fma_mode"] = payload.descriptor.fma_mode.value
    else:
        d["kind"] = "llm"
        d["fma_mode"] = payload.fma_mode.value
    return d


def _payload_from_dict(d: dict) -> Union[Measurement, LlmBenchRow]:
    d = dict(d)
    kind = d.pop("kind")
    if kind == "measurement":
        desc = dict(d.pop("descriptor"))
        desc["precision"] = Precision(desc["precision"])
        desc["fma_mode"] = FmaMode(desc["fma_mode"])
        return Measurement(descriptor=KernelDescriptor(**desc), **d)
    if kind == "llm":
        d["fma_mode"] = FmaMode(d["fma_mode"])
        return LlmBenchRow(**d)
    raise ValueError(f"unknown payload kind: {kind}")


def record_to_dict(rec: BenchRecord) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "source": rec.source,
        "device": rec.device,
        "payload": _payload_to_dict(rec.payload),
        "ingested_at": rec.ingested_at,
    }


def record_from_dict(d: dict) -> BenchRecord:
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version: {version}")
    return BenchRecord(
        source=d["source"],
        device=d["device"],
        payload=_payload_from_dict(d["payload"]),
        ingested_at=d["ingested_at"],
    )


class ResultStore:
    def __init__(self, path: Optional[Union[str, Path]] = None):
        if path is None:
            path = os.environ.get(STORE_ENV_VAR, DEFAULT_STORE)
        self.path = Path(path)
        self._lock = FileLock(str(self.path) + ".lock")

    def append(self, records: Iterable[BenchRecord]) -> int:
        """Append records atomically under the advisory lock."""
        lines = [json.dumps(record_to_dict(r), sort_keys=True) for r in records]
        if not lines:
            return 0
        with self._lock:
            with open(self.path, "a") as fh:
                fh.write("\n".join(lines) + "\n")
        return len(lines)

    def read_all(self) -> List[BenchRecord]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(record_from_dict(json.loads(line)))
        return out
