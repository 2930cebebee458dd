"""Restriction fingerprints: measured/theoretical ratios binned to 1/2^k.

A throttled part lands on a near-power-of-two fraction of its theoretical
peak (1/2, 1/32, 1/64, 1/128 ...), so the classifier snaps each ratio to the
nearest 2^-k with k in [0, 10].  k = 0 reads as unrestricted; anything past
k = 10 (1/1024) is effectively disabled and clamps to 10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .devices import Precision
from .roofline import FmaMode

MAX_BIN = 10

VERDICT_UNRESTRICTED = "unrestricted"
VERDICT_RECOVERABLE = "recoverable-by-unfusing"
VERDICT_UNRECOVERABLE = "unrecoverable"


@dataclass(frozen=True)
class RestrictionBin:
    k: int  # throughput is ~2^-k of theoretical

    def __post_init__(self) -> None:
        if not 0 <= self.k <= MAX_BIN:
            raise ValueError(f"bin k must be in [0, {MAX_BIN}]")

    @property
    def label(self) -> str:
        return "unrestricted" if self.k == 0 else "throttled"

    @property
    def fraction(self) -> str:
        return "1" if self.k == 0 else f"1/{2 ** self.k}"


def classify(ratio: float) -> RestrictionBin:
    """Nearest power-of-two bin for a measured/theoretical ratio.

    Ties (ratio exactly between two bins) round toward the smaller k, i.e.
    toward "less restricted".  Ratios above 1 classify as k = 0; the raw
    ratio is kept elsewhere for auditability, never clamped here.
    """
    if ratio <= 0:
        raise ValueError("nonpositive ratio")
    x = -math.log2(ratio)
    k = math.ceil(x - 0.5)  # round half toward smaller k
    return RestrictionBin(min(MAX_BIN, max(0, k)))


def verdict(fused: RestrictionBin, unfused: RestrictionBin) -> str:
    """Recovery verdict for one precision given both FMA-mode bins."""
    if fused.k == 0:
        return VERDICT_UNRESTRICTED
    if unfused.k < fused.k:
        return VERDICT_RECOVERABLE
    return VERDICT_UNRECOVERABLE


@dataclass(frozen=True)
class FingerprintEntry:
    measured_ops_s: float
    theoretical_ops_s: Optional[float] = None
    ratio: Optional[float] = None
    bin: Optional[RestrictionBin] = None

    def __post_init__(self) -> None:
        if (self.theoretical_ops_s is None) != (self.ratio is None):
            raise ValueError("ratio present iff theoretical present")
        if (self.ratio is None) != (self.bin is None):
            raise ValueError("bin present iff ratio present")
        if self.ratio is not None and self.ratio <= 0:
            raise ValueError("nonpositive ratio")


@dataclass(frozen=True)
class BandwidthEntry:
    measured_Bps: float
    theoretical_Bps: float
    ratio: float


@dataclass
class Fingerprint:
    device: str
    entries: Dict[Tuple[Precision, FmaMode], FingerprintEntry] = field(default_factory=dict)
    bandwidth_entry: Optional[BandwidthEntry] = None


def make_entry(measured_ops_s: float, theoretical_ops_s: Optional[float]) -> FingerprintEntry:
    """Build an entry, deriving ratio and bin when a theoretical peak exists."""
    if theoretical_ops_s is None:
        return FingerprintEntry(measured_ops_s)
    ratio = measured_ops_s / theoretical_ops_s
    return FingerprintEntry(measured_ops_s, theoretical_ops_s, ratio, classify(ratio))


@dataclass(frozen=True)
class ReportRow:
    precision: Precision
    mode: FmaMode
    measured_gops: float
    theoretical_gops: Optional[float]
    ratio: Optional[float]
    bin: Optional[RestrictionBin]
    verdict: str


@dataclass(frozen=True)
class ReportFragment:
    rows: List[ReportRow]
    markdown: str
    csv: str


REPORT_CSV_HEADER = "precision,mode,measured_gops,theoretical_gops,ratio,bin,verdict"

_PREC_ORDER = [
    Precision.FP32,
    Precision.FP16,
    Precision.FP64,
    Precision.INT32,
    Precision.INT16,
    Precision.INT8,
]


def restriction_report(f: Fingerprint) -> ReportFragment:
    """Render per-(precision, mode) rows with bins and recovery verdicts."""
    if not f.entries:
        raise ValueError("fingerprint has no entries")

    rows: List[ReportRow] = []
    precisions = [p for p in _PREC_ORDER if any(k[0] == p for k in f.entries)]
    for prec in precisions:
        fused = f.entries.get((prec, FmaMode.FUSED))
        unfused = f.entries.get((prec, FmaMode.UNFUSED))
        if fused and unfused and fused.bin and unfused.bin:
            v = verdict(fused.bin, unfused.bin)
        elif fused and fused.bin and fused.bin.k == 0:
            v = VERDICT_UNRESTRICTED
        else:
            v = "n/a"
        for mode, entry in ((FmaMode.FUSED, fused), (FmaMode.UNFUSED, unfused)):
            if entry is None:
                continue
            rows.append(
                ReportRow(
                    precision=prec,
                    mode=mode,
                    measured_gops=entry.measured_ops_s / 1e9,
                    theoretical_gops=(
                        entry.theoretical_ops_s / 1e9
                        if entry.theoretical_ops_s is not None
                        else None
                    ),
                    ratio=entry.ratio,
                    bin=entry.bin,
                    verdict=v,
                )
            )

    md = [f"# Restriction fingerprint: {f.device}", ""]
    md.append("| precision | mode | measured GOPS | theoretical GOPS | ratio | bin | verdict |")
    md.append("|---|---|---|---|---|---|---|")
    csv_lines = [REPORT_CSV_HEADER]
    for r in rows:
        th = f"{r.theoretical_gops:.4g}" if r.theoretical_gops is not None else ""
        ratio = f"{r.ratio:.6g}" if r.ratio is not None else ""
        bin_s = r.bin.fraction if r.bin is not None else ""
        md.append(
            f"| {r.precision.value} | {r.mode.value} | {r.measured_gops:.4g} "
            f"| {th or '-'} | {ratio or '-'} | {bin_s or '-'} | {r.verdict} |"
        )
        csv_lines.append(
            f"{r.precision.value},{r.mode.value},{r.measured_gops:.6g},"
            f"{th},{ratio},{r.bin.k if r.bin is not None else ''},{r.verdict}"
        )
    if f.bandwidth_entry is not None:
        be = f.bandwidth_entry
        md += [
            "",
            f"Memory bandwidth: {be.measured_Bps / 1e9:.4g} GB/s measured vs "
            f"{be.theoretical_Bps / 1e9:.4g} GB/s theoretical "
            f"(ratio {be.ratio:.4g}).",
        ]
    return ReportFragment(rows=rows, markdown="\n".join(md) + "\n", csv="\n".join(csv_lines) + "\n")
