"""Report and plot-data emission from the results store.

Each report kind writes one Markdown file plus one CSV per chart, with
stable column order and sorted rows, so identical stores produce
byte-identical outputs.  Plot rendering itself is out of scope: the CSVs
are the plot-ready data.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from . import economics as econ
from .devices import DeviceSpec, Precision, memory_bandwidth, theoretical_peak
from .fingerprint import (
    BandwidthEntry,
    Fingerprint,
    make_entry,
    restriction_report,
)
from .ingest import LlmBenchRow
from .llm import Phase, ScalingBasis, attainment, band_flag, scale_decode, scale_prefill
from .roofline import FmaMode, operational_intensity
from .sim import Measurement
from .store import BenchRecord, ResultStore

REPORT_KINDS = ("fingerprint", "roofline", "llm", "economics")


class ReportError(ValueError):
    """Required records are missing; nothing was written."""


def _measurements(records: List[BenchRecord]) -> List[Tuple[BenchRecord, Measurement]]:
    return [(r, r.payload) for r in records if isinstance(r.payload, Measurement)]


def _llm_rows(records: List[BenchRecord]) -> List[Tuple[BenchRecord, LlmBenchRow]]:
    return [(r, r.payload) for r in records if isinstance(r.payload, LlmBenchRow)]


def fingerprint_from_records(
    records: List[BenchRecord], spec: DeviceSpec
) -> Fingerprint:
    """Rebuild a fingerprint from stored measurements for one device.

    Compute entries use the median throughput of each (precision, mode)
    group's compute probes; zero-iteration probes feed the bandwidth entry.
    """
    fp = Fingerprint(device=spec.name)
    groups: Dict[Tuple[Precision, FmaMode], List[float]] = {}
    bw_probes: List[float] = []
    for _, m in _measurements(records):
        d = m.descriptor
        if d.compute_iters == 0:
            bw_probes.append(m.gbps)
            continue
        groups.setdefault((d.precision, d.fma_mode), []).append(m.gops)
    if not groups:
        raise ReportError("missing records: compute measurements")
    for (prec, mode), values in sorted(groups.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        values.sort()
        median = values[len(values) // 2]
        theo = theoretical_peak(spec, prec) if prec in spec.rates else None
        fp.entries[(prec, mode)] = make_entry(median, theo)
    if bw_probes:
        bw_probes.sort()
        measured = bw_probes[len(bw_probes) // 2]
        theo_bw = memory_bandwidth(spec)
        fp.bandwidth_entry = BandwidthEntry(measured, theo_bw, measured / theo_bw)
    return fp


def _emit_fingerprint(
    records: List[BenchRecord], out_dir: Path, spec: Optional[DeviceSpec]
) -> List[Path]:
    if spec is None:
        raise ReportError("missing inputs: device spec required for fingerprint report")
    fragment = restriction_report(fingerprint_from_records(records, spec))
    md = out_dir / "fingerprint.md"
    csv_path = out_dir / "fingerprint.csv"
    md.write_text(fragment.markdown)
    csv_path.write_text(fragment.csv)
    return [md, csv_path]


def _emit_roofline(records: List[BenchRecord], out_dir: Path) -> List[Path]:
    meas = _measurements(records)
    if not meas:
        raise ReportError("missing records: measurements")
    rows = []
    for _, m in meas:
        d = m.descriptor
        rows.append(
            (
                d.precision.value,
                d.fma_mode.value,
                d.compute_iters,
                operational_intensity(d),
                m.exec_time_s,
                m.gops / 1e9,
                m.gbps / 1e9,
            )
        )
    rows.sort()
    lines = ["precision,mode,compute_iters,flops_per_byte,ex_time_s,gops,gbps"]
    for prec, mode, c, i, t, gops, gbps in rows:
        lines.append(f"{prec},{mode},{c},{i:.6g},{t:.6g},{gops:.6g},{gbps:.6g}")
    csv_path = out_dir / "roofline.csv"
    csv_path.write_text("\n".join(lines) + "\n")
    md = out_dir / "roofline.md"
    md.write_text(
        "# Roofline sweep data\n\n"
        f"{len(rows)} measured points across "
        f"{len(set(r[0] for r in rows))} precisions; see roofline.csv.\n"
    )
    return [md, csv_path]


LLM_CSV_HEADER = "model,quant,phase,predicted_tps,measured_tps,attainment,tps_per_watt"


def _emit_llm(
    records: List[BenchRecord], out_dir: Path, basis: Optional[ScalingBasis]
) -> List[Path]:
    rows = _llm_rows(records)
    if not rows:
        raise ReportError("missing records: llama-bench rows")
    out_rows = []
    for _, row in rows:
        phase = Phase.PREFILL if row.test_kind == "pp" else Phase.DECODE
        predicted = att = flag = None
        if basis is not None:
            predicted = scale_prefill(basis) if phase is Phase.PREFILL else scale_decode(basis)
            att = attainment(row.tps_mean, predicted)
            flag = band_flag(att, phase)
        eff = (
            row.tps_mean / row.power_avg_watts
            if row.power_avg_watts
            else None
        )
        out_rows.append((row, phase, predicted, att, flag, eff))
    out_rows.sort(key=lambda r: (r[0].model, r[0].quant, r[0].test_label, r[0].fma_mode.value))

    csv_lines = [LLM_CSV_HEADER]
    md_lines = [
        "# LLM inference results",
        "",
        "| model | quant | test | fma | t/s | phase | predicted | attainment | band | t/s/W |",
        "|---|---|---|---|---|---|---|---|---|---|",
    ]
    fmt = lambda v, spec=".6g": (f"{v:{spec}}" if v is not None else "")
    for row, phase, predicted, att, flag, eff in out_rows:
        csv_lines.append(
            f"{row.model},{row.quant},{phase.value},{fmt(predicted)},"
            f"{row.tps_mean:.6g},{fmt(att)},{fmt(eff)}"
        )
        md_lines.append(
            f"| {row.model} | {row.quant} | {row.test_label} | {row.fma_mode.value} "
            f"| {row.tps_mean:.4g} | {phase.value} | {fmt(predicted, '.4g') or '-'} "
            f"| {fmt(att, '.3g') or '-'} | {flag or '-'} | {fmt(eff, '.3g') or '-'} |"
        )
    csv_path = out_dir / "llm.csv"
    md = out_dir / "llm.md"
    csv_path.write_text("\n".join(csv_lines) + "\n")
    md.write_text("\n".join(md_lines) + "\n")
    return [md, csv_path]


def _emit_economics(out_dir: Path, scenario_path: Optional[Union[str, Path]]) -> List[Path]:
    scenarios = econ.load_scenarios(scenario_path)
    md = out_dir / "economics.md"
    md.write_text("# Estimated unit sales\n\n" + econ.scenarios_markdown(scenarios))
    lines = ["model,asp_usd,scenario,units"]
    for s in scenarios:
        totals = econ.scenario_totals(s)
        for row in s.rows:
            lines.append(f"{row.model},{row.asp_usd:g},{s.name},{totals.per_model[row.model]}")
        lines.append(f"Whole,,{s.name},{totals.total}")
    csv_path = out_dir / "economics.csv"
    csv_path.write_text("\n".join(lines) + "\n")
    return [md, csv_path]


def emit_report(
    store: ResultStore,
    kind: str,
    out_dir: Union[str, Path] = "reports",
    spec: Optional[DeviceSpec] = None,
    basis: Optional[ScalingBasis] = None,
    scenario_path: Optional[Union[str, Path]] = None,
) -> List[Path]:
    """Write the Markdown + CSV artifacts for one report kind."""
    if kind not in REPORT_KINDS:
        raise ReportError(f"unknown report kind: {kind} (have: {', '.join(REPORT_KINDS)})")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = store.read_all()
    if kind == "economics":
        return _emit_economics(out, scenario_path)
    if not records:
        raise ReportError(f"missing records: store is empty, {kind} report needs records")
    if kind == "fingerprint":
        return _emit_fingerprint(records, out, spec)
    if kind == "roofline":
        return _emit_roofline(records, out)
    return _emit_llm(records, out, basis)
