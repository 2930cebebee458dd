"""Command-line interface.

Exit codes: 0 on success, 1 on validation errors, 2 on I/O errors.  The
results store defaults to ./results.jsonl and can be overridden with
--store or the CMPBENCH_STORE environment variable.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path
from typing import Optional

import click

from . import economics as econ
from . import llm as llm_mod
from .devices import Precision, resolve_device, theoretical_profile
from .ingest import IngestError, ingest_llama_bench
from .kernels import run_fingerprint_campaign, sweep_descriptors
from .fingerprint import restriction_report
from .report import ReportError, emit_report
from .roofline import FmaMode, SWEEP_CSV_HEADER, operational_intensity
from .sim import SimExecutor, load_bundled_profile, load_sim_profile, simulate
from .store import BenchRecord, ResultStore


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (OSError, IngestError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except (ValueError, FileNotFoundError, KeyError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _store(path: Optional[str]) -> ResultStore:
    return ResultStore(path)


def _profile_for(profile: Optional[str], device: str):
    spec = resolve_device(device)
    if profile is None:
        return load_bundled_profile("cmp170hx-truth", spec)
    p = Path(profile)
    if p.exists():
        return load_sim_profile(p, spec)
    return load_bundled_profile(profile, spec)


@click.group()
def main() -> None:
    """Restricted-GPU modeling, fingerprinting and LLM throughput prediction."""


@main.group()
def spec() -> None:
    """Device spec inspection."""


@spec.command("show")
@click.argument("device")
@click.option("--base-clock", is_flag=True, help="Derive peaks at base clock instead of boost.")
@handle_errors
def spec_show(device: str, base_clock: bool) -> None:
    s = resolve_device(device)
    prof = theoretical_profile(s, base_clock=base_clock)
    click.echo(f"{s.name} ({s.architecture})")
    click.echo(f"  SMs {s.sm_count}, CUDA cores {s.cuda_cores}, TMUs {s.tmu_count}")
    click.echo(
        f"  clocks {s.base_clock_hz / 1e6:.0f} / {s.boost_clock_hz / 1e6:.0f} MHz, "
        f"TDP {s.tdp_watts:g} W, VRAM {s.vram_bytes / 2**30:.0f} GiB"
    )
    for prec, peak in sorted(prof.peak_per_precision.items(), key=lambda kv: kv[0].value):
        click.echo(f"  peak {prec.value}: {peak / 1e12:.4g} TFLOPS")
    click.echo(f"  memory bandwidth: {prof.mem_bandwidth_Bps / 1e9:.4g} GB/s")
    click.echo(f"  texture fill rate: {prof.texture_fill_rate_texels_s / 1e9:.4g} GT/s")
    click.echo(f"  PCIe ceiling: {prof.pcie_bandwidth_Bps / 1e9:.4g} GB/s")


@main.group()
def bench() -> None:
    """Simulated benchmarking."""


@bench.command("simulate")
@click.option("--profile", "-p", default=None, help="Truth profile name or TOML path.")
@click.option("--device", "-d", default="cmp170hx", help="Device spec name or TOML path.")
@click.option("--sweep", "sweep_spec", default="0,1,2,4,8,16,32,64,128,256,512,1024",
              help="Comma-separated ascending compute-iteration counts.")
@click.option("--precision", default="fp32", type=click.Choice([p.value for p in Precision]))
@click.option("--fma", default="on", type=click.Choice(["on", "off"]))
@click.option("--store", "store_path", default=None, help="Results store path override.")
@handle_errors
def bench_simulate(profile, device, sweep_spec, precision, fma, store_path) -> None:
    """Run an intensity sweep on the simulated device and store the results."""
    prof = _profile_for(profile, device)
    iters = [int(tok) for tok in sweep_spec.split(",") if tok.strip() != ""]
    mode = FmaMode.FUSED if fma == "on" else FmaMode.UNFUSED
    descriptors = sweep_descriptors(prof.spec, Precision(precision), mode, iters)
    records = []
    click.echo(SWEEP_CSV_HEADER)
    for d in descriptors:
        m = simulate(prof, d)
        i = operational_intensity(d)
        click.echo(
            f"{d.compute_iters},{i:.6g},{m.exec_time_s:.6g},"
            f"{m.gops / 1e9:.6g},{m.gbps / 1e9:.6g}"
        )
        records.append(
            BenchRecord("simulated", prof.spec.name, m, ingested_at=m.timestamp)
        )
    n = _store(store_path).append(records)
    click.echo(f"stored {n} records", err=True)


@main.command("fingerprint")
@click.option("--device", "-d", required=True, help="Device spec name or TOML path.")
@click.option("--executor", default="sim", type=click.Choice(["sim"]),
              help="Only the simulated executor ships; a real-device driver plugs in here.")
@click.option("--profile", "-p", default=None, help="Truth profile name or TOML path.")
@click.option("--precisions", default="fp32,fp64,fp16",
              help="Comma-separated precisions to probe.")
@click.option("--store", "store_path", default=None)
@handle_errors
def fingerprint_cmd(device, executor, profile, precisions, store_path) -> None:
    """Run a restriction-fingerprint campaign and print the report."""
    prof = _profile_for(profile, device)
    precs = [Precision(tok.strip()) for tok in precisions.split(",") if tok.strip()]
    fp = run_fingerprint_campaign(SimExecutor(prof), prof.spec, precs)
    click.echo(restriction_report(fp).markdown)


@main.group()
def llm() -> None:
    """LLM footprint and throughput prediction."""


@llm.command("predict")
@click.option("--model", "-m", required=True, help="Model spec name or TOML path.")
@click.option("--quant", "-q", required=True, help="Quant format name from the quant table.")
@click.option("--device", "-d", required=True, help="Target device spec.")
@click.option("--ref-device", required=True, help="Reference device spec.")
@click.option("--ref-tps", required=True, type=float, help="Measured reference tokens/s.")
@click.option("--phase", required=True, type=click.Choice(["prefill", "decode"]))
@click.option("--context", default=0, type=int, help="Context tokens for the footprint check.")
@handle_errors
def llm_predict(model, quant, device, ref_device, ref_tps, phase, context) -> None:
    m = llm_mod.resolve_model(model)
    quants = llm_mod.load_quant_table()
    if quant not in quants:
        raise ValueError(f"unknown quant format: {quant} (have: {', '.join(sorted(quants))})")
    q = quants[quant]
    target = resolve_device(device)
    reference = resolve_device(ref_device)
    basis = llm_mod.ScalingBasis(reference, target, ref_tps)
    result = llm_mod.predict(basis, llm_mod.Phase(phase))
    fit = llm_mod.fits_in_vram(m, q, context, target)
    click.echo(f"{m.name} {q.name} on {target.name} ({phase})")
    click.echo(f"  predicted: {result.predicted_tps:.4g} t/s (from {ref_tps:g} on {reference.name})")
    click.echo(
        f"  footprint: {fit.total_bytes / 1e9:.4g} GB of {target.vram_bytes / 1e9:.4g} GB "
        f"-> {'fits' if fit.fits else 'DOES NOT FIT'}"
    )


@llm.command("ingest")
@click.argument("path", type=click.Path(exists=True))
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "jsonl"]))
@click.option("--device", default="unknown")
@click.option("--store", "store_path", default=None)
@handle_errors
def llm_ingest(path, fmt, device, store_path) -> None:
    result = ingest_llama_bench(path, fmt)
    records = [
        BenchRecord("llama-bench", device, row, ingested_at="1970-01-01T00:00:00+00:00")
        for row in result.items
    ]
    n = _store(store_path).append(records)
    click.echo(f"ingested {n} rows, {len(result.errors)} errors")
    for err in result.errors:
        click.echo(f"  line {err.line}: {err.message}", err=True)
    if result.errors and not result.items:
        sys.exit(1)


@main.group("econ")
def econ_group() -> None:
    """Sales-estimate economics."""


@econ_group.command("estimate")
@click.argument("scenario", default="cmp-2022")
@handle_errors
def econ_estimate(scenario) -> None:
    scenarios = econ.resolve_scenarios(scenario)
    click.echo(econ.scenarios_markdown(scenarios), nl=False)


@main.command("report")
@click.argument("kind", type=click.Choice(["fingerprint", "roofline", "llm", "economics"]))
@click.option("--out", default="reports", help="Output directory.")
@click.option("--device", default=None, help="Device spec (required for fingerprint).")
@click.option("--store", "store_path", default=None)
@handle_errors
def report_cmd(kind, out, device, store_path) -> None:
    spec_obj = resolve_device(device) if device else None
    try:
        paths = emit_report(_store(store_path), kind, out, spec=spec_obj)
    except ReportError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for p in paths:
        click.echo(str(p))


if __name__ == "__main__":
    main()
