"""Sales-estimation model: revenue shares divided by average selling price.

Units per model = round(total_revenue * share / asp), rounded to the nearest
integer with halves away from zero — the one simple rule under which every
published scenario cell reproduces exactly.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_DATA_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True)
class ScenarioRow:
    model: str
    asp_usd: float
    share: float

    def __post_init__(self) -> None:
        if self.asp_usd <= 0:
            raise ValueError("nonpositive price")
        if not 0 <= self.share <= 1:
            raise ValueError("share must be in [0, 1]")


@dataclass(frozen=True)
class SalesScenario:
    name: str
    total_revenue_usd: float
    rows: List[ScenarioRow]

    def __post_init__(self) -> None:
        if self.total_revenue_usd < 0:
            raise ValueError("revenue must be non-negative")
        total_share = sum(r.share for r in self.rows)
        if abs(total_share - 1.0) > 1e-9:
            raise ValueError(f"shares must sum to 1, got {total_share}")


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def estimate_units(revenue: float, share: float, asp: float) -> int:
    """Estimated unit sales for one model under one scenario."""
    if asp <= 0:
        raise ValueError("nonpositive price")
    if not 0 <= share <= 1:
        raise ValueError("share must be in [0, 1]")
    return _round_half_away(revenue * share / asp)


@dataclass(frozen=True)
class ScenarioTotals:
    per_model: Dict[str, int]
    total: int


def scenario_totals(s: SalesScenario) -> ScenarioTotals:
    per_model = {
        r.model: estimate_units(s.total_revenue_usd, r.share, r.asp_usd) for r in s.rows
    }
    return ScenarioTotals(per_model=per_model, total=sum(per_model.values()))


def scenarios_markdown(scenarios: List[SalesScenario]) -> str:
    """One table over all scenarios, models as rows plus a Whole row."""
    if not scenarios:
        raise ValueError("no scenarios")
    models = [(r.model, r.asp_usd) for r in scenarios[0].rows]
    totals = {s.name: scenario_totals(s) for s in scenarios}
    head = "| Model | Estimated ASP ($) |" + "".join(
        f" {s.name} |" for s in scenarios
    )
    sep = "|---|---|" + "---|" * len(scenarios)
    lines = [head, sep]
    for model, asp in models:
        cells = "".join(f" {totals[s.name].per_model[model]:,} |" for s in scenarios)
        lines.append(f"| {model} | {asp:g} |{cells}")
    whole = "".join(f" {totals[s.name].total:,} |" for s in scenarios)
    lines.append(f"| Whole | |{whole}")
    return "\n".join(lines) + "\n"


def load_scenarios(path: Union[str, Path, None] = None) -> List[SalesScenario]:
    """Load ASPs and scenario share vectors from TOML (bundled by default)."""
    path = Path(path) if path is not None else _DATA_DIR / "economics" / "cmp-2022.toml"
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    revenue = float(raw["total_revenue_usd"])
    models = raw["models"]
    out = []
    for name, shares in raw["scenarios"].items():
        if len(shares) != len(models):
            raise ValueError(f"scenario {name}: {len(shares)} shares for {len(models)} models")
        rows = [
            ScenarioRow(model=m["name"], asp_usd=float(m["asp_usd"]), share=float(sh))
            for m, sh in zip(models, shares)
        ]
        out.append(SalesScenario(name=name, total_revenue_usd=revenue, rows=rows))
    return out


def resolve_scenarios(name_or_path: Union[str, Path]) -> List[SalesScenario]:
    p = Path(name_or_path)
    if p.exists():
        return load_scenarios(p)
    bundled = _DATA_DIR / "economics" / f"{name_or_path}.toml"
    if bundled.exists():
        return load_scenarios(bundled)
    raise FileNotFoundError(f"no scenario file '{name_or_path}'")
