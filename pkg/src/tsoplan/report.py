"""Plan serialization and derived reports (breakdown, roofline, CSV).

The plan JSON stores everything needed to re-audit a plan against a model
and architecture file: the chosen partition, schedule, and tile shape per
layer, plus the move counts, per-tile burst counts, and the time split.
Times are microseconds rounded to three decimals; counts are exact ints.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from .configs import ArchConfig, ConfigError, ConvLayerSpec, ModelSpec
from .costmodel import _transfer_seconds
from .search import PlanMap, StrategyComparison
from .slicing import ScheduleKind, TlePartitionKind


def format_us(seconds: float) -> float:
    """Seconds to microseconds, rounded to three decimals."""
    return round(seconds * 1e6, 3)


def plan_to_json_dict(plan: PlanMap, arch: ArchConfig) -> dict:
    entries = []
    for entry in plan.entries.values():
        cost = entry.cost
        tile = entry.tile
        entries.append(
            {
                "layer": entry.layer,
                "tle_partition": entry.slice.kind.value,
                "schedule": entry.schedule.value,
                "t_m": tile.t_m,
                "t_n": tile.t_n,
                "t_r": tile.t_r,
                "t_c": tile.t_c,
                "t_h": tile.t_h,
                "t_l": tile.t_l,
                "alpha_in": cost.alphas.a_in,
                "alpha_w": cost.alphas.a_w,
                "alpha_out": cost.alphas.a_out,
                "bursts_in": cost.bursts_in,
                "bursts_w": cost.bursts_w,
                "bursts_out": cost.bursts_out,
                "t_mac_us": format_us(cost.t_mac),
                "t_dram_us": format_us(cost.t_dram),
                "t_sw_us": format_us(cost.t_sw),
                "t_total_us": format_us(cost.t_total),
            }
        )
    return {
        "model": plan.model_name,
        "arch_digest": arch.digest(),
        "mode": plan.mode,
        "entries": entries,
    }


def plan_json_text(plan: PlanMap, arch: ArchConfig) -> str:
    return json.dumps(plan_to_json_dict(plan, arch), indent=2) + "\n"


@dataclass(frozen=True)
class PlanEntryDoc:
    layer: str
    tle_partition: TlePartitionKind
    schedule: ScheduleKind
    t_m: int
    t_n: int
    t_r: int
    t_c: int
    t_h: int
    t_l: int
    alpha_in: int
    alpha_w: int
    alpha_out: int
    bursts_in: int
    bursts_w: int
    bursts_out: int
    t_mac_us: float
    t_dram_us: float
    t_sw_us: float
    t_total_us: float


@dataclass(frozen=True)
class PlanDoc:
    model: str
    arch_digest: str
    mode: str
    entries: tuple[PlanEntryDoc, ...]


_ENTRY_INT_KEYS = (
    "t_m",
    "t_n",
    "t_r",
    "t_c",
    "t_h",
    "t_l",
    "alpha_in",
    "alpha_w",
    "alpha_out",
    "bursts_in",
    "bursts_w",
    "bursts_out",
)
_ENTRY_TIME_KEYS = ("t_mac_us", "t_dram_us", "t_sw_us", "t_total_us")


def plan_from_json_dict(data: object) -> PlanDoc:
    if not isinstance(data, dict):
        raise ConfigError("plan document must be a JSON object")
    for key in ("model", "arch_digest", "mode", "entries"):
        if key not in data:
            raise ConfigError(f"plan document missing field {key!r}")
    if data["mode"] not in ("burst", "noburst"):
        raise ConfigError(f"plan mode must be 'burst' or 'noburst', got {data['mode']!r}")
    if not isinstance(data["entries"], list) or not data["entries"]:
        raise ConfigError("plan field 'entries' must be a non-empty array")
    entries = []
    for i, raw in enumerate(data["entries"]):
        if not isinstance(raw, dict):
            raise ConfigError(f"plan entry {i} must be a JSON object")
        where = f"plan entry {i}"
        for key in ("layer", "tle_partition", "schedule", *_ENTRY_INT_KEYS, *_ENTRY_TIME_KEYS):
            if key not in raw:
                raise ConfigError(f"{where} missing field {key!r}")
        try:
            partition = TlePartitionKind(raw["tle_partition"])
        except ValueError:
            raise ConfigError(f"{where}: unknown tle_partition {raw['tle_partition']!r}") from None
        try:
            schedule = ScheduleKind(raw["schedule"])
        except ValueError:
            raise ConfigError(f"{where}: unknown schedule {raw['schedule']!r}") from None
        ints = {}
        for key in _ENTRY_INT_KEYS:
            value = raw[key]
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ConfigError(f"{where}: field {key!r} must be a non-negative integer")
            ints[key] = value
        times = {}
        for key in _ENTRY_TIME_KEYS:
            value = raw[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
                raise ConfigError(f"{where}: field {key!r} must be a non-negative number")
            times[key] = float(value)
        entries.append(
            PlanEntryDoc(
                layer=str(raw["layer"]),
                tle_partition=partition,
                schedule=schedule,
                **ints,
                **times,
            )
        )
    return PlanDoc(
        model=str(data["model"]),
        arch_digest=str(data["arch_digest"]),
        mode=str(data["mode"]),
        entries=tuple(entries),
    )


@dataclass(frozen=True)
class BreakdownRow:
    """Load/store/compute split of one planned layer.

    Launch overhead is folded into the load and store phases (by their move
    counts), so the three parts sum to the layer total and the percentages
    to 100 when measured against the layer's own total.
    """

    layer: str
    load_s: float
    store_s: float
    mac_s: float
    pct_load: float
    pct_store: float
    pct_mac: float


def breakdown_rows(
    plan: PlanMap, arch: ArchConfig, reference: PlanMap | None = None
) -> list[BreakdownRow]:
    rows = []
    for name, entry in plan.entries.items():
        cost = entry.cost
        tile = entry.tile
        x_in = _transfer_seconds(cost.bursts_in, tile.in_bytes, arch, cost.mode)
        x_w = _transfer_seconds(cost.bursts_w, tile.w_bytes, arch, cost.mode)
        x_out = _transfer_seconds(cost.bursts_out, tile.out_bytes, arch, cost.mode)
        a = cost.alphas
        load = a.a_in * x_in + a.a_w * x_w + (a.a_in + a.a_w) * arch.sw_overhead_s
        store = a.a_out * x_out + a.a_out * arch.sw_overhead_s
        denom = cost.t_total
        if reference is not None and name in reference.entries:
            denom = reference.entries[name].cost.t_total
        rows.append(
            BreakdownRow(
                layer=name,
                load_s=load,
                store_s=store,
                mac_s=cost.t_mac,
                pct_load=100.0 * load / denom,
                pct_store=100.0 * store / denom,
                pct_mac=100.0 * cost.t_mac / denom,
            )
        )
    return rows


@dataclass(frozen=True)
class RooflinePoint:
    layer: str
    macs: int
    moved_bytes: int
    intensity: float  # MAC per DRAM byte moved
    throughput: float  # MAC per second achieved
    compute_roof: float  # MAC per second at full datapath occupancy
    bandwidth_roof: float  # DRAM bytes per second

    @property
    def attainable(self) -> float:
        return min(self.compute_roof, self.intensity * self.bandwidth_roof)

    @property
    def bound(self) -> str:
        return "compute" if self.intensity * self.bandwidth_roof >= self.compute_roof else "memory"


def roofline_points(plan: PlanMap, model: ModelSpec, arch: ArchConfig) -> list[RooflinePoint]:
    by_name: dict[str, ConvLayerSpec] = {conv.name: conv for conv in model.layers}
    points = []
    for name, entry in plan.entries.items():
        conv = by_name[name]
        cost = entry.cost
        tile = entry.tile
        a = cost.alphas
        moved = a.a_in * tile.in_bytes + a.a_w * tile.w_bytes + a.a_out * tile.out_bytes
        intensity = conv.macs / moved
        compute_roof = (
            arch.n_tle * arch.n_tlt * arch.macs_per_cycle(conv.elem_bytes) * arch.freq_hz
        )
        points.append(
            RooflinePoint(
                layer=name,
                macs=conv.macs,
                moved_bytes=moved,
                intensity=intensity,
                throughput=conv.macs / cost.t_total,
                compute_roof=compute_roof,
                bandwidth_roof=arch.bw_bytes_per_s,
            )
        )
    return points


def roofline_csv(points: list[RooflinePoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "layer",
            "macs",
            "moved_bytes",
            "intensity_mac_per_byte",
            "throughput_mac_per_s",
            "compute_roof_mac_per_s",
            "bandwidth_roof_bytes_per_s",
            "attainable_mac_per_s",
            "bound",
        ]
    )
    for point in points:
        writer.writerow(
            [
                point.layer,
                point.macs,
                point.moved_bytes,
                f"{point.intensity:.6f}",
                f"{point.throughput:.3f}",
                f"{point.compute_roof:.3f}",
                f"{point.bandwidth_roof:.3f}",
                f"{point.attainable:.3f}",
                point.bound,
            ]
        )
    return buf.getvalue()


def compare_csv(comparison: StrategyComparison) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["layer", *comparison.columns])
    for layer in comparison.layers:
        row: list[object] = [layer]
        for column in comparison.columns:
            value = comparison.cells[layer][column]
            row.append("" if value is None else f"{format_us(value):.3f}")
        writer.writerow(row)
    total_row: list[object] = ["total"]
    speedup_row: list[object] = ["speedup_vs_tso"]
    for column in comparison.columns:
        total = comparison.totals[column]
        speedup = comparison.speedups[column]
        total_row.append("" if total is None else f"{format_us(total):.3f}")
        speedup_row.append("" if speedup is None else f"{speedup:.4f}")
    writer.writerow(total_row)
    writer.writerow(speedup_row)
    return buf.getvalue()


def plan_table(plan: PlanMap, arch: ArchConfig) -> str:
    """Fixed-width text rendering of a plan for the terminal."""
    header = (
        "layer",
        "tle",
        "sched",
        "t_m",
        "t_n",
        "t_r",
        "t_c",
        "mac_us",
        "dram_us",
        "sw_us",
        "total_us",
        "%load",
        "%store",
        "%mac",
    )
    rows = [header]
    breakdown = {row.layer: row for row in breakdown_rows(plan, arch)}
    for name, entry in plan.entries.items():
        cost = entry.cost
        tile = entry.tile
        split = breakdown[name]
        rows.append(
            (
                name,
                entry.slice.kind.value,
                entry.schedule.value,
                str(tile.t_m),
                str(tile.t_n),
                str(tile.t_r),
                str(tile.t_c),
                f"{format_us(cost.t_mac):.3f}",
                f"{format_us(cost.t_dram):.3f}",
                f"{format_us(cost.t_sw):.3f}",
                f"{format_us(cost.t_total):.3f}",
                f"{split.pct_load:.1f}",
                f"{split.pct_store:.1f}",
                f"{split.pct_mac:.1f}",
            )
        )
    total = sum(entry.cost.t_total for entry in plan.entries.values())
    rows.append(
        ("total", "", "", "", "", "", "", "", "", "", f"{format_us(total):.3f}", "", "", "")
    )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"
