"""Exhaustive search for the fastest partition, schedule, and tile shape.

For every layer the planner tries each TLE partition and each schedule, and
inside every such pair prices all tile shapes (t_r up to the slice's rows,
t_c up to the output width, t_n up to the channel depth; t_m follows from
the schedule).  There is no pruning beyond skipping tiles that do not fit a
scratchpad, and no tie-breaking heuristic: the first candidate found in
canonical enumeration order wins, and later candidates replace it only when
strictly cheaper.  Exact ties between partition/schedule pairs are flagged
in the search statistics.

Tile grids are priced with vectorized integer/float arithmetic that mirrors
:mod:`tsoplan.costmodel` operation for operation, so the argmin equals what
a scalar sweep would select; the winner's reported cost is then recomputed
through the scalar path.  Layers are planned independently (optionally in
parallel), so plans do not depend on the worker count.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .configs import ArchConfig, ConvLayerSpec, ModelSpec
from .costmodel import CostBreakdown, TimeModel, calc_time
from .slicing import (
    Infeasible,
    ScheduleKind,
    TileConfig,
    TlePartitionKind,
    TleSlice,
    gen_tile,
    get_filters,
    tle_slicing,
)

PARTITION_ORDER = (TlePartitionKind.KS, TlePartitionKind.KS_OFM, TlePartitionKind.OFM)
SCHEDULE_ORDER = (ScheduleKind.IS, ScheduleKind.OS, ScheduleKind.WS)

# Cap on grid cells evaluated per vectorized chunk, to bound temporaries.
_CHUNK_CELLS = 1 << 20


@dataclass(frozen=True)
class PlanEntry:
    layer: str
    slice: TleSlice
    tile: TileConfig
    schedule: ScheduleKind
    cost: CostBreakdown


@dataclass
class SearchStats:
    candidates_evaluated: int = 0
    candidates_infeasible: int = 0
    wall_time_s: float = 0.0
    tie_layers: tuple[str, ...] = ()


@dataclass
class PlanMap:
    model_name: str
    mode: TimeModel
    entries: dict[str, PlanEntry]
    stats: SearchStats


class PlanError(Exception):
    """No feasible strategy exists for one or more layers."""

    def __init__(self, failures: list[tuple[str, list[str]]]):
        self.failures = failures
        lines = []
        for layer, attempts in failures:
            tried = "; ".join(attempts) if attempts else "nothing applicable"
            lines.append(f"layer {layer!r}: {tried}")
        super().__init__("no feasible plan: " + " | ".join(lines))


@dataclass(frozen=True)
class _GridResult:
    best: tuple[int, int, int, int] | None  # t_r, t_c, t_n, t_m
    best_total: float
    n_feasible: int
    n_candidates: int


def _cdiv(a, b):
    return (a + b - 1) // b


def _grid_search(
    conv: ConvLayerSpec,
    arch: ArchConfig,
    slice_: TleSlice,
    q: ScheduleKind,
    model: TimeModel,
    n_tlt: int,
) -> _GridResult:
    """Price every tile candidate for one partition/schedule pair.

    The arithmetic below restates gen_tile, compute_alphas, the aligned
    burst tiers of calc_burst_count at the map origin, and calc_time, as
    array expressions over the (t_r, t_c, t_n) grid.
    """
    e = conv.elem_bytes
    kk = conv.k * conv.k
    macs = arch.macs_per_cycle(e)
    total_tlts = arch.n_tle * arch.n_tlt
    burst = arch.burst_bytes
    cas = arch.cas_s
    bw = arch.bw_bytes_per_s
    sw = arch.sw_overhead_s
    f = _cdiv(slice_.tle_w, n_tlt)

    if q is ScheduleKind.WS:
        ws_cap = arch.mb1_bytes // (conv.n * kk * e)
        if ws_cap < 1:
            n_cand = slice_.tle_r * conv.c * conv.n
            return _GridResult(None, np.inf, 0, n_cand)

    t_c = np.arange(1, conv.c + 1, dtype=np.int64).reshape(1, -1, 1)
    t_n = np.arange(1, conv.n + 1, dtype=np.int64).reshape(1, 1, -1)
    t_l = np.minimum((t_c - 1) * conv.s + conv.k, conv.l + 2 * conv.p)
    eff_l = np.minimum(t_l, conv.l)

    cc = _cdiv(conv.c, t_c)
    cn = _cdiv(conv.n, t_n)

    if q is ScheduleKind.IS:
        t_m = np.full_like(t_n, f)
        sched_ok = f * t_n * kk * e <= arch.mb1_bytes
    elif q is ScheduleKind.OS:
        cap = arch.mb1_bytes // (t_n * kk * e)
        sched_ok = cap >= 1
        # Cells with cap = 0 are masked infeasible; clamp so the dead
        # arithmetic below stays division-safe.
        t_m = np.maximum(np.minimum(f, cap), 1)
    else:
        t_m = np.full_like(t_n, min(f, ws_cap))
        sched_ok = np.ones_like(t_n, dtype=bool)

    w_depth = np.full_like(t_n, conv.n) if q is ScheduleKind.WS else t_n
    w_bytes = t_m * w_depth * kk * e
    out_per_row = t_m * t_c * e  # times t_r later
    cm = _cdiv(slice_.tle_w, t_m)
    gm = _cdiv(conv.m, t_m)

    # Weight-tile aligned bursts: one run per filter of w_depth channels,
    # merging into a single run when the tile spans the full depth.
    w_run = w_depth * kk * e
    nb_w = np.where(
        w_depth == conv.n,
        _cdiv(t_m * conv.n * kk * e, burst),
        t_m * _cdiv(w_run, burst),
    )

    best_val = np.inf
    best_idx: tuple[int, int, int, int] | None = None
    n_feasible = 0
    n_candidates = slice_.tle_r * conv.c * conv.n

    rows_per_chunk = max(1, _CHUNK_CELLS // max(conv.c * conv.n, 1))
    for r_start in range(1, slice_.tle_r + 1, rows_per_chunk):
        r_stop = min(r_start + rows_per_chunk - 1, slice_.tle_r)
        t_r = np.arange(r_start, r_stop + 1, dtype=np.int64).reshape(-1, 1, 1)
        t_h = np.minimum((t_r - 1) * conv.s + conv.k, conv.h + 2 * conv.p)
        eff_h = np.minimum(t_h, conv.h)

        in_bytes = t_n * (t_h * t_l) * e
        out_bytes = out_per_row * t_r
        feasible = (
            (in_bytes <= arch.mb0_bytes)
            & (w_bytes <= arch.mb1_bytes)
            & (out_bytes <= arch.mb2_bytes)
            & sched_ok
        )

        cr = _cdiv(slice_.tle_r, t_r)
        gr = _cdiv(conv.r, t_r)
        if q is ScheduleKind.IS:
            a_in = arch.n_tle * (cr * cc * cn)
            a_w = a_in
            a_out = gr * cc
        elif q is ScheduleKind.OS:
            a_in = arch.n_tle * (cr * cc * cn * cm)
            a_w = a_in
            a_out = gr * cc * gm
        else:
            a_in = arch.n_tle * (cr * cc * cn * cm)
            a_w = arch.n_tle * cm
            a_out = gr * cc * gm

        # Input-tile aligned bursts at the map origin: per (channel, row)
        # runs, merging to per-channel runs at full width and to a single
        # run when the whole channel extent is covered.
        full_w = eff_l == conv.l
        full_chan = full_w & (eff_h == conv.h)
        nb_in = np.where(
            full_chan,
            _cdiv(t_n * conv.h * conv.l * e, burst),
            np.where(
                full_w,
                t_n * _cdiv(eff_h * conv.l * e, burst),
                t_n * eff_h * _cdiv(eff_l * e, burst),
            ),
        )
        out_full_w = t_c == conv.c
        out_full_chan = out_full_w & (t_r == conv.r)
        nb_out = np.where(
            out_full_chan,
            _cdiv(t_m * conv.r * conv.c * e, burst),
            np.where(
                out_full_w,
                t_m * _cdiv(t_r * conv.c * e, burst),
                t_m * t_r * _cdiv(t_c * e, burst),
            ),
        )

        if model == "burst":
            x_in = nb_in * cas + in_bytes / bw
            x_w = nb_w * cas + w_bytes / bw
            x_out = nb_out * cas + out_bytes / bw
        else:
            x_in = in_bytes / bw
            x_w = w_bytes / bw
            x_out = out_bytes / bw
        t_dram = a_in * x_in + a_w * x_w + a_out * x_out

        cycles = t_n * t_m * _cdiv(t_r * t_c * kk, macs)
        mac_tiles = gm * cn * gr * cc
        t_mac = mac_tiles * (cycles / arch.freq_hz) / total_tlts
        t_sw = (a_in + a_w + a_out) * sw
        t_total = np.where(feasible, t_mac + t_dram + t_sw, np.inf)

        n_feasible += int(feasible.sum())
        flat = int(np.argmin(t_total))
        val = float(t_total.flat[flat])
        if val < best_val:
            ir, ic, in_ = np.unravel_index(flat, t_total.shape)
            best_val = val
            best_idx = (
                r_start + int(ir),
                1 + int(ic),
                1 + int(in_),
                int(np.broadcast_to(t_m, t_total.shape)[ir, ic, in_]),
            )

    if best_idx is None or best_val == np.inf:
        return _GridResult(None, np.inf, n_feasible, n_candidates)
    return _GridResult(best_idx, best_val, n_feasible, n_candidates)


def tlt_tiling(
    q: ScheduleKind,
    conv: ConvLayerSpec,
    slice_: TleSlice,
    n_tlt: int,
    arch: ArchConfig,
    model: TimeModel = "burst",
) -> tuple[TileConfig, CostBreakdown] | None:
    """Best tile for one partition/schedule pair, or None if nothing fits."""
    res = _grid_search(conv, arch, slice_, q, model, n_tlt)
    if res.best is None:
        return None
    return _rebuild(res, q, conv, slice_, n_tlt, arch, model)


def _rebuild(
    res: _GridResult,
    q: ScheduleKind,
    conv: ConvLayerSpec,
    slice_: TleSlice,
    n_tlt: int,
    arch: ArchConfig,
    model: TimeModel,
) -> tuple[TileConfig, CostBreakdown]:
    t_r, t_c, t_n, t_m_grid = res.best
    t_m = get_filters(t_r, t_c, q, slice_.tle_w, n_tlt, t_n, conv, arch)
    tile = gen_tile(t_m, t_n, t_r, t_c, q, conv, arch, slice_)
    cost = calc_time(tile, q, conv, slice_, arch, model)
    if t_m != t_m_grid or cost.t_total != res.best_total:
        raise RuntimeError(
            f"internal: grid and scalar cost disagree for {conv.name} "
            f"({q.value}, t_r={t_r}, t_c={t_c}, t_n={t_n})"
        )
    return tile, cost


@dataclass
class _LayerOutcome:
    entry: PlanEntry | None
    attempts: list[str]
    evaluated: int
    infeasible: int
    tied: bool


def _plan_layer(
    conv: ConvLayerSpec,
    arch: ArchConfig,
    model: TimeModel,
    fixed_tle: TlePartitionKind | None,
    fixed_tlt: ScheduleKind | None,
) -> _LayerOutcome:
    partitions = (fixed_tle,) if fixed_tle else PARTITION_ORDER
    schedules = (fixed_tlt,) if fixed_tlt else SCHEDULE_ORDER
    outcome = _LayerOutcome(entry=None, attempts=[], evaluated=0, infeasible=0, tied=False)
    for p in partitions:
        try:
            slice_ = tle_slicing(p, conv, arch.n_tle)
        except Infeasible as exc:
            outcome.attempts.append(f"{p.value}: {exc.reason}")
            continue
        for q in schedules:
            res = _grid_search(conv, arch, slice_, q, model, arch.n_tlt)
            outcome.evaluated += res.n_feasible
            outcome.infeasible += res.n_candidates - res.n_feasible
            if res.best is None:
                outcome.attempts.append(f"{p.value}/{q.value}: no tile fits the scratchpads")
                continue
            tile, cost = _rebuild(res, q, conv, slice_, arch.n_tlt, arch, model)
            if outcome.entry is None or cost.t_total < outcome.entry.cost.t_total:
                outcome.entry = PlanEntry(
                    layer=conv.name, slice=slice_, tile=tile, schedule=q, cost=cost
                )
            elif cost.t_total == outcome.entry.cost.t_total:
                outcome.tied = True
    return outcome


def plan_layer(
    conv: ConvLayerSpec,
    arch: ArchConfig,
    model: TimeModel = "burst",
    fixed_tle: TlePartitionKind | None = None,
    fixed_tlt: ScheduleKind | None = None,
) -> PlanEntry:
    """Plan a single layer; raises PlanError when nothing is feasible."""
    outcome = _plan_layer(conv, arch, model, fixed_tle, fixed_tlt)
    if outcome.entry is None:
        raise PlanError([(conv.name, outcome.attempts)])
    return outcome.entry


def tso(
    model: ModelSpec,
    arch: ArchConfig,
    mode: TimeModel = "burst",
    fixed_tle: TlePartitionKind | None = None,
    fixed_tlt: ScheduleKind | None = None,
    workers: int | None = None,
) -> PlanMap:
    """Plan every layer of a model.

    workers caps layer-level parallelism; the resulting plan is identical
    for any worker count because layers are planned independently.
    """
    started = time.perf_counter()
    outcomes = _map_layers(
        model.layers,
        lambda conv: _plan_layer(conv, arch, mode, fixed_tle, fixed_tlt),
        workers,
    )
    failures = [
        (conv.name, outcome.attempts)
        for conv, outcome in zip(model.layers, outcomes)
        if outcome.entry is None
    ]
    if failures:
        raise PlanError(failures)
    stats = SearchStats(
        candidates_evaluated=sum(o.evaluated for o in outcomes),
        candidates_infeasible=sum(o.infeasible for o in outcomes),
        wall_time_s=time.perf_counter() - started,
        tie_layers=tuple(conv.name for conv, o in zip(model.layers, outcomes) if o.tied),
    )
    entries = {conv.name: outcome.entry for conv, outcome in zip(model.layers, outcomes)}
    return PlanMap(model_name=model.name, mode=mode, entries=entries, stats=stats)


def _map_layers(layers, fn, workers: int | None):
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(layers) <= 1:
        return [fn(conv) for conv in layers]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, layers))


COMPARE_COLUMNS = (
    "tso_burst",
    "tso_noburst",
    "fixed_ks",
    "fixed_ksofm",
    "fixed_ofm",
    "fixed_is",
    "fixed_os",
    "fixed_ws",
)

_COLUMN_RESTRICTIONS: dict[str, tuple[TimeModel, TlePartitionKind | None, ScheduleKind | None]] = {
    "tso_burst": ("burst", None, None),
    "tso_noburst": ("noburst", None, None),
    "fixed_ks": ("burst", TlePartitionKind.KS, None),
    "fixed_ksofm": ("burst", TlePartitionKind.KS_OFM, None),
    "fixed_ofm": ("burst", TlePartitionKind.OFM, None),
    "fixed_is": ("burst", None, ScheduleKind.IS),
    "fixed_os": ("burst", None, ScheduleKind.OS),
    "fixed_ws": ("burst", None, ScheduleKind.WS),
}


@dataclass
class StrategyComparison:
    """Per-layer burst-model times for the free search and each fixed strategy.

    Every cell is re-costed under the burst model so columns are comparable;
    None marks an infeasible layer/strategy pair, with the reason kept in
    ``reasons``.  Totals sum each column and ``speedups`` divides each total
    by the free burst search's total.
    """

    layers: tuple[str, ...]
    columns: tuple[str, ...]
    cells: dict[str, dict[str, float | None]]
    reasons: dict[tuple[str, str], str]
    totals: dict[str, float | None]
    speedups: dict[str, float | None]


def compare_strategies(
    model: ModelSpec, arch: ArchConfig, workers: int | None = None
) -> StrategyComparison:
    cells: dict[str, dict[str, float | None]] = {conv.name: {} for conv in model.layers}
    reasons: dict[tuple[str, str], str] = {}

    for column in COMPARE_COLUMNS:
        time_model, fixed_tle, fixed_tlt = _COLUMN_RESTRICTIONS[column]
        outcomes = _map_layers(
            model.layers,
            lambda conv: _plan_layer(conv, arch, time_model, fixed_tle, fixed_tlt),
            workers,
        )
        for conv, outcome in zip(model.layers, outcomes):
            if outcome.entry is None:
                cells[conv.name][column] = None
                reasons[(conv.name, column)] = "; ".join(outcome.attempts)
                continue
            entry = outcome.entry
            if time_model == "burst":
                cells[conv.name][column] = entry.cost.t_total
            else:
                recost = calc_time(entry.tile, entry.schedule, conv, entry.slice, arch, "burst")
                cells[conv.name][column] = recost.t_total

    totals: dict[str, float | None] = {}
    for column in COMPARE_COLUMNS:
        vals = [cells[conv.name][column] for conv in model.layers]
        totals[column] = None if any(v is None for v in vals) else sum(vals)
    base = totals["tso_burst"]
    speedups = {
        column: (totals[column] / base if totals[column] is not None and base else None)
        for column in COMPARE_COLUMNS
    }
    return StrategyComparison(
        layers=tuple(conv.name for conv in model.layers),
        columns=COMPARE_COLUMNS,
        cells=cells,
        reasons=reasons,
        totals=totals,
        speedups=speedups,
    )
