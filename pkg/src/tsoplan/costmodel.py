"""Analytic execution-time model for one tiled convolution.

Total layer time is the sum of three independent parts: MAC time for the
tile grid spread over every TLT core, DRAM transfer time for all tile loads
and stores, and a fixed software overhead per transfer.  Compute and
transfers do not overlap in this device, so the parts add.

Transfers are charged per tile kind: how often a tile of each kind moves
(the alpha factors) times how long one such move takes.  In the burst time
model a move pays one CAS latency per DRAM burst it touches plus the tile's
bytes over the peak bandwidth; in the noburst model only the bandwidth term
remains.  Burst counts come from decomposing the tile's footprint into
maximal contiguous byte runs of the row-major source tensor.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Literal

from .configs import ArchConfig, ConvLayerSpec
from .slicing import ScheduleKind, TileConfig, TleSlice
from .util import ceil_div

BurstMode = Literal["aligned", "address_aware"]
TimeModel = Literal["burst", "noburst"]


class TileKind(Enum):
    IN = "in"
    W = "w"
    OUT = "out"


@dataclass(frozen=True)
class Alphas:
    """Transfer multiplicities: how many tile moves of each kind one layer needs."""

    a_in: int
    a_w: int
    a_out: int

    @property
    def total(self) -> int:
        return self.a_in + self.a_w + self.a_out


@dataclass(frozen=True)
class CostBreakdown:
    """Estimated layer time in seconds, split by source, plus per-tile burst counts."""

    t_mac: float
    t_dram: float
    t_sw: float
    t_total: float
    alphas: Alphas
    bursts_in: int
    bursts_w: int
    bursts_out: int
    mode: TimeModel


def compute_alphas(
    q: ScheduleKind,
    conv: ConvLayerSpec,
    slice_: TleSlice,
    tile: TileConfig,
    n_tle: int,
) -> Alphas:
    """Tile-move counts for a schedule.

    Input tiles are multicast to the TLTs of a cluster, so their count (and
    the weight-tile count that tracks the same loop nest) scales with the
    cluster count and the slice's tile grid.  Output tiles leave the device
    once per tile of the whole output map, regardless of clustering.
    """
    cr = ceil_div(slice_.tle_r, tile.t_r)
    cc = ceil_div(conv.c, tile.t_c)
    cn = ceil_div(conv.n, tile.t_n)
    cm = ceil_div(slice_.tle_w, tile.t_m)
    gr = ceil_div(conv.r, tile.t_r)
    gc = ceil_div(conv.c, tile.t_c)
    gm = ceil_div(conv.m, tile.t_m)
    if q is ScheduleKind.IS:
        # All of a TLT's filters stay resident: no weight-group loop, and the
        # output map is written once per spatial tile.
        loads = n_tle * cr * cc * cn
        return Alphas(a_in=loads, a_w=loads, a_out=gr * gc)
    if q is ScheduleKind.OS:
        loads = n_tle * cr * cc * cn * cm
        return Alphas(a_in=loads, a_w=loads, a_out=gr * gc * gm)
    return Alphas(
        a_in=n_tle * cr * cc * cn * cm,
        a_w=n_tle * cm,
        a_out=gr * gc * gm,
    )


def tile_mac_time(tile: TileConfig, conv: ConvLayerSpec, arch: ArchConfig) -> float:
    """Seconds one TLT spends computing one tile."""
    macs = arch.macs_per_cycle(conv.elem_bytes)
    cycles = tile.t_n * tile.t_m * ceil_div(tile.t_r * tile.t_c * conv.k * conv.k, macs)
    return cycles / arch.freq_hz


def conv_mac_time(tile: TileConfig, conv: ConvLayerSpec, arch: ArchConfig) -> float:
    """Seconds to compute the whole layer's tile grid, spread over every TLT
    core in the device."""
    n_tiles = (
        ceil_div(conv.m, tile.t_m)
        * ceil_div(conv.n, tile.t_n)
        * ceil_div(conv.r, tile.t_r)
        * ceil_div(conv.c, tile.t_c)
    )
    return n_tiles * tile_mac_time(tile, conv, arch) / (arch.n_tle * arch.n_tlt)


def box_runs(
    map_dims: tuple[int, int, int],
    origin: tuple[int, int, int],
    extent: tuple[int, int, int],
    elem_bytes: int,
) -> list[tuple[int, int]]:
    """Maximal contiguous byte runs of a box inside a row-major 3-D tensor.

    The box is clipped to the tensor first, so origins may be negative
    (padding) or extents may overhang.  Returns (start_byte, len_bytes)
    pairs in increasing address order; adjacent runs are merged.
    """
    d0, d1, d2 = map_dims
    lo = [max(o, 0) for o in origin]
    hi = [
        min(origin[0] + extent[0], d0),
        min(origin[1] + extent[1], d1),
        min(origin[2] + extent[2], d2),
    ]
    e0, e1, e2 = hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]
    if e0 <= 0 or e1 <= 0 or e2 <= 0:
        return []
    runs: list[tuple[int, int]] = []
    for i in range(e0):
        for j in range(e1):
            start = ((lo[0] + i) * d1 + (lo[1] + j)) * d2 + lo[2]
            if runs and runs[-1][0] + runs[-1][1] == start:
                runs[-1] = (runs[-1][0], runs[-1][1] + e2)
            else:
                runs.append((start, e2))
    return [(s * elem_bytes, n * elem_bytes) for s, n in runs]


def tile_box(
    kind: TileKind, tile: TileConfig, conv: ConvLayerSpec
) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
    """Map dimensions and box extent of one tile in its source tensor.

    IN boxes live in the (channels, rows, cols) input map, OUT boxes in the
    (filters, rows, cols) output map.  Weights are filter-major with each
    filter's channels contiguous, so a weight tile is a (filters, depth,
    k*k elements) box; the depth is recovered from the tile's byte size
    because it depends on the schedule that shaped the tile.
    """
    if kind is TileKind.IN:
        return (conv.n, conv.h, conv.l), (tile.t_n, tile.t_h, tile.t_l)
    if kind is TileKind.OUT:
        return (conv.m, conv.r, conv.c), (tile.t_m, tile.t_r, tile.t_c)
    kk = conv.k * conv.k
    w_depth = tile.w_bytes // (tile.t_m * kk * conv.elem_bytes)
    return (conv.m, conv.n, kk), (tile.t_m, w_depth, kk)


def calc_burst_count(
    kind: TileKind,
    tile: TileConfig,
    conv: ConvLayerSpec,
    arch: ArchConfig,
    mode: BurstMode = "aligned",
    origin: tuple[int, int, int] = (0, 0, 0),
) -> int:
    """DRAM bursts one tile move touches.

    aligned assumes every run starts on a burst boundary; address_aware
    counts the burst-sized blocks the run actually overlaps at its true byte
    address (tensor bases are burst-aligned).
    """
    dims, extent = tile_box(kind, tile, conv)
    burst = arch.burst_bytes
    total = 0
    for start, length in box_runs(dims, origin, extent, conv.elem_bytes):
        if mode == "aligned":
            total += ceil_div(length, burst)
        else:
            total += (start + length - 1) // burst - start // burst + 1
    return total


_TILE_BYTES = {
    TileKind.IN: lambda t: t.in_bytes,
    TileKind.W: lambda t: t.w_bytes,
    TileKind.OUT: lambda t: t.out_bytes,
}


def calc_data_transfer(
    kind: TileKind,
    tile: TileConfig,
    conv: ConvLayerSpec,
    arch: ArchConfig,
    model: TimeModel = "burst",
) -> float:
    """Seconds to move one tile between DRAM and a scratchpad."""
    tile_bytes = _TILE_BYTES[kind](tile)
    if model == "burst":
        nbursts = calc_burst_count(kind, tile, conv, arch, "aligned")
        return nbursts * arch.cas_s + tile_bytes / arch.bw_bytes_per_s
    return tile_bytes / arch.bw_bytes_per_s


def _transfer_seconds(nbursts: int, tile_bytes: int, arch: ArchConfig, model: TimeModel) -> float:
    if model == "burst":
        return nbursts * arch.cas_s + tile_bytes / arch.bw_bytes_per_s
    return tile_bytes / arch.bw_bytes_per_s


def calc_time(
    tile: TileConfig,
    q: ScheduleKind,
    conv: ConvLayerSpec,
    slice_: TleSlice,
    arch: ArchConfig,
    model: TimeModel = "burst",
) -> CostBreakdown:
    """Full additive time estimate for running a layer with one tile shape."""
    alphas = compute_alphas(q, conv, slice_, tile, arch.n_tle)
    nb_in = calc_burst_count(TileKind.IN, tile, conv, arch, "aligned")
    nb_w = calc_burst_count(TileKind.W, tile, conv, arch, "aligned")
    nb_out = calc_burst_count(TileKind.OUT, tile, conv, arch, "aligned")
    x_in = _transfer_seconds(nb_in, tile.in_bytes, arch, model)
    x_w = _transfer_seconds(nb_w, tile.w_bytes, arch, model)
    x_out = _transfer_seconds(nb_out, tile.out_bytes, arch, model)
    t_dram = alphas.a_in * x_in + alphas.a_w * x_w + alphas.a_out * x_out
    t_mac = conv_mac_time(tile, conv, arch)
    t_sw = alphas.total * arch.sw_overhead_s
    return CostBreakdown(
        t_mac=t_mac,
        t_dram=t_dram,
        t_sw=t_sw,
        t_total=t_mac + t_dram + t_sw,
        alphas=alphas,
        bursts_in=nb_in,
        bursts_w=nb_w,
        bursts_out=nb_out,
        mode=model,
    )
