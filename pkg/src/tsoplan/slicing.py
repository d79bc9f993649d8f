"""Workload slicing across TLEs and tile shaping within one TLT.

A layer is first partitioned across the ``n_tle`` clusters, either by
filters (KS), by output rows (OFM), or by both at once (KS_OFM).  Inside a
cluster every TLT then processes the layer slice tile by tile; a tile is
described by its output extent (t_m filters, t_r rows, t_c columns) plus the
input-channel depth t_n, and must fit the three per-TLT scratchpads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .configs import ArchConfig, ConvLayerSpec
from .util import ceil_div


class TlePartitionKind(Enum):
    """How the layer is split across TLEs."""

    KS = "ks"
    KS_OFM = "ksofm"
    OFM = "ofm"


class ScheduleKind(Enum):
    """Which operand a TLT keeps resident while streaming the others."""

    IS = "is"
    OS = "os"
    WS = "ws"


class Infeasible(Exception):
    """A candidate partition or tile cannot run on the given configuration."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class TleSlice:
    """Per-TLE share of a layer: tle_r output rows of tle_w filters."""

    kind: TlePartitionKind
    tle_r: int
    tle_w: int


@dataclass(frozen=True)
class TileConfig:
    """One per-TLT tile, with its scratchpad footprints in bytes."""

    t_m: int
    t_n: int
    t_r: int
    t_c: int
    t_h: int
    t_l: int
    in_bytes: int
    w_bytes: int
    out_bytes: int


def tle_slicing(kind: TlePartitionKind, conv: ConvLayerSpec, n_tle: int) -> TleSlice:
    """Split a layer across n_tle clusters.

    KS gives every cluster all output rows of a filter group; OFM gives every
    cluster a row band of all filters; KS_OFM halves both ways and needs an
    even cluster count.
    """
    if n_tle < 1:
        raise Infeasible(f"n_tle must be >= 1, got {n_tle}")
    if kind is TlePartitionKind.KS:
        return TleSlice(kind, tle_r=conv.r, tle_w=ceil_div(conv.m, n_tle))
    if kind is TlePartitionKind.OFM:
        return TleSlice(kind, tle_r=ceil_div(conv.r, n_tle), tle_w=conv.m)
    if n_tle % 2:
        raise Infeasible(f"ksofm partitioning needs an even TLE count, got {n_tle}")
    half = n_tle // 2
    return TleSlice(kind, tle_r=ceil_div(conv.r, half), tle_w=ceil_div(conv.m, half))


def ifm_tile_dims(t_r: int, t_c: int, k: int, s: int) -> tuple[int, int]:
    # Input window covering t_r x t_c outputs: (t - 1) strides plus one kernel.
    return (t_r - 1) * s + k, (t_c - 1) * s + k


def get_filters(
    t_r: int,
    t_c: int,
    q: ScheduleKind,
    tle_w: int,
    n_tlt: int,
    t_n: int,
    conv: ConvLayerSpec,
    arch: ArchConfig,
) -> int:
    """Filters per weight tile for the worst-loaded TLT of a slice.

    Every TLT is responsible for f = ceil(tle_w / n_tlt) filters.  IS keeps
    all f resident at once; OS and WS cap the group by what mb1 can hold for
    the schedule's channel depth (t_n for OS, the full depth for WS).
    """
    f = ceil_div(tle_w, n_tlt)
    kk_bytes = conv.k * conv.k * conv.elem_bytes
    if q is ScheduleKind.IS:
        if f * t_n * kk_bytes > arch.mb1_bytes:
            raise Infeasible(
                f"is schedule needs {f * t_n * kk_bytes} weight bytes resident,"
                f" mb1 holds {arch.mb1_bytes}"
            )
        return f
    if q is ScheduleKind.OS:
        cap = arch.mb1_bytes // (t_n * kk_bytes)
        if cap < 1:
            raise Infeasible(f"mb1 cannot hold one filter of depth {t_n}")
        return min(f, cap)
    cap = arch.mb1_bytes // (conv.n * kk_bytes)
    if cap < 1:
        raise Infeasible(f"mb1 cannot hold one full-depth filter of {conv.n} channels")
    return min(f, cap)


def gen_tile(
    t_m: int,
    t_n: int,
    t_r: int,
    t_c: int,
    q: ScheduleKind,
    conv: ConvLayerSpec,
    arch: ArchConfig,
    slice_: TleSlice,
) -> TileConfig:
    """Build a tile and check it against the three scratchpads.

    The input window is clamped to the padded map extent; weight depth is t_n
    for IS/OS and the full channel count for WS.  Raises Infeasible naming
    the violated scratchpad.
    """
    t_h, t_l = ifm_tile_dims(t_r, t_c, conv.k, conv.s)
    t_h = min(t_h, conv.h + 2 * conv.p)
    t_l = min(t_l, conv.l + 2 * conv.p)
    e = conv.elem_bytes
    in_bytes = t_n * t_h * t_l * e
    w_depth = conv.n if q is ScheduleKind.WS else t_n
    w_bytes = t_m * w_depth * conv.k * conv.k * e
    out_bytes = t_m * t_r * t_c * e
    if in_bytes > arch.mb0_bytes:
        raise Infeasible(f"in tile {in_bytes} B exceeds mb0 {arch.mb0_bytes} B")
    if w_bytes > arch.mb1_bytes:
        raise Infeasible(f"weight tile {w_bytes} B exceeds mb1 {arch.mb1_bytes} B")
    if out_bytes > arch.mb2_bytes:
        raise Infeasible(f"out tile {out_bytes} B exceeds mb2 {arch.mb2_bytes} B")
    return TileConfig(
        t_m=t_m,
        t_n=t_n,
        t_r=t_r,
        t_c=t_c,
        t_h=t_h,
        t_l=t_l,
        in_bytes=in_bytes,
        w_bytes=w_bytes,
        out_bytes=out_bytes,
    )
