"""Exhaustive plan search: referee parity, ordering, ties, and comparisons."""

import random

import pytest

from tsoplan.configs import ArchConfig, ConvLayerSpec, ModelSpec, nmp_profile
from tsoplan.costmodel import calc_time
from tsoplan.search import (
    COMPARE_COLUMNS,
    PARTITION_ORDER,
    SCHEDULE_ORDER,
    PlanError,
    compare_strategies,
    plan_layer,
    tlt_tiling,
    tso,
)
from tsoplan.slicing import (
    Infeasible,
    ScheduleKind,
    TlePartitionKind,
    gen_tile,
    get_filters,
    tle_slicing,
)

from _models import random_toy_model


def conv_for(name="t", n=4, h=16, l=16, m=8, k=3, s=1, p=0, e=2):
    r = (h + 2 * p - k) // s + 1
    c = (l + 2 * p - k) // s + 1
    return ConvLayerSpec(name=name, n=n, h=h, l=l, m=m, k=k, s=s, p=p, r=r, c=c, elem_bytes=e)


def arch_for(mb=8192, n_tle=4, n_tlt=8, cas_ns=14.0, sw_ns=0.0):
    return ArchConfig(
        n_tle=n_tle, n_tlt=n_tlt, mb0_bytes=mb, mb1_bytes=mb, mb2_bytes=mb,
        datapath_bits=128, freq_hz=1e9, cas_ns=cas_ns, bw_bytes_per_s=17e9,
        burst_bytes=128, sw_overhead_ns=sw_ns,
    )


def brute_plan_layer(conv, arch, model, partitions=PARTITION_ORDER, schedules=SCHEDULE_ORDER):
    """Plain-loop referee for the vectorized search: same traversal order,
    same strict-< winner, tile filter count derived rather than enumerated."""
    best = None
    for p in partitions:
        try:
            slice_ = tle_slicing(p, conv, arch.n_tle)
        except Infeasible:
            continue
        for q in schedules:
            for t_r in range(1, slice_.tle_r + 1):
                for t_c in range(1, conv.c + 1):
                    for t_n in range(1, conv.n + 1):
                        try:
                            t_m = get_filters(
                                t_r, t_c, q, slice_.tle_w, arch.n_tlt, t_n, conv, arch
                            )
                            tile = gen_tile(t_m, t_n, t_r, t_c, q, conv, arch, slice_)
                        except Infeasible:
                            continue
                        cost = calc_time(tile, q, conv, slice_, arch, model)
                        if best is None or cost.t_total < best[0]:
                            best = (cost.t_total, p, q, tile, cost)
    return best


REFEREE_CASES = [
    # (conv kwargs, n_tle, n_tlt, mb, model)
    (dict(n=3, h=10, l=10, m=8, k=3), 4, 2, 1024, "burst"),
    (dict(n=4, h=12, l=9, m=6, k=3, p=1), 2, 2, 512, "burst"),
    (dict(n=6, h=8, l=8, m=10, k=1), 4, 1, 512, "burst"),
    (dict(n=2, h=11, l=11, m=4, k=5, p=2), 2, 1, 768, "burst"),
    (dict(n=5, h=9, l=12, m=8, k=3, s=2), 4, 2, 640, "burst"),
    (dict(n=3, h=10, l=10, m=8, k=3), 4, 2, 1024, "noburst"),
    (dict(n=6, h=8, l=8, m=10, k=1, e=1), 4, 1, 512, "noburst"),
    (dict(n=4, h=12, l=9, m=6, k=3, p=1), 2, 2, 512, "noburst"),
    (dict(n=2, h=7, l=13, m=12, k=3), 1, 2, 896, "burst"),
    (dict(n=8, h=6, l=6, m=16, k=3, p=1), 4, 4, 1024, "burst"),
    (dict(n=3, h=14, l=5, m=7, k=3, s=2, p=1), 2, 2, 700, "burst"),
    (dict(n=4, h=8, l=8, m=8, k=3, e=1), 4, 2, 384, "noburst"),
]


class TestRefereeParity:
    @pytest.mark.parametrize("kwargs,n_tle,n_tlt,mb,model", REFEREE_CASES)
    def test_planner_matches_plain_loop(self, kwargs, n_tle, n_tlt, mb, model):
        conv = conv_for(**kwargs)
        arch = arch_for(mb=mb, n_tle=n_tle, n_tlt=n_tlt)
        ref = brute_plan_layer(conv, arch, model)
        if ref is None:
            with pytest.raises(PlanError):
                plan_layer(conv, arch, model)
            return
        total, p, q, tile, cost = ref
        entry = plan_layer(conv, arch, model)
        assert entry.slice.kind is p
        assert entry.schedule is q
        assert (entry.tile.t_m, entry.tile.t_n, entry.tile.t_r, entry.tile.t_c) == (
            tile.t_m, tile.t_n, tile.t_r, tile.t_c,
        )
        assert entry.cost.t_total == total

    def test_single_pair_matches_plain_loop(self):
        conv = conv_for(n=3, h=10, l=10, m=8, k=3)
        arch = arch_for(mb=1024, n_tle=4, n_tlt=2)
        slice_ = tle_slicing(TlePartitionKind.KS_OFM, conv, 4)
        ref = brute_plan_layer(
            conv, arch, "burst",
            partitions=(TlePartitionKind.KS_OFM,), schedules=(ScheduleKind.OS,),
        )
        got = tlt_tiling(ScheduleKind.OS, conv, slice_, arch.n_tlt, arch, "burst")
        assert ref is not None and got is not None
        tile, cost = got
        assert cost.t_total == ref[0]
        assert (tile.t_m, tile.t_n, tile.t_r, tile.t_c) == (
            ref[3].t_m, ref[3].t_n, ref[3].t_r, ref[3].t_c,
        )

    def test_infeasible_pair_returns_none(self):
        conv = conv_for(n=8, h=6, l=6, m=8, k=3)
        arch = arch_for(mb=128, n_tle=2, n_tlt=1)  # one full-depth filter needs 144 B
        slice_ = tle_slicing(TlePartitionKind.KS, conv, 2)
        assert tlt_tiling(ScheduleKind.WS, conv, slice_, 1, arch, "burst") is None


class TestWholeLayerResidency:
    def test_small_layer_is_kept_resident(self):
        # Everything fits one 8 KB scratchpad set, so any split only adds
        # CAS events and operand reloads.
        conv = conv_for(n=2, h=8, l=8, m=2, k=3)  # r = c = 6
        arch = arch_for(n_tle=1, n_tlt=1)
        entry = plan_layer(conv, arch, "burst")
        tile = entry.tile
        assert (tile.t_m, tile.t_n, tile.t_r, tile.t_c) == (2, 2, 6, 6)
        a = entry.cost.alphas
        assert (a.a_in, a.a_w, a.a_out) == (1, 1, 1)


class TestPlanErrors:
    def test_odd_cluster_count_cannot_pair_split(self):
        conv = conv_for()
        arch = arch_for(n_tle=3)
        with pytest.raises(PlanError) as err:
            plan_layer(conv, arch, "burst", fixed_tle=TlePartitionKind.KS_OFM)
        assert err.value.failures[0][0] == conv.name
        assert err.value.failures[0][1]  # the attempted pair is recorded

    def test_ws_with_tiny_weight_buffer(self):
        conv = conv_for(n=8, h=6, l=6, m=8, k=3)
        arch = arch_for(mb=128, n_tle=2, n_tlt=1)
        with pytest.raises(PlanError):
            plan_layer(conv, arch, "burst", fixed_tlt=ScheduleKind.WS)

    def test_whole_model_failure_lists_every_layer(self):
        model = ModelSpec(name="m", layers=(conv_for(name="a"), conv_for(name="b")))
        arch = arch_for(n_tle=3)
        with pytest.raises(PlanError) as err:
            tso(model, arch, fixed_tle=TlePartitionKind.KS_OFM)
        assert [f[0] for f in err.value.failures] == ["a", "b"]


class TestDeterminismAndOrdering:
    def test_workers_do_not_change_the_plan(self):
        model = random_toy_model(7, n_layers=4)
        arch = arch_for(n_tle=2, n_tlt=2)
        sequential = tso(model, arch, workers=1)
        threaded = tso(model, arch, workers=4)
        assert sequential.entries == threaded.entries
        assert sequential.stats.candidates_evaluated == threaded.stats.candidates_evaluated

    def test_single_cluster_ties_are_flagged_and_first_wins(self):
        # With one TLE the KS and OFM slices are the same shape, so their
        # best candidates tie exactly; the earlier partition must win.
        model = ModelSpec(name="m", layers=(conv_for(n=2, h=8, l=8, m=2, k=3),))
        arch = arch_for(n_tle=1, n_tlt=1)
        plan = tso(model, arch)
        assert plan.stats.tie_layers == ("t",)
        assert plan.entries["t"].slice.kind is TlePartitionKind.KS

    def test_restrictions_never_beat_the_free_search(self):
        arch = nmp_profile()
        for seed in range(4):
            model = random_toy_model(seed)
            free = tso(model, arch)
            free_total = sum(e.cost.t_total for e in free.entries.values())
            for fixed_tle in PARTITION_ORDER:
                try:
                    fixed = tso(model, arch, fixed_tle=fixed_tle)
                except PlanError:
                    continue
                assert sum(e.cost.t_total for e in fixed.entries.values()) >= free_total
            for fixed_tlt in SCHEDULE_ORDER:
                try:
                    fixed = tso(model, arch, fixed_tlt=fixed_tlt)
                except PlanError:
                    continue
                assert sum(e.cost.t_total for e in fixed.entries.values()) >= free_total


class TestCompareStrategies:
    def test_free_search_wins_every_row(self):
        arch = nmp_profile()
        for seed in (11, 12):
            model = random_toy_model(seed)
            cmp_ = compare_strategies(model, arch)
            assert cmp_.columns == COMPARE_COLUMNS
            for layer in cmp_.layers:
                row = cmp_.cells[layer]
                best = row["tso_burst"]
                assert best is not None
                for column, value in row.items():
                    if value is not None:
                        assert value >= best

    def test_totals_and_speedups(self):
        model = ModelSpec(name="m", layers=(conv_for(name="a"), conv_for(name="b", m=16)))
        cmp_ = compare_strategies(model, nmp_profile())
        for column in cmp_.columns:
            cells = [cmp_.cells[layer][column] for layer in cmp_.layers]
            if any(v is None for v in cells):
                assert cmp_.totals[column] is None
                assert cmp_.speedups[column] is None
            else:
                assert cmp_.totals[column] == sum(cells)
                assert cmp_.speedups[column] == cmp_.totals[column] / cmp_.totals["tso_burst"]

    def test_infeasible_column_keeps_a_reason(self):
        model = ModelSpec(name="m", layers=(conv_for(name="a"),))
        cmp_ = compare_strategies(model, arch_for(n_tle=3))
        assert cmp_.cells["a"]["fixed_ksofm"] is None
        assert cmp_.totals["fixed_ksofm"] is None
        assert cmp_.reasons[("a", "fixed_ksofm")]
        assert cmp_.cells["a"]["tso_burst"] is not None

    def test_partition_preference_flips_with_depth(self):
        # Shallow wide layers spread output rows; deep narrow layers spread
        # filters. Both orderings must show up in the comparison table.
        early = conv_for(name="early", n=3, h=128, l=128, m=8, k=3)
        late = conv_for(name="late", n=256, h=6, l=6, m=512, k=3)
        cmp_ = compare_strategies(ModelSpec(name="m", layers=(early, late)), nmp_profile())
        assert cmp_.cells["early"]["fixed_ofm"] < cmp_.cells["early"]["fixed_ks"]
        assert cmp_.cells["late"]["fixed_ks"] < cmp_.cells["late"]["fixed_ofm"]

    def test_noburst_winner_is_recosted_under_burst(self):
        # The noburst column must be priced with burst overheads so the two
        # search modes are comparable; it can therefore never beat the
        # burst-aware winner.
        model = random_toy_model(3)
        cmp_ = compare_strategies(model, nmp_profile())
        for layer in cmp_.layers:
            assert cmp_.cells[layer]["tso_noburst"] >= cmp_.cells[layer]["tso_burst"]


class TestDominanceOnRandomModels:
    def test_plan_beats_every_enumerated_alternative(self):
        # Spot-check optimality against the plain-loop referee on random
        # layers small enough to enumerate.
        rng = random.Random(99)
        arch = arch_for(n_tle=2, n_tlt=2, mb=2048)
        for _ in range(6):
            conv = conv_for(
                n=rng.randint(1, 5),
                h=rng.randint(4, 12),
                l=rng.randint(4, 12),
                m=rng.randint(1, 8),
                k=rng.choice([1, 3]),
                s=rng.choice([1, 2]),
                p=rng.choice([0, 1]),
                e=rng.choice([1, 2]),
            )
            if conv.r < 1 or conv.c < 1:
                continue
            ref = brute_plan_layer(conv, arch, "burst")
            if ref is None:
                with pytest.raises(PlanError):
                    plan_layer(conv, arch, "burst")
                continue
            entry = plan_layer(conv, arch, "burst")
            assert entry.cost.t_total == ref[0]
