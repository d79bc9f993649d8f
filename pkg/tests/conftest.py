"""Shared fixtures and the acceptance-summary hook."""

from __future__ import annotations

import json

import pytest

from tsoplan.configs import ArchConfig, ConvLayerSpec, ModelSpec, arch_to_json_dict, model_to_json_dict, nmp_profile


@pytest.fixture(scope="session")
def nmp() -> ArchConfig:
    return nmp_profile()


@pytest.fixture(scope="session")
def single_core() -> ArchConfig:
    # One TLE, one TLT: hand-traceable slicing and scheduling.
    return ArchConfig(
        n_tle=1,
        n_tlt=1,
        mb0_bytes=8192,
        mb1_bytes=8192,
        mb2_bytes=8192,
        datapath_bits=128,
        freq_hz=1e9,
        cas_ns=14.0,
        bw_bytes_per_s=17e9,
        burst_bytes=128,
        sw_overhead_ns=0.0,
    )


@pytest.fixture(scope="session")
def layer5() -> ConvLayerSpec:
    # InceptionV3's fifth convolution: 80 input maps of 73x73, 192 3x3 filters.
    return ConvLayerSpec(
        name="l5", n=80, h=73, l=73, m=192, k=3, s=1, p=0, r=71, c=71, elem_bytes=2
    )


@pytest.fixture()
def write_configs(tmp_path):
    """Write (model, arch) JSON files and return their paths."""

    def _write(model: ModelSpec, arch: ArchConfig):
        model_path = tmp_path / "model.json"
        arch_path = tmp_path / "arch.json"
        model_path.write_text(json.dumps(model_to_json_dict(model), indent=2))
        arch_path.write_text(json.dumps(arch_to_json_dict(arch), indent=2))
        return str(model_path), str(arch_path)

    return _write


def pytest_terminal_summary(terminalreporter):
    """One visible pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in nodeid:
                name = nodeid.split("::", 1)[1]
                lines.append((name, outcome.upper()))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(lines):
        terminalreporter.write_line(f"{outcome:6s} {name}")
