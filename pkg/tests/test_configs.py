"""Config parsing, validation, and serialization."""

import json

import pytest

from tsoplan.configs import (
    ArchConfig,
    ConfigError,
    ConvLayerSpec,
    ModelSpec,
    arch_to_json_dict,
    model_to_json_dict,
    nmp_profile,
    parse_arch,
    parse_model,
)

VALID_LAYER = {
    "name": "c1",
    "n": 3,
    "h": 32,
    "l": 30,
    "m": 16,
    "k": 3,
    "s": 1,
    "p": 1,
    "r": 32,
    "c": 30,
    "elem_bytes": 2,
}


def valid_model_doc():
    return {"name": "m", "layers": [dict(VALID_LAYER)]}


def test_model_round_trip():
    model = parse_model(json.dumps(valid_model_doc()))
    again = parse_model(json.dumps(model_to_json_dict(model)))
    assert again == model
    assert again.layers[0].name == "c1"


def test_arch_round_trip_preserves_inexact_ns():
    doc = arch_to_json_dict(nmp_profile())
    doc["cas_ns"] = 13.75
    doc["sw_overhead_ns"] = 0.3
    arch = parse_arch(json.dumps(doc))
    again = parse_arch(json.dumps(arch_to_json_dict(arch)))
    assert again == arch
    assert again.cas_ns == 13.75
    assert again.sw_overhead_ns == 0.3


@pytest.mark.parametrize("missing", sorted(VALID_LAYER))
def test_missing_layer_field_rejected(missing):
    doc = valid_model_doc()
    del doc["layers"][0][missing]
    with pytest.raises(ConfigError, match=missing):
        parse_model(json.dumps(doc))


def test_unknown_layer_field_rejected():
    doc = valid_model_doc()
    doc["layers"][0]["stride_y"] = 1
    with pytest.raises(ConfigError, match="stride_y"):
        parse_model(json.dumps(doc))


def test_duplicate_layer_names_rejected():
    doc = valid_model_doc()
    doc["layers"].append(dict(VALID_LAYER))
    with pytest.raises(ConfigError, match="duplicate"):
        parse_model(json.dumps(doc))


def test_output_geometry_must_match():
    doc = valid_model_doc()
    doc["layers"][0]["r"] = 31
    with pytest.raises(ConfigError, match="geometry gives"):
        parse_model(json.dumps(doc))


def test_kernel_larger_than_padded_input_rejected():
    doc = valid_model_doc()
    doc["layers"][0].update(h=2, p=0, k=3, r=1)
    with pytest.raises(ConfigError):
        parse_model(json.dumps(doc))


def test_elem_bytes_limited_to_supported_widths():
    doc = valid_model_doc()
    doc["layers"][0]["elem_bytes"] = 4
    with pytest.raises(ConfigError, match="elem_bytes"):
        parse_model(json.dumps(doc))


def test_bool_not_accepted_as_int():
    doc = valid_model_doc()
    doc["layers"][0]["n"] = True
    with pytest.raises(ConfigError):
        parse_model(json.dumps(doc))


def test_json_syntax_error_reports_position():
    with pytest.raises(ConfigError, match="line"):
        parse_model('{"name": "m", }')


def test_burst_bytes_power_of_two():
    doc = arch_to_json_dict(nmp_profile())
    doc["burst_bytes"] = 96
    with pytest.raises(ConfigError, match="power of two"):
        parse_arch(json.dumps(doc))


def test_unknown_arch_field_rejected():
    doc = arch_to_json_dict(nmp_profile())
    doc["dram_channels"] = 2
    with pytest.raises(ConfigError, match="dram_channels"):
        parse_arch(json.dumps(doc))


def test_sw_overhead_optional():
    doc = arch_to_json_dict(nmp_profile())
    del doc["sw_overhead_ns"]
    assert parse_arch(json.dumps(doc)).sw_overhead_ns == 0.0


def test_nmp_profile_values():
    arch = nmp_profile()
    assert (arch.n_tle, arch.n_tlt) == (4, 8)
    assert (arch.mb0_bytes, arch.mb1_bytes, arch.mb2_bytes) == (8192, 8192, 8192)
    assert arch.datapath_bits == 128
    assert arch.freq_hz == 1e9
    assert arch.cas_ns == 14.0
    assert arch.bw_bytes_per_s == 17e9
    assert arch.burst_bytes == 128
    assert arch.cas_s == 14.0 * 1e-9


def test_macs_per_cycle_by_element_width():
    arch = nmp_profile()
    assert arch.macs_per_cycle(2) == 8
    assert arch.macs_per_cycle(1) == 16


def test_layer_byte_and_mac_properties():
    conv = ConvLayerSpec(
        name="x", n=4, h=10, l=12, m=6, k=3, s=1, p=0, r=8, c=10, elem_bytes=2
    )
    assert conv.ifm_bytes == 4 * 10 * 12 * 2
    assert conv.ks_bytes == 6 * 4 * 3 * 3 * 2
    assert conv.ofm_bytes == 6 * 8 * 10 * 2
    assert conv.macs == 6 * 4 * 8 * 10 * 9


def test_digest_tracks_content_not_key_order():
    base = arch_to_json_dict(nmp_profile())
    reordered = json.dumps(dict(reversed(list(base.items()))))
    assert parse_arch(reordered).digest() == nmp_profile().digest()
    changed = dict(base)
    changed["burst_bytes"] = 64
    assert parse_arch(json.dumps(changed)).digest() != nmp_profile().digest()


def test_model_spec_is_immutable():
    model = parse_model(json.dumps(valid_model_doc()))
    assert isinstance(model, ModelSpec)
    with pytest.raises(AttributeError):
        model.layers[0].n = 5
