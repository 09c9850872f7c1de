"""Closed-form synthetic model behavior and config loading."""

from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from archprobe.errors import ClaimsParseError
from archprobe.kvtext import parse_kv
from archprobe.synthmodel import (
    SyntheticHierarchy,
    default_claims_path,
    default_model,
    default_model_path,
    load_model,
    synth_bandwidth,
    synth_chain_cycles,
    synth_chase_latency,
    synth_math_ns_per_elem,
    synth_remote_cycles,
    synth_throughput_gflops,
)

MODEL = default_model()


def test_default_model_levels():
    assert MODEL.levels == ((32 * 1024, 3.0), (512 * 1024, 24.0))
    assert MODEL.freq_ghz == 1.05
    assert MODEL.last_level_capacity == 512 * 1024


def test_level_validation():
    with pytest.raises(ValueError):
        SyntheticHierarchy(levels=((1024, 5.0), (512, 10.0)))  # capacity order
    with pytest.raises(ValueError):
        SyntheticHierarchy(levels=((512, 10.0), (1024, 5.0)))  # latency order
    with pytest.raises(ValueError):
        SyntheticHierarchy(levels=((512, 400.0),))  # dram not larger


def test_chase_fits_l1_all_strides():
    for stride in (8, 16, 64, 512):
        assert synth_chase_latency(MODEL, 16 * 1024, stride) == 3.0 / 1.05


def test_chase_half_line_stride_in_l2_band():
    # lower = L1 (3), upper = L2 (24), miss fraction 0.5
    expected = (3.0 + 0.5 * 21.0) / 1.05
    assert synth_chase_latency(MODEL, 256 * 1024, 32) == pytest.approx(expected)


def test_chase_dram_at_full_stride():
    assert synth_chase_latency(MODEL, 4 * 1024 * 1024, 64) == 302.0 / 1.05
    assert synth_chase_latency(MODEL, 4 * 1024 * 1024, 4096) == 302.0 / 1.05


def test_chase_argument_validation():
    with pytest.raises(ValueError):
        synth_chase_latency(MODEL, 0, 8)
    with pytest.raises(ValueError):
        synth_chase_latency(MODEL, 64, 64)


@given(
    st.sampled_from([2**k for k in range(10, 23)]),
    st.sampled_from([8 * 2**k for k in range(9)]),
)
def test_chase_monotone_in_size_and_stride(size, stride):
    if stride >= size:
        return
    lat = synth_chase_latency(MODEL, size, stride)
    if 2 * size > stride:
        assert synth_chase_latency(MODEL, 2 * size, stride) >= lat
    if 2 * stride < size:
        assert synth_chase_latency(MODEL, size, 2 * stride) >= lat
    # constant beyond the line size
    if stride >= MODEL.line_size_bytes and 2 * stride < size:
        assert synth_chase_latency(MODEL, size, 2 * stride) == lat


def test_bandwidth_single_thread_read():
    assert synth_bandwidth(MODEL, "read", 1) == 4.7


def test_bandwidth_saturates_at_read_peak():
    assert synth_bandwidth(MODEL, "read", 60) == 164.0
    assert synth_bandwidth(MODEL, "read", 240) == 164.0


def test_bandwidth_is_min_linear_then_flat():
    for n in range(1, 241):
        assert synth_bandwidth(MODEL, "read", n) == min(n * 4.7, 164.0)


def test_streaming_store_ratio():
    ws = synth_bandwidth(MODEL, "write_streaming", 240)
    w = synth_bandwidth(MODEL, "write", 240)
    assert ws / w == pytest.approx(1.7)


def test_shared_decays_to_floor():
    single = synth_bandwidth(MODEL, "read", 1, shared=True)
    assert single == 4.7
    many = synth_bandwidth(MODEL, "read", 240, shared=True)
    assert many == pytest.approx(4.7 / 3.0)
    values = [synth_bandwidth(MODEL, "read", n, shared=True) for n in range(1, 241)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_stanza_factor_increases_with_stanza_and_asymptotes():
    values = [
        synth_bandwidth(MODEL, "triad", 1, stanza_elems=s)
        for s in (16, 64, 256, 1024, 4096, 1 << 20)
    ]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(synth_bandwidth(MODEL, "triad", 1), rel=0.001)


def test_bandwidth_unknown_kind():
    with pytest.raises(ValueError):
        synth_bandwidth(MODEL, "teleport", 1)


def test_chain_cycles_and_pair_mode():
    assert synth_chain_cycles(MODEL, "fma") == 4.0
    assert synth_chain_cycles(MODEL, "custom", pair_mode=True) == 10.0
    with pytest.raises(ValueError):
        synth_chain_cycles(MODEL, "sqrt")


def test_throughput_formula():
    full = {c: 4 for c in range(60)}
    assert synth_throughput_gflops(MODEL, full, streams=1, mix="mad") == pytest.approx(
        1008.0
    )
    one = {c: 1 for c in range(60)}
    assert synth_throughput_gflops(MODEL, one, 1, "mad") == pytest.approx(252.0)
    assert synth_throughput_gflops(MODEL, one, 2, "mad") == pytest.approx(504.0)
    assert synth_throughput_gflops(MODEL, full, 1, "mul") == pytest.approx(504.0)


def test_remote_cycles():
    assert synth_remote_cycles(MODEL, owner_local=False, working_set_bytes=4096) == 250.0
    assert synth_remote_cycles(MODEL, owner_local=True, working_set_bytes=4096) == 3.0
    assert synth_remote_cycles(MODEL, owner_local=True, working_set_bytes=128 * 1024) == 24.0


def test_math_cost_factor():
    assert synth_math_ns_per_elem(MODEL, "double") == 5 * synth_math_ns_per_elem(
        MODEL, "single"
    )


def test_outputs_deterministic():
    a = [synth_bandwidth(MODEL, "read", n) for n in range(1, 50)]
    b = [synth_bandwidth(MODEL, "read", n) for n in range(1, 50)]
    assert a == b


def test_shipped_model_file_matches_defaults():
    assert load_model(default_model_path()) == default_model()


def test_shipped_claims_file_parses():
    from archprobe.kvtext import parse_kv_file

    entries = parse_kv_file(default_claims_path())
    assert entries["dram_latency"].value is None
    assert entries["peak_gflops"].value == 1008.0


def test_load_model_overrides(tmp_path):
    path = tmp_path / "m.model"
    path.write_text(
        "l1_capacity = 16384 bytes\nl1_latency = 2 cycles\n"
        "freq = 2.0 ghz\nline_size = 128 bytes\n"
    )
    model = load_model(path)
    assert model.levels == ((16384, 2.0),)
    assert model.freq_ghz == 2.0
    assert model.line_size_bytes == 128


def test_load_model_requires_levels(tmp_path):
    path = tmp_path / "m.model"
    path.write_text("freq = 2.0 ghz\n")
    with pytest.raises(ClaimsParseError):
        load_model(path)


def test_kv_parse_errors_carry_line_numbers():
    with pytest.raises(ClaimsParseError) as e:
        parse_kv("a = 1\nbroken line\n")
    assert e.value.line_no == 2
    with pytest.raises(ClaimsParseError) as e:
        parse_kv("a = 1\na = 2\n")
    assert e.value.line_no == 2
    with pytest.raises(ClaimsParseError):
        parse_kv("a = not_a_number\n")


def test_kv_na_and_units():
    entries = parse_kv("x = n/a cycles\ny = 3.5 GB/s\n")
    assert entries["x"].value is None and entries["x"].unit == "cycles"
    assert entries["y"].value == 3.5 and entries["y"].unit == "GB/s"


def test_model_is_immutable():
    with pytest.raises(Exception):
        MODEL.freq_ghz = 2.0  # type: ignore[misc]


def test_custom_frequency_scales_chase():
    fast = replace(MODEL, freq_ghz=2.1)
    assert synth_chase_latency(fast, 16 * 1024, 64) == pytest.approx(
        synth_chase_latency(MODEL, 16 * 1024, 64) / 2.0
    )
