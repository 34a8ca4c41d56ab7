"""Rate model: per-RB bits, RB demand ceilings, Rayleigh gain sampling."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from goalrba.channel import (
    DEFAULT_INTERVAL_RB_CAPACITY,
    ChannelRealization,
    EdRadio,
    RbParams,
    UnreachableEdError,
    cumulative_bits,
    rb_bits,
    rb_demand,
    sample_gains,
)


def test_interval_capacity_is_15_rbs_times_2000_slots():
    assert DEFAULT_INTERVAL_RB_CAPACITY == 30000


def test_rb_bits_hand_values():
    # 0.5 ms * 180 kHz * log2(1 + snr): 90 bits at snr 1, 180 at snr 3.
    ed = EdRadio(ed_id=0, p=1.0)
    rb = RbParams()
    assert rb_bits(1.0, ed, rb) == pytest.approx(90.0, rel=1e-12)
    assert rb_bits(3.0, ed, rb) == pytest.approx(180.0, rel=1e-12)


def test_rb_bits_zero_gain_and_negative_gain():
    ed = EdRadio(ed_id=0)
    rb = RbParams()
    assert rb_bits(0.0, ed, rb) == 0.0
    with pytest.raises(ValueError):
        rb_bits(-0.1, ed, rb)


def test_rb_bits_scales_with_power():
    # doubling tx power at fixed gain raises the log argument, not linearly
    rb = RbParams()
    low = rb_bits(1.0, EdRadio(ed_id=0, p=1.0), rb)
    high = rb_bits(1.0, EdRadio(ed_id=0, p=3.0), rb)
    assert high == pytest.approx(2 * low, rel=1e-12)


def test_cumulative_bits():
    assert cumulative_bits(6, 90.0) == 540.0
    assert cumulative_bits(0, 90.0) == 0.0
    with pytest.raises(ValueError):
        cumulative_bits(-1, 90.0)


def test_rb_demand_hand_value():
    # 512 bits at 90 bits per RB: ceil(5.688) = 6
    ed = EdRadio(ed_id=0, r_min=512.0)
    assert rb_demand(ed, 90.0) == 6


def test_rb_demand_zero_payload_needs_nothing():
    assert rb_demand(EdRadio(ed_id=0, r_min=0.0), 90.0) == 0
    # even an unreachable ED with nothing to send costs nothing
    assert rb_demand(EdRadio(ed_id=0, r_min=0.0), 0.0) == 0


def test_rb_demand_unreachable():
    with pytest.raises(UnreachableEdError):
        rb_demand(EdRadio(ed_id=3, r_min=512.0), 0.0)


@given(
    r_min=st.floats(min_value=1.0, max_value=1e7),
    per_rb=st.floats(min_value=1e-3, max_value=1e5),
)
def test_rb_demand_is_the_minimal_sufficient_count(r_min, per_rb):
    w = rb_demand(EdRadio(ed_id=0, r_min=r_min), per_rb)
    assert w * per_rb >= r_min * (1 - 1e-12)
    if w > 0:
        assert (w - 1) * per_rb < r_min


def test_sample_gains_deterministic_and_nonnegative():
    a = sample_gains(42, 100)
    b = sample_gains(42, 100)
    np.testing.assert_array_equal(a, b)
    assert np.all(a >= 0)
    assert not np.array_equal(a, sample_gains(43, 100))


def test_sample_gains_mean_is_two():
    # squared Rayleigh(scale 1) amplitude is exponential with mean 2
    g = sample_gains(0, 200000)
    assert g.mean() == pytest.approx(2.0, rel=0.02)


def test_sample_gains_accepts_generator():
    rng = np.random.default_rng(7)
    first = sample_gains(rng, 10)
    second = sample_gains(rng, 10)
    # a shared generator advances, so consecutive draws differ
    assert not np.array_equal(first, second)


def test_param_validation():
    with pytest.raises(ValueError):
        RbParams(t=0.0)
    with pytest.raises(ValueError):
        RbParams(B=-1.0)
    with pytest.raises(ValueError):
        RbParams(noise_power=0.0)
    with pytest.raises(ValueError):
        EdRadio(ed_id=0, p=0.0)
    with pytest.raises(ValueError):
        EdRadio(ed_id=0, r_min=-1.0)
    with pytest.raises(ValueError):
        ChannelRealization(gains=np.array([-0.5]))
    with pytest.raises(ValueError):
        ChannelRealization(gains=np.array([1.0]), interval_rb_capacity=0)
