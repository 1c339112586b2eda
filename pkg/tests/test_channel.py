"""Channel model: airtime against an independent calculator, measured
rows against the published tables, sampling statistics, collisions."""

import math
import random

import pytest

from loraconn.channel import (
    BUILTIN_LINK_ROWS,
    ChannelError,
    LinkProfile,
    RadioParams,
    airtime,
    csma_delay,
    explicit_profile,
    lookup_profile,
    resolve_collisions,
    sample_delivery,
)


def reference_airtime(sf, bw_hz, cr_denom, preamble, payload_len, crc=True, explicit_header=True):
    """Independent time-on-air computation, written directly from the
    transceiver datasheet symbol formula (kept free of the implementation)."""
    t_sym = (2 ** sf) / bw_hz
    t_preamble = (preamble + 4.25) * t_sym
    de = 1 if (sf >= 11 and bw_hz <= 125000) else 0
    ih = 0 if explicit_header else 1
    numer = 8 * payload_len - 4 * sf + 28 + 16 * (1 if crc else 0) - 20 * ih
    n_payload = 8 + max(0, math.ceil(numer / (4 * (sf - 2 * de))) * ((cr_denom - 4) + 4))
    return t_preamble + n_payload * t_sym


DEFAULT = RadioParams()


def test_airtime_matches_reference_grid():
    for sf in range(7, 13):
        for cr_denom in (5, 8):
            for payload in (4, 6, 12, 32, 128, 252):
                params = RadioParams(spreading_factor=sf, coding_denominator=cr_denom)
                expected = reference_airtime(sf, 125000, cr_denom, 8, payload)
                assert airtime(params, payload) == pytest.approx(expected, rel=1e-12)


def test_airtime_frozen_values_default_radio():
    # computed with reference_airtime before implementation: SF12, CR4/8,
    # 125 kHz, 8-symbol preamble, LDRO on
    assert airtime(DEFAULT, 4) == pytest.approx(0.925696)
    assert airtime(DEFAULT, 12) == pytest.approx(1.449984)
    assert airtime(DEFAULT, 252) == pytest.approx(14.032896)
    assert math.isfinite(airtime(DEFAULT, 252))


def test_airtime_monotone_in_payload():
    assert airtime(DEFAULT, 10) <= airtime(DEFAULT, 20)
    previous = 0.0
    for payload in range(0, 253, 4):
        value = airtime(DEFAULT, payload)
        assert value >= previous > -1
        previous = value


def test_airtime_increases_with_doubled_sf():
    for payload in (4, 64, 252):
        low = airtime(RadioParams(spreading_factor=6, coding_denominator=8), payload)
        high = airtime(RadioParams(spreading_factor=12, coding_denominator=8), payload)
        assert high > low


def test_airtime_payload_cap():
    with pytest.raises(ChannelError, match="payload too long"):
        airtime(DEFAULT, 253)


def test_radio_params_validation():
    with pytest.raises(ChannelError):
        RadioParams(spreading_factor=5)
    with pytest.raises(ChannelError):
        RadioParams(coding_denominator=9)


# -- measured rows -----------------------------------------------------------

TABLE_GW_GROUND = {  # grassland, gateway on the ground
    (200.0, 0.0): 0.005, (200.0, 1.5): 0.005,
    (300.0, 0.0): 0.0, (300.0, 1.5): 0.01,
    (500.0, 0.0): 0.005, (500.0, 1.5): 0.0,
    (800.0, 0.0): None, (800.0, 1.5): None,
}

TABLE_GW_15 = {  # grassland, gateway at 1.5 m
    (200.0, 0.0): 0.0, (200.0, 1.5): 0.0,
    (300.0, 0.0): 0.01, (300.0, 1.5): 0.0,
    (500.0, 0.0): 0.0, (500.0, 1.5): 0.0,
    (800.0, 0.0): 0.05, (800.0, 1.5): 0.03,
}


def test_grassland_rows_match_published_tables():
    for (distance, sn_h), loss in TABLE_GW_GROUND.items():
        profile = lookup_profile("grassland", distance, sn_h, 0.0, True)
        assert profile.loss_probability == loss
        assert profile.reachable == (loss is not None)
    for (distance, sn_h), loss in TABLE_GW_15.items():
        assert lookup_profile("grassland", distance, sn_h, 1.5, True).loss_probability == loss


def test_soybean_parking_and_relay_rows():
    assert lookup_profile("soybean", 400, 0.0, 2.0).loss_probability == 0.11
    assert lookup_profile("soybean", 400, 1.0, 2.0).loss_probability == 0.015
    assert lookup_profile("parking_lot", 200, 1.5, 1.5, los=True).loss_probability == 0.0
    assert lookup_profile("parking_lot", 200, 1.5, 1.5, los=False).loss_probability == 0.005
    assert lookup_profile("grassland", 650, 0.0, 1.5, los=False).loss_probability == 0.025
    assert lookup_profile("grassland", 650, 1.0, 1.5, los=False).loss_probability == 0.0


def test_no_interpolation_between_rows():
    with pytest.raises(ChannelError, match="no measured row"):
        lookup_profile("grassland", 400, 0.0, 1.5)


def test_row_count_is_exactly_the_published_set():
    # 8 grassland/GW-ground + 8 grassland/GW-1.5m + 2 soybean
    # + 2 relay reference + 2 parking lot
    assert len(BUILTIN_LINK_ROWS) == 22


# -- delivery sampling -------------------------------------------------------

def test_zero_loss_always_delivers():
    rng = random.Random(1)
    profile = explicit_profile(0.0)
    assert all(sample_delivery(profile, rng) for _ in range(1000))


def test_unreachable_never_delivers():
    rng = random.Random(1)
    profile = explicit_profile(None)
    assert not any(sample_delivery(profile, rng) for _ in range(1000))


def test_table_iv_800m_row_samples_at_5_percent():
    profile = lookup_profile("grassland", 800, 0.0, 1.5)
    rng = random.Random(2024)
    n = 10_000
    losses = sum(1 for _ in range(n) if not sample_delivery(profile, rng))
    assert abs(losses / n - 0.05) <= 0.01  # binomial 3 sigma is ~0.0065


def test_sampling_is_bernoulli_within_3_sigma():
    for p in (0.05, 0.11, 0.5):
        profile = explicit_profile(p)
        rng = random.Random(7)
        n = 20_000
        losses = sum(1 for _ in range(n) if not sample_delivery(profile, rng))
        bound = 3 * math.sqrt(p * (1 - p) / n)
        assert abs(losses / n - p) <= bound


def test_loss_probability_range_enforced():
    with pytest.raises(ChannelError):
        LinkProfile("grassland", 1, 0, 0, True, 1.5)


# -- collisions --------------------------------------------------------------

def brute_force_collisions(transmissions):
    lost = set()
    for i, a in enumerate(transmissions):
        for b in transmissions[i + 1:]:
            if a[3] != b[3]:
                continue
            if max(a[1], b[1]) < min(a[1] + a[2], b[1] + b[2]):
                lost.add(a)
                lost.add(b)
    return lost


def test_overlapping_pair_both_lost():
    a = ("f1", 0.0, 1.0, "gw")
    b = ("f2", 0.9, 1.0, "gw")
    assert resolve_collisions([a, b]) == {a, b}


def test_separated_pair_survives():
    a = ("f1", 0.0, 1.0, "gw")
    b = ("f2", 1.5, 1.0, "gw")
    assert resolve_collisions([a, b]) == set()


def test_three_way_overlap_all_lost():
    txs = [("f1", 0.0, 2.0, "gw"), ("f2", 0.5, 2.0, "gw"), ("f3", 1.0, 2.0, "gw")]
    assert resolve_collisions(txs) == brute_force_collisions(txs) == set(txs)


def test_different_receivers_do_not_collide():
    a = ("f1", 0.0, 1.0, "gw")
    b = ("f2", 0.5, 1.0, "relay")
    assert resolve_collisions([a, b]) == set()


def test_collision_resolution_matches_brute_force_randomized():
    rng = random.Random(99)
    for _ in range(200):
        txs = [
            ("f{}".format(i), round(rng.uniform(0, 20), 3), round(rng.uniform(0.1, 3), 3),
             rng.choice(["gw", "rn"]))
            for i in range(rng.randint(2, 12))
        ]
        assert resolve_collisions(txs) == brute_force_collisions(txs)


def test_collision_resolution_permutation_invariant():
    rng = random.Random(5)
    txs = [("f{}".format(i), rng.uniform(0, 5), rng.uniform(0.1, 2), "gw") for i in range(8)]
    expected = resolve_collisions(txs)
    for _ in range(10):
        rng.shuffle(txs)
        assert resolve_collisions(list(txs)) == expected


def test_touching_intervals_do_not_overlap():
    a = ("f1", 0.0, 1.0, "gw")
    b = ("f2", 1.0, 1.0, "gw")
    assert resolve_collisions([a, b]) == set()


# -- listen before talk ------------------------------------------------------

def test_csma_delay_range_and_mean():
    rng = random.Random(11)
    samples = [csma_delay(rng) for _ in range(10_000)]
    assert all(0.0 <= s < 1.0 for s in samples)
    mean = sum(samples) / len(samples)
    assert abs(mean - 0.5) <= 0.025  # 5% of the 0.5 s uniform mean
