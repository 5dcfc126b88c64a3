import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ofdmflow import rng
from ofdmflow.channel_model import (
    DomainError,
    RateTable,
    Scenario,
    attenuation,
    ber_approx,
    generate_trace,
    path_loss,
    place_terminals,
    rate_from_snr,
    rate_table_from_ber,
    snr,
)


@pytest.fixture
def scenario():
    return Scenario(
        n_subcarriers=6, n_terminals=3, n_phases=5, phase_duration=1e-3, total_power=1.0,
        noise_power=1e-8, cell_radius=500.0, min_distance=10.0, pathloss_exponent=3.5,
        shadowing_sigma=6.0, symbols_per_phase=12, target_ber=1e-3, seed=42,
    )


def test_scenario_rejects_bad_values(scenario):
    with pytest.raises(ValueError, match="min_distance"):
        dataclasses.replace(scenario, min_distance=600.0)
    with pytest.raises(ValueError, match="n_terminals"):
        dataclasses.replace(scenario, n_terminals=0)


def test_placement_clamps_and_reaches_edge(scenario):
    d = place_terminals(scenario, u=[0.0, 1.0 - 1e-15, 0.25])
    assert d[0] == scenario.min_distance
    assert d[1] == pytest.approx(scenario.cell_radius)
    assert d[2] == pytest.approx(250.0)


def test_placement_is_deterministic(scenario):
    s42 = dataclasses.replace(scenario, seed=42)
    np.testing.assert_array_equal(place_terminals(s42), place_terminals(s42))
    assert not np.array_equal(place_terminals(s42), place_terminals(dataclasses.replace(s42, seed=43)))


def test_unit_attenuation_at_reference_distance():
    assert attenuation(10.0, 0.0, 1.0, 10.0, 3.7) == 1.0


def test_doubling_distance_quarters_path_loss():
    assert path_loss(40.0, 10.0, 2) == pytest.approx(path_loss(20.0, 10.0, 2) / 4)


def test_trace_shape_positivity_and_factorization(scenario):
    tr = generate_trace(scenario)
    assert tr.attenuation.shape == (6, 3, 5)
    assert np.all(np.isfinite(tr.attenuation)) and np.all(tr.attenuation > 0)
    # dividing out the fading leaves one constant per terminal
    n, j, t = np.meshgrid(np.arange(6), np.arange(3), np.arange(5), indexing="ij")
    g = rng.exponential(scenario.seed, rng.FADING, n, j, t)
    static = tr.attenuation / g
    np.testing.assert_allclose(static, np.broadcast_to(static[:1, :, :1], static.shape), rtol=1e-12)


def test_trace_independent_of_workers(scenario):
    a = generate_trace(scenario, workers=1).attenuation
    for w in (2, 3, 8):
        assert generate_trace(scenario, workers=w).attenuation.tobytes() == a.tobytes()


def test_trace_prefix_stable_when_extending_phases(scenario):
    short = generate_trace(scenario).attenuation
    longer = generate_trace(dataclasses.replace(scenario, n_phases=9)).attenuation
    assert longer[:, :, :5].tobytes() == short.tobytes()


def test_fading_sample_mean():
    g = rng.exponential(7, rng.FADING, np.arange(100_000), 0, 0)
    assert 0.99 <= g.mean() <= 1.01


def test_shadowing_sample_mean_and_spread():
    z = 8.0 * rng.standard_normal(11, rng.SHADOWING, np.arange(100_000))
    assert abs(z.mean()) <= 0.1
    assert z.std() == pytest.approx(8.0, rel=0.02)


def test_uniforms_in_unit_interval():
    u = rng.uniform(0, 0, np.arange(50_000))
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01


@pytest.mark.parametrize("args, expected", [((1, 1, 1), 1.0), ((2, 1, 1), 2.0), ((0.1, 0.004, 1e-4), 4.0)])
def test_snr_formula(args, expected):
    assert snr(*args) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (1, 1, 0)])
def test_snr_domain(args):
    with pytest.raises(DomainError):
        snr(*args)


def test_snr_slope_one_in_db():
    a = np.array([1e-6, 3e-5, 0.2])
    p = np.array([1e-3, 1e-2, 1.0])
    db = 10 * np.log10(np.array([snr(pi, a, 1e-9) for pi in p]))
    slopes = np.diff(db, axis=0) / np.diff(10 * np.log10(p))[:, None]
    np.testing.assert_allclose(slopes, 1.0, atol=1e-12)


def test_threshold_closed_form_and_roundtrip():
    table = rate_table_from_ber(1e-3)
    theta_qpsk = table.thresholds[table.bits.index(2)]
    assert theta_qpsk == pytest.approx(3 * math.log(200) / 1.6, rel=1e-15)
    assert theta_qpsk == pytest.approx(9.934, abs=5e-4)
    for th, b in zip(table.thresholds, table.bits):
        assert ber_approx(th, b) == pytest.approx(1e-3, rel=1e-12)


@pytest.mark.parametrize("ber", [0.2, 0.3, 0.0, -1e-3])
def test_ber_out_of_range(ber):
    with pytest.raises(DomainError):
        rate_table_from_ber(ber)


@given(st.floats(min_value=1e-9, max_value=0.199))
def test_thresholds_increase_with_bits(ber):
    th = rate_table_from_ber(ber).thresholds
    assert all(a < b for a, b in zip(th, th[1:]))


def test_rate_table_invariants():
    with pytest.raises(DomainError):
        RateTable((2.0, 1.0), (1, 2))
    with pytest.raises(DomainError):
        RateTable((1.0, 2.0), (2, 2))
    with pytest.raises(DomainError):
        RateTable((0.0, 2.0), (1, 2))


def test_rate_step_function_boundaries():
    table = rate_table_from_ber(1e-3)
    S = 12
    assert rate_from_snr(0.0, table, S) == 0
    assert rate_from_snr(table.thresholds[0], table, S) == S * table.bits[0]
    assert rate_from_snr(np.nextafter(table.thresholds[0], 0), table, S) == 0
    assert rate_from_snr(1e12, table, S) == S * table.max_bits


@settings(max_examples=50)
@given(st.lists(st.floats(min_value=0, max_value=1e4), min_size=2, max_size=20))
def test_rate_monotone(snrs):
    table = rate_table_from_ber(1e-4)
    s = np.sort(np.array(snrs))
    r = rate_from_snr(s, table, 7)
    assert np.all(np.diff(r) >= 0)
