import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slowlight.dispersion import MediumState, ResonanceDoublet, group_delay, transmission
from slowlight.errors import DegenerateInputError, GridError, NarrowbandWarning
from slowlight.vapor import VaporModel, calibrate_scale, medium_at
from slowlight.wavepacket import (
    ArrivalHistogram,
    TemporalEnvelope,
    broadening_ratio,
    envelope_to_histogram,
    exponential_envelope,
    extract_delay,
    gaussian_envelope,
    histogram_to_envelope,
    propagate,
    pumped_decay_envelope,
    width_metric,
)

BIN = 512e-12


@pytest.fixture(scope="module")
def rb():
    return ResonanceDoublet.default()


@pytest.fixture(scope="module")
def scale(rb):
    return calibrate_scale([(296.0, 0.0), (395.0, 13.5e-9)], rb, VaporModel.default()).scale


@pytest.fixture(scope="module")
def hot(rb, scale):
    return medium_at(395.0, rb, VaporModel.default(), scale=scale)


@pytest.fixture(scope="module")
def room(rb, scale):
    return medium_at(296.0, rb, VaporModel.default(), scale=scale)


def photon(dt=BIN, onset=20e-9, duration=400e-9):
    return pumped_decay_envelope(8e-9, 20e-9, dt, duration, onset=onset, edge=1e-9)


def test_vacuum_is_identity(rb):
    env = photon()
    out = propagate(env, MediumState(296.0, 0.0, 0.0), rb)
    n = env.samples.size
    np.testing.assert_allclose(out.samples[:n], env.samples, rtol=1e-10,
                               atol=1e-12 * env.samples.max())
    assert np.all(out.samples[n:] < 1e-12 * env.samples.max())


def test_exponential_centroid_delay(rb, hot):
    env = exponential_envelope(8e-9, BIN, 400e-9, onset=20e-9, edge=0.5e-9)
    out = propagate(env, hot, rb)
    assert extract_delay(env, out, "centroid") == pytest.approx(group_delay(hot, rb), rel=0.02)


def _undelay(env, shift):
    return np.interp(env.times, env.times - shift, env.samples, left=0.0, right=0.0)


def test_room_and_hot_shapes_overlap(rb, hot, room):
    env = photon().normalize()
    a, b = propagate(env, room, rb), propagate(env, hot, rb)
    shift = extract_delay(a, b)
    b_back = _undelay(b, shift)
    assert np.max(np.abs(b_back - a.samples)) < 0.03 * a.samples.max()


def test_xcorr_identical_is_zero():
    env = photon()
    assert abs(extract_delay(env, env)) < env.dt / 100


def test_constructed_shift_of_13_bins():
    env = photon()
    shifted = TemporalEnvelope(np.roll(np.pad(env.samples, (0, 32)), 13), BIN)
    padded = TemporalEnvelope(np.pad(env.samples, (0, 32)), BIN)
    for method in ("xcorr", "centroid", "peak"):
        assert extract_delay(padded, shifted, method) == pytest.approx(6.656e-9, abs=0.1e-9)


def test_start_offset_counts_as_delay():
    env = photon()
    assert extract_delay(env, env.shifted(3.3e-9)) == pytest.approx(3.3e-9, abs=BIN / 100)


def test_propagated_delay_matches_analytic(rb, hot):
    env = photon()
    out = propagate(env, hot, rb)
    gd = group_delay(hot, rb)
    assert abs(extract_delay(env, out) - gd) <= max(0.02 * gd, BIN / 2)


def test_delay_on_different_sampling(rb):
    a = photon(dt=BIN)
    b = photon(dt=BIN / 4, onset=25e-9)
    assert extract_delay(a, b, "centroid") == pytest.approx(5e-9, abs=0.1e-9)


def test_degenerate_inputs():
    z = TemporalEnvelope(np.zeros(16), BIN)
    env = photon()
    for method in ("xcorr", "centroid", "peak"):
        with pytest.raises(DegenerateInputError):
            extract_delay(z, env, method)
    with pytest.raises(DegenerateInputError):
        width_metric(z)
    with pytest.raises(DegenerateInputError):
        width_metric(TemporalEnvelope(np.ones(10), BIN))


def test_background_subtraction_helps_on_floor(rb, hot):
    env = photon()
    out = propagate(env, hot, rb)
    n = out.samples.size
    floor_a = TemporalEnvelope(np.pad(env.samples, (0, n - env.samples.size)) + 0.3, BIN)
    floor_b = TemporalEnvelope(out.samples + 0.3, BIN)
    plain = extract_delay(floor_a, floor_b, "centroid")
    cleaned = extract_delay(floor_a, floor_b, "centroid", background=True)
    gd = group_delay(hot, rb)
    assert abs(cleaned - gd) < abs(plain - gd)
    assert cleaned == pytest.approx(gd, rel=0.02)


def test_rectangle_width():
    dt = 0.1e-9
    s = np.zeros(400)
    s[100:200] = 1.0
    assert width_metric(TemporalEnvelope(s, dt)) == pytest.approx(10e-9, abs=dt)


def test_narrowband_photon_not_broadened(rb, hot):
    env = photon()
    assert broadening_ratio(env, propagate(env, hot, rb)) == pytest.approx(1.0, abs=0.01)


def test_broadband_pulse_is_broadened(rb, hot):
    # rms spectral width of the intensity ~ omega_s / 5
    sigma_t = 1 / (rb.omega_s / 5) * np.sqrt(2)
    dt = sigma_t / 8
    env = gaussian_envelope(sigma_t, dt, 20e-9, 3e-9)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        out = propagate(env, hot, rb)
    assert any(issubclass(x.category, NarrowbandWarning) for x in w)
    assert broadening_ratio(env, out) > 1.01


def test_no_warning_for_narrowband(rb, hot):
    with warnings.catch_warnings():
        warnings.simplefilter("error", NarrowbandWarning)
        propagate(photon(), hot, rb)


def test_grid_error_when_padding_too_small(rb, hot):
    env = photon()
    with pytest.raises(GridError):
        propagate(env, hot, rb, n_fft=env.samples.size + 4)


def test_default_grid_is_padded(rb, hot):
    env = photon()
    out = propagate(env, hot, rb)
    n = out.samples.size
    assert n & (n - 1) == 0
    assert n >= 4 * env.samples.size
    assert (n - env.samples.size) * env.dt >= 5 * group_delay(hot, rb)


def test_area_follows_carrier_absorption(rb, hot):
    # slower than the homogeneous linewidth
    env = gaussian_envelope(100e-9, 2e-9, 4e-6, 1e-6)
    out = propagate(env, hot, rb)
    assert out.area / env.area == pytest.approx(float(transmission(0.0, hot, rb)), rel=0.01)


def test_normalized_in_normalized_out(rb, hot):
    out = propagate(photon().normalize(), hot, rb)
    assert out.normalized and out.area == pytest.approx(1.0)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 40))
def test_time_shift_equivariance(bins):
    rb = ResonanceDoublet.default()
    med = MediumState(380.0, 1e18, 5e6)
    a = photon(onset=20e-9)
    b = photon(onset=20e-9 + bins * BIN)
    assert extract_delay(propagate(a, med, rb), propagate(b, med, rb)) == pytest.approx(
        bins * BIN, abs=BIN / 100)


def test_two_half_cells_equal_one_cell(rb, hot):
    env = photon()
    half = MediumState(hot.temperature, hot.number_density, hot.strength, hot.length / 2)
    once = propagate(env, hot, rb)
    twice = propagate(propagate(env, half, rb), half, rb)
    d1 = extract_delay(env, once)
    d2 = extract_delay(env, twice)
    assert d2 == pytest.approx(d1, rel=0.005)
    n = once.samples.size
    assert np.max(np.abs(twice.samples[:n] - once.samples)) < 0.01 * once.samples.max()


@pytest.mark.parametrize("k", [0.3, 2.0, 17.0])
def test_linearity_in_amplitude(rb, hot, k):
    env = photon()
    scaled = TemporalEnvelope(k * env.samples, env.dt)
    np.testing.assert_allclose(propagate(scaled, hot, rb).samples,
                               k * propagate(env, hot, rb).samples,
                               rtol=1e-9, atol=1e-12 * k)


def test_histogram_round_trip():
    env = photon(duration=200e-9)
    h = envelope_to_histogram(env, BIN, 10**7, seed=7)
    back = histogram_to_envelope(h)
    ref = env.normalize().samples
    rms = np.sqrt(np.mean((back.samples - ref) ** 2)) / np.sqrt(np.mean(ref**2))
    assert rms < 0.01
    np.testing.assert_allclose(back.times, env.times)


def test_histogram_sampling_is_seeded():
    env = photon()
    a = envelope_to_histogram(env, BIN, 1000, seed=3)
    b = envelope_to_histogram(env, BIN, 1000, seed=3)
    assert np.array_equal(a.counts, b.counts) and a.total == 1000


def test_rebinning_preserves_shape():
    env = photon(dt=BIN / 4)
    h = envelope_to_histogram(env, BIN, 10**6, seed=1)
    assert h.bin_width == BIN
    assert h.total == 10**6
    back = histogram_to_envelope(h)
    assert extract_delay(env, back, "centroid") == pytest.approx(0.0, abs=0.1e-9)


def test_single_bin_histogram():
    counts = np.zeros(20, int)
    counts[7] = 5
    env = histogram_to_envelope(ArrivalHistogram(counts, BIN, 1e-9))
    assert env.times[np.argmax(env.samples)] == pytest.approx(1e-9 + 7.5 * BIN)
    assert np.count_nonzero(env.samples) == 1
    assert env.area == pytest.approx(1.0)


def test_histogram_keeps_512ps_bins():
    h = envelope_to_histogram(photon(), BIN, 5000, seed=0)
    assert h.bin_width == 512e-12
    assert histogram_to_envelope(h).dt == 512e-12


def test_empty_histogram_rejected():
    with pytest.raises(DegenerateInputError):
        histogram_to_envelope(ArrivalHistogram(np.zeros(5, int)))
    with pytest.raises(ValueError):
        envelope_to_histogram(photon(), BIN, 0)


def test_envelope_validation():
    with pytest.raises(ValueError):
        TemporalEnvelope(np.array([1.0, -1.0]), BIN)
    with pytest.raises(ValueError):
        TemporalEnvelope(np.ones(3), 0.0)
    with pytest.raises(ValueError):
        ArrivalHistogram(np.ones(3), -1.0)
