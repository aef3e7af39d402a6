"""
Frequency-domain propagation of photon temporal envelopes through the cell,
and the delay / width estimators used on arrival-time histograms.

Histograms carry intensity only; the field envelope is taken as the real
square root of the intensity (transform-limited photon).
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.constants import c
from scipy.ndimage import gaussian_filter1d

from .constants import BIN_WIDTH
from .dispersion import group_delay, susceptibility_term
from .errors import DegenerateInputError, DomainError, GridError, NarrowbandWarning


@dataclass
class TemporalEnvelope:
    samples: np.ndarray
    dt: float
    t_start: float = 0.0
    normalized: bool = False

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if np.any(self.samples < 0) or not np.all(np.isfinite(self.samples)):
            raise ValueError("intensity samples must be finite and non-negative")
        if self.normalized and not self.area > 0:
            raise ValueError("a normalised envelope needs positive area")

    @property
    def times(self):
        return self.t_start + self.dt * np.arange(self.samples.size)

    @property
    def area(self):
        return float(self.samples.sum() * self.dt)

    @property
    def duration(self):
        return self.samples.size * self.dt

    def normalize(self):
        a = self.area
        if not a > 0:
            raise DegenerateInputError("envelope has zero area")
        return TemporalEnvelope(self.samples / a, self.dt, self.t_start, True)

    def shifted(self, dt_shift):
        return TemporalEnvelope(self.samples, self.dt, self.t_start + dt_shift, self.normalized)


@dataclass
class ArrivalHistogram:
    counts: np.ndarray
    bin_width: float = BIN_WIDTH
    t0: float = 0.0  # left edge of bin 0

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        if not np.all(np.isfinite(self.counts)) or np.any(self.counts < 0):
            raise ValueError("counts must be finite and non-negative")
        self.counts = self.counts.astype(np.int64)

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def bin_centers(self):
        return self.t0 + self.bin_width * (np.arange(self.counts.size) + 0.5)

    @property
    def empty(self):
        return self.total == 0


def _soften(samples, edge, dt):
    # Gaussian switching edge of rms width ``edge``
    if edge <= 0:
        return samples
    return np.clip(gaussian_filter1d(samples, edge / dt, mode="constant"), 0, None)


def exponential_envelope(tau, dt, duration, t_start=0.0, onset=0.0, edge=0.0):
    """Intensity ``exp(-(t - onset)/tau)`` for ``t >= onset``, zero before.

    ``edge > 0`` blurs the switch-on with a Gaussian of that rms width; an
    abrupt onset puts slowly decaying tails into the spectrum that reach the
    absorption lines.
    """
    t = t_start + dt * np.arange(int(round(duration / dt)))
    s = np.where(t >= onset, np.exp(-np.clip(t - onset, 0, None) / tau), 0.0)
    return TemporalEnvelope(_soften(s, edge, dt), dt, t_start)


def gaussian_envelope(sigma, dt, duration, center, t_start=0.0):
    """Gaussian intensity with rms width ``sigma``."""
    t = t_start + dt * np.arange(int(round(duration / dt)))
    return TemporalEnvelope(np.exp(-0.5 * ((t - center) / sigma) ** 2), dt, t_start)


def pumped_decay_envelope(tau, pulse, dt, duration, t_start=0.0, onset=0.0, edge=0.0):
    """Emission profile of a uniform excitation window convolved with decay.

    Rises as ``1 - exp(-t/tau)`` during the excitation window of length
    ``pulse`` and decays exponentially afterwards.
    """
    t = t_start + dt * np.arange(int(round(duration / dt))) - onset
    rise = 1 - np.exp(-np.clip(t, 0, None) / tau)
    fall = np.expm1(pulse / tau) * np.exp(-np.clip(t, pulse, None) / tau)
    s = np.where(t < 0, 0.0, np.where(t < pulse, rise, fall))
    return TemporalEnvelope(_soften(s, edge, dt), dt, t_start)


def _next_pow2(n):
    return 1 << int(np.ceil(np.log2(max(int(n), 1))))


def spectral_fwhm(env, pad=4):
    """FWHM (Hz) of the field power spectrum; used for the narrowband check."""
    field = np.sqrt(env.samples)
    n = _next_pow2(pad * field.size)
    power = np.abs(np.fft.fftshift(np.fft.fft(field, n))) ** 2
    df = 1.0 / (n * env.dt)
    try:
        return width_metric(TemporalEnvelope(power, df))
    except DegenerateInputError:
        return float("inf")


def transfer_function(freqs_hz, medium, doublet, carrier_detuning=0.0):
    """Cell transfer function for numpy-FFT frequency bins.

    numpy's inverse FFT uses ``exp(+2 pi i f t)``; combined with the carrier
    ``exp(-i omega0 t)`` a bin at ``f`` carries optical frequency
    ``omega0 - 2 pi f``.  The vacuum phase ``exp(i omega0 L / c)`` is divided
    out, so only ``n - 1`` enters.
    """
    delta = carrier_detuning - 2 * np.pi * np.asarray(freqs_hz)
    chi = susceptibility_term(delta, doublet, medium.strength)
    return np.exp(1j * doublet.omega0 / c * medium.length * chi)


def propagate(env, medium, doublet, carrier_detuning=0.0, n_fft=None):
    """Pass an intensity envelope through the cell.

    The returned envelope starts at the same time as the input and extends
    over the zero-padded grid.  Normalised inputs give normalised outputs.
    """
    if env.samples.size == 0 or not env.area > 0:
        raise DegenerateInputError("cannot propagate an empty envelope")
    predicted = 0.0
    if medium.strength > 0:
        try:
            predicted = float(group_delay(medium, doublet, carrier_detuning))
        except DomainError:
            predicted = 0.0
    guard_needed = 5 * abs(predicted)
    n_min = max(4 * env.samples.size, env.samples.size + int(np.ceil(guard_needed / env.dt)))
    if n_fft is None:
        n_fft = _next_pow2(n_min)
    elif (n_fft - env.samples.size) * env.dt < abs(predicted):
        raise GridError(
            f"padding of {(n_fft - env.samples.size) * env.dt:.3g} s cannot hold "
            f"a predicted delay of {predicted:.3g} s")

    bw = spectral_fwhm(env)
    if 2 * np.pi * bw >= doublet.omega_s / 10:
        warnings.warn(
            f"envelope bandwidth {bw:.3g} Hz is not small against the line splitting",
            NarrowbandWarning, stacklevel=2)

    field = np.sqrt(env.samples)
    spec = np.fft.fft(field, n_fft)
    freqs = np.fft.fftfreq(n_fft, env.dt)
    out = np.fft.ifft(spec * transfer_function(freqs, medium, doublet, carrier_detuning))
    intensity = np.abs(out) ** 2
    result = TemporalEnvelope(intensity, env.dt, env.t_start)
    if env.normalized:
        result = result.normalize()
    return result


def _align(a, b):
    """Put ``b`` on ``a``'s sample spacing."""
    if np.isclose(a.dt, b.dt, rtol=1e-12, atol=0):
        return b
    t_new = np.arange(b.t_start, b.t_start + b.duration, a.dt)
    s = np.interp(t_new, b.times, b.samples, left=0.0, right=0.0)
    return TemporalEnvelope(s, a.dt, b.t_start, False)


def subtract_background(env, percentile=10.0):
    floor = np.percentile(env.samples, percentile)
    return TemporalEnvelope(np.clip(env.samples - floor, 0, None), env.dt, env.t_start)


def _parabolic(y, i):
    if 0 < i < y.size - 1:
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            return i + 0.5 * (y0 - y2) / denom
    return float(i)


def extract_delay(a, b, method="xcorr", background=False):
    """Delay of ``b`` relative to ``a`` in seconds."""
    if method not in ("xcorr", "centroid", "peak"):
        raise ValueError(f"unknown delay method {method!r}")
    for e in (a, b):
        if e.samples.size == 0 or not np.any(e.samples > 0):
            raise DegenerateInputError("envelope is empty or all zero")
    b = _align(a, b)
    if background:
        a, b = subtract_background(a), subtract_background(b)
        if not (np.any(a.samples > 0) and np.any(b.samples > 0)):
            raise DegenerateInputError("nothing left after background subtraction")

    if method == "centroid":
        ca = np.dot(a.times, a.samples) / a.samples.sum()
        cb = np.dot(b.times, b.samples) / b.samples.sum()
        return float(cb - ca)
    if method == "peak":
        return float(b.times[np.argmax(b.samples)] - a.times[np.argmax(a.samples)])

    # full linear cross-correlation via zero-padded FFT
    na, nb = a.samples.size, b.samples.size
    n = _next_pow2(na + nb)
    xc = np.fft.irfft(np.fft.rfft(b.samples, n) * np.conj(np.fft.rfft(a.samples, n)), n)
    lags = np.concatenate([np.arange(0, nb), np.arange(-(na - 1), 0)])
    xc = np.concatenate([xc[:nb], xc[n - (na - 1):]]) if na > 1 else xc[:nb]
    order = np.argsort(lags)
    lags, xc = lags[order], xc[order]
    i = int(np.argmax(xc))
    frac = _parabolic(xc, i) - i
    return float((lags[i] + frac) * a.dt + (b.t_start - a.t_start))


def _crossing(t0, t1, y0, y1, level):
    if y1 == y0:
        return t0
    return t0 + (level - y0) * (t1 - t0) / (y1 - y0)


def width_metric(env):
    """FWHM (s) around the dominant peak, with linear interpolation."""
    y = env.samples
    if y.size == 0 or not np.any(y > 0):
        raise DegenerateInputError("envelope is empty or all zero")
    i = int(np.argmax(y))
    half = y[i] / 2
    t = env.times
    left = i
    while left > 0 and y[left - 1] > half:
        left -= 1
    right = i
    while right < y.size - 1 and y[right + 1] > half:
        right += 1
    if left == 0 or right == y.size - 1:
        raise DegenerateInputError("no half-maximum crossing inside the window")
    t_l = _crossing(t[left - 1], t[left], y[left - 1], y[left], half)
    t_r = _crossing(t[right], t[right + 1], y[right], y[right + 1], half)
    return float(t_r - t_l)


def broadening_ratio(env_in, env_out):
    return width_metric(env_out) / width_metric(env_in)


def histogram_to_envelope(h):
    """Area-normalised envelope sampled at the bin centres."""
    if h.total == 0:
        raise DegenerateInputError("histogram has no counts")
    return TemporalEnvelope(h.counts.astype(float), h.bin_width,
                            h.t0 + h.bin_width / 2).normalize()


def envelope_to_histogram(env, bin_width=BIN_WIDTH, shot_count=10**5, seed=0):
    """Draw ``shot_count`` arrivals from the envelope as a TCSPC histogram."""
    if shot_count <= 0:
        raise ValueError("shot_count must be positive")
    if not env.area > 0:
        raise DegenerateInputError("envelope has zero area")
    rng = np.random.default_rng(seed)
    edge0 = env.t_start - env.dt / 2
    if np.isclose(bin_width, env.dt, rtol=1e-12, atol=0):
        p = env.samples / env.samples.sum()
        t0 = edge0
    else:
        # integrate the piecewise-constant density over the new bins
        edges_in = edge0 + env.dt * np.arange(env.samples.size + 1)
        cdf = np.concatenate([[0.0], np.cumsum(env.samples)]) / env.samples.sum()
        nbins = int(np.ceil(env.duration / bin_width))
        edges = edge0 + bin_width * np.arange(nbins + 1)
        p = np.diff(np.interp(edges, edges_in, cdf))
        p = np.clip(p, 0, None)
        p /= p.sum()
        t0 = edge0
    counts = rng.multinomial(int(shot_count), p)
    return ArrivalHistogram(counts, bin_width, t0)
