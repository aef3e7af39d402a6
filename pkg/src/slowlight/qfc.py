"""
Pump-power budget for the difference-frequency converter: efficiency,
pump-induced noise and the resulting signal-to-noise ratio.
"""
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .constants import strip_meta

BRAGG_TRANSMISSION = 0.90
# signal kept when the room-temperature cell is put in the beam
CELL_INSERTION = 0.70


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class QfcParams:
    """Converter parameters.

    ``noise_coeffs`` are the polynomial coefficients of the pump-induced
    count rate, lowest order first, starting at the linear term:
    ``noise = dark_rate + c1 P + c2 P^2``.  ``gate_duty`` is the fraction of
    wall-clock time in which noise counts can land in the photon window.
    """

    p_opt_w: float
    eta_max: float = 0.177
    noise_coeffs: tuple = (0.0,)
    dark_rate: float = 25.0
    bragg_transmission: float = BRAGG_TRANSMISSION
    cell_transmission: float = 1.0
    gate_duty: float = 1.0
    fit_range_w: tuple = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "noise_coeffs", tuple(float(c) for c in self.noise_coeffs))
        if not 0 <= self.eta_max <= 1:
            raise ParameterError("eta_max must lie in [0, 1]")
        if not self.p_opt_w > 0:
            raise ParameterError("p_opt_w must be positive")
        if len(self.noise_coeffs) > 2:
            raise ParameterError("noise polynomial is limited to degree 2")
        if self.dark_rate < 0:
            raise ParameterError("dark rate must be non-negative")
        for name in ("bragg_transmission", "cell_transmission", "gate_duty"):
            if not 0 <= getattr(self, name) <= 1:
                raise ParameterError(f"{name} must lie in [0, 1]")
        hi = self.fit_range_w[1] if self.fit_range_w else 2 * self.p_opt_w
        grid = np.linspace(0, hi, 201)
        if np.any(noise_rate(grid, self) < 0):
            raise ParameterError("noise model goes negative on the fitted pump range")

    @classmethod
    def from_mapping(cls, d):
        d = strip_meta(d)
        if "fit_range_w" in d and d["fit_range_w"] is not None:
            d["fit_range_w"] = tuple(d["fit_range_w"])
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        d["noise_coeffs"] = list(self.noise_coeffs)
        if self.fit_range_w is not None:
            d["fit_range_w"] = list(self.fit_range_w)
        return d

    @property
    def transmission(self):
        return self.bragg_transmission * self.cell_transmission

    def with_cell(self, factor=CELL_INSERTION):
        return replace(self, cell_transmission=self.cell_transmission * factor)


def conversion_efficiency(P, params):
    P = np.asarray(P, dtype=float)
    if np.any(P < 0):
        raise ValueError("pump power must be non-negative")
    return params.eta_max * np.sin(0.5 * np.pi * np.sqrt(P / params.p_opt_w)) ** 2


def noise_rate(P, params):
    """Noise count rate (counts/s) at pump power P."""
    P = np.asarray(P, dtype=float)
    out = np.full(P.shape, params.dark_rate, dtype=float)
    for k, coef in enumerate(params.noise_coeffs, start=1):
        out = out + coef * P**k
    return out


def fit_noise(pump_w, rate_cps, degree=2, dark_rate=None):
    """Least-squares fit of ``dark + c1 P (+ c2 P^2)``.

    With ``dark_rate`` given, the constant term is held fixed.
    Returns ``(dark_rate, coeffs)``.
    """
    P = np.asarray(pump_w, dtype=float)
    y = np.asarray(rate_cps, dtype=float)
    if degree not in (1, 2):
        raise ParameterError("noise polynomial degree must be 1 or 2")
    cols = [P**k for k in range(1, degree + 1)]
    if dark_rate is None:
        cols.insert(0, np.ones_like(P))
    else:
        y = y - dark_rate
    sol, *_ = np.linalg.lstsq(np.column_stack(cols), y, rcond=None)
    if dark_rate is None:
        return float(sol[0]), tuple(float(v) for v in sol[1:])
    return float(dark_rate), tuple(float(v) for v in sol)


def signal_rate(P, input_photon_rate, params):
    return input_photon_rate * conversion_efficiency(P, params) * params.transmission


def snr(P, input_photon_rate, params):
    if not input_photon_rate > 0:
        raise ValueError("input photon rate must be positive")
    noise = noise_rate(P, params) * params.gate_duty
    return signal_rate(P, input_photon_rate, params) / noise


def golden_section_max(f, lo, hi, rtol=1e-6):
    """Maximiser of a unimodal ``f`` on ``[lo, hi]``."""
    invphi = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c_ = b - invphi * (b - a)
    d_ = a + invphi * (b - a)
    fc, fd = f(c_), f(d_)
    while (b - a) > rtol * max(abs(a), abs(b), 1e-300) / 4:
        if fc >= fd:
            b, d_, fd = d_, c_, fc
            c_ = b - invphi * (b - a)
            fc = f(c_)
        else:
            a, c_, fc = c_, d_, fd
            d_ = a + invphi * (b - a)
            fd = f(d_)
    return (a + b) / 2


def optimize_pump(params, input_photon_rate):
    """Pump power maximising SNR on ``[0, 2 p_opt]`` and the SNR there."""
    if not input_photon_rate > 0:
        raise ValueError("input photon rate must be positive")
    f = lambda p: float(snr(p, input_photon_rate, params))  # noqa: E731
    if f(params.p_opt_w) == 0:
        raise ValueError("SNR is identically zero; nothing to optimise")
    p_star = golden_section_max(f, 0.0, 2 * params.p_opt_w)
    return p_star, f(p_star)


def scale_noise_to_snr(params, input_photon_rate, target_snr):
    """Rescale dark rate and noise coefficients so the peak SNR hits ``target_snr``.

    The optimum pump power is unchanged by a uniform noise rescaling.
    """
    _, peak = optimize_pump(params, input_photon_rate)
    k = peak / target_snr
    return replace(params, dark_rate=params.dark_rate * k,
                   noise_coeffs=tuple(c * k for c in params.noise_coeffs))


def sweep(params, input_photon_rate, p_max=None, points=201):
    p_max = 2 * params.p_opt_w if p_max is None else p_max
    P = np.linspace(0.0, p_max, points)
    return P, conversion_efficiency(P, params), noise_rate(P, params), snr(P, input_photon_rate, params)
