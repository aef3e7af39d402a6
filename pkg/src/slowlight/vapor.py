"""
Temperature -> number density -> resonance strength, plus the one-parameter
scale fit that ties the model delay curve to measured delays.

The vapour pressure follows a two-branch ``log10(P / Pa) = a - b / T``
correlation (solid below the melting point, liquid above).  Coefficients
are data, loaded from ``data/vapor.json`` by default.
"""
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.constants import epsilon_0, hbar, k as k_B

from .constants import ROOM_TEMPERATURE, load_packaged, read_json, strip_meta
from .dispersion import MediumState, group_delay

T_MIN = 250.0
T_MAX = 500.0


@dataclass(frozen=True)
class VaporModel:
    a_solid: float
    b_solid: float
    a_liquid: float
    b_liquid: float
    melting_point: float
    isotope_fraction: float = 1.0

    def __post_init__(self):
        if not 0 < self.isotope_fraction <= 1:
            raise ValueError("isotope_fraction must lie in (0, 1]")
        p_s = self.a_solid - self.b_solid / self.melting_point
        p_l = self.a_liquid - self.b_liquid / self.melting_point
        if abs(10 ** (p_s - p_l) - 1) > 0.05:
            raise ValueError("vapour pressure branches disagree by >5% at the melting point")

    @classmethod
    def default(cls):
        return cls(**strip_meta(load_packaged("vapor.json")))

    @classmethod
    def from_file(cls, path):
        return cls(**strip_meta(read_json(path)))


def vapor_pressure(T, model):
    """Saturated vapour pressure in Pa."""
    T = np.asarray(T, dtype=float)
    log_p = np.where(
        T < model.melting_point,
        model.a_solid - model.b_solid / T,
        model.a_liquid - model.b_liquid / T,
    )
    return 10.0**log_p


def number_density(T, model):
    """Atoms per m^3 of the tracked isotope at cold-finger temperature ``T``."""
    T_arr = np.asarray(T, dtype=float)
    if np.any((T_arr < T_MIN) | (T_arr > T_MAX)) or np.any(~np.isfinite(T_arr)):
        raise ValueError(f"temperature outside the {T_MIN:g}-{T_MAX:g} K correlation window")
    n = model.isotope_fraction * vapor_pressure(T_arr, model) / (k_B * T_arr)
    return float(n) if np.ndim(T) == 0 else n


def resonance_strength(N, mu, g1, g2):
    """Lumped strength A (rad/s) from density N and dipole moment mu."""
    return N * abs(mu) ** 2 / (2 * epsilon_0 * hbar * (g1 + g2))


def medium_at(T, doublet, model, length=0.075, mu=1.7314e-29, scale=1.0):
    N = number_density(T, model)
    A = scale * resonance_strength(N, mu, doublet.g1, doublet.g2)
    return MediumState(temperature=T, number_density=N, strength=A, length=length, mu=mu)


def delay_model(T, doublet, model, length=0.075, mu=1.7314e-29, scale=1.0,
                mode="eq3", reference_T=None):
    """Model group delay (s) at each temperature.

    ``reference_T=None`` gives the delay relative to vacuum; otherwise the
    delay at ``reference_T`` is subtracted.
    """
    temps = np.atleast_1d(np.asarray(T, dtype=float))
    out = np.array([
        group_delay(medium_at(t, doublet, model, length, mu, scale), doublet, 0.0, mode)
        for t in temps
    ])
    if reference_T is not None:
        out = out - group_delay(
            medium_at(reference_T, doublet, model, length, mu, scale), doublet, 0.0, mode)
    return float(out[0]) if np.ndim(T) == 0 else out


class DegenerateFitError(ValueError):
    pass


@dataclass
class CalibrationResult:
    scale: float
    residuals: list
    temperatures: list
    observed: list
    model_unscaled: list
    method: str = "linear-least-squares"
    reference: str = "vacuum"
    extra: dict = field(default_factory=dict)

    @property
    def model_values(self):
        return [self.scale * m for m in self.model_unscaled]

    def to_dict(self):
        d = asdict(self)
        d["model_values"] = self.model_values
        return d

    @classmethod
    def from_dict(cls, d):
        d = {k: v for k, v in d.items() if k != "model_values"}
        return cls(**d)


def fit_scale(model_delays, observed):
    """Closed-form least-squares scale ``s`` for ``s * m ~ d``."""
    m = np.asarray(model_delays, dtype=float)
    d = np.asarray(observed, dtype=float)
    denom = np.dot(m, m)
    if denom == 0:
        raise DegenerateFitError("all model delays are zero; scale is undetermined")
    return float(np.dot(m, d) / denom)


def calibrate_scale(observations, doublet, model, length=0.075, mu=1.7314e-29,
                    mode="eq3", reference="vacuum"):
    """Fit the multiplier on A(T) that best matches observed delays.

    ``observations`` is a sequence of ``(temperature_K, delay_s)`` pairs.
    ``reference`` is ``"vacuum"`` or ``"room"`` (model delays taken relative
    to 296 K, matching traces whose room-temperature offset was removed).
    """
    obs = list(observations)
    if not obs:
        raise ValueError("need at least one observation")
    temps = np.array([o[0] for o in obs], dtype=float)
    delays = np.array([o[1] for o in obs], dtype=float)
    if np.any(delays < 0):
        raise ValueError("observed delays must be non-negative")
    if reference not in ("vacuum", "room"):
        raise ValueError(f"unknown reference {reference!r}")
    ref_T = ROOM_TEMPERATURE if reference == "room" else None
    m = delay_model(temps, doublet, model, length, mu, 1.0, mode, ref_T)
    s = fit_scale(m, delays)
    if not s > 0:
        raise DegenerateFitError(f"fitted scale {s!r} is not positive")
    return CalibrationResult(
        scale=s,
        residuals=(s * m - delays).tolist(),
        temperatures=temps.tolist(),
        observed=delays.tolist(),
        model_unscaled=m.tolist(),
        reference=reference,
        extra={"mode": mode, "length_m": length, "mu_cm": mu},
    )
