"""
Refractive index, absorption and group velocity of a two-line vapour.

The medium is two homogeneously broadened absorption lines with relative
strengths g1 (lower frequency) and g2 (higher frequency).  The detuning
``delta`` is measured from the transmission maximum between the lines,
which sits at ``-Delta`` from their midpoint, so that the lines are found at
``delta = -Delta_plus`` and ``delta = +Delta_minus``.

Sign convention
---------------
A field travelling in +z is written ``E exp(i(k z - omega t))`` with
``k = n omega / c``.  With

    n(delta) = 1 - A [g1 / (delta + Delta_plus + i gamma/2)
                      + g2 / (delta - Delta_minus + i gamma/2)]

the imaginary part of ``n`` is positive for ``A > 0`` and the intensity
decays as ``exp(-2 (omega0/c) Im(n) z)``, so transmission never exceeds one.
Everything in this module and in :mod:`slowlight.wavepacket` uses this
convention.

All frequencies are angular (rad/s).
"""
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c

from .constants import LineConstants, load_constants
from .errors import DomainError

GROUP_MODES = ("eq3", "full")


@dataclass(frozen=True)
class ResonanceDoublet:
    g1: float = 7 / 16
    g2: float = 9 / 16
    gamma: float = 2 * np.pi * 6.0666e6
    omega1: float = 2 * np.pi * (384.2304844685e12 - 6.834682610904e9 / 2)
    omega2: float = 2 * np.pi * (384.2304844685e12 + 6.834682610904e9 / 2)

    def __post_init__(self):
        if not (self.g1 > 0 and self.g2 > 0):
            raise ValueError("line strengths must be positive")
        if not self.omega2 > self.omega1:
            raise ValueError("omega2 must exceed omega1")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.gamma >= (self.omega2 - self.omega1):
            raise ValueError("gamma must be much smaller than the line splitting")

    @classmethod
    def from_constants(cls, consts: LineConstants):
        return cls(consts.g1, consts.g2, consts.gamma, consts.omega1, consts.omega2)

    @classmethod
    def default(cls):
        return cls.from_constants(load_constants())

    @property
    def omega_s(self):
        """Half the line separation."""
        return (self.omega2 - self.omega1) / 2

    @property
    def delta_shift(self):
        c1, c2 = np.cbrt(self.g1), np.cbrt(self.g2)
        return self.omega_s * (c1 - c2) / (c1 + c2)

    @property
    def delta_plus(self):
        return self.omega_s + self.delta_shift

    @property
    def delta_minus(self):
        return self.omega_s - self.delta_shift

    @property
    def omega0(self):
        """Carrier frequency at the transmission maximum."""
        return (self.omega1 + self.omega2) / 2 + self.delta_shift

    @property
    def poles(self):
        """Detunings of the two line centres."""
        return (-self.delta_plus, self.delta_minus)


@dataclass(frozen=True)
class MediumState:
    """Physical state of the vapour cell.

    ``strength`` is the lumped resonance strength A in rad/s; it is what the
    optics functions consume.  ``number_density`` and ``mu`` are bookkeeping
    for the path that produced it.
    """

    temperature: float
    number_density: float
    strength: float
    length: float = 0.075
    mu: float = 1.7314e-29

    def __post_init__(self):
        if self.number_density < 0:
            raise ValueError("number density must be non-negative")
        if self.strength < 0:
            raise ValueError("resonance strength must be non-negative")
        if not self.length > 0:
            raise ValueError("cell length must be positive")

    def with_strength(self, strength):
        return replace(self, strength=strength)


def susceptibility_term(delta, doublet, A):
    """Return ``n(delta) - 1``; kept separate to avoid cancellation against 1."""
    delta = np.asarray(delta, dtype=float)
    half = 0.5j * doublet.gamma
    return -A * (
        doublet.g1 / (delta + doublet.delta_plus + half)
        + doublet.g2 / (delta - doublet.delta_minus + half)
    )


def complex_index(delta, doublet, A):
    return 1.0 + susceptibility_term(delta, doublet, A)


def index_derivative(delta, doublet, A):
    """Closed-form d n_r / d omega at detuning ``delta``."""
    delta = np.asarray(delta, dtype=float)
    b2 = (doublet.gamma / 2) ** 2
    x1 = delta + doublet.delta_plus
    x2 = delta - doublet.delta_minus
    return A * (
        doublet.g1 * (x1 * x1 - b2) / (x1 * x1 + b2) ** 2
        + doublet.g2 * (x2 * x2 - b2) / (x2 * x2 + b2) ** 2
    )


def group_velocity(delta, doublet, A, mode="eq3"):
    """Group velocity in m/s.

    ``mode="eq3"`` keeps only the dispersive term,
    ``v_g = (omega0/c * dn_r/domega)^-1``, which is the form the delay curve
    is fitted with.  ``mode="full"`` uses ``c / (n_r + omega0 dn_r/domega)``.
    Raises :class:`DomainError` where the relevant denominator is not
    positive (anomalous dispersion, or an empty cell in ``eq3`` mode).
    """
    if mode not in GROUP_MODES:
        raise ValueError(f"unknown group-velocity mode {mode!r}")
    dn = index_derivative(delta, doublet, A)
    if mode == "eq3":
        slowness = doublet.omega0 / c * dn
    else:
        n_r = 1.0 + np.real(susceptibility_term(delta, doublet, A))
        slowness = (n_r + doublet.omega0 * dn) / c
    if np.any(slowness <= 0):
        raise DomainError("dn_r/domega <= 0: no positive group velocity here")
    return 1.0 / slowness


def absorption_coefficient(delta, doublet, A):
    """Intensity absorption coefficient in 1/m, evaluated at the fixed carrier."""
    n_i = np.imag(susceptibility_term(delta, doublet, A))
    return 2 * doublet.omega0 / c * np.abs(n_i)


def transmission(delta, medium, doublet):
    return np.exp(-absorption_coefficient(delta, doublet, medium.strength) * medium.length)


def group_delay(medium, doublet, delta=0.0, mode="eq3"):
    """Group delay through the cell relative to the same length of vacuum.

    In ``eq3`` mode the group velocity drops the vacuum term, so
    ``L / v_g`` is already the excess over vacuum.  In ``full`` mode
    ``L / v_g - L / c`` is returned.  Both are linear in A.
    """
    if medium.strength == 0:
        return 0.0 if np.ndim(delta) == 0 else np.zeros(np.shape(delta))
    v = group_velocity(delta, doublet, medium.strength, mode=mode)
    if mode == "eq3":
        return medium.length / v
    return medium.length / v - medium.length / c
