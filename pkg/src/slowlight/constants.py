"""Default line data and loaders for the key-value constants file.

Frequencies are stored in Hz in the file and converted to angular
frequency (rad/s) here.  Physical constants come from ``scipy.constants``.
"""
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

CONFIG_DIR_ENV = "SLOWLIGHT_CONFIG_DIR"

TWO_PI = 2 * np.pi

# TCSPC bin width
BIN_WIDTH = 512e-12
ROOM_TEMPERATURE = 296.0


def _data_path(name):
    return resources.files("slowlight").joinpath("data").joinpath(name)


def default_config_dir():
    """Directory holding user config files, from the environment if set."""
    env = os.environ.get(CONFIG_DIR_ENV)
    return Path(env) if env else None


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_packaged(name):
    with _data_path(name).open(encoding="utf-8") as fh:
        return json.load(fh)


def strip_meta(d):
    return {k: v for k, v in d.items() if not k.startswith("_")}


@dataclass(frozen=True)
class LineConstants:
    g1: float
    g2: float
    gamma: float  # rad/s
    omega1: float  # rad/s
    omega2: float  # rad/s
    length: float  # m
    mu: float  # C m

    @classmethod
    def from_mapping(cls, d):
        d = strip_meta(d)
        if "omega1_hz" in d and "omega2_hz" in d:
            w1 = TWO_PI * float(d["omega1_hz"])
            w2 = TWO_PI * float(d["omega2_hz"])
        else:
            centre = TWO_PI * float(d["center_hz"])
            if "omega_s_hz" in d:
                half = TWO_PI * float(d["omega_s_hz"])
            else:
                half = TWO_PI * float(d["splitting_hz"]) / 2
            w1, w2 = centre - half, centre + half
        return cls(
            g1=float(d["g1"]),
            g2=float(d["g2"]),
            gamma=TWO_PI * float(d["gamma_hz"]),
            omega1=w1,
            omega2=w2,
            length=float(d["length_m"]),
            mu=float(d["mu_cm"]),
        )


def load_constants(path=None, overrides=None):
    """Read the constants file (packaged default when ``path`` is None)."""
    d = load_packaged("constants.json") if path is None else read_json(path)
    d = dict(d)
    if overrides:
        d.update({k: v for k, v in overrides.items() if v is not None})
    return LineConstants.from_mapping(d)
