"""
Monte Carlo model of the trapped-ion single-photon sequence.

Each cycle: prepare into D3/2, switch everything off, fire the extraction
pulse, wait, Doppler cool, switch off again.  During the extraction pulse
the ion is excited to P1/2 at a uniformly distributed instant (with
probability ``p_excite``).  A decay to S1/2 emits the blue photon and ends
the cycle's photon output; a decay back to D3/2 emits a red photon and, if
the pulse is still on, triggers an instantaneous re-pump attempt.

Seeding: block ``b`` of a run with master seed ``s`` draws from
``numpy.random.SeedSequence(s, spawn_key=(b,))`` -- the same streams
``SeedSequence(s).spawn(n)`` hands out -- so results do not depend on how
blocks are spread over workers.
"""
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .constants import BIN_WIDTH
from .errors import ConfigurationWarning
from .wavepacket import ArrivalHistogram

BLUE, RED = 0, 1
KIND_NAMES = {BLUE: "blue-493", RED: "red-650"}


@dataclass(frozen=True)
class PulseSequenceConfig:
    prep_duration: float = 1e-6
    extract_duration: float = 20e-9
    post_extract_delay: float = 940e-9
    cooling_duration: float = 500e-9
    guard_off: float = 40e-9
    cycles_per_block: int = 10_000
    block_cooling: float = 1e-3
    p_s: float = 0.75
    # not given by the experiment; free parameters
    p_excite: float = 0.9
    tau: float = 8e-9
    collection_eff: float = 0.35
    conversion_eff: float = 0.177
    cell_transmission: float = 1.0
    detector_eff: float = 1.0

    def __post_init__(self):
        for name in ("prep_duration", "extract_duration", "post_extract_delay",
                     "cooling_duration", "guard_off", "block_cooling", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.cycles_per_block) < 1:
            raise ValueError("cycles_per_block must be at least 1")
        for name in ("p_s", "p_excite", "collection_eff", "conversion_eff",
                     "cell_transmission", "detector_eff"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    @classmethod
    def from_mapping(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known - {k for k in d if k.startswith("_")}
        if unknown:
            raise ValueError(f"unknown pulse-sequence keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in d.items() if k in known})

    def to_dict(self):
        return asdict(self)

    @property
    def cycle_duration(self):
        return (self.prep_duration + self.guard_off + self.extract_duration
                + self.post_extract_delay + self.cooling_duration + self.guard_off)

    @property
    def measurement_window(self):
        return self.extract_duration + self.post_extract_delay

    @property
    def block_duration(self):
        return self.cycles_per_block * self.cycle_duration + self.block_cooling

    @property
    def detection_efficiency(self):
        return (self.collection_eff * self.conversion_eff
                * self.cell_transmission * self.detector_eff)


def repetition_rate(config, amortize=True):
    """Cycle rate in Hz, optionally spreading the block cooling over its cycles."""
    period = config.cycle_duration
    if amortize:
        period += config.block_cooling / config.cycles_per_block
    return 1.0 / period


def blue_probability(config):
    """Closed-form probability that a cycle emits its blue photon.

    Solves the re-pumping recursion in continuous time; truncation of the
    decay at the end of the measurement window is ignored.
    """
    T, tau = config.extract_duration, config.tau
    p_e, p_s = config.p_excite, config.p_s
    r = (1 - p_s) * p_e
    if p_e == 0 or p_s == 0:
        return 0.0
    k = (1 - r) * T / tau
    mean_fill = 1 - (1 - np.exp(-k)) / k
    return p_e * (p_s + r * p_s / (1 - r) * mean_fill)


@dataclass
class EventStream:
    cycle: np.ndarray
    time: np.ndarray
    kind: np.ndarray
    detected: np.ndarray
    n_cycles: int = 0

    @classmethod
    def concat(cls, parts, n_cycles):
        if not parts:
            return cls(np.zeros(0, np.int64), np.zeros(0), np.zeros(0, np.int8),
                       np.zeros(0, bool), n_cycles)
        return cls(
            np.concatenate([p.cycle for p in parts]),
            np.concatenate([p.time for p in parts]),
            np.concatenate([p.kind for p in parts]),
            np.concatenate([p.detected for p in parts]),
            n_cycles,
        )

    def __len__(self):
        return self.cycle.size

    @property
    def blue(self):
        return self.kind == BLUE

    @property
    def detected_blue(self):
        return self.blue & self.detected

    def blue_per_cycle(self):
        return np.bincount(self.cycle[self.blue], minlength=self.n_cycles)


def extraction_start(cycle, config):
    """Absolute start time of the extraction pulse of each global cycle index."""
    cycle = np.asarray(cycle, dtype=np.int64)
    block, within = np.divmod(cycle, config.cycles_per_block)
    return (block * config.block_duration + within * config.cycle_duration
            + config.prep_duration + config.guard_off)


def _simulate_block(args):
    config, seed, block = args
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    n = int(config.cycles_per_block)
    T = config.extract_duration
    window = config.measurement_window

    excited = rng.random(n) < config.p_excite
    t_first = rng.uniform(0.0, T, n)
    ion = np.flatnonzero(excited)
    t_exc = t_first[excited]

    cyc, t_rel, kinds = [np.zeros(0, np.int64)], [np.zeros(0)], [np.zeros(0, np.int8)]
    while ion.size:
        t_dec = t_exc + rng.exponential(config.tau, ion.size)
        to_ground = rng.random(ion.size) < config.p_s
        repump = rng.random(ion.size) < config.p_excite

        blue = to_ground & (t_dec < window)
        cyc.append(ion[blue])
        t_rel.append(t_dec[blue])
        kinds.append(np.full(blue.sum(), BLUE, np.int8))

        red = ~to_ground
        cyc.append(ion[red])
        t_rel.append(t_dec[red])
        kinds.append(np.full(red.sum(), RED, np.int8))

        again = red & (t_dec < T) & repump
        ion, t_exc = ion[again], t_dec[again]

    local = np.concatenate(cyc)
    rel = np.concatenate(t_rel)
    kind = np.concatenate(kinds)
    order = np.lexsort((rel, local))
    local, rel, kind = local[order], rel[order], kind[order]

    detected = (rng.random(local.size) < config.detection_efficiency) & (kind == BLUE)
    global_cycle = block * n + local
    return EventStream(global_cycle, extraction_start(global_cycle, config) + rel,
                       kind, detected, n)


def simulate(config, n_blocks, seed, workers=1):
    """Run ``n_blocks`` blocks of ``cycles_per_block`` cycles.

    Output is identical for any ``workers`` count.
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be at least 1")
    if config.tau >= 10 * config.measurement_window:
        warnings.warn("decay time is long against the measurement window; "
                      "most blue photons will be truncated", ConfigurationWarning,
                      stacklevel=2)
    jobs = [(config, int(seed), b) for b in range(n_blocks)]
    if workers > 1 and n_blocks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_block, jobs))
    else:
        parts = [_simulate_block(j) for j in jobs]
    return EventStream.concat(parts, n_blocks * int(config.cycles_per_block))


def bin_events(events, config, bin_width=BIN_WIDTH, n_bins=None):
    """TCSPC histogram of detected blue photons against each extraction TTL.

    An input without detected photons gives an all-zero histogram; check
    ``.empty`` on the result.
    """
    if n_bins is None:
        n_bins = int(np.ceil(config.measurement_window / bin_width))
    sel = events.detected_blue
    rel = events.time[sel] - extraction_start(events.cycle[sel], config)
    # guard against round-off pushing an exact bin edge into the bin below
    idx = np.floor(rel / bin_width + 1e-9).astype(np.int64)
    if np.any((idx < 0) | (idx >= n_bins)):
        raise ValueError("detected event lies outside the histogram range")
    return ArrivalHistogram(np.bincount(idx, minlength=n_bins), bin_width, 0.0)
