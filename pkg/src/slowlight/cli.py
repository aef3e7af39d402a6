"""
Command-line front end.

Every subcommand writes plain CSV/JSON plus a ``*.manifest.json`` that
records the resolved configuration and the argument list; ``slowlight
replay MANIFEST`` re-runs it.

Exit codes: 0 success, 2 usage, 3 data format, 4 numeric domain.
"""
import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .constants import ROOM_TEMPERATURE, TWO_PI, default_config_dir, load_constants, read_json
from .dispersion import (
    GROUP_MODES,
    ResonanceDoublet,
    complex_index,
    group_velocity,
    transmission,
)
from .errors import DataFormatError, DegenerateInputError, DomainError, GridError
from .fileio import (
    read_events,
    read_observations,
    read_trace,
    write_envelope,
    write_events,
    write_histogram,
    write_json,
    write_table,
)
from .qfc import CELL_INSERTION, ParameterError, QfcParams, optimize_pump, scale_noise_to_snr, sweep
from .source import PulseSequenceConfig, bin_events, simulate
from .vapor import (
    CalibrationResult,
    DegenerateFitError,
    VaporModel,
    calibrate_scale,
    delay_model,
    medium_at,
)
from .wavepacket import (
    ArrivalHistogram,
    TemporalEnvelope,
    broadening_ratio,
    extract_delay,
    histogram_to_envelope,
    propagate,
)

log = logging.getLogger("slowlight")

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_DOMAIN = 0, 2, 3, 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- config

def _resolve_constants(args):
    path = args.config
    if path is None:
        d = default_config_dir()
        if d is not None and (d / "constants.json").exists():
            path = d / "constants.json"
    overrides = {"length_m": getattr(args, "length", None),
                 "gamma_hz": getattr(args, "gamma_hz", None)}
    consts = load_constants(path, overrides)
    return consts, ResonanceDoublet.from_constants(consts)


def _resolve_vapor(args):
    path = getattr(args, "vapor", None)
    if path is None:
        d = default_config_dir()
        if d is not None and (d / "vapor.json").exists():
            path = d / "vapor.json"
    return VaporModel.default() if path is None else VaporModel.from_file(path)


def _load_calibration(path):
    try:
        return CalibrationResult.from_dict(read_json(path))
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise DataFormatError(f"cannot read calibration: {exc}", None, path) from None


def _manifest(args, outputs, config, seed=None):
    return {
        "subcommand": args.command,
        "argv": args._argv,
        "config": config,
        "seed": seed,
        "outputs": [str(p) for p in outputs],
        "version": __version__,
    }


def _write_manifest(primary, args, outputs, config, seed=None):
    path = Path(str(primary) + ".manifest.json")
    write_json(path, _manifest(args, outputs, config, seed))
    return path


def _consts_dict(consts):
    return asdict(consts)


def _parse_temps(args):
    if args.temps:
        try:
            return [float(t) for t in args.temps.split(",") if t.strip()]
        except ValueError:
            raise UsageError(f"bad --temps list {args.temps!r}") from None
    if args.t_min is None or args.t_max is None:
        raise UsageError("give --temps or both --t-min and --t-max")
    if args.t_step <= 0 or args.t_max < args.t_min:
        raise UsageError("need t-min <= t-max and a positive t-step")
    n = int(round((args.t_max - args.t_min) / args.t_step)) + 1
    return (args.t_min + args.t_step * np.arange(n)).tolist()


# ---------------------------------------------------------------- commands

def cmd_index(args):
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    if not args.delta_max > args.delta_min:
        raise UsageError("--delta-max must exceed --delta-min")
    consts, doublet = _resolve_constants(args)
    vapor = _resolve_vapor(args)
    scale = 1.0
    if args.calibration:
        scale = _load_calibration(args.calibration).scale
    delta_hz = np.linspace(args.delta_min, args.delta_max, args.points)
    rows = []
    for T in args.temp:
        med = medium_at(T, doublet, vapor, consts.length, consts.mu, scale)
        for dhz in delta_hz:
            d = TWO_PI * dhz
            n = complex_index(d, doublet, med.strength)
            try:
                vg = float(group_velocity(d, doublet, med.strength, mode=args.mode))
            except DomainError:
                vg = float("nan")
            rows.append((T, dhz, d, float(n.real), float(n.imag), vg,
                         float(transmission(d, med, doublet))))
    header = ["temperature_K", "delta_Hz", "delta_rad_s", "n_r", "n_i", "v_g_m_s",
              "transmission"]
    write_table(args.out, header, rows)
    _write_manifest(args.out, args, [args.out], {
        "constants": _consts_dict(consts), "vapor": asdict(vapor), "scale": scale,
        "mode": args.mode})


def cmd_calibrate(args):
    consts, doublet = _resolve_constants(args)
    vapor = _resolve_vapor(args)
    obs = read_observations(args.observations)
    if any(d < 0 for _, d in obs):
        raise DataFormatError("observed delays must be non-negative", None, args.observations)
    res = calibrate_scale(obs, doublet, vapor, consts.length, consts.mu,
                          mode=args.mode, reference=args.reference)
    write_json(args.out, res.to_dict())
    _write_manifest(args.out, args, [args.out], {
        "constants": _consts_dict(consts), "vapor": asdict(vapor),
        "mode": args.mode, "reference": args.reference})
    log.info("scale = %.6g", res.scale)


def cmd_delay_curve(args):
    if not args.calibration and not args.uncalibrated:
        raise UsageError("--calibration FILE is required (or pass --uncalibrated)")
    consts, doublet = _resolve_constants(args)
    vapor = _resolve_vapor(args)
    temps = _parse_temps(args)
    scale, mode, ref = 1.0, args.mode, None
    if args.calibration:
        cal = _load_calibration(args.calibration)
        scale = cal.scale
        mode = cal.extra.get("mode", mode)
        ref = ROOM_TEMPERATURE if cal.reference == "room" else None
    delays = delay_model(np.asarray(temps), doublet, vapor, consts.length, consts.mu,
                         scale, mode, ref)
    outputs = [args.out]
    write_table(args.out, ["temperature_K", "delay_ns"],
                zip(temps, np.asarray(delays) * 1e9))
    if args.observations:
        obs = read_observations(args.observations)
        m = delay_model(np.array([o[0] for o in obs]), doublet, vapor, consts.length,
                        consts.mu, scale, mode, ref)
        res_path = Path(args.out).with_name(Path(args.out).stem + "_residuals.csv")
        write_table(res_path, ["temperature_K", "observed_ns", "model_ns", "residual_ns"],
                    [(t, d * 1e9, mm * 1e9, (mm - d) * 1e9) for (t, d), mm in zip(obs, m)])
        outputs.append(res_path)
    _write_manifest(args.out, args, outputs, {
        "constants": _consts_dict(consts), "vapor": asdict(vapor), "scale": scale,
        "mode": mode, "reference_T": ref, "temperatures_K": temps})


def _source_config(path):
    if path is None:
        return PulseSequenceConfig()
    try:
        return PulseSequenceConfig.from_mapping(read_json(path))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"cannot read source config: {exc}", None, path) from None


def cmd_source(args):
    cfg = _source_config(args.source_config)
    if args.blocks < 1:
        raise UsageError("--blocks must be at least 1")
    events = simulate(cfg, args.blocks, args.seed, workers=args.workers)
    out = Path(args.out_dir)
    ev_path, h_path = out / "events.csv", out / "histogram.csv"
    write_events(ev_path, events)
    h = bin_events(events, cfg, args.bin_width)
    write_histogram(h_path, h)
    if h.empty:
        log.warning("no detected photons; histogram is empty")
    # worker count does not change the output and is left out of the manifest
    argv = list(args._argv)
    if "--workers" in argv:
        i = argv.index("--workers")
        del argv[i:i + 2]
    args._argv = argv
    _write_manifest(out / "source", args, [ev_path, h_path],
                    {"pulse_sequence": cfg.to_dict(), "bin_width_s": args.bin_width},
                    seed=args.seed)


def cmd_propagate(args):
    consts, doublet = _resolve_constants(args)
    vapor = _resolve_vapor(args)
    if args.calibration:
        scale = _load_calibration(args.calibration).scale
    elif args.uncalibrated:
        scale = 1.0
    else:
        raise UsageError("--calibration FILE is required (or pass --uncalibrated)")
    if (args.envelope is None) == (not args.source_sim):
        raise UsageError("give exactly one of --envelope FILE or --source-sim")
    config = {"constants": _consts_dict(consts), "vapor": asdict(vapor), "scale": scale}
    seed = None
    if args.envelope:
        trace = read_trace(args.envelope)
        env = histogram_to_envelope(trace) if isinstance(trace, ArrivalHistogram) else trace
    else:
        cfg = _source_config(args.source_config)
        seed = args.seed
        events = simulate(cfg, args.blocks, args.seed)
        h = bin_events(events, cfg)
        if h.empty:
            raise DegenerateInputError("source simulation detected no photons")
        env = histogram_to_envelope(h)
        config["pulse_sequence"] = cfg.to_dict()

    # raw copy so the output area carries the cell transmission
    env = TemporalEnvelope(env.samples, env.dt, env.t_start)
    ref_med = medium_at(args.reference_temp, doublet, vapor, consts.length, consts.mu, scale)
    med = medium_at(args.temp, doublet, vapor, consts.length, consts.mu, scale)
    out_ref = propagate(env, ref_med, doublet)
    out = propagate(env, med, doublet)
    write_envelope(args.out, out)
    analytic = delay_model(args.temp, doublet, vapor, consts.length, consts.mu, scale,
                           reference_T=args.reference_temp)
    summary = {
        "temperature_K": args.temp,
        "reference_temperature_K": args.reference_temp,
        "analytic_delay_ns": analytic * 1e9,
        "xcorr_delay_ns": extract_delay(out_ref, out, "xcorr", args.background) * 1e9,
        "centroid_delay_ns": extract_delay(out_ref, out, "centroid", args.background) * 1e9,
        "broadening_ratio": broadening_ratio(out_ref, out),
        "area_ratio": out.area / out_ref.area if out_ref.area > 0 else None,
    }
    summary_path = Path(args.out).with_name(Path(args.out).stem + "_summary.json")
    write_json(summary_path, summary)
    _write_manifest(args.out, args, [args.out, summary_path], config, seed)


def cmd_qfc(args):
    try:
        params = QfcParams.from_mapping(read_json(args.params))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"cannot read QFC params: {exc}", None, args.params) from None
    except TypeError as exc:
        raise DataFormatError(f"bad QFC params: {exc}", None, args.params) from None
    if args.sweep < 2:
        raise UsageError("--sweep needs at least 2 points")
    if args.target_snr is not None:
        params = scale_noise_to_snr(params, args.rate, args.target_snr)
    if args.cell:
        params = params.with_cell(CELL_INSERTION)
    P, eta, noise, s = sweep(params, args.rate, args.p_max, args.sweep)
    write_table(args.out, ["pump_W", "efficiency", "noise_cps", "snr"], zip(P, eta, noise, s))
    p_star, snr_star = optimize_pump(params, args.rate)
    summary_path = Path(args.out).with_name(Path(args.out).stem + "_optimum.json")
    write_json(summary_path, {"pump_W": p_star, "snr": snr_star})
    _write_manifest(args.out, args, [args.out, summary_path],
                    {"qfc": params.to_dict(), "input_photon_rate": args.rate})


def cmd_bin(args):
    cfg = _source_config(args.source_config)
    events = read_events(args.events)
    write_histogram(args.out, bin_events(events, cfg, args.bin_width))
    _write_manifest(args.out, args, [args.out], {"pulse_sequence": cfg.to_dict()})


def cmd_replay(args):
    m = read_json(args.manifest)
    try:
        argv = m["argv"]
    except KeyError:
        raise DataFormatError("manifest has no argv", None, args.manifest) from None
    return main(argv)


# ---------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="slowlight", description=__doc__.splitlines()[1])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, default=None,
                        help="constants JSON (default: packaged, or $SLOWLIGHT_CONFIG_DIR)")
        sp.add_argument("--vapor", type=Path, default=None, help="vapour-pressure JSON")
        sp.add_argument("--length", type=float, default=None, help="cell length override (m)")
        sp.add_argument("--gamma-hz", type=float, default=None, help="linewidth override (Hz)")
        sp.add_argument("--mode", choices=GROUP_MODES, default="eq3")

    sp = sub.add_parser("index", help="index / group velocity / transmission sweep")
    common(sp)
    sp.add_argument("--delta-min", type=float, default=-5e9, help="detuning, Hz")
    sp.add_argument("--delta-max", type=float, default=5e9, help="detuning, Hz")
    sp.add_argument("--points", type=int, default=1001)
    sp.add_argument("--temp", type=float, action="append", required=True, help="K, repeatable")
    sp.add_argument("--calibration", type=Path)
    sp.add_argument("--out", type=Path, required=True)
    sp.set_defaults(func=cmd_index)

    sp = sub.add_parser("calibrate", help="fit the density scale to observed delays")
    common(sp)
    sp.add_argument("--observations", type=Path, required=True, help="temperature_K,delay_ns CSV")
    sp.add_argument("--reference", choices=("vacuum", "room"), default="vacuum")
    sp.add_argument("--out", type=Path, required=True)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("delay-curve", help="model delay versus temperature")
    common(sp)
    sp.add_argument("--temps", help="comma-separated temperatures, K")
    sp.add_argument("--t-min", type=float)
    sp.add_argument("--t-max", type=float)
    sp.add_argument("--t-step", type=float, default=1.0)
    sp.add_argument("--calibration", type=Path)
    sp.add_argument("--uncalibrated", action="store_true")
    sp.add_argument("--observations", type=Path)
    sp.add_argument("--out", type=Path, required=True)
    sp.set_defaults(func=cmd_delay_curve)

    sp = sub.add_parser("propagate", help="propagate a photon envelope through the cell")
    common(sp)
    sp.add_argument("--envelope", type=Path)
    sp.add_argument("--source-sim", action="store_true")
    sp.add_argument("--source-config", type=Path)
    sp.add_argument("--blocks", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--temp", type=float, required=True)
    sp.add_argument("--reference-temp", type=float, default=ROOM_TEMPERATURE)
    sp.add_argument("--calibration", type=Path)
    sp.add_argument("--uncalibrated", action="store_true")
    sp.add_argument("--background", action="store_true", help="subtract noise floor")
    sp.add_argument("--out", type=Path, required=True)
    sp.set_defaults(func=cmd_propagate)

    sp = sub.add_parser("source", help="Monte Carlo single-photon source")
    sp.add_argument("--source-config", "--config", dest="source_config", type=Path)
    sp.add_argument("--blocks", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--bin-width", type=float, default=512e-12)
    sp.add_argument("--out-dir", type=Path, required=True)
    sp.set_defaults(func=cmd_source)

    sp = sub.add_parser("bin", help="histogram an event-stream CSV")
    sp.add_argument("--events", type=Path, required=True)
    sp.add_argument("--source-config", type=Path)
    sp.add_argument("--bin-width", type=float, default=512e-12)
    sp.add_argument("--out", type=Path, required=True)
    sp.set_defaults(func=cmd_bin)

    sp = sub.add_parser("qfc", help="conversion efficiency / noise / SNR sweep")
    sp.add_argument("--params", type=Path, required=True)
    sp.add_argument("--rate", type=float, default=1e5, help="photons/s entering the converter")
    sp.add_argument("--sweep", type=int, default=201, help="number of pump powers")
    sp.add_argument("--p-max", type=float, default=None, help="W")
    sp.add_argument("--target-snr", type=float, default=None,
                    help="rescale noise so the peak SNR equals this")
    sp.add_argument("--cell", action="store_true", help="insert the room-temperature cell")
    sp.add_argument("--out", type=Path, required=True)
    sp.set_defaults(func=cmd_qfc)

    sp = sub.add_parser("replay", help="re-run a command from its manifest")
    sp.add_argument("manifest", type=Path)
    sp.set_defaults(func=cmd_replay)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        rc = args.func(args)
        return EXIT_OK if rc is None else rc
    except UsageError as exc:
        print(f"slowlight {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, FileNotFoundError) as exc:
        print(f"slowlight {args.command}: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (DomainError, GridError, DegenerateInputError, DegenerateFitError,
            ParameterError, ValueError) as exc:
        print(f"slowlight {args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
