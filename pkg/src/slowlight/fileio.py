"""
Plain-text file formats.

Envelope / histogram CSV::

    # kind=histogram
    # bin_width_s=5.12e-10
    # t0_s=0.0
    time_s,value
    2.56e-10,12
    ...

Envelopes use ``# kind=envelope``, ``# dt_s=`` and ``# normalized=``; time is
the sample time.  Histograms list bin centres.  All writers go through a
temporary file and an atomic rename.
"""
import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .source import KIND_NAMES, EventStream
from .wavepacket import ArrivalHistogram, TemporalEnvelope


def fmt(x):
    return repr(float(x))


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload):
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def table_text(header, rows, comments=()):
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in r])
    return buf.getvalue()


def write_table(path, header, rows, comments=()):
    atomic_write_text(path, table_text(header, rows, comments))


def read_table(path, expected_header):
    """Parse a CSV with ``#`` comments; returns (metadata, rows of floats)."""
    meta, rows, header = {}, [], None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            cells = [c.strip() for c in s.split(",")]
            if header is None:
                if cells != list(expected_header):
                    raise DataFormatError(
                        f"expected header {','.join(expected_header)!r}, got {s!r}",
                        lineno, path)
                header = cells
                continue
            if len(cells) != len(header):
                raise DataFormatError(f"expected {len(header)} fields, got {len(cells)}",
                                      lineno, path)
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise DataFormatError(f"non-numeric value in {s!r}", lineno, path) from None
    if header is None:
        raise DataFormatError("missing header line", None, path)
    return meta, rows


def _meta_float(meta, key, path):
    try:
        return float(meta[key])
    except KeyError:
        raise DataFormatError(f"missing '# {key}=' metadata line", None, path) from None
    except ValueError:
        raise DataFormatError(f"bad value for {key}: {meta[key]!r}", None, path) from None


def write_envelope(path, env):
    rows = zip(env.times, env.samples)
    write_table(path, ["time_s", "value"], rows, [
        "kind=envelope", f"dt_s={fmt(env.dt)}", f"t_start_s={fmt(env.t_start)}",
        f"normalized={str(env.normalized).lower()}"])


def write_histogram(path, h):
    rows = ((t, str(int(c))) for t, c in zip(h.bin_centers, h.counts))
    write_table(path, ["time_s", "value"], rows, [
        "kind=histogram", f"bin_width_s={fmt(h.bin_width)}", f"t0_s={fmt(h.t0)}"])


def read_trace(path):
    """Read an envelope or histogram CSV, dispatching on ``# kind=``."""
    meta, rows = read_table(path, ["time_s", "value"])
    if not rows:
        raise DataFormatError("no data rows", None, path)
    arr = np.asarray(rows)
    kind = meta.get("kind", "envelope")
    try:
        if kind == "histogram":
            bw = _meta_float(meta, "bin_width_s", path)
            t0 = float(meta.get("t0_s", arr[0, 0] - bw / 2))
            counts = arr[:, 1]
            if np.any(counts != np.round(counts)):
                raise DataFormatError("histogram counts must be integers", None, path)
            return ArrivalHistogram(counts.astype(np.int64), bw, t0)
        if kind == "envelope":
            dt = float(meta["dt_s"]) if "dt_s" in meta else float(arr[1, 0] - arr[0, 0])
            t_start = float(meta.get("t_start_s", arr[0, 0]))
            norm = meta.get("normalized", "false").lower() == "true"
            return TemporalEnvelope(arr[:, 1], dt, t_start, norm)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, DataFormatError):
            raise
        raise DataFormatError(str(exc), None, path) from None
    raise DataFormatError(f"unknown trace kind {kind!r}", None, path)


def read_observations(path):
    """``temperature_K,delay_ns`` rows -> list of (K, seconds)."""
    _, rows = read_table(path, ["temperature_K", "delay_ns"])
    if not rows:
        raise DataFormatError("no observations", None, path)
    return [(t, d * 1e-9) for t, d in rows]


def write_events(path, events):
    rows = (
        (str(int(c)), fmt(t), KIND_NAMES[int(k)], "1" if d else "0")
        for c, t, k, d in zip(events.cycle, events.time, events.kind, events.detected)
    )
    write_table(path, ["cycle", "time_s", "kind", "detected"], rows,
                [f"n_cycles={events.n_cycles}"])


def read_events(path):
    names = {v: k for k, v in KIND_NAMES.items()}
    cyc, t, kind, det, n_cycles = [], [], [], [], 0
    with open(path, encoding="utf-8") as fh:
        header = None
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                if s[1:].strip().startswith("n_cycles="):
                    n_cycles = int(s.split("=", 1)[1])
                continue
            cells = s.split(",")
            if header is None:
                if cells != ["cycle", "time_s", "kind", "detected"]:
                    raise DataFormatError(f"bad header {s!r}", lineno, path)
                header = cells
                continue
            try:
                cyc.append(int(cells[0]))
                t.append(float(cells[1]))
                kind.append(names[cells[2]])
                det.append(cells[3] == "1")
            except (ValueError, KeyError, IndexError):
                raise DataFormatError(f"bad event row {s!r}", lineno, path) from None
    return EventStream(np.array(cyc, np.int64), np.array(t), np.array(kind, np.int8),
                       np.array(det, bool), n_cycles)
