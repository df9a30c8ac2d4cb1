"""Result serialization: CSV tables, JSON reports and the run manifest.

Every writer is atomic (temp file next to the target, then rename) and
formats floats with repr, so identical inputs give byte-identical
files.  Wall-clock timings never enter data files, only the manifest.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile

import numpy as np

from .errors import ConfigInvalid

RECORD_FORCE_COLUMNS = ("Fx1", "Fy1", "Fz1", "Fx2", "Fy2", "Fz2")
SWEEP_COLUMNS = ("d", "E", "Fx1", "Fy1", "Fx2", "Fy2", "X_mid")


def _fmt(value):
    v = float(value)
    if v != v:
        return "nan"
    return repr(v)


def _atomic_write_text(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(c) if isinstance(c, (str, int)) else _fmt(c)
                              for c in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows):
    _atomic_write_text(path, _csv_text(header, rows))


def write_json(path, payload):
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True,
                                        default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def write_record_csv(path, record, include_positions=False):
    """Time series of endpoint reactions, optionally node positions.

    Columns: t [, x_1,y_1,z_1 .. z_N], Fx1..Fz2, taut_flag.
    """
    if include_positions and record.positions is None:
        raise ConfigInvalid("record holds no node positions")
    header = ["t"]
    if include_positions:
        n = record.positions.shape[1]
        for i in range(1, n + 1):
            header += [f"x_{i}", f"y_{i}", f"z_{i}"]
    header += list(RECORD_FORCE_COLUMNS) + ["taut_flag"]

    forces = record.force_channels()
    rows = []
    for k, t in enumerate(record.times):
        row = [t]
        if include_positions:
            row.extend(record.positions[k].reshape(-1))
        row.extend(forces[k])
        row.append(int(record.taut[k]))
        rows.append(row)
    write_csv(path, header, rows)


def record_summary(record):
    """JSON-ready sidecar for one simulation record."""
    return {
        "rows": int(record.times.size),
        "t_final": float(record.times[-1]),
        "diverged": bool(record.diverged),
        "taut_fraction": float(record.taut.mean()),
        "meta": dict(record.meta),
    }


def write_convergence_csv(path, rows, level_name):
    """Refinement table; level_name states what was varied (n or dt).

    Per-level wall clocks stay out of the table (reruns must be
    byte-identical); they are reported through the manifest instead.
    """
    header = [level_name, "midpoint_dev", "average_dev", "max_dev",
              "dFx1", "dFy1", "dFx2", "dFy2", "force_avg"]
    out = []
    for r in rows:
        rep = r.report
        out.append([r.level, rep.midpoint, rep.average, rep.max,
                    *r.force_dev, r.force_avg])
    write_csv(path, header, out)


def write_sweep_csv(path, cells):
    write_csv(path, SWEEP_COLUMNS, [c.row() for c in cells])


def write_length_csv(path, rows):
    """Long-format station table, raw and length-normalized coordinates."""
    header = ["L", "station", "x", "y", "z", "x_norm", "y_norm", "z_norm"]
    out = []
    for r in rows:
        shaped = r.normalized
        anchor = 0.5 * (r.positions[0] + r.positions[-1])
        raw = shaped * r.length + anchor
        for k in range(shaped.shape[0]):
            out.append([r.length, k, *raw[k], *shaped[k]])
    write_csv(path, header, out)


def write_length_midpoints_csv(path, rows):
    header = ["L", "xm_norm", "ym_norm", "zm_norm"]
    write_csv(path, header,
              [[r.length, *r.midpoint_normalized] for r in rows])


def write_spectrum_csv(path, report):
    header = ["mode", "re", "im", "magnitude", "phase", "stable"]
    out = []
    for k, lam in enumerate(report.eigenvalues):
        out.append([k, lam.real, lam.imag, report.magnitudes[k],
                    report.phases[k], int(report.stable[k])])
    write_csv(path, header, out)


def write_influence_csv(path, report):
    """Per-node influence of the leading modes, one row per node/mode."""
    header = ["mode", "node", "pos_x", "pos_y", "pos_z",
              "force_x", "force_y", "force_z"]
    out = []
    n_modes, n_nodes, _ = report.position_influence.shape
    for m in range(n_modes):
        for i in range(n_nodes):
            frow = (report.force_influence[m, i]
                    if report.force_influence is not None
                    else np.full(3, np.nan))
            out.append([m, i + 1, *report.position_influence[m, i], *frow])
    write_csv(path, header, out)


def sha256_of(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, config_echo, files, seed=None, wall_times=None,
                   extra=None):
    """Digest of one run: config echo, outputs with hashes, timings.

    Written last, so a complete manifest implies every listed file was
    fully written.  Returns the manifest path.
    """
    from . import __version__

    entries = []
    for name in files:
        full = os.path.join(out_dir, name)
        entries.append({"name": name, "sha256": sha256_of(full),
                        "bytes": os.path.getsize(full)})
    payload = {
        "version": __version__,
        "seed": seed,
        "config": config_echo,
        "files": entries,
        "wall_times_s": wall_times or {},
    }
    if extra:
        payload.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    write_json(path, payload)
    return path
