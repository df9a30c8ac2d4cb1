"""Command line front end.

    cabledyn simulate --config run.yaml [--out DIR]
    cabledyn identify --preset identify-demo [--out DIR]
    cabledyn analyze converge-space --config study.yaml [--out DIR]

Exactly one of --config / --preset selects the run.  Exit codes: 0 on
success with every declared output written, 2 for configuration or
dataset problems, 3 when the integration diverged (the partial record
is still written), 4 for filesystem errors.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from importlib import resources

from . import __version__, io
from .analysis import (length_sweep, linearize, material_sweep,
                       snapshot_states, spatial_convergence, spectral_report,
                       temporal_convergence)
from .config import ANALYZE_KINDS, load_config
from .engine import classify_taut_slack, run_scenario
from .errors import CabledynError, ConfigInvalid, DivergedState
from .identify import (_resolve_threads, identify, load_dataset,
                       rmse_mse_report)

def _preset_root():
    return resources.files("cabledyn") / "presets"


def preset_names():
    return sorted(p.name[:-5] for p in _preset_root().iterdir()
                  if p.name.endswith(".yaml"))


def preset_path(name):
    path = _preset_root() / f"{name}.yaml"
    if not path.is_file():
        known = ", ".join(preset_names())
        raise ConfigInvalid(f"unknown preset {name!r} (available: {known})")
    return str(path)


def _parser():
    ap = argparse.ArgumentParser(
        prog="cabledyn",
        description="Cable-between-vehicles simulation and identification")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--preset", help="name of a bundled configuration")
        p.add_argument("--out", help="output directory "
                                     "(default: <label>_out)")

    add_common(sub.add_parser("simulate", help="run one scenario"))
    add_common(sub.add_parser("identify", help="fit cable parameters"))
    pa = sub.add_parser("analyze", help="run a study")
    pa.add_argument("kind", choices=ANALYZE_KINDS)
    add_common(pa)
    return ap


def _load(args):
    if (args.config is None) == (args.preset is None):
        raise ConfigInvalid("pass exactly one of --config / --preset")
    path = args.config if args.config else preset_path(args.preset)
    rc = load_config(path)
    out = args.out if args.out else f"{rc.label}_out"
    os.makedirs(out, exist_ok=True)
    return rc, out


def cmd_simulate(rc, out):
    scenario = rc.scenario()
    t0 = time.perf_counter()
    diverged = False
    try:
        record = run_scenario(scenario)
    except DivergedState as err:
        if err.record is None:
            raise
        record = err.record
        diverged = True
    wall = time.perf_counter() - t0
    io.write_record_csv(os.path.join(out, "record.csv"), record,
                        include_positions=scenario.integrator.record_positions)
    io.write_json(os.path.join(out, "record.json"), io.record_summary(record))
    io.write_manifest(out, rc.echo, ["record.csv", "record.json"],
                      seed=rc.seed, wall_times={"total": wall},
                      extra={"command": "simulate", "diverged": diverged})
    if diverged:
        raise DivergedState("integration diverged; partial record written",
                            record=record, time=float(record.times[-1]))
    return 0


def cmd_identify(rc, out):
    dataset_path, ga, model, threads = rc.identify_parts()
    samples = load_dataset(dataset_path)
    t0 = time.perf_counter()
    result = identify(samples, ga, model, threads=threads)
    wall = time.perf_counter() - t0
    report = result.to_dict()
    report["errors"] = rmse_mse_report(samples, result.params, model)
    report["config"] = rc.echo
    report["dataset"] = {"path": os.path.abspath(dataset_path),
                         "samples": len(samples)}
    io.write_json(os.path.join(out, "report.json"), report)
    io.write_csv(os.path.join(out, "history.csv"),
                 ["generation", "best_fitness"],
                 [[g, f] for g, f in enumerate(result.history)])
    io.write_manifest(out, rc.echo, ["report.json", "history.csv"],
                      seed=rc.seed, wall_times={"total": wall},
                      extra={"command": "identify",
                             "n_evaluations": result.n_evaluations})
    return 0


def _analyze_converge_space(rc, params, out):
    n_list = params.get("n_list")
    if not n_list:
        raise ConfigInvalid("analyze.n_list is required for converge-space")
    rows = spatial_convergence(rc.scenario(), n_list,
                               stations=params.get("stations", 101),
                               steady_window=params.get("steady_window", 5.0))
    io.write_convergence_csv(os.path.join(out, "converge-space.csv"), rows,
                             "n")
    walls = {f"n={int(r.level)}": r.report.runtime for r in rows}
    return ["converge-space.csv"], walls


def _analyze_converge_time(rc, params, out):
    dt_list = params.get("dt_list")
    if not dt_list:
        raise ConfigInvalid("analyze.dt_list is required for converge-time")
    rows = temporal_convergence(rc.scenario(), dt_list,
                                stations=params.get("stations", 101),
                                steady_window=params.get("steady_window", 5.0))
    io.write_convergence_csv(os.path.join(out, "converge-time.csv"), rows,
                             "dt")
    walls = {f"dt={r.level:g}": r.report.runtime for r in rows}
    return ["converge-time.csv"], walls


def _analyze_sweep_material(rc, params, out):
    for key in ("d_range", "e_range", "samples"):
        if key not in params:
            raise ConfigInvalid(f"analyze.{key} is required for "
                                f"sweep-material")
    samples = params["samples"]
    if isinstance(samples, list):
        samples = tuple(samples)
    t0 = time.perf_counter()
    cells = material_sweep(rc.scenario(), tuple(params["d_range"]),
                           tuple(params["e_range"]), samples,
                           threads=_resolve_threads(params.get("threads")),
                           steady_window=params.get("steady_window", 5.0))
    wall = time.perf_counter() - t0
    io.write_sweep_csv(os.path.join(out, "sweep-material.csv"), cells)
    return ["sweep-material.csv"], {"sweep": wall}


def _analyze_sweep_length(rc, params, out):
    for key in ("fractions", "lengths"):
        if key not in params:
            raise ConfigInvalid(f"analyze.{key} is required for sweep-length")
    integ = rc.integrator()
    t0 = time.perf_counter()
    rows = length_sweep(rc.cable(), tuple(params["fractions"]),
                        params["lengths"],
                        speed=params.get("speed", 1.0),
                        t_end=integ.t_end, dt=integ.dt,
                        stations=params.get("stations", 101),
                        steady_window=params.get("steady_window", 5.0))
    wall = time.perf_counter() - t0
    io.write_length_csv(os.path.join(out, "sweep-length.csv"), rows)
    io.write_length_midpoints_csv(os.path.join(out, "length-midpoints.csv"),
                                  rows)
    return ["sweep-length.csv", "length-midpoints.csv"], {"sweep": wall}


def _analyze_spectral(rc, params, out):
    scenario = rc.scenario()
    t0 = time.perf_counter()
    st_taut, st_slack, t_taut, t_slack = snapshot_states(
        scenario, settle_fraction=params.get("settle_fraction", 0.5))
    dt_lin = params.get("linearize_dt", scenario.integrator.dt)
    n_modes = params.get("n_modes", 6)
    files = []
    summary = {"snapshots": {}}
    for name, state, t_snap in (("taut", st_taut, t_taut),
                                ("slack", st_slack, t_slack)):
        A = linearize(state, scenario.props, dt_lin,
                      current=scenario.current)
        rep = spectral_report(A, state=state, props=scenario.props,
                              current=scenario.current, n_modes=n_modes)
        io.write_spectrum_csv(os.path.join(out, f"spectrum-{name}.csv"), rep)
        io.write_influence_csv(os.path.join(out, f"influence-{name}.csv"),
                               rep)
        files += [f"spectrum-{name}.csv", f"influence-{name}.csv"]
        summary["snapshots"][name] = {
            "time": t_snap,
            "classified": classify_taut_slack(state, scenario.props,
                                              scenario.theta_taut),
            "max_dominant_stable_phase": rep.max_dominant_stable_phase(
                n_modes),
            "n_stable": rep.n_stable,
            "state_dim": int(A.shape[0]),
        }
    io.write_json(os.path.join(out, "spectral.json"), summary)
    files.append("spectral.json")
    return files, {"total": time.perf_counter() - t0}


_ANALYZE_DISPATCH = {
    "converge-space": _analyze_converge_space,
    "converge-time": _analyze_converge_time,
    "sweep-material": _analyze_sweep_material,
    "sweep-length": _analyze_sweep_length,
    "spectral": _analyze_spectral,
}


def cmd_analyze(rc, kind, out):
    cfg_kind, params = rc.analyze_params()
    if cfg_kind != kind:
        raise ConfigInvalid(f"config is for analyze kind {cfg_kind!r}, "
                            f"command asked for {kind!r}")
    files, walls = _ANALYZE_DISPATCH[kind](rc, params, out)
    io.write_manifest(out, rc.echo, files, seed=rc.seed, wall_times=walls,
                      extra={"command": f"analyze {kind}"})
    return 0


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        rc, out = _load(args)
        if args.command == "simulate":
            return cmd_simulate(rc, out)
        if args.command == "identify":
            return cmd_identify(rc, out)
        return cmd_analyze(rc, args.kind, out)
    except DivergedState as err:
        print(f"cabledyn: diverged: {err}", file=sys.stderr)
        return 3
    except CabledynError as err:
        print(f"cabledyn: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"cabledyn: io error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
