"""Batch front-end: `starnls <subcommand>` runs one reproducible experiment.

Subcommands: construct | spectrum | vk | evolve | travel | minimize |
stability.  Parameter precedence is flags > JSON config file (--config) >
built-in defaults; every run writes its fully resolved parameters into
``manifest.json`` in the output directory, and ``--from-manifest`` re-runs a
manifest (bit-identical outputs for the same build).  Float output uses 17
significant digits.

Exit codes: 0 success, 2 usage or configuration error, 3 existence-bound
violation (no standing wave at the requested frequency), 4 numerical failure
(non-convergence, blow-up).  Failures emit a JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import VertexCoupling, energy, make_grid, mass
from .dynamics import (
    EvolutionConfig,
    evolve,
    orbital_stability_experiment,
    traveling_wave_experiment,
)
from .errors import (
    BlowUpError,
    ConvergenceError,
    ExistenceBoundError,
    InvalidParameterError,
    NoSignChangeError,
    StarNLSError,
)
from .fieldio import (
    fmt,
    load_field_csv,
    read_manifest,
    save_field_csv,
    write_manifest,
    write_observables_csv,
)
from .spectral import (
    assemble_linearization,
    find_omega_star,
    lowest_eigenpairs,
    vk_derivative,
)
from .stationary import (
    StationarySpec,
    build,
    bump_offset,
    cubic_energy_spectrum,
    cubic_mass,
    recommended_edge_length,
)
from .variational import (
    MinimizationOptions,
    action,
    minimize_action_on_nehari,
    minimize_energy_fixed_mass,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_EXISTENCE = 3
EXIT_NUMERICAL = 4

SUBCOMMANDS = (
    "construct",
    "spectrum",
    "vk",
    "evolve",
    "travel",
    "minimize",
    "stability",
)


def _error_record(kind, message):
    json.dump({"error": kind, "message": str(message)}, sys.stderr)
    sys.stderr.write("\n")


def _grid_from_params(p):
    length = p["edge_length"]
    if length is None:
        length = recommended_edge_length(p["omega"], p["mu"])
        # keep Simpson-compatible spacing
        length = float(length)
    points = p["points"]
    if points % 2:
        points += 1
    return make_grid(p["edges"], length, points)


def _spec_from_params(p) -> StationarySpec:
    if p.get("kirchhoff") == "odd":
        return StationarySpec.kirchhoff_odd(p["omega"], p["mu"], p["edges"])
    if p.get("kirchhoff") == "even":
        return StationarySpec.kirchhoff_even(
            p["omega"], p["mu"], p["edges"], p.get("offset", 0.0)
        )
    return StationarySpec.delta_state(
        p["alpha"], p["omega"], p["mu"], p["edges"], p["j"]
    )


# -- subcommand drivers -----------------------------------------------------


def run_construct(p, outdir: Path):
    spec = _spec_from_params(p)
    grid = _grid_from_params(p)
    field = build(spec, grid)
    coupling = VertexCoupling(p["alpha"] if spec.kind == "delta" else 0.0)
    save_field_csv(outdir / "field.csv", field, coupling)
    observables = {
        "kind": spec.kind,
        "mass_quadrature": mass(field),
        "energy_quadrature": energy(field, coupling, p["mu"]),
        "vertex_value": field.vertex.real,
    }
    if spec.kind == "delta":
        observables["offset"] = bump_offset(spec)
        if p["mu"] == 1.0:
            observables["mass_closed_form"] = cubic_mass(
                p["edges"], p["omega"], p["alpha"]
            )
            observables["energy_closed_form"] = cubic_energy_spectrum(
                p["edges"], p["omega"], p["alpha"], p["j"]
            )
    elif spec.kind == "kirchhoff_even":
        observables["offset"] = p.get("offset", 0.0)
    with (outdir / "observables.json").open("w") as fh:
        json.dump(observables, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_spectrum(p, outdir: Path):
    spec = _spec_from_params(p)
    grid = _grid_from_params(p)
    field = build(spec, grid)
    coupling = VertexCoupling(p["alpha"] if spec.kind == "delta" else 0.0)
    report = {}
    for which in ("Lplus", "Lminus"):
        op = assemble_linearization(field, p["omega"], p["mu"], coupling, which)
        rep = lowest_eigenpairs(op, p["k"])
        report[which] = {
            "lowest_eigenvalues": [float(v) for v in rep.lowest_eigenvalues],
            "negative_count": rep.negative_count,
            "kernel_candidate_overlap": rep.kernel_candidate_overlap,
        }
    with (outdir / "spectral_report.json").open("w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _vk_point(args):
    alpha, omega, mu, edges = args
    return vk_derivative(alpha, omega, mu, edges)


def run_vk(p, outdir: Path):
    lo, hi = (float(s) for s in p["omega_range"].split(":"))
    bound = p["alpha"] ** 2 / p["edges"] ** 2
    if lo <= bound:
        raise ExistenceBoundError(
            f"omega range starts at {lo}, at or below the existence bound {bound}"
        )
    omegas = np.geomspace(lo, hi, p["samples"])
    jobs = p.get("jobs") or 1
    args = [(p["alpha"], float(w), p["mu"], p["edges"]) for w in omegas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(_vk_point, args))
    else:
        values = [_vk_point(a) for a in args]
    with (outdir / "vk.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega", "vk_value"])
        for w, val in zip(omegas, values):
            writer.writerow([fmt(w), fmt(val)])
    signs = np.sign(values)
    sign_changes = int(np.sum(signs[1:] * signs[:-1] < 0))
    report = {"sign_changes": sign_changes}
    if p["mu"] > 2:
        try:
            report["omega_star"] = find_omega_star(
                p["alpha"], p["mu"], p["edges"], p["bracket_tolerance"]
            )
        except NoSignChangeError:
            report["omega_star"] = None
    with (outdir / "vk_report.json").open("w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _evolution_config(p):
    return EvolutionConfig(
        dt=p["dt"],
        t_final=p["t_final"],
        scheme=p["scheme"],
        observables_stride=p["stride"],
        snapshot_stride=p.get("snapshot_stride", 0),
    )


def run_evolve(p, outdir: Path):
    if p.get("input"):
        field, coupling = load_field_csv(p["input"])
    else:
        spec = _spec_from_params(p)
        grid = _grid_from_params(p)
        field = build(spec, grid)
        coupling = VertexCoupling(p["alpha"] if spec.kind == "delta" else 0.0)
    config = _evolution_config(p)
    traj = evolve(field, coupling, p["mu"], config, reference=field)
    write_observables_csv(outdir / "observables.csv", traj)
    if traj.snapshots:
        snapdir = outdir / "snapshots"
        snapdir.mkdir(exist_ok=True)
        for idx, (t, fld) in enumerate(traj.snapshots):
            save_field_csv(snapdir / f"snapshot_{idx:04d}.csv", fld, coupling)
    save_field_csv(outdir / "final.csv", traj.final, coupling)


def run_travel(p, outdir: Path):
    grid = _grid_from_params(p)
    config = _evolution_config(p)
    report = traveling_wave_experiment(
        p["omega"], p["mu"], p["edges"], p["a"], p["v"], grid, config
    )
    with (outdir / "travel_report.json").open("w") as fh:
        json.dump(
            {"max_mismatch": report.max_mismatch, "parameters": report.parameters},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    with (outdir / "mismatch.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "sup_mismatch"])
        for t, m in zip(report.times, report.sup_mismatch):
            writer.writerow([fmt(t), fmt(m)])


def run_minimize(p, outdir: Path):
    grid = _grid_from_params(p)
    coupling = VertexCoupling(p["alpha"])
    opts = MinimizationOptions(
        max_iterations=p["max_iterations"],
        step_size=p["step_size"],
        tolerance=p["tolerance"],
        seed=p["seed"],
    )
    if p["mode"] == "action":
        result = minimize_action_on_nehari(p["omega"], coupling, p["mu"], grid, opts)
        objective_name = "action"
    else:
        target = p.get("target_mass")
        if target is None:
            target = cubic_mass(p["edges"], p["omega"], p["alpha"])
        result = minimize_energy_fixed_mass(
            target, coupling, p["mu"], grid, opts, omega_guess=p["omega"]
        )
        objective_name = "energy"
    with (outdir / "iterates.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", objective_name, "gradient_norm", "mass"])
        for it, obj, gn, m in result.history:
            writer.writerow([it, fmt(obj), fmt(gn), fmt(m)])
    save_field_csv(outdir / "final.csv", result.field, coupling)
    summary = {
        "converged": result.converged,
        "iterations": result.iterations,
        objective_name: result.objective,
        "gradient_norm": result.gradient_norm,
        "mass": mass(result.field),
        "action": action(result.field, p["omega"], coupling, p["mu"]),
    }
    with (outdir / "report.json").open("w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_stability(p, outdir: Path):
    spec = _spec_from_params(p)
    grid = _grid_from_params(p)
    ground = build(spec, grid)
    coupling = VertexCoupling(p["alpha"] if spec.kind == "delta" else 0.0)
    config = _evolution_config(p)
    report = orbital_stability_experiment(
        ground, p["perturbation"], coupling, p["mu"], config, seed=p["seed"]
    )
    with (outdir / "deviation.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "deviation"])
        for t, d in zip(report.times, report.deviation):
            writer.writerow([fmt(t), fmt(d)])
    with (outdir / "stability_report.json").open("w") as fh:
        json.dump(
            {
                "initial_deviation": report.initial_deviation,
                "max_deviation": report.max_deviation,
                "amplification": report.amplification,
                "parameters": report.parameters,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")


RUNNERS = {
    "construct": run_construct,
    "spectrum": run_spectrum,
    "vk": run_vk,
    "evolve": run_evolve,
    "travel": run_travel,
    "minimize": run_minimize,
    "stability": run_stability,
}

DEFAULTS = {
    "construct": dict(
        alpha=-1.0, omega=1.0, mu=1.0, edges=3, j=0, kirchhoff=None, offset=0.0,
        edge_length=None, points=2000,
    ),
    "spectrum": dict(
        alpha=-1.0, omega=1.0, mu=1.0, edges=3, j=0, kirchhoff=None, offset=0.0,
        edge_length=None, points=1200, k=4,
    ),
    "vk": dict(
        alpha=-1.0, mu=1.0, edges=3, omega_range="0.15:10", samples=60,
        bracket_tolerance=1e-8, jobs=1,
    ),
    "evolve": dict(
        alpha=-1.0, omega=1.0, mu=1.0, edges=3, j=0, kirchhoff=None, offset=0.0,
        edge_length=None, points=400, input=None, dt=1e-3, t_final=5.0,
        scheme="strang_splitting", stride=10, snapshot_stride=0,
    ),
    "travel": dict(
        omega=1.0, mu=1.0, edges=4, a=-2.0, v=1.0, edge_length=12.0, points=240,
        dt=5e-4, t_final=4.0, scheme="strang_splitting", stride=10,
    ),
    "minimize": dict(
        alpha=-5.0, omega=4.0, mu=1.0, edges=3, mode="action", target_mass=None,
        edge_length=None, points=480, max_iterations=3000, step_size=1.0,
        tolerance=1e-7, seed=1,
    ),
    "stability": dict(
        alpha=-5.0, omega=4.0, mu=1.0, edges=3, j=0, kirchhoff=None, offset=0.0,
        edge_length=None, points=480, perturbation=0.01, seed=1, dt=1e-3,
        t_final=20.0, scheme="strang_splitting", stride=100,
    ),
}

_FLAG_TYPES = {
    "alpha": float, "omega": float, "mu": float, "edges": int, "j": int,
    "offset": float, "edge_length": float, "points": int, "k": int,
    "omega_range": str, "samples": int, "bracket_tolerance": float, "jobs": int,
    "input": str, "dt": float, "t_final": float, "scheme": str, "stride": int,
    "snapshot_stride": int, "a": float, "v": float, "mode": str,
    "target_mass": float, "max_iterations": int, "step_size": float,
    "tolerance": float, "seed": int, "kirchhoff": str, "perturbation": float,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="starnls",
        description="Standing waves, stability, and dynamics of the focusing "
        "NLS on a star graph with a delta vertex",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand")
    for name, defaults in DEFAULTS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--out", type=str, default=None, help="output directory")
        sp.add_argument("--config", type=str, default=None, help="JSON config file")
        for key in defaults:
            flag = "--" + key.replace("_", "-")
            sp.add_argument(flag, type=_FLAG_TYPES[key], default=None, dest=key)
    rerun = sub.add_parser("rerun")
    rerun.add_argument("--from-manifest", required=True, dest="from_manifest")
    rerun.add_argument("--out", type=str, default=None)
    return parser


def _merge_params(name, args):
    params = dict(DEFAULTS[name])
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(params)
        if unknown:
            raise InvalidParameterError(
                f"config keys {sorted(unknown)} not valid for {name}"
            )
        params.update(loaded)
    for key in DEFAULTS[name]:
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    return params


def _dispatch(name, params, outdir):
    outdir = Path(outdir) if outdir else Path("runs") / name
    outdir.mkdir(parents=True, exist_ok=True)
    write_manifest(outdir, name, params)
    RUNNERS[name](params, outdir)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    if args.subcommand is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        if args.subcommand == "rerun":
            manifest = read_manifest(args.from_manifest)
            if manifest.subcommand not in RUNNERS:
                raise InvalidParameterError(
                    f"manifest names unknown subcommand {manifest.subcommand!r}"
                )
            return _dispatch(manifest.subcommand, manifest.parameters, args.out)
        params = _merge_params(args.subcommand, args)
        return _dispatch(args.subcommand, params, args.out)
    except ExistenceBoundError as exc:
        _error_record("existence-bound", exc)
        return EXIT_EXISTENCE
    except (ConvergenceError, BlowUpError) as exc:
        _error_record("numerical", exc)
        return EXIT_NUMERICAL
    except (InvalidParameterError, StarNLSError, OSError, ValueError) as exc:
        _error_record("invalid", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
