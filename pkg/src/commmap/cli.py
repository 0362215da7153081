"""Command-line driver: ``commmap {synth,local,decentralized,map}``."""
import argparse
import json
import sys

from . import data as D
from ._accel import backend_name
from .experiments import (
    ExperimentConfig,
    GridSpec,
    build_shared_packages,
    emit_map_grid,
    format_table,
    results_json,
    run_decentralized_experiment,
    run_local_experiment,
    write_summary_csv,
)
from .fusion import fuse
from .wire import read_container, write_container


def _center(text):
    try:
        agent, coords = text.split(":", 1)
        vals = tuple(float(v) for v in coords.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected AGENT:x1,x2,x3,x4, got {text!r}") from None
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("a center needs four coordinates")
    return int(agent), vals


def _add_synth_args(p):
    d = D.SynthSpec()
    g = p.add_argument_group("synthetic dataset")
    g.add_argument("--agents", type=int, default=d.n_agents)
    g.add_argument("--slots", type=int, default=d.n_slots, help="TDMA slots")
    g.add_argument("--width", type=float, default=d.width, help="lawnmower leg length (m)")
    g.add_argument("--legs", type=int, default=d.legs)
    g.add_argument("--leg-spacing", type=float, default=d.leg_spacing)
    g.add_argument("--passes", type=int, default=d.passes)
    g.add_argument("--a", type=float, default=d.a, help="logit intercept")
    g.add_argument("--b", type=float, default=d.b, help="logit slope per metre")
    g.add_argument("--noise", type=float, default=d.noise, help="spatial perturbation std")
    g.add_argument("--field-lengthscale", type=float, default=d.field_lengthscale)
    g.add_argument("--position-noise", type=float, default=d.position_noise)


def _synth_spec(args, seed):
    return D.SynthSpec(
        n_agents=args.agents, n_slots=args.slots, width=args.width, legs=args.legs,
        leg_spacing=args.leg_spacing, passes=args.passes, a=args.a, b=args.b, noise=args.noise,
        field_lengthscale=args.field_lengthscale, position_noise=args.position_noise, seed=seed,
    )


def _add_experiment_args(p):
    d = ExperimentConfig()
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="CSV of communication events")
    src.add_argument("--synthetic-seed", type=int, help="generate a synthetic dataset with this seed")
    _add_synth_args(p)
    g = p.add_argument_group("model")
    g.add_argument("--lengthscale", type=float, default=d.lengthscale)
    g.add_argument("--radius", type=float, default=d.radius, help="locality radius (standardized)")
    g.add_argument("--center", type=_center, action="append", metavar="AGENT:x1,x2,x3,x4",
                   help="explicit region center in standardized coordinates (default: medoid)")
    g.add_argument("--gibbs-iterations", type=int, default=d.gibbs_iterations)
    g.add_argument("--quadrature-order", type=int, default=d.quadrature_order)
    g.add_argument("--jitter", type=float, default=d.jitter)
    g.add_argument("--seed", type=int, default=d.seed)


def _load_events(args):
    if args.data:
        return D.ingest_csv(args.data)
    return D.synthesize_dataset(_synth_spec(args, args.synthetic_seed))


def _config(args, **extra):
    centers = dict(args.center) if args.center else "auto"
    return ExperimentConfig(
        lengthscale=args.lengthscale, radius=args.radius, centers=centers,
        gibbs_iterations=args.gibbs_iterations, quadrature_order=args.quadrature_order,
        jitter=args.jitter, seed=args.seed, **extra,
    )


def cmd_synth(args):
    events = D.synthesize_dataset(_synth_spec(args, args.seed))
    D.write_csv(events, args.out)
    if not args.quiet:
        print(f"wrote {len(events)} events to {args.out}")


def cmd_experiment(args):
    events = _load_events(args)
    cfg = _config(args, ms=tuple(args.m), policies=tuple(args.policies), permutations=args.permutations,
                  train_fraction=args.train_fraction)
    run = run_local_experiment if args.command == "local" else run_decentralized_experiment
    results = run(events, cfg)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(results_json(results))
    if args.csv:
        write_summary_csv(results, args.csv)
    if not args.quiet:
        sys.stdout.write(format_table(results))
        if args.command == "decentralized":
            sizes = ", ".join(f"m={m}: {n} B" for m, n in results["wire_bytes_per_package"].items())
            print(f"package size on the wire: {sizes}; "
                  f"test points outside every region excluded: {results['excluded_test_points']['total']}")


def cmd_map(args):
    events = _load_events(args)
    cfg = _config(args, ms=(args.m,), permutations=1)
    if args.packages:
        std = D.Standardizer.fit(events)
        pkgs = read_container(args.packages)
    else:
        std, pkgs = build_shared_packages(events, cfg, args.policy, args.m)
    if args.packages_out:
        write_container(pkgs, args.packages_out)
    fused = fuse(pkgs)
    grid = GridSpec(tuple(args.fixed), tuple(args.easting), tuple(args.northing), args.nx, args.ny, args.vary)
    rows = emit_map_grid(fused, grid, std, cfg.params, args.out, cfg.quadrature_order, cfg.jitter)
    if not args.quiet:
        print(f"wrote {rows.shape[0]} grid cells from {len(pkgs)} package(s), M={fused.m}, to {args.out}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="suppress the human-readable table")
    p = argparse.ArgumentParser(prog="commmap", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({backend_name()} backend)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic event CSV")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    _add_synth_args(s)
    s.set_defaults(func=cmd_synth)

    for name, helptext in (("local", "per-agent selection inside its own region"),
                           ("decentralized", "share packages, fuse, predict all regions")):
        e = sub.add_parser(name, parents=[common], help=helptext)
        _add_experiment_args(e)
        d = ExperimentConfig()
        e.add_argument("--m", type=int, nargs="+", default=list(d.ms))
        e.add_argument("--policies", nargs="+", default=list(d.policies), choices=["good", "random", "bad"])
        e.add_argument("--permutations", type=int, default=d.permutations)
        e.add_argument("--train-fraction", type=float, default=d.train_fraction)
        e.add_argument("--json", help="write full results JSON here")
        e.add_argument("--csv", help="write the summary table as CSV here")
        e.set_defaults(func=cmd_experiment)

    m = sub.add_parser("map", parents=[common], help="emit a probability-of-success grid")
    _add_experiment_args(m)
    m.add_argument("--policy", default="good", choices=["good", "random", "bad"])
    m.add_argument("--m", type=int, default=2)
    m.add_argument("--packages", help="read packages from this container instead of building them")
    m.add_argument("--packages-out", help="write the packages used to this container")
    m.add_argument("--vary", default="rx", choices=["rx", "tx"], help="which end of the link moves over the grid")
    m.add_argument("--fixed", type=float, nargs=2, required=True, metavar=("EASTING", "NORTHING"))
    m.add_argument("--easting", type=float, nargs=2, required=True, metavar=("MIN", "MAX"))
    m.add_argument("--northing", type=float, nargs=2, required=True, metavar=("MIN", "MAX"))
    m.add_argument("--nx", type=int, default=50)
    m.add_argument("--ny", type=int, default=50)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_map)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, ArithmeticError) as exc:
        # ConditioningError derives from LinAlgError (a ValueError subclass in numpy)
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
