"""Command line entry point.

Subcommands:
    simulate    one run; trajectories, quantiles, terminals, summary
    compare     paired coupled vs severed runs; bias_report.json
    cluster     archetype extraction and rolling correlations
    salience    reweight a finished run through a lens
    decompose   the three bias diagnostics
    topology    factor-graph structure of the composed model (no run)

Exit codes: 0 success, 2 configuration problem, 3 runtime or IO failure.
"""

import argparse
import json
import sys

import numpy as np

from .analysis import (archetypes, bias_decomposition, bias_table,
                       rolling_correlations)
from .composition import CompositionError, validate_factor_graph
from .config import ConfigError, load_config
from .engine import (BUILTIN_LIKELIHOODS, EmptySupportError, SalienceLens,
                     build_model, paired_stores, run_simulation,
                     salience_reweight)
from .nk import DeterminacyError
from .outputs import (OutputError, _json_bytes, _wmean_sd, emit_outputs,
                      write_with_manifest)


def _add_common(p):
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one configuration value (repeatable)")
    p.add_argument("--out", help="output directory (default from config)")
    p.add_argument("--particles", type=int)
    p.add_argument("--weeks", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--narratives", type=int, choices=(3, 4))
    p.add_argument("--calibration", choices=("baseline", "us-scale"))
    p.add_argument("--mode", choices=("coupled", "uncoupled", "custom"))
    p.add_argument("--workers", type=int, default=1,
                   help="worker threads (results identical for any count)")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="cosim",
        description="Composed epidemic-macro-behaviour-fiscal particle ensembles")
    sub = ap.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="run one ensemble")
    _add_common(ps)
    ps.add_argument("--no-trajectories", action="store_true",
                    help="skip the per-particle trajectory file")
    ps.add_argument("--symmetrised", action="store_true",
                    help="replace each factor by its even part")

    pc = sub.add_parser("compare", help="coupled vs severed paired runs")
    _add_common(pc)
    pc.add_argument("--trajectories", action="store_true",
                    help="also write per-particle trajectories")

    pk = sub.add_parser("cluster", help="archetypes and correlations")
    _add_common(pk)
    pk.add_argument("--k", type=int, help="number of archetypes")

    pl = sub.add_parser("salience", help="lens reweighting")
    _add_common(pl)
    pl.add_argument("--lens", help='lens spec, e.g. "y_T < -0.01"')

    pd_ = sub.add_parser("decompose", help="three-test bias decomposition")
    _add_common(pd_)
    pd_.add_argument("--likelihood", default="none", choices=BUILTIN_LIKELIHOODS)

    pt = sub.add_parser("topology", help="factor-graph structure")
    _add_common(pt)
    return ap


def _config_from_args(args):
    overrides = {}
    for item in args.set:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        overrides[(section.strip(), key.strip())] = value.strip()
    for name in ("particles", "weeks", "seed", "narratives", "calibration", "mode"):
        val = getattr(args, name, None)
        if val is not None:
            overrides[("run", name)] = str(val)
    if getattr(args, "out", None):
        overrides[("run", "output_dir")] = args.out
    if getattr(args, "lens", None):
        overrides[("run", "lens")] = args.lens
    if getattr(args, "k", None):
        overrides[("run", "cluster_k")] = str(args.k)
    return load_config(args.config, overrides=overrides)


def cmd_simulate(args):
    cfg = _config_from_args(args)
    model = build_model(cfg)
    store = run_simulation(model, cfg, workers=args.workers,
                           symmetrised=args.symmetrised)
    manifest = emit_outputs(store, cfg.output_dir,
                            include_trajectories=not args.no_trajectories)
    print(f"wrote {len(manifest['files'])} files to {cfg.output_dir}")
    return 0


def cmd_compare(args):
    cfg = _config_from_args(args)
    coupled, uncoupled = paired_stores(cfg, workers=args.workers)
    report = bias_table(coupled, uncoupled)
    base = cfg.output_dir
    emit_outputs(coupled, f"{base}/coupled",
                 include_trajectories=args.trajectories)
    emit_outputs(uncoupled, f"{base}/uncoupled",
                 include_trajectories=args.trajectories)
    write_with_manifest(base, {"bias_report.json": _json_bytes(report.to_dict())},
                        seed=cfg.seed, label="compare")
    for var, row in report.variables.items():
        print(f"{var}: coupled {row['coupled_mean']:+.4f} "
              f"uncoupled {row['uncoupled_mean']:+.4f} "
              f"shift {row['shift']:+.4f}")
    return 0


def cmd_cluster(args):
    cfg = _config_from_args(args)
    model = build_model(cfg)
    store = run_simulation(model, cfg, workers=args.workers)
    aset = archetypes(store, cfg.cluster_k, seed=cfg.seed)
    corr = rolling_correlations(store)
    emit_outputs(store, cfg.output_dir, include_trajectories=False,
                 archetype_set=aset, correlations=corr)
    for c in range(aset.k):
        print(f"archetype {c}: mass {aset.mass[c]:.3f} "
              f"terminal rejection {aset.rho_terminal[c]:.3f}")
    return 0


def cmd_salience(args):
    cfg = _config_from_args(args)
    try:
        lens = SalienceLens.from_spec(cfg.lens)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    model = build_model(cfg)
    store = run_simulation(model, cfg, workers=args.workers)
    weights, ess_after = salience_reweight(store, lens)
    terminal_means = {}
    for var in ("y", "I", "D", "rho", "v"):
        m, sd = _wmean_sd(store.terminal(var), weights)
        terminal_means[var] = {"mean": m, "sd": sd}
    lens_values = np.asarray(lens.fn(store), dtype=float)
    emit_outputs(store, cfg.output_dir, include_trajectories=False,
                 salience={"lens": lens.name, "lens_values": lens_values,
                           "weights": weights, "ess": ess_after,
                           "terminal_means": terminal_means})
    print(f"lens {lens.name!r}: ess {store.n_particles} -> {ess_after:.1f}")
    return 0


def cmd_decompose(args):
    cfg = _config_from_args(args)
    result = bias_decomposition(cfg, likelihood_name=args.likelihood,
                                workers=args.workers)
    write_with_manifest(cfg.output_dir,
                        {"decomposition.json": _json_bytes(result)},
                        seed=cfg.seed, label="decompose")
    s = result["structural"]
    print(f"sampling: {result['sampling']['verdict']} "
          f"(ratio {result['sampling']['ratio']})")
    print(f"structural: {s['structural_component']:+.4f} "
          f"(mass {s['original_mass']:.4f} -> {s['symmetrised_mass']:.4f})")
    print(f"observational: {result['observational']['observational_component']:+.4f}")
    return 0


def cmd_topology(args):
    cfg = _config_from_args(args)
    model = build_model(cfg)
    report = validate_factor_graph(model)
    payload = report.to_dict()
    write_with_manifest(cfg.output_dir, {"topology.json": _json_bytes(payload)},
                        seed=cfg.seed, label="topology")
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "cluster": cmd_cluster,
    "salience": cmd_salience,
    "decompose": cmd_decompose,
    "topology": cmd_topology,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except (OutputError, OSError) as e:
        print(f"io error: {e}", file=sys.stderr)
        return 3
    except (DeterminacyError, CompositionError, EmptySupportError,
            ValueError, RuntimeError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
