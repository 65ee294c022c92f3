"""Command-line entry point.

Subcommands share one config: a TOML file (``--config``) with optional
``[model]``, ``[covariance]``, ``[solver]`` and ``[experiment]`` tables,
overridden by flags. Artifacts go to ``--output``, else ``$WC4DVAR_OUTPUT``,
else ``./outputs``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .errors import ConfigError, NoObservationsError
from .harness import (NETWORK_IDS, ExperimentConfig, analyse, output_dir, reproduce_figures,
                      reproduce_tables, run_twin, solve, verify, write_network_artifacts)
from .operators import Formulation

EXIT_USAGE = 2
EXIT_VIOLATION = 1


def load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    cfg = ExperimentConfig.from_dict(data)
    exp = {}
    if args.network is not None:
        exp["network"] = args.network
    if args.seed is not None:
        exp["seed"] = args.seed
    if args.eig_method is not None:
        exp["eig_method"] = args.eig_method
    cfg = replace(cfg, **exp)
    cov = {k: v for k, v in (("sigma_o", args.sigma_o), ("sigma_b", args.sigma_b)) if v is not None}
    if cov:
        cfg = replace(cfg, covariance=replace(cfg.covariance, **cov))
    solver = {k: v for k, v in (("tol", args.tol), ("max_iters", args.max_iters)) if v is not None}
    if solver:
        cfg = replace(cfg, solver=replace(cfg.solver, **solver))
    return cfg


def _formulations(args):
    return [Formulation(f) for f in args.formulation] if args.formulation else list(Formulation)


def cmd_simulate(cfg, args, out):
    twin = run_twin(cfg)
    net = twin.network()
    ops = twin.operators(net)
    b, d = twin.rhs(ops)
    np.savetxt(out / "truth.csv", twin.truth.states, delimiter=",")
    np.savetxt(out / "forecast.csv", twin.forecast.states, delimiter=",")
    np.savetxt(out / "background.csv", twin.background[None, :], delimiter=",")
    np.savetxt(out / f"b_{cfg.network}.csv", b, delimiter=",")
    np.savetxt(out / f"d_{cfg.network}.csv", d, delimiter=",")
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2))
    print(f"network {cfg.network}: s={ops.s} p={ops.p} |b|={np.linalg.norm(b):.4g} |d|={np.linalg.norm(d):.4g}")
    return 0


def cmd_spectrum(cfg, args, out):
    res = analyse(run_twin(cfg), cfg.network, formulations=_formulations(args))
    for f, spec in res.spectra.items():
        spec.to_csv(out / f"spectrum_{f}_{cfg.network}.csv")
        parts = [f"{f}: inertia {spec.counts}"]
        for label, vals in (("negative", spec.negative()), ("positive", spec.positive())):
            if vals.size:
                parts.append(f"{label} [{vals[0]:.4g}, {vals[-1]:.4g}]")
        print(", ".join(parts))
    (out / f"summary_{cfg.network}.json").write_text(json.dumps(res.summary.as_dict(), indent=2))
    return 0


def cmd_bounds(cfg, args, out):
    res = analyse(run_twin(cfg), cfg.network, formulations=_formulations(args), with_an=args.an)
    write_network_artifacts(out, res)
    for f, rep in res.bounds.items():
        neg = f"I- = [{rep.negative.lo:.4g}, {rep.negative.hi:.4g}]  " if rep.negative else ""
        print(f"{f}: {neg}I+ = [{rep.positive.lo:.4g}, {rep.positive.hi:.4g}]  "
              f"{'CONTAINED' if rep.containment.contained else 'VIOLATED'}")
    return 0 if res.contained else EXIT_VIOLATION


def cmd_solve(cfg, args, out):
    twin = run_twin(cfg)
    net = twin.network()
    for f in _formulations(args):
        inc, log = solve(twin, net, f)
        log.to_csv(out / f"residuals_{f}_{cfg.network}.csv")
        print(f"{f}: {log.iterations} iterations, relative residual {log.final:.3e}, "
              f"converged={log.converged}, |dx|={np.linalg.norm(inc.dx):.4g}")
    return 0


def cmd_tables(cfg, args, out):
    tables, _ = reproduce_tables(cfg, out)
    bad = [k for k, rows in tables.items() for r in rows if r["verdict"] != "CONTAINED"]
    for k, rows in tables.items():
        print(f"{k}: {len(rows)} rows, " + ("all CONTAINED" if k not in bad else "VIOLATION"))
    return EXIT_VIOLATION if bad else 0


def cmd_figures(cfg, args, out):
    results = reproduce_figures(cfg, out, networks=args.networks or NETWORK_IDS)
    bad = False
    for net, (res, logs) in results.items():
        bad |= not res.contained
        conv = ", ".join(f"{f}:{log.iterations}{'' if log.converged else '*'}" for f, log in logs.items())
        print(f"network {net}: iterations {conv}")
    return EXIT_VIOLATION if bad else 0


def cmd_verify(cfg, args, out):
    ok, summary = verify(cfg, out)
    print(json.dumps({"network": summary["network"], "ok": ok, "checks": summary["checks"]}, indent=2))
    return 0 if ok else EXIT_VIOLATION


COMMANDS = {
    "simulate": (cmd_simulate, "run the identical-twin experiment and write b, d and trajectories"),
    "spectrum": (cmd_spectrum, "dense eigenvalues and spectral summary"),
    "bounds": (cmd_bounds, "eigenvalue intervals with containment verdicts"),
    "solve": (cmd_solve, "MINRES/CG residual histories"),
    "tables": (cmd_tables, "reproduce the interval tables"),
    "figures": (cmd_figures, "spectra and residual curves for every network"),
    "verify": (cmd_verify, "property suite with a JSON verdict summary"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--output", help="output directory (default $WC4DVAR_OUTPUT or ./outputs)")
    common.add_argument("--network", choices=NETWORK_IDS)
    common.add_argument("--seed", type=int)
    common.add_argument("--sigma-o", type=float, dest="sigma_o")
    common.add_argument("--sigma-b", type=float, dest="sigma_b")
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iters", type=int, dest="max_iters")
    common.add_argument("--eig-method", choices=("lapack", "jacobi"), dest="eig_method")
    common.add_argument("--formulation", action="append", choices=[f.value for f in Formulation])

    parser = argparse.ArgumentParser(prog="wc4dvar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_)
        if name == "bounds":
            p.add_argument("--an", action="store_true", help="also compute Axelsson-Neytcheva bounds")
        if name == "figures":
            p.add_argument("--networks", nargs="+", choices=NETWORK_IDS)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        out = output_dir(args.output)
        return COMMANDS[args.command][0](cfg, args, out)
    except (ConfigError, NoObservationsError) as exc:
        print(f"wc4dvar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
