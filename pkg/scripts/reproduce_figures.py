"""Write spectrum, bounds and residual CSV series for networks a-f."""

from __future__ import annotations

import argparse

from wc4dvar.harness import NETWORK_IDS, ExperimentConfig, output_dir, reproduce_figures


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--output", help="output directory (default $WC4DVAR_OUTPUT or ./outputs)")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--networks", nargs="+", choices=NETWORK_IDS, default=list(NETWORK_IDS))
    args = ap.parse_args()
    out = output_dir(args.output)
    results = reproduce_figures(ExperimentConfig(seed=args.seed), out, networks=args.networks)
    for net, (res, logs) in results.items():
        its = ", ".join(f"{f}: {log.iterations} ({log.final:.1e})" for f, log in logs.items())
        print(f"network {net} (p={res.ops.p}): {its}; contained={res.contained}")
    print(f"written to {out}")


if __name__ == "__main__":
    main()
