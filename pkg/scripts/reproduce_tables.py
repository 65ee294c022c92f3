"""Write table2.csv ... table6.csv for the default configuration."""

from __future__ import annotations

import argparse

from wc4dvar.harness import ExperimentConfig, output_dir, reproduce_tables


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--output", help="output directory (default $WC4DVAR_OUTPUT or ./outputs)")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    out = output_dir(args.output)
    tables, _ = reproduce_tables(ExperimentConfig(seed=args.seed), out)
    for name, rows in tables.items():
        print(f"{name}:")
        for r in rows:
            print(f"  {r['network']:>4} {r['variant']:<20} I- [{r['neg_bound_lo']}, {r['neg_bound_hi']}]"
                  f"  I+ [{r['pos_bound_lo']}, {r['pos_bound_hi']}]  {r['verdict']}")
    print(f"written to {out}")


if __name__ == "__main__":
    main()
