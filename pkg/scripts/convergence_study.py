#!/usr/bin/env python3
"""Refinement study of the reduce / reconstruct round trip.

Runs the equivalence experiment for one or more configs and prints the
per-level residual table plus fitted orders. Optionally writes the table as CSV.

    python scripts/convergence_study.py scripts/configs/constant_e.json scripts/configs/plane_wave.json
    python scripts/convergence_study.py --refine 4 --csv levels.csv scripts/configs/plane_wave.json
"""
import argparse
import csv
import sys
import time

from diracone.experiment import ExperimentConfig, load_config, run_equivalence

COLUMNS = ("h", "solver_dirac", "forward", "reconstruction", "rebuilt_dirac", "negative", "coverage")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("configs", nargs="*", help="experiment configs (default: built-in constant-E run)")
    p.add_argument("--refine", type=int, help="override the number of refinement levels")
    p.add_argument("--csv", help="write every level of every config to this file")
    args = p.parse_args(argv)

    cfgs = [(path, load_config(path)) for path in args.configs] or [("default", ExperimentConfig())]
    rows, ok = [], True
    for path, cfg in cfgs:
        if args.refine:
            data = cfg.to_dict()
            data["refine"] = args.refine
            cfg = ExperimentConfig.from_dict(data)
        t0 = time.perf_counter()
        report = run_equivalence(cfg)
        print(f"== {path}  field={cfg.field['name']}  ({time.perf_counter() - t0:.1f} s)")
        print("  ".join(f"{c:>14}" for c in COLUMNS))
        for level in report.data["levels"]:
            print("  ".join(f"{level[c]:14.6e}" for c in COLUMNS))
            rows.append({"config": path, **{c: level[c] for c in COLUMNS}})
        for line in report.lines():
            print("  " + line)
        ok &= report.passed
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["config", *COLUMNS])
            w.writeheader()
            w.writerows(rows)
        print(f"wrote {args.csv}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
