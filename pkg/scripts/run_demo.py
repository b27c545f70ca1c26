#!/usr/bin/env python3
"""Run the built-in walls-and-poles demonstration and print the summary.

Equivalent to `conflict demo paper-example`; kept as a script so the
pipeline can be launched without installing the console entry point.
"""

import argparse
import json
import sys

from confset.demo import run_demo


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demo_out", help="output directory")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    summary = run_demo(args.out, workers=args.workers, seed=args.seed)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0 if summary["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
