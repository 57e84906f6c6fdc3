#!/usr/bin/env python3
"""Run every golden scenario and print a pass/fail line per case.

    python scripts/run_golden_suite.py --out out/golden --threads 4
    python scripts/run_golden_suite.py --check-determinism
"""
from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

from hybridsim.reproduction import run_golden_suite


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("out/golden"))
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--check-determinism", action="store_true",
                    help="rerun with a different thread count and compare digests")
    args = ap.parse_args(argv)

    report = run_golden_suite(args.out, args.threads)
    ok = report["passed"]
    if args.check_determinism:
        with tempfile.TemporaryDirectory() as tmp:
            again = run_golden_suite(tmp, threads=1 if args.threads > 1 else 4, verbose=False)
        same = all(a.get("digests") == b.get("digests") for a, b in zip(report["cases"], again["cases"]))
        print(f"[{'PASS' if same else 'FAIL'}] digests identical across thread counts")
        ok = ok and same
    print(f"report: {args.out / 'report.json'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
