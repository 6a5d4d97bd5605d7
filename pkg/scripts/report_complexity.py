#!/usr/bin/env python3
"""Cost accounting for every synchronizer at a chosen grid geometry.

Prints the per-method table (FLOPs, parameters, optional measured runtime)
followed by the per-layer forward-pass breakdown of each classifier head.
FLOPs follow the 2-per-real-MAC / 8-per-complex-MAC convention with
elementwise work itemized separately, so the numbers are analytic and do
not depend on how any implementation happens to be vectorized.

At the default geometry (M=256, N=64) the headline numbers are:
cross-correlation 33,554,432 FLOPs, 2D autocorrelation 8,257,536 FLOPs,
two-stage forward 186,646,848 FLOPs at 10,500,032 parameters.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from otfs_sync.metrics import complexity_csv, complexity_report
from otfs_sync.nn.model import flops_report, param_count, two_stage_flops


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=256, help="delay bins")
    ap.add_argument("--N", type=int, default=64, help="Doppler bins")
    ap.add_argument("--preamble-length", type=int, default=256)
    ap.add_argument("--runtime", action="store_true",
                    help="also measure median single-capture runtime "
                         "(instantiates the models; slow at default scale)")
    ap.add_argument("--repeats", type=int, default=25)
    ap.add_argument("--out", help="write the per-method table as CSV")
    args = ap.parse_args()

    rows = complexity_report(
        args.M, args.N,
        preamble_len=args.preamble_length,
        repeats=args.repeats,
        measure_runtime=args.runtime,
    )
    print(f"per-capture cost at M={args.M}, N={args.N}:")
    for r in rows:
        params = f"{r.params:,}" if r.params is not None else "-"
        runtime = f"{1e3 * r.runtime_s:.3f} ms" if r.runtime_s is not None else "-"
        print(f"  {r.method:<14} {r.flops:>14,} FLOPs  {params:>14} params  {runtime}")
    if args.out:
        Path(args.out).write_text(complexity_csv(rows))
        print(f"wrote {args.out}")

    two_stage = two_stage_flops(args.M, args.N)
    for head in ("coarse", "fine", "onestage"):
        report = flops_report(args.M, args.N, head)
        print(f"\n{head} head ({param_count(args.M, args.N, head):,} parameters):")
        for line in report.lines():
            print(f"  {line}")
    print(f"\ntwo-stage forward total: {two_stage:,} FLOPs")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
