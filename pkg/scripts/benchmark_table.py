"""RF versus SCRF boundary scores on a BSDS300/BSDS500 subset (dataset not bundled)."""
import argparse
import os

from scrf.config import LambdaMode
from scrf.experiments import run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", default=os.environ.get("SCRF_BSDS_DIR"),
                    help="dataset root containing images/ and human/ or groundTruth/")
    ap.add_argument("--limit", type=int, default=10, help="number of images (sorted by id)")
    ap.add_argument("--split", default="test")
    ap.add_argument("--lambdas", default="0,8,N(8,4)")
    ap.add_argument("--jobs", type=int, default=None)
    args = ap.parse_args()
    if not args.root:
        ap.error("--root or SCRF_BSDS_DIR is required")
    modes = [LambdaMode.parse(t) for t in args.lambdas.split(",")]
    res = run_benchmark(args.root, modes, limit=args.limit, split=args.split, jobs=args.jobs)
    print(f"{'lambda':>8}  {'ODS':>6}  {'OIS':>6}  {'AP':>6}")
    for name, s in res.items():
        print(f"{name:>8}  {s.ods:6.3f}  {s.ois:6.3f}  {s.ap:6.3f}")


if __name__ == "__main__":
    main()
