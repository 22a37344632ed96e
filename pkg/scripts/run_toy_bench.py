"""Multi-seed benchmark on the synthetic three-variable process.

For each seed this generates fresh training/test blocks with the built-in
toy generator (500 normal training samples; 100 normal + 400 faulty test
samples with a +1 step fault on the raw inputs), fits every requested
monitoring method, and reports missed detection rate (MDR) and false alarm
rate (FAR) per seed plus the across-seed medians.

Example:
    python3 scripts/run_toy_bench.py --seeds 5 --out /tmp/toy_bench
"""

import argparse
import statistics
from pathlib import Path

from scafd.cli import METHODS, BenchCase, BenchSpec, gen_toy, run_bench


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=5,
                        help="number of seeds (0..seeds-1)")
    parser.add_argument("--out", type=Path, default=Path("toy_bench_out"))
    parser.add_argument("--methods", default=",".join(METHODS),
                        help="comma-separated subset of " + ",".join(METHODS))
    parser.add_argument("--p", type=int, default=2)
    parser.add_argument("--zeta", type=float, default=0.01)
    parser.add_argument("--max-iters", type=int, default=150,
                        help="manifold optimizer iteration budget")
    args = parser.parse_args()

    methods = args.methods.split(",")
    mdr = {m: [] for m in methods}
    far = {m: [] for m in methods}
    for seed in range(args.seeds):
        train_path, test_path = gen_toy(args.out / f"gen{seed}", seed=seed)
        result = run_bench(BenchSpec(
            train_path=train_path,
            cases=[BenchCase(test_path, 100, f"s{seed}")],
            methods=methods,
            p=args.p,
            zeta=args.zeta,
            seed=seed,
            out_dir=args.out / f"seed{seed}",
            max_iters=args.max_iters,
        ))
        for method in methods:
            rates = result.rates(f"s{seed}", method)
            if rates is None:
                print(f"seed {seed}: {method} failed to train")
                continue
            mdr[method].append(rates[0])
            far[method].append(rates[1])
            print(f"seed {seed}  {method:<5} MDR {rates[0]:6.2f}%  "
                  f"FAR {rates[1]:5.2f}%")

    print("\nmedians over completed seeds:")
    for method in methods:
        if not mdr[method]:
            print(f"  {method:<5} (no completed runs)")
            continue
        print(f"  {method:<5} MDR {statistics.median(mdr[method]):6.2f}%  "
              f"FAR {statistics.median(far[method]):5.2f}%")


if __name__ == "__main__":
    main()
