"""Compare the compiled and pure-python simulation kernels.

Both kernels run the identical replication set (same seed, same
substreams) so the timing difference is pure interpreter overhead;
the script also asserts the outputs agree bit for bit.

Usage:
    python3 benchmarks/bench_sim.py
    python3 benchmarks/bench_sim.py --b 50 --rates 60,4.5 --horizon 200000
"""

import argparse
import time

from blockqueue.des import SimConfig, available_kernels, run_replication
from blockqueue.priority import PriorityTraffic
from blockqueue.service import ServiceDistribution


def time_kernel(cfg: SimConfig, kernel: str):
    start = time.perf_counter()
    reps = [run_replication(cfg, r, kernel=kernel) for r in range(cfg.replications)]
    return time.perf_counter() - start, reps


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--b", type=int, default=10)
    parser.add_argument("--mu", type=float, default=1.0)
    parser.add_argument("--rates", default="6,2", help="per-class arrival rates")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--replications", type=int, default=10)
    parser.add_argument("--warmup", type=int, default=10_000)
    parser.add_argument("--horizon", type=int, default=100_000)
    args = parser.parse_args()

    rates = tuple(float(part) for part in args.rates.split(","))
    traffic = PriorityTraffic(
        rates=rates, service=ServiceDistribution.exponential(args.mu), b=args.b
    )
    cfg = SimConfig(
        traffic=traffic,
        seed=args.seed,
        replications=args.replications,
        warmup=args.warmup,
        horizon=args.horizon,
    )
    confirmations = args.replications * (args.warmup + args.horizon)

    kernels = available_kernels()
    print(f"kernels: {', '.join(kernels)}")
    print(
        f"workload: {args.replications} replications x "
        f"{args.warmup + args.horizon} confirmations, b={args.b}, rates={rates}"
    )

    timings = {}
    results = {}
    for kernel in kernels:
        elapsed, reps = time_kernel(cfg, kernel)
        timings[kernel] = elapsed
        results[kernel] = [(r.counts, r.sums, r.mean_in_system, r.idle_fraction) for r in reps]
        print(f"  {kernel:>8}: {elapsed:8.3f} s  ({confirmations / elapsed:,.0f} confirmations/s)")

    if len(kernels) == 2:
        if results["compiled"] != results["pure"]:
            print("MISMATCH: kernels disagree, do not trust the timings")
            return 1
        print(f"outputs bit-identical; speedup {timings['pure'] / timings['compiled']:.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
