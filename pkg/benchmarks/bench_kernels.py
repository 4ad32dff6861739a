"""Benchmark: compiled routing kernels vs the numpy fallback.

Times the two hot kernels in isolation and the end-to-end characteristic
table build, checks both backends produce bit-identical results, and prints
a comparison table.

Usage: python benchmarks/bench_kernels.py [--instances 200] [--repeats 3]
"""

import argparse
import statistics
import time

import numpy as np

import cvrlab._kernels as kernels
from cvrlab.coalition_value import build_characteristic_table
from cvrlab.instance import GenerationConfig, distance_matrix, generate_instance


def time_call(fn, repeats):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return min(samples), statistics.mean(samples)


def bench_subset_costs(mod, instances, repeats):
    work = []
    for inst in instances:
        dist = distance_matrix(inst)
        customers = [c for a in range(inst.n_agents) for c in inst.customer_indices(a)]
        work.append((dist, customers))

    def run():
        for dist, customers in work:
            for depot in range(3):
                mod.tsp_subset_costs(dist, depot, customers)

    return time_call(run, repeats)


def bench_assignment(mod, instances, repeats):
    work = []
    for inst in instances:
        dist = distance_matrix(inst)
        customers = [c for a in range(inst.n_agents) for c in inst.customer_indices(a)]
        tables = np.stack(
            [kernels.tsp_subset_costs(dist, a, customers) for a in range(3)]
        )
        work.append((tables, len(customers)))

    def run():
        for tables, m in work:
            mod.best_assignment(tables, m)

    return time_call(run, repeats)


def bench_charfn(mod, instances, repeats):
    saved = {
        name: getattr(kernels, name)
        for name in ("tsp_subset_costs", "tsp_order", "best_assignment")
    }
    for name in saved:
        setattr(kernels, name, getattr(mod, name))
    try:
        def run():
            for inst in instances:
                build_characteristic_table(inst)

        return time_call(run, repeats)
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def check_parity(instances):
    mods = kernels.backends()
    if len(mods) < 2:
        return "single backend only"
    py, cc = mods["python"], mods["compiled"]
    for inst in instances[:20]:
        dist = distance_matrix(inst)
        customers = [c for a in range(inst.n_agents) for c in inst.customer_indices(a)]
        a = py.tsp_subset_costs(dist, 0, customers)
        b = cc.tsp_subset_costs(dist, 0, customers)
        if a.tobytes() != b.tobytes():
            return f"MISMATCH on seed {inst.seed}"
        tables = np.stack([a, py.tsp_subset_costs(dist, 1, customers),
                           py.tsp_subset_costs(dist, 2, customers)])
        pa, da = py.best_assignment(tables, len(customers))
        pb, db = cc.best_assignment(tables, len(customers))
        if pa != pb or not np.array_equal(da, db):
            return f"MISMATCH on seed {inst.seed}"
    return "bit-identical"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--instances", type=int, default=200)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    cfg = GenerationConfig()
    instances = [generate_instance(args.seed + k, cfg) for k in range(args.instances)]
    mods = kernels.backends()
    print(f"backends available: {sorted(mods)}; active: {kernels.backend_name()}")
    print(f"parity check: {check_parity(instances)}")
    print(f"workload: {args.instances} instances (3 agents x 3 customers), "
          f"best of {args.repeats} repeats\n")

    benches = [
        ("tsp_subset_costs (3 depots x 512 masks)", bench_subset_costs),
        ("best_assignment (3^9 scan)", bench_assignment),
        ("characteristic table end-to-end", bench_charfn),
    ]
    header = f"{'kernel':40s} " + " ".join(f"{name:>12s}" for name in sorted(mods))
    print(header)
    print("-" * len(header))
    results = {}
    for label, bench in benches:
        row = {}
        for name, mod in sorted(mods.items()):
            best, _ = bench(mod, instances, args.repeats)
            row[name] = best
        results[label] = row
        cells = " ".join(f"{row[name] * 1e3:>10.1f}ms" for name in sorted(mods))
        print(f"{label:40s} {cells}")
    if "compiled" in mods:
        print()
        for label, row in results.items():
            print(f"{label:40s} speedup x{row['python'] / row['compiled']:.1f}")


if __name__ == "__main__":
    main()
