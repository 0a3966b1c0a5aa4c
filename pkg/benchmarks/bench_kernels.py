"""Compare the accelerated and plain-numpy kernel backends.

The backend is fixed at import time by VIRIALKIT_NUMBA, so this script
re-runs itself in a subprocess per backend and prints both timings:

    python3 benchmarks/bench_kernels.py
"""

import argparse
import json
import os
import subprocess
import sys
import time


def run_worker():
    import numpy as np

    from virialkit import kernels
    from virialkit.graphs import class_masks, hard_core_d_table, pair_order

    results = {"backend": kernels.backend_name()}

    n = 6
    npairs = len(pair_order(n))
    pi = np.array([p[0] for p in pair_order(n)], dtype=np.int64)
    pj = np.array([p[1] for p in pair_order(n)], dtype=np.int64)
    # warm up (includes any jit compilation)
    warm = pair_order(4)
    kernels.scan_masks(
        4,
        np.array([p[0] for p in warm], dtype=np.int64),
        np.array([p[1] for p in warm], dtype=np.int64),
        1,
    )
    t0 = time.perf_counter()
    masks = kernels.scan_masks(n, pi, pj, 1)
    results["scan_biconnected_n6_s"] = time.perf_counter() - t0
    results["scan_count"] = int(len(masks))

    m = 4
    table = hard_core_d_table(m)
    r2 = np.full((m, m), 1.0)
    rng = np.random.Generator(np.random.Philox(key=[7, 0]))
    xs = rng.uniform(-3, 3, size=(200_000, m - 1, 3))
    kernels.mc_mask_sum(xs[:100], r2, table)
    t0 = time.perf_counter()
    s = kernels.mc_mask_sum(xs, r2, table)
    results["mc_mask_sum_200k_s"] = time.perf_counter() - t0
    results["mc_sum"] = int(s)

    print(json.dumps(results))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--worker", action="store_true")
    args = parser.parse_args()
    if args.worker:
        run_worker()
        return
    rows = []
    for flag in ("1", "0"):
        env = dict(os.environ, VIRIALKIT_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, __file__, "--worker"],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))
    if rows[0]["scan_count"] != rows[1]["scan_count"] or rows[0]["mc_sum"] != rows[1]["mc_sum"]:
        print("BACKEND MISMATCH:", rows)
        sys.exit(1)
    print(f"{'benchmark':<28}{rows[0]['backend']:>12}{rows[1]['backend']:>12}")
    for key in ("scan_biconnected_n6_s", "mc_mask_sum_200k_s"):
        print(f"{key:<28}{rows[0][key]:>12.4f}{rows[1][key]:>12.4f}")
    print(f"(identical outputs: scan_count={rows[0]['scan_count']}, mc_sum={rows[0]['mc_sum']})")


if __name__ == "__main__":
    main()
