"""Compare the compiled and pure-Python kernel backends (and naive splatting).

    python3 benchmarks/bench_backends.py [--size 512] [--repeats 3] [--json out.json]

Times each hot kernel per backend on the same inputs, checks the outputs
agree, and prints a table with the compiled/python speedup.
"""
import argparse
import json
import time

import numpy as np

from fovenhance import _backend
from fovenhance.filterbank import KERNELS, basis_responses
from fovenhance.synthesis import (build_submap_bank, generate_impulse_map, impulse_weights,
                                  naive_splat, accelerated_splat)


def best_of(fn, repeats):
    best, out = np.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(size, repeats, density=2, seed=0):
    rng = np.random.default_rng(seed)
    level = rng.standard_normal((size, size))
    imap = generate_impulse_map(level.shape, density, seed)
    n = len(imap)
    wts = impulse_weights(rng.uniform(0, np.pi, n), rng.uniform(-np.pi, np.pi, n), rng.random(n))
    rows, outputs = {}, {}
    for be in _backend.available():
        with _backend.using(be):
            t_conv, resp = best_of(lambda: basis_responses(level), repeats)
            t_build, bank = best_of(lambda: build_submap_bank(imap, KERNELS), max(1, repeats // 2))
            t_comb, band = best_of(lambda: accelerated_splat(bank, wts), repeats)
        rows[be] = {"analysis_convolutions": t_conv, "submap_precompute": t_build,
                    "runtime_combination": t_comb}
        outputs[be] = (np.stack(resp.maps()), band)
    t_naive, ref = best_of(lambda: naive_splat(imap, wts), 1)
    agree = {be: float(np.abs(out[1] - ref).max()) for be, out in outputs.items()}
    if len(outputs) == 2:
        agree["conv_compiled_vs_python"] = float(np.abs(outputs["compiled"][0] - outputs["python"][0]).max())
    return {"size": size, "density": density, "impulses": n, "submaps": bank.n_groups,
            "timings": rows, "naive_splat": t_naive, "max_abs_diff": agree}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=512)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--json", help="also write the raw numbers here")
    args = ap.parse_args(argv)
    res = run(args.size, args.repeats)
    stages = ("analysis_convolutions", "submap_precompute", "runtime_combination")
    t = res["timings"]
    print(f"{args.size}x{args.size}, {res['impulses']} impulses, {res['submaps']} sub-maps")
    print(f"{'stage':24s}" + "".join(f"{b:>12s}" for b in t) + ("   speedup" if len(t) == 2 else ""))
    for s in stages:
        line = f"{s:24s}" + "".join(f"{t[b][s] * 1e3:10.1f}ms" for b in t)
        if len(t) == 2:
            line += f"   {t['python'][s] / t['compiled'][s]:6.1f}x"
        print(line)
    print(f"{'naive_splat':24s}{res['naive_splat'] * 1e3:10.1f}ms")
    print("max |diff| vs naive / between backends:", res["max_abs_diff"])
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(res, fh, indent=2)


if __name__ == "__main__":
    main()
