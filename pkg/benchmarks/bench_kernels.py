#!/usr/bin/env python3
"""Compare the compiled kernels against the AKPZ_NO_NUMBA fallback path.

The env flag is read at import time, so each path runs in its own
subprocess; workloads are sized per path and reported as rates. Run from the
repo root:

    python3 benchmarks/bench_kernels.py [--quick]
"""

import argparse
import json
import os
import subprocess
import sys
import time

HERE = os.path.abspath(__file__)


def _child(args):
    import numpy as np

    from akpz.gibbs import sample_gibbs
    from akpz.growth import simulate
    from akpz.heights import config_from_profile, make_profile
    from akpz.hjpde import GridFunction2D, legendre_transform
    from akpz.lattice import LocalizationBox

    name = args.run_child
    out = {"name": name}
    if name == "growth":
        prof = make_profile("bump", rho1=1 / 3, rho2=1 / 3, a=0.12)
        scale = 40
        box = LocalizationBox(-scale, scale, -2 * scale, 2 * scale)
        cfg = config_from_profile(prof, scale, box, pad_z2=16)
        simulate(cfg.copy(), 1e-3, gen_box=box, seed=1)  # warm the jit
        t0 = time.perf_counter()
        res = simulate(cfg, args.t_end, gen_box=box, seed=1)
        dt = time.perf_counter() - t0
        out.update(seconds=dt, work=int(res.events_generated), units="events")
    elif name == "gibbs":
        n = 48
        sample_gibbs(n, 1 / 3, 1 / 3, sweeps=1, seed=1)  # warm the jit
        t0 = time.perf_counter()
        sample_gibbs(n, 1 / 3, 1 / 3, sweeps=args.sweeps, seed=1)
        dt = time.perf_counter() - t0
        out.update(seconds=dt, work=args.sweeps * n * n, units="proposals")
    elif name == "lf2d":
        npts = args.grid
        xs = np.linspace(-1.0, 1.0, npts)
        vals = np.add.outer(xs**2, xs**2)
        f = GridFunction2D(xs, xs, vals)
        ys = np.linspace(-2.0, 2.0, npts)
        legendre_transform(f, (ys[:4], ys[:4]))  # warm the jit
        t0 = time.perf_counter()
        for _ in range(args.repeat):
            legendre_transform(f, (ys, ys))
        dt = time.perf_counter() - t0
        out.update(seconds=dt, work=args.repeat * npts**4, units="node pairs")
    else:
        raise SystemExit(f"unknown workload {name!r}")
    print(json.dumps(out))


def _run(name, use_numba, extra):
    env = dict(os.environ)
    env["AKPZ_NO_NUMBA"] = "" if use_numba else "1"
    cmd = [sys.executable, HERE, "--run-child", name] + extra
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--run-child", help=argparse.SUPPRESS)
    ap.add_argument("--t-end", type=float, default=4.0, help=argparse.SUPPRESS)
    ap.add_argument("--sweeps", type=int, default=200, help=argparse.SUPPRESS)
    ap.add_argument("--grid", type=int, default=64, help=argparse.SUPPRESS)
    ap.add_argument("--repeat", type=int, default=3, help=argparse.SUPPRESS)
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args()
    if args.run_child:
        _child(args)
        return

    q = args.quick
    plans = [
        # (workload, jitted extra args, fallback extra args)
        ("growth", ["--t-end", "1.0" if q else "4.0"], ["--t-end", "0.02" if q else "0.05"]),
        ("gibbs", ["--sweeps", "50" if q else "200"], ["--sweeps", "1" if q else "3"]),
        (
            "lf2d",
            ["--grid", "48" if q else "64", "--repeat", "2" if q else "3"],
            ["--grid", "48" if q else "64", "--repeat", "2" if q else "3"],
        ),
    ]
    rows = []
    for name, jit_extra, fb_extra in plans:
        jit = _run(name, True, jit_extra)
        fb = _run(name, False, fb_extra)
        r_jit = jit["work"] / jit["seconds"]
        r_fb = fb["work"] / fb["seconds"]
        rows.append((name, jit["units"], r_jit, r_fb, r_jit / r_fb))
    print(f"{'workload':<10} {'units':<12} {'numba/s':>12} {'fallback/s':>12} {'speedup':>9}")
    for name, units, rj, rf, sp in rows:
        print(f"{name:<10} {units:<12} {rj:>12.3g} {rf:>12.3g} {sp:>9.1f}")


if __name__ == "__main__":
    main()
