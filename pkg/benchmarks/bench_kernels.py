"""Compare the numba kernels with their numpy fallbacks.

    python benchmarks/bench_kernels.py [--iters 2000] [--skip-chain]

Per-kernel timings run in this process. The end-to-end chain is run twice in
fresh subprocesses, once with ``ADLM_DISABLE_NUMBA=1``, so each backend is
selected the same way a user would select it.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from adlm import kernels
from adlm._jit import HAVE_NUMBA

CHAIN_SCRIPT = """
import json, time
from adlm.basis import BasisSpec, build_design
from adlm.kernels import BACKEND
from adlm.sampler import ChainConfig, run_chain
from adlm.simulate import SimConfig, simulate_dataset
x, y, _ = simulate_dataset("DecayCurve", SimConfig(master_seed=1), 0)
X = build_design(x, BasisSpec.default(50))
cfg = ChainConfig(n_iter={iters}, burn_in={burn}, seed=1)
run_chain(y[50:], X, "adaptive", ChainConfig(n_iter=20, burn_in=10))  # compile / warm up
t0 = time.perf_counter()
s = run_chain(y[50:], X, "adaptive", cfg)
print(json.dumps({{"backend": BACKEND, "seconds": time.perf_counter() - t0, "b_mean": s.b.mean()}}))
"""


def kernel_cases(K=34, n=500, p=50, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((K, K))
    spd = A @ A.T + K * np.eye(K)
    lin = rng.standard_normal(K)
    z = rng.standard_normal(K)
    m = K - 1
    tau = rng.normal(0, 1, m)
    d2 = rng.exponential(1.0, m)
    sd = np.full(m, 0.5)
    zt = rng.standard_normal(m)
    logu = np.log(rng.random(m))
    acc = np.zeros(m, dtype=np.bool_)
    x = rng.standard_normal(n)
    return {
        "cholesky": (kernels.cholesky_nb, kernels.cholesky_np, (spd,)),
        "precision_draw": (kernels.precision_draw_nb, kernels.precision_draw_np, (spd, lin, z)),
        "tau_sweep": (kernels.tau_sweep_nb, kernels.tau_sweep_np,
                      (tau.copy(), d2, 1.0, 1e-4, sd, zt, logu, acc, 20.0)),
        "lag_embed": (kernels.lag_embed_nb, kernels.lag_embed_np, (x, p)),
    }


def time_call(fn, args, number):
    fn(*args)  # compile / warm up
    best = min(timeit.repeat(lambda: fn(*args), number=number, repeat=5))
    return 1e6 * best / number


def run_chain_subprocess(iters, disable):
    env = dict(os.environ)
    env.pop("ADLM_DISABLE_NUMBA", None)
    if disable:
        env["ADLM_DISABLE_NUMBA"] = "1"
    code = CHAIN_SCRIPT.format(iters=iters, burn=iters // 5)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--number", type=int, default=2000, help="calls per timing repeat")
    ap.add_argument("--iters", type=int, default=2000, help="chain length for the end-to-end run")
    ap.add_argument("--skip-chain", action="store_true")
    args = ap.parse_args(argv)

    if not HAVE_NUMBA:
        print("numba unavailable or disabled; both columns time the numpy path")
    print(f"{'kernel':<16}{'numba us':>12}{'numpy us':>12}{'speedup':>10}")
    for name, (nb, np_, call_args) in kernel_cases().items():
        t_nb = time_call(nb, call_args, args.number)
        t_np = time_call(np_, call_args, args.number)
        print(f"{name:<16}{t_nb:>12.2f}{t_np:>12.2f}{t_np / t_nb:>9.1f}x")

    if args.skip_chain:
        return
    fast = run_chain_subprocess(args.iters, disable=False)
    slow = run_chain_subprocess(args.iters, disable=True)
    print(f"\nM3 chain, K=34, {args.iters} iterations")
    for r in (fast, slow):
        print(f"  {r['backend']:<6} {r['seconds']:8.2f} s   mean(b) {r['b_mean']:+.6e}")
    print(f"  speedup {slow['seconds'] / fast['seconds']:.2f}x")


if __name__ == "__main__":
    main()
