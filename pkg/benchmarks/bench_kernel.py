"""Compare the compiled per-round kernel against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernel.py [--rounds 200000] [--repeat 5]

Both backends receive the same uniforms; the script checks that their
outputs are identical before reporting timings.
"""
import argparse
import time

import numpy as np

from ghzqkd import _kernel
from ghzqkd.qcore import Basis
from ghzqkd.threat import EntangleAncilla, InterceptResend, NoEve, kernel_args

STRATEGIES = {
    "none": NoEve(),
    "intercept_resend": InterceptResend(),
    "entangle_ancilla": EntangleAncilla.controlled_rotation(0.5, Basis.X),
}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rounds", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    u = np.random.default_rng(args.seed).random((args.rounds, _kernel.N_UNIFORMS))
    backends = {"python": _kernel.get_backend("python")}
    if _kernel.compiled_backend is not None:
        backends["compiled"] = _kernel.get_backend("compiled")
    else:
        print("compiled kernel not built; timing the numpy fallback only")

    print(f"{'strategy':<18} {'backend':<9} {'seconds':>9} {'Mrounds/s':>10} {'speedup':>8}")
    for name, strat in STRATEGIES.items():
        kargs = (0.1, 0.06) + kernel_args(strat)
        results = {b: best_of(lambda f=f: f(u, *kargs), args.repeat) for b, f in backends.items()}
        if "compiled" in results and not np.array_equal(results["python"][1], results["compiled"][1]):
            raise SystemExit(f"{name}: backends disagree")
        base = results["python"][0]
        for b, (t, _) in results.items():
            print(f"{name:<18} {b:<9} {t:9.4f} {args.rounds / t / 1e6:10.2f} {base / t:8.2f}x")


if __name__ == "__main__":
    main()
