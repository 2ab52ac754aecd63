"""Time the compiled kernels against their numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from tabnav import kernels
from tabnav.env.graph import available_mask, reward_vector, terminal_mask, transition_tensor
from tabnav.env.presets import load_preset
from tabnav.experiments.sr import walk_tables
from tabnav.rng import derive_rng


def value_iteration_case():
    spec, _ = load_preset("open_field")
    p = transition_tensor(spec)
    args = (p, p @ reward_vector(spec), (~terminal_mask(spec)).astype(float),
            available_mask(spec).astype(np.uint8), 0.95, 1e-8, 10_000)
    return "value_iteration (open field, tol 1e-8)", lambda impl: impl.value_iteration(*args)


def jacobi_case():
    x = derive_rng(0).standard_normal((200, 60))
    a = np.ascontiguousarray(x.T @ x)
    return "jacobi_eigh (60 x 60)", lambda impl: impl.jacobi_eigh(a.copy(), 1e-12, 100)


def sr_walk_case(n_steps=100_000):
    spec, _ = load_preset("open_field")
    t = walk_tables(spec)
    u = derive_rng(1).random(3 * n_steps)

    def run(impl):
        psi = np.zeros((spec.n_states, spec.n_actions, spec.n_states))
        visits = np.zeros((spec.n_states, spec.n_actions))
        impl.sr_td_walk(psi, visits, t.succ_ptr, t.succ_next, t.succ_cum, t.act_ptr, t.act_list,
                        t.terminal, t.starts, spec.start_states[0], 0, n_steps, u, 0.95, 1.0, 0.7, 0.0)

    return f"sr_td_walk ({n_steps} steps)", run


def net_case(n_steps=20_000):
    rng = derive_rng(2)
    params = [rng.uniform(-0.1, 0.1, (15, 20)), np.zeros(20), rng.uniform(-0.1, 0.1, (20, 15)),
              np.zeros(15)]
    walk = rng.integers(0, 15, n_steps + 1)
    return (f"net_train ({n_steps} steps)",
            lambda impl: impl.net_train(*[p.copy() for p in params], walk[:-1].copy(), walk[1:].copy(), 0.1))


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    impls = kernels.backends()
    if "compiled" not in impls:
        print("compiled extension not built; timing the numpy fallback only")
    names = list(impls)
    print(f"{'kernel':42s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, fn in (value_iteration_case(), jacobi_case(), sr_walk_case(), net_case()):
        times = {}
        for name, impl in impls.items():
            times[name] = min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
        row = f"{label:42s}" + "".join(f"{times[n]:11.4f}s" for n in names)
        if "compiled" in times:
            row += f"{times['python'] / times['compiled']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
