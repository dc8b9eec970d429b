"""
Compare the compiled and numpy kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times one MLE reconstruction at the default tolerance, one density sub-step
on windows of several sizes, and a full noisy evolution of the SIC schedule.
"""

import argparse
import timeit

import numpy as np

from walkpovm import kernels
from walkpovm.core import make_init_state, projector
from walkpovm.experiment import NoiseModel, WalkerDensity, evolve_density, sample_counts
from walkpovm.povm import povm_elements
from walkpovm.tomography import forward_probs
from walkpovm.walk import sic_schedule


def _best(fn, repeat):
    number, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def _cases(rng):
    sched = sic_schedule()
    povm = povm_elements(sched)
    effects = np.stack([povm.elements[x] for x in povm.positions])
    rec = sample_counts(forward_probs(projector(make_init_state(2)), povm), 32_000, 1)
    counts = np.array([rec.counts.get(x, 0) for x in povm.positions], dtype=float)
    rho0 = np.eye(2, dtype=complex) / 2
    yield "mle_rrr (N=32000)", lambda k: k.mle_rrr(counts, effects, rho0, 1e-10, 10_000)

    for n in (7, 13, 31):
        g = rng.normal(size=(2 * n, 2 * n)) + 1j * rng.normal(size=(2 * n, 2 * n))
        rho = (g @ g.conj().T).reshape(n, 2, n, 2)
        coins = np.tile(np.eye(2, dtype=complex), (n, 1, 1))
        yield f"density_substep (L={n})", lambda k, rho=rho, coins=coins: k.density_substep(rho, coins)

    d0 = WalkerDensity.from_coin(projector(make_init_state(3)))
    noise = NoiseModel(0.992, 0.1, 0)
    yield "evolve_density (SIC schedule)", lambda k: evolve_density(d0, sched, noise, backend=k)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled is None:
        raise SystemExit("compiled extension not available; build with `pip install -e . --no-build-isolation`")
    print(f"{'kernel':32s} {'numpy':>12s} {'cython':>12s} {'speedup':>8s}")
    for name, fn in _cases(np.random.default_rng(0)):
        t_py = _best(lambda: fn(kernels.python), args.repeat)
        t_cy = _best(lambda: fn(kernels.compiled), args.repeat)
        print(f"{name:32s} {t_py * 1e6:10.1f}us {t_cy * 1e6:10.1f}us {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
