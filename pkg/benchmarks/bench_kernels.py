"""Timing comparison between the compiled kernels and the numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

Both implementations are imported side by side, so the numbers come from
one process and one interpreter state.
"""

import time

import numpy as np

from riskfusion._kernels import pure

try:
    from riskfusion._kernels import engine
except ImportError:
    engine = None


def bench(label, fn, *args, repeat=5, number=2000):
    best = min(
        _timed(fn, args, number) for _ in range(repeat)
    )
    per_call = best / number * 1e6
    print(f"  {label:<22} {per_call:9.2f} us/call")
    return per_call


def _timed(fn, args, number):
    t0 = time.perf_counter()
    for _ in range(number):
        fn(*args)
    return time.perf_counter() - t0


def peel_inputs(rng):
    prior = rng.dirichlet(np.ones(4))
    partner = rng.dirichlet(np.ones(4))
    # proband, mother, father, two siblings, child, both grandparent couples
    groups = np.array(
        [
            pure.G_PROBAND,
            pure.G_MOTHER,
            pure.G_FATHER,
            pure.G_SIBLING,
            pure.G_SIBLING,
            pure.G_CHILD,
            pure.G_MAT_GRANDMOTHER,
            pure.G_MAT_GRANDFATHER,
            pure.G_PAT_AUNT_UNCLE,
        ],
        dtype=np.int64,
    )
    L = rng.uniform(0.05, 1.0, size=(len(groups), 4))
    return prior, partner, L, groups, True, True, True


def main():
    rng = np.random.default_rng(7)
    args = peel_inputs(rng)
    hb = rng.uniform(0.0, 0.02, size=94)
    hd = rng.uniform(0.0, 0.01, size=94)
    ages = rng.integers(25, 75, size=64)

    impls = [("pure", pure)] + ([("compiled", engine)] if engine is not None else [])
    results = {}
    for name, impl in impls:
        print(f"{name} backend")
        results[name] = {
            "peel_posterior": bench("peel_posterior", impl.peel_posterior, *args),
            "cumulative_risk": bench(
                "cumulative_risk", impl.cumulative_risk, hb, hd, 40, 10
            ),
            "cumulative_risk_batch": bench(
                "cumulative_risk_batch", impl.cumulative_risk_batch, hb, hd, ages, 10,
                number=200,
            ),
            "modified_risk": bench(
                "modified_risk", impl.modified_risk, hb, hd, 40, 10, 1.3, 1.1
            ),
        }

    if engine is None:
        print("compiled backend unavailable; nothing to compare")
        return

    # equal answers before comparing speed
    np.testing.assert_allclose(
        pure.peel_posterior(*args), engine.peel_posterior(*args), atol=1e-14
    )
    np.testing.assert_allclose(
        pure.cumulative_risk(hb, hd, 40, 10), engine.cumulative_risk(hb, hd, 40, 10), atol=1e-15
    )
    print("speedup (pure / compiled)")
    for key in results["pure"]:
        ratio = results["pure"][key] / results["compiled"][key]
        print(f"  {key:<22} {ratio:6.1f}x")


if __name__ == "__main__":
    main()
