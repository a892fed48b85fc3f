"""Compare the compiled bit kernels against the pure numpy fallback.

Times the primitive kernels on packed vectors and the end-to-end
erasure-channel trial at headline size. Run directly:

    python benchmarks/bench_kernels.py
"""

import os
import sys
import time

import numpy as np

from awecsim import _bitkernel_py as pure
from awecsim import kernels

try:
    from awecsim import _bitkernel as compiled
except ImportError:
    compiled = None


def timeit(fn, *args, repeat=200):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_primitives(n=100_000):
    rng = np.random.default_rng(1)
    a = kernels.clear_tail(rng.integers(0, 2**64, size=kernels.words_for(n), dtype=np.uint64), n)
    b = kernels.clear_tail(rng.integers(0, 2**64, size=kernels.words_for(n), dtype=np.uint64), n)
    m = kernels.clear_tail(rng.integers(0, 2**64, size=kernels.words_for(n), dtype=np.uint64), n)
    masks = rng.integers(0, 2**64, size=(256, kernels.words_for(n)), dtype=np.uint64)
    idx = rng.integers(0, n, size=5000).astype(np.int64)
    bits = rng.integers(0, 2, size=5000).astype(np.uint8)

    cases = [
        ("popcount_xor_and", lambda impl: impl.popcount_xor_and(a, b, m)),
        ("extract", lambda impl: impl.extract(a, m, n)),
        ("scatter_assign(5000)", lambda impl: impl.scatter_assign(a.copy(), idx, bits)),
        ("batch_xor_and_popcount(256)", lambda impl: impl.batch_xor_and_popcount(a, b, masks)),
    ]
    print(f"primitive kernels at n={n}")
    print(f"{'kernel':<30}{'pure':>12}{'compiled':>12}{'speedup':>9}")
    for name, fn in cases:
        t_pure = timeit(lambda: fn(pure))
        if compiled is None:
            print(f"{name:<30}{t_pure*1e6:>10.1f}us{'-':>12}{'-':>9}")
            continue
        t_comp = timeit(lambda: fn(compiled))
        print(f"{name:<30}{t_pure*1e6:>10.1f}us{t_comp*1e6:>10.1f}us{t_pure/t_comp:>8.1f}x")


def bench_awec_trial(n=100_000, trials=1000):
    from awecsim.awec import AwecParams, run_awec
    from awecsim.channels import ChannelSpec, sampler_for
    from awecsim.core import RandomStream

    sampler = sampler_for(ChannelSpec("trusted-laplace", n, 1.0))
    params = AwecParams(n=n, ell=14, eps=1.0)
    stream = RandomStream(7)
    t0 = time.perf_counter()
    for t in range(trials):
        run_awec(sampler, params, stream.substream(t))
    per = (time.perf_counter() - t0) / trials
    backend = kernels.BACKEND
    print(f"awec trial at n={n} [{backend}]: {per*1e6:.0f} us/trial "
          f"({per*100_000:.0f} s per 1e5 trials)")


if __name__ == "__main__":
    bench_primitives()
    bench_awec_trial()
    if compiled is not None and not os.environ.get("AWECSIM_PURE"):
        print("\nre-run under the pure backend with: AWECSIM_PURE=1", sys.argv[0])
