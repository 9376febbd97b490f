"""Timing comparison of the two kernel lanes (numba JIT vs pure numpy).

Run twice to see both lanes:

    HEATLAB_NUMBA=0 python3 benchmarks/bench_kernels.py
    HEATLAB_NUMBA=1 python3 benchmarks/bench_kernels.py

The numbers to watch are the per-call medians after warmup; the first numba
call includes JIT compilation and is reported separately. Both lanes must
agree to ~1e-15 relative on every kernel — that is asserted, not assumed.
"""

import os
import time

import numpy as np

import heatlab
from heatlab import kernels


def bench(label, fn, repeats=7):
    fn()                      # warmup (and JIT, on the numba lane)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    med = sorted(times)[len(times) // 2]
    print(f"  {label:34s} {med * 1e3:9.3f} ms/call")
    return out


def main():
    rng = np.random.default_rng(7)
    print(f"backend: {kernels.backend()}  (HEATLAB_NUMBA="
          f"{os.environ.get('HEATLAB_NUMBA', '<unset>')!r})")

    lam = np.sort(rng.uniform(0.0, 3e5, size=20000))
    ts = np.geomspace(1e-4, 1.0, 160)
    bench("trace_sum      20k eigs x 160 t", lambda: kernels.trace_sum(lam, ts))

    w = rng.standard_normal(20000) ** 2
    bench("weighted_trace 20k eigs x 160 t",
          lambda: kernels.weighted_trace_sum(lam, w, ts))

    n = 400
    lam_n = np.sort(rng.uniform(0.0, 5e3, size=n))
    M = rng.standard_normal((n, n))
    msq = (M + M.T) ** 2 / 4.0
    bench("w2_pair_sum        400^2 pairs",
          lambda: kernels.w2_pair_sum(lam_n, msq, 0.01))

    model = heatlab.build_flat_torus((1.0, 1.0), band_limit=26)
    field = heatlab.fields.trig_polynomial(
        model, [(0.4, (1, 0), "cos"), (0.2, (0, 1), "sin")])
    N = model.n_modes
    bench(f"flat coupling matrix  N={N}",
          lambda: heatlab.coupling_matrix(model, field, N).matrix)

    t0 = time.perf_counter()
    H = heatlab.assemble_schrodinger(model, field, N)
    np.linalg.eigh(H)
    print(f"  assemble+eigh         N={N}     "
          f"{(time.perf_counter() - t0) * 1e3:9.3f} ms (reference, BLAS)")


if __name__ == "__main__":
    main()
