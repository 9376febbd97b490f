"""Numerical kernels with two interchangeable backends.

The hot paths (heat-trace sums, the W2 double sum, flat-model coupling
assembly) are written twice: once as numba @njit kernels and once in plain
numpy. `HEATLAB_NUMBA` selects the backend:

    auto (default) - use numba if importable, else numpy
    1 / require    - numba mandatory, ImportError otherwise
    0 / off        - pure numpy

Determinism contract: for a fixed backend, every kernel returns bitwise
identical results regardless of thread count. Reductions are sequential and
compensated (Neumaier in the numba path, math.fsum in the numpy path); the
only parallel loops write disjoint output cells. The two backends agree to
~1e-15 relative but not bitwise (different compensated summators); nothing
downstream assumes cross-backend bit equality.
"""

import math
import os

import numpy as np

_mode = os.environ.get("HEATLAB_NUMBA", "auto").lower()

_HAVE_NUMBA = False
if _mode not in ("0", "off", "false"):
    try:
        import warnings

        import numba
        from numba import njit, prange
        # The threading-layer probe warns about old TBB builds on stderr;
        # harmless here (results never depend on the layer) and it would
        # pollute the CLI's machine-readable error stream.
        warnings.filterwarnings("ignore", message=".*TBB.*",
                                category=numba.NumbaWarning)
        _HAVE_NUMBA = True
    except ImportError:
        if _mode in ("1", "require", "true"):
            raise
        _HAVE_NUMBA = False

USING_NUMBA = _HAVE_NUMBA


def backend():
    return "numba" if USING_NUMBA else "numpy"


def set_threads(k):
    """Cap worker threads. Only the numba threading layer is affected; BLAS
    stays pinned (see package __init__). No kernel result depends on k.
    Requests beyond the pool built at startup are clamped, not errors."""
    if USING_NUMBA and k:
        pool = numba.config.NUMBA_NUM_THREADS
        numba.set_num_threads(min(max(1, int(k)), pool))


# ----------------------------------------------------------------------
# compensated summation
# ----------------------------------------------------------------------

def fsum(arr):
    """Exactly rounded sum of a 1-d array (numpy fallback reducer)."""
    return math.fsum(arr)


if _HAVE_NUMBA:

    @njit(cache=True)
    def _neumaier(arr):
        s = 0.0
        c = 0.0
        for i in range(arr.shape[0]):
            x = arr[i]
            t = s + x
            if abs(s) >= abs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
        return s + c

    @njit(cache=True)
    def _trace_sum_nb(eigs, ts, out):
        # eigs ascending; sum smallest terms first (largest eig first)
        n = eigs.shape[0]
        for i in range(ts.shape[0]):
            t = ts[i]
            s = 0.0
            c = 0.0
            for k in range(n - 1, -1, -1):
                x = math.exp(-eigs[k] * t)
                tt = s + x
                if abs(s) >= abs(x):
                    c += (s - tt) + x
                else:
                    c += (x - tt) + s
                s = tt
            out[i] = s + c

    @njit(cache=True)
    def _weighted_trace_sum_nb(eigs, w, ts, out):
        n = eigs.shape[0]
        for i in range(ts.shape[0]):
            t = ts[i]
            s = 0.0
            c = 0.0
            for k in range(n - 1, -1, -1):
                x = w[k] * math.exp(-eigs[k] * t)
                tt = s + x
                if abs(s) >= abs(x):
                    c += (s - tt) + x
                else:
                    c += (x - tt) + s
                s = tt
            out[i] = s + c

    @njit(cache=True)
    def _w2_sum_nb(lam, msq, t, thresh):
        n = lam.shape[0]
        ex = np.empty(n)
        for k in range(n):
            ex[k] = math.exp(-lam[k] * t)
        s = 0.0
        c = 0.0
        for j in range(n):
            for k in range(n):
                x = t * (lam[j] - lam[k])
                if abs(x) < thresh:
                    psi = ex[k] * (1.0 - 0.5 * x + x * x / 6.0)
                else:
                    psi = (ex[k] - ex[j]) / x
                v = msq[j, k] * psi
                tt = s + v
                if abs(s) >= abs(v):
                    c += (s - tt) + v
                else:
                    c += (v - tt) + s
                s = tt
        return s + c

    @njit(cache=True, parallel=True)
    def _flat_coupling_nb(P, T, cre, cim, strides, half, out):
        # P: (N, n) lattice vectors; T: (N,) 0=const 1=cos 2=sin
        # cre/cim: flattened dense Fourier coefficient tables over
        # [-half, half]^n; strides: index strides; out: (N, N).
        N = P.shape[0]
        nd = P.shape[1]
        for a in prange(N):
            for b in range(a, N):
                ta = T[a]
                tb = T[b]
                # index of p+q and p-q in the dense tables, with the roles of
                # p and q fixed by the (cos, sin) orientation below
                if ta == 0 and tb == 0:
                    ip = 0
                    for d in range(nd):
                        ip += half * strides[d]
                    val = cre[ip]
                elif ta == 0 or tb == 0:
                    iq = 0
                    if ta == 0:
                        tm = tb
                        for d in range(nd):
                            iq += (P[b, d] + half) * strides[d]
                    else:
                        tm = ta
                        for d in range(nd):
                            iq += (P[a, d] + half) * strides[d]
                    if tm == 1:
                        val = math.sqrt(2.0) * cre[iq]
                    else:
                        val = -math.sqrt(2.0) * cim[iq]
                else:
                    # the sum index p+q is orientation-free; the difference
                    # index must run cos-vector minus sin-vector, so flip its
                    # sign when (a, b) arrived as (sin, cos)
                    sgn = -1 if (ta == 2 and tb == 1) else 1
                    ips = 0
                    ipd = 0
                    for d in range(nd):
                        ips += (P[a, d] + P[b, d] + half) * strides[d]
                        ipd += (sgn * (P[a, d] - P[b, d]) + half) * strides[d]
                    if ta == 1 and tb == 1:
                        val = cre[ips] + cre[ipd]
                    elif ta == 2 and tb == 2:
                        val = cre[ipd] - cre[ips]
                    else:
                        val = cim[ipd] - cim[ips]
                out[a, b] = val
                out[b, a] = val


# ----------------------------------------------------------------------
# public API (backend-dispatching)
# ----------------------------------------------------------------------

def trace_sum(eigs, ts):
    """Theta(t) = sum_k exp(-eigs[k] * t) for each t, compensated.

    `eigs` must already be in canonical (ascending) order; callers sort, which
    is what makes the result independent of the caller's enumeration."""
    eigs = np.ascontiguousarray(eigs, dtype=np.float64)
    ts = np.ascontiguousarray(ts, dtype=np.float64)
    out = np.empty(ts.shape[0])
    if USING_NUMBA:
        _trace_sum_nb(eigs, ts, out)
        return out
    for i, t in enumerate(ts):
        out[i] = math.fsum(np.exp(eigs[::-1] * (-t)))
    return out


def weighted_trace_sum(eigs, w, ts):
    """sum_k w[k] * exp(-eigs[k] * t) for each t, compensated, fixed order."""
    eigs = np.ascontiguousarray(eigs, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    ts = np.ascontiguousarray(ts, dtype=np.float64)
    out = np.empty(ts.shape[0])
    if USING_NUMBA:
        _weighted_trace_sum_nb(eigs, w, ts, out)
        return out
    for i, t in enumerate(ts):
        out[i] = math.fsum((w[::-1] * np.exp(eigs[::-1] * (-t))))
    return out


W2_TAYLOR_THRESHOLD = 1e-8  # |lam_j - lam_k| * t below this -> series branch


def w2_pair_sum(lam, msq, t, thresh=W2_TAYLOR_THRESHOLD):
    """sum_{j,k} msq[j,k] * psi_jk(t) with
    psi = (e^{-t lam_k} - e^{-t lam_j}) / (t (lam_j - lam_k)), the closed-form
    v-integral of the second Duhamel term; 3-term Taylor branch when
    |lam_j - lam_k| t < thresh (divided-difference cancellation guard)."""
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    msq = np.ascontiguousarray(msq, dtype=np.float64)
    if USING_NUMBA:
        return _w2_sum_nb(lam, msq, float(t), float(thresh))
    ex = np.exp(-lam * t)
    x = t * (lam[:, None] - lam[None, :])
    small = np.abs(x) < thresh
    xs = np.where(small, 1.0, x)  # dodge 0/0; overwritten below
    psi = (ex[None, :] - ex[:, None]) / xs
    taylor = ex[None, :] * (1.0 - 0.5 * x + x * x / 6.0)
    psi = np.where(small, taylor, psi)
    return math.fsum((msq * psi).ravel())


def flat_coupling(P, T, cre, cim, half):
    """Dense coupling matrix for real trigonometric bases on flat models.

    P (N, n) int64 lattice vectors, T (N,) int8 mode types (0 const, 1 cos,
    2 sin), cre/cim dense real/imag Fourier tables of the potential on the
    grid [-half, half]^n (flattened, C order). Entries are exact closed forms
    in the table values, O(1) each; see operators.coupling_matrix."""
    P = np.ascontiguousarray(P, dtype=np.int64)
    T = np.ascontiguousarray(T, dtype=np.int8)
    cre = np.ascontiguousarray(cre, dtype=np.float64).ravel()
    cim = np.ascontiguousarray(cim, dtype=np.float64).ravel()
    n = P.shape[1]
    width = 2 * half + 1
    strides = np.array([width ** (n - 1 - d) for d in range(n)], dtype=np.int64)
    N = P.shape[0]
    out = np.empty((N, N))
    if USING_NUMBA:
        _flat_coupling_nb(P, T, cre, cim, strides, half, out)
        return out

    # numpy fallback: same closed forms, vectorized in row blocks
    root2 = math.sqrt(2.0)
    idx0 = int(np.sum(half * strides))
    Pl = P.astype(np.int64)
    flat_idx = lambda V: (V + half) @ strides  # noqa: E731
    iq = flat_idx(Pl)
    const_col = np.where(T == 1, root2 * cre[iq], -root2 * cim[iq])
    const_col = np.where(T == 0, cre[idx0], const_col)
    block = 256
    for lo in range(0, N, block):
        hi = min(lo + block, N)
        pa = Pl[lo:hi][:, None, :]
        ta = T[lo:hi][:, None]
        pb = Pl[None, :, :]
        tb = T[None, :]
        # orient cos-vector x / sin-vector y for mixed pairs
        swap = (ta == 2) & (tb == 1)
        xa = np.where(swap[..., None], pb, pa)
        xb = np.where(swap[..., None], pa, pb)
        ips = flat_idx(xa + xb)
        ipd = flat_idx(xa - xb)
        val = np.where((ta == 1) & (tb == 1), cre[ips] + cre[ipd], 0.0)
        val = np.where((ta == 2) & (tb == 2), cre[ipd] - cre[ips], val)
        mixed = ((ta == 1) & (tb == 2)) | ((ta == 2) & (tb == 1))
        val = np.where(mixed, cim[ipd] - cim[ips], val)
        zb = (ta == 0) | (tb == 0)
        if np.any(zb):
            vz = np.broadcast_to(const_col[None, :], val.shape)
            val = np.where(ta == 0, vz, val)
            vz2 = np.broadcast_to(const_col[lo:hi, None], val.shape)
            val = np.where(tb == 0, vz2, val)
            val = np.where((ta == 0) & (tb == 0), cre[idx0], val)
        out[lo:hi] = val
    return out
