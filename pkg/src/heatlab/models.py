"""Exact spectral models: circle, flat tori (dim <= 3), round 2-sphere.

Each model carries its closed-form Laplace spectrum (multiplicity expanded,
ascending, lambda_0 = 0), an orthonormal real eigenbasis evaluator, constant
scalar curvature, a quadrature rule exact through the band limit, and the
geodesic data (distance, exponential-map Jacobian) the parametrix needs.

Completeness matters more than size: the stored eigenvalue list is always a
*complete* initial segment of the true spectrum. For a torus enumerated over
the box |k_i| <= K this means truncating at 4 pi^2 K^2 / max(L_i)^2 — any
lattice vector outside the box lies strictly above that cutoff, so nothing is
missing below it. Counting functions and Weyl ratios rely on this.

Heavy per-model arrays (quadrature grid, eigenbasis samples) are built lazily:
large-band instances are used purely through their eigenvalues, and a
(2*80+1)^2-mode torus should not pay for a grid it never touches.
"""

import math
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * math.pi


class SpectralModel:
    """Immutable-by-convention container; see module docstring."""

    def __init__(self, kind, params, dim, volume, band_limit, eigenvalues,
                 curvature_const):
        self.kind = kind
        self.params = tuple(float(p) for p in params)
        self.dim = int(dim)
        self.volume = float(volume)
        self.band_limit = int(band_limit)
        self.eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
        self.curvature_const = float(curvature_const)

    # -- descriptive ----------------------------------------------------

    @property
    def n_modes(self):
        return self.eigenvalues.shape[0]

    def curvature(self, points=None):
        """Scalar curvature K(x); constant on all shipped models."""
        if points is None:
            return self.curvature_const
        pts = np.asarray(points, dtype=np.float64)
        n = pts.shape[0] if pts.ndim else 1
        return np.full(n, self.curvature_const)

    def ref(self):
        p = ",".join(repr(v) for v in self.params)
        return f"{self.kind}({p});band={self.band_limit}"

    def to_json(self):
        return {
            "kind": self.kind,
            "params": list(self.params),
            "dim": self.dim,
            "volume": self.volume,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "band_limit": self.band_limit,
        }

    # -- subclass hooks --------------------------------------------------

    @cached_property
    def quadrature(self):
        """(nodes, weights); nodes shape (Q, dim_coords)."""
        return self._build_quadrature()

    @cached_property
    def basis(self):
        """Eigenbasis sampled at the quadrature nodes, shape (Q, n_modes)."""
        nodes, _ = self.quadrature
        return self.eigenfunctions(nodes)

    def eigenfunction(self, k, x):
        """phi_k at a single point (convenience scalar wrapper)."""
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return float(self.eigenfunctions(pts)[0, k])


def integrate(model, field):
    """Quadrature integral of a field over the model.

    `field` may be a callable on node arrays, an array of node samples, or a
    scalar. Exact for integrands inside the quadrature's exactness band."""
    nodes, w = model.quadrature
    if callable(field):
        vals = np.asarray(field(nodes), dtype=np.float64)
    elif np.ndim(field) == 0:
        return float(field) * model.volume
    else:
        vals = np.asarray(field, dtype=np.float64)
    if vals.shape[0] != w.shape[0]:
        raise ValueError("field samples do not match quadrature nodes")
    return math.fsum(vals * w)


# ======================================================================
# circle
# ======================================================================

class CircleModel(SpectralModel):

    def __init__(self, circumference, band_limit):
        L = float(circumference)
        ks = np.arange(1, band_limit + 1)
        lam = np.concatenate([[0.0], np.repeat((TWO_PI * ks / L) ** 2, 2)])
        super().__init__("circle", (L,), 1, L, band_limit, lam, 0.0)
        # mode k-index and type (0 const, 1 cos, 2 sin), aligned with lam
        self.mode_P = np.concatenate([[0], np.repeat(ks, 2)]).astype(np.int64)
        self.mode_T = np.concatenate(
            [[0], np.tile([1, 2], band_limit)]).astype(np.int8)

    def _build_quadrature(self):
        L = self.params[0]
        Q = 4 * self.band_limit + 3
        x = np.arange(Q) * (L / Q)
        w = np.full(Q, L / Q)
        return x.reshape(-1, 1), w

    def eigenfunctions(self, points):
        L = self.params[0]
        x = np.asarray(points, dtype=np.float64).reshape(-1)
        args = np.outer(x, TWO_PI * self.mode_P / L)
        out = np.where(self.mode_T[None, :] == 1, np.cos(args), np.sin(args))
        out *= math.sqrt(2.0 / L)
        out[:, self.mode_T == 0] = 1.0 / math.sqrt(L)
        return out

    def distance(self, x, y):
        L = self.params[0]
        d = abs(float(x) - float(y)) % L
        return min(d, L - d)

    def injectivity_radius(self):
        return self.params[0] / 2.0

    def jacobian_D(self, r):
        return np.ones_like(np.asarray(r, dtype=np.float64))

    def jacobian_Dprime(self, r):
        return np.zeros_like(np.asarray(r, dtype=np.float64))


def build_circle(circumference, band_limit=64):
    if circumference <= 0:
        raise ValueError("circle circumference must be positive")
    if band_limit < 1:
        raise ValueError("band_limit must be >= 1")
    return CircleModel(circumference, band_limit)


# ======================================================================
# flat torus
# ======================================================================

class FlatTorusModel(SpectralModel):

    def __init__(self, lengths, band_limit, n_eigs=None):
        lengths = tuple(float(v) for v in lengths)
        n = len(lengths)
        K = int(band_limit)
        axes = [np.arange(-K, K + 1)] * n
        mesh = np.meshgrid(*axes, indexing="ij")
        vecs = np.stack([m.ravel() for m in mesh], axis=1)  # all lattice pts
        lam_vec = np.zeros(vecs.shape[0])
        for d in range(n):
            lam_vec += (TWO_PI * vecs[:, d] / lengths[d]) ** 2

        # canonical representatives: first nonzero component positive
        first_nz = np.zeros(vecs.shape[0], dtype=np.int64)
        seen = np.zeros(vecs.shape[0], dtype=bool)
        for d in range(n):
            col = vecs[:, d]
            pick = (~seen) & (col != 0)
            first_nz[pick] = col[pick]
            seen |= col != 0
        reps = first_nz > 0
        zero = ~seen

        P = np.concatenate([vecs[zero], np.repeat(vecs[reps], 2, axis=0)])
        lam = np.concatenate([lam_vec[zero], np.repeat(lam_vec[reps], 2)])
        T = np.concatenate([
            np.zeros(int(zero.sum()), dtype=np.int8),
            np.tile(np.array([1, 2], dtype=np.int8), int(reps.sum())),
        ])

        # deterministic sort: eigenvalue, then lattice vector, then cos<sin
        keys = [T] + [P[:, d] for d in range(n - 1, -1, -1)] + [lam]
        order = np.lexsort(keys)
        P, lam, T = P[order], lam[order], T[order]

        # completeness cutoff (see module docstring)
        lam_complete = (TWO_PI * K / max(lengths)) ** 2
        keep = lam <= lam_complete + 1e-12
        P, lam, T = P[keep], lam[keep], T[keep]

        if n_eigs is not None and lam.shape[0] < n_eigs:
            raise ValueError(
                f"band_limit {K} holds only {lam.shape[0]} eigenvalues "
                f"(< requested {n_eigs}); raise band_limit")

        super().__init__("flat_torus", lengths, n, float(np.prod(lengths)),
                         K, lam, 0.0)
        self.mode_P = np.ascontiguousarray(P, dtype=np.int64)
        self.mode_T = np.ascontiguousarray(T, dtype=np.int8)

    def _build_quadrature(self):
        n = self.dim
        K = self.band_limit
        Q = 4 * K + 3
        axes = [np.arange(Q) * (self.params[d] / Q) for d in range(n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=1)
        w = np.full(nodes.shape[0], self.volume / nodes.shape[0])
        return nodes, w

    def eigenfunctions(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.dim)
        freq = TWO_PI * self.mode_P.T / np.asarray(self.params)[:, None]
        args = pts @ freq  # (Q, N)
        out = np.where(self.mode_T[None, :] == 1, np.cos(args), np.sin(args))
        out *= math.sqrt(2.0 / self.volume)
        out[:, self.mode_T == 0] = 1.0 / math.sqrt(self.volume)
        return out

    def distance(self, x, y):
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        d2 = 0.0
        for dim in range(self.dim):
            L = self.params[dim]
            dd = abs(x[dim] - y[dim]) % L
            d2 += min(dd, L - dd) ** 2
        return math.sqrt(d2)

    def injectivity_radius(self):
        return min(self.params) / 2.0

    def jacobian_D(self, r):
        return np.ones_like(np.asarray(r, dtype=np.float64))

    def jacobian_Dprime(self, r):
        return np.zeros_like(np.asarray(r, dtype=np.float64))


def build_flat_torus(edge_lengths, band_limit=16, n_eigs=None):
    lengths = tuple(edge_lengths)
    if not 1 <= len(lengths) <= 3:
        raise ValueError("flat torus supports 1 <= dim <= 3")
    if any(L <= 0 for L in lengths):
        raise ValueError("edge lengths must be positive")
    return FlatTorusModel(lengths, band_limit, n_eigs=n_eigs)


# ======================================================================
# round 2-sphere
# ======================================================================

class SphereModel(SpectralModel):
    """Round sphere of radius R: lambda = l(l+1)/R^2 with multiplicity 2l+1,
    real spherical harmonics Y_{l0}, sqrt(2) * P-bar_l^m * {cos, sin}(m phi).
    Points are (colatitude theta, longitude phi) pairs."""

    def __init__(self, radius, band_limit):
        R = float(radius)
        L = int(band_limit)
        lam, ls, ms, ts = [], [], [], []
        for l in range(L + 1):
            ev = l * (l + 1) / R**2
            lam.append(ev); ls.append(l); ms.append(0); ts.append(0 if l == 0 else 1)
            for m in range(1, l + 1):
                for t in (1, 2):
                    lam.append(ev); ls.append(l); ms.append(m); ts.append(t)
        super().__init__("sphere", (R,), 2, 4.0 * math.pi * R**2, L,
                         np.array(lam), 2.0 / R**2)
        self.mode_L = np.array(ls, dtype=np.int64)
        self.mode_M = np.array(ms, dtype=np.int64)
        self.mode_T = np.array(ts, dtype=np.int8)

    def _build_quadrature(self):
        L = self.band_limit
        R = self.params[0]
        ntheta = int(math.ceil(1.5 * L)) + 2
        nphi = 3 * L + 3
        x, wx = np.polynomial.legendre.leggauss(ntheta)  # x = cos(theta)
        theta = np.arccos(x)
        phi = np.arange(nphi) * (TWO_PI / nphi)
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        nodes = np.stack([tt.ravel(), pp.ravel()], axis=1)
        w = np.repeat(wx, nphi) * (TWO_PI / nphi) * R**2
        return nodes, w

    def _legendre_table(self, ct):
        """Fully normalized associated Legendre P-bar_l^m(ct) for all l <= L,
        0 <= m <= l, via the standard stable recurrences. Returns dict-like
        array indexed [l, m, node]. Normalization: int (P-bar_l^m)^2 dx = ...
        chosen so that the real harmonics below are orthonormal on the unit
        sphere; Condon-Shortley phase kept (cancels in every observable)."""
        L = self.band_limit
        ct = np.asarray(ct, dtype=np.float64)
        st = np.sqrt(np.maximum(0.0, 1.0 - ct * ct))
        tab = np.zeros((L + 1, L + 1, ct.shape[0]))
        tab[0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
        for m in range(1, L + 1):
            tab[m, m] = -math.sqrt((2 * m + 1) / (2.0 * m)) * st * tab[m - 1, m - 1]
        for m in range(0, L):
            tab[m + 1, m] = math.sqrt(2 * m + 3.0) * ct * tab[m, m]
        for m in range(0, L + 1):
            for l in range(m + 2, L + 1):
                a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
                tab[l, m] = a * (ct * tab[l - 1, m] - b * tab[l - 2, m])
        return tab

    def eigenfunctions(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 2)
        theta, phi = pts[:, 0], pts[:, 1]
        tab = self._legendre_table(np.cos(theta))
        R = self.params[0]
        out = np.empty((pts.shape[0], self.n_modes))
        root2 = math.sqrt(2.0)
        for k in range(self.n_modes):
            l, m, t = self.mode_L[k], self.mode_M[k], self.mode_T[k]
            base = tab[l, m]
            if m == 0:
                out[:, k] = base
            elif t == 1:
                out[:, k] = root2 * base * np.cos(m * phi)
            else:
                out[:, k] = root2 * base * np.sin(m * phi)
        out /= R
        return out

    def distance(self, x, y):
        R = self.params[0]
        t1, p1 = float(x[0]), float(x[1])
        t2, p2 = float(y[0]), float(y[1])
        c = (math.sin(t1) * math.sin(t2) * math.cos(p1 - p2)
             + math.cos(t1) * math.cos(t2))
        return R * math.acos(max(-1.0, min(1.0, c)))

    def injectivity_radius(self):
        return math.pi * self.params[0]

    def jacobian_D(self, r):
        R = self.params[0]
        r = np.asarray(r, dtype=np.float64)
        return np.sinc(r / (math.pi * R))  # R sin(r/R) / r, stable at 0

    def jacobian_Dprime(self, r):
        R = self.params[0]
        r = np.asarray(r, dtype=np.float64)
        small = np.abs(r) < 1e-3 * R
        rs = np.where(small, 1.0, r)
        exact = np.cos(rs / R) / rs - R * np.sin(rs / R) / rs**2
        x = r / R
        series = (-x / 3.0 + x**3 / 30.0 - x**5 / 840.0) / R
        return np.where(small, series, exact)


def build_sphere(radius, band_limit=32):
    if radius <= 0:
        raise ValueError("sphere radius must be positive")
    return SphereModel(radius, band_limit)
