"""Radial heat-kernel parametrix: transport coefficients and invariants.

On a model with radially symmetric geometry about a point, the heat kernel
factorizes near the diagonal as

    H(t, x, y) ~ (4 pi t)^{-n/2} e^{-r^2/4t} (u_0(r) + u_1(r) t + u_2(r) t^2 + ...)

with u_0 = D^{-1/2} (D the volume-density Jacobian along geodesics) and the
transport recursion

    u_i(r) = -r^{-i} D^{-1/2}(r) int_0^r s^{i-1} D^{1/2}(s)
             [ Lap u_{i-1} + B u_{i-1} ](s) ds,

where Lap h = -(h'' + ((n-1)/r + D'/D) h') is the (positive) radial Laplacian
and B is the potential bracket (zero for the pure Laplacian; (1/2) Lap f +
(1/4)|grad f|^2 along the ray for a drifting weight). Evaluated on the
diagonal, u_i(0) integrate to the heat invariants: a_i = int u_i(0, x) dmu —
constant-curvature models make that u_i(0) * Vol.

Numerics (each choice validated against a symbolic series solution of the
same recursion on the round sphere):

* profiles live on a Chebyshev-Lobatto grid clustered at both ends of
  [0, 0.64 * inj]; staying inside the injectivity radius keeps D positive
  and the transport integrand analytic;
* radial profiles are even in r, so interpolation uses quintic splines on
  the even (or odd, for odd integrands) mirror extension — this buys exact
  symmetry at 0 without one-sided stencils;
* second derivatives of *transported* coefficients lose ~ 1/delta^2 of the
  spline's interpolation noise near the origin, so there (and only there)
  the derivative is replaced by an even-polynomial least-squares patch,
  blended back into the spline derivative away from 0. u_0 is analytic and
  is never patched — patching it was measurably worse;
* the diagonal value u_i(0) is a 0/0 limit of the transport formula;
  evaluating at r in {h, h/2, h/4} and Richardson-extrapolating the even
  power series (orders h^2 then h^4) pins it to ~1e-8 or better.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import make_interp_spline

from .fields import witten_potential
from .operators import (assemble_drifting_conjugated,
                        assemble_drifting_galerkin, eigen_system)

GRID_SIZE = 161
GRID_FRACTION = 0.64        # of the injectivity radius
PATCH_FRACTION = 0.35       # origin patch fitted on r <= this * rmax
PATCH_TERMS = 5             # even polynomial 1, r^2, ..., r^8
RICHARDSON_H = 1e-2         # * inj_radius


@dataclass(frozen=True)
class RadialProfile:
    """Geometry along radial geodesics from a base point."""
    dim: int
    inj_radius: float
    flat: bool
    D: object                   # r -> volume density Jacobian
    Dlog: object                # r -> D'(r)/D(r)
    model_ref: dict | None = None


def radial_profile(model):
    if model.kind == "sphere":
        R = model.params[0]

        def D(r):
            return model.jacobian_D(np.asarray(r, dtype=np.float64))

        def Dlog(r):
            r = np.asarray(r, dtype=np.float64)
            return model.jacobian_Dprime(r) / model.jacobian_D(r)

        return RadialProfile(dim=2, inj_radius=model.injectivity_radius(), flat=False,
                             D=D, Dlog=Dlog, model_ref=model.ref())

    def D_flat(r):
        return np.ones_like(np.asarray(r, dtype=np.float64))

    def Dlog_flat(r):
        return np.zeros_like(np.asarray(r, dtype=np.float64))

    return RadialProfile(dim=model.dim, inj_radius=model.injectivity_radius(),
                         flat=True, D=D_flat, Dlog=Dlog_flat,
                         model_ref=model.ref())


@dataclass(frozen=True)
class ParametrixCoefficient:
    order: int
    r_grid: np.ndarray
    values: np.ndarray
    diagonal_value: float
    radial: bool = True         # False for ray profiles of non-radial data

    def __call__(self, r):
        spl = _even_spline(self.r_grid, self.values, +1 if self.radial else 0)
        return spl(np.asarray(r, dtype=np.float64))


def _cheb_grid(rmax, m=GRID_SIZE):
    j = np.arange(m, dtype=np.float64)
    return rmax * 0.5 * (1.0 - np.cos(math.pi * j / (m - 1)))


def _even_spline(r, vals, parity):
    """Quintic spline on the (anti)symmetric mirror extension.

    parity +1 mirrors evenly, -1 oddly, 0 means `vals` already spans the
    signed ray (no mirroring)."""
    if parity == 0:
        return make_interp_spline(r, vals, k=5)
    rr = np.concatenate([-r[:0:-1], r])
    if parity > 0:
        vv = np.concatenate([vals[:0:-1], vals])
    else:
        vv = np.concatenate([-vals[:0:-1], vals])
    return make_interp_spline(rr, vv, k=5)


def _origin_patched_derivatives(r, vals, rmax):
    """Spline d1/d2 with an even-poly LSQ patch blended in near r = 0."""
    spl = _even_spline(r, vals, +1)
    d1 = spl.derivative(1)(r)
    d2 = spl.derivative(2)(r)
    rb = PATCH_FRACTION * rmax
    sel = r <= rb
    A = np.vander(r[sel] ** 2, PATCH_TERMS, increasing=True)
    b, *_ = np.linalg.lstsq(A, vals[sel], rcond=None)
    j = np.arange(PATCH_TERMS, dtype=np.float64)
    # d/dr sum b_j r^{2j} = sum 2j b_j r^{2j-1}; second derivative likewise
    rp = r[sel]
    p1 = np.zeros_like(rp)
    p2 = np.zeros_like(rp)
    for jj in range(1, PATCH_TERMS):
        p1 += 2 * jj * b[jj] * rp ** (2 * jj - 1)
        p2 += 2 * jj * (2 * jj - 1) * b[jj] * rp ** (2 * jj - 2)
    # blend: pure patch below 0.6 rb, pure spline at rb
    w = np.clip((rb - rp) / (0.4 * rb), 0.0, 1.0)
    d1s = d1.copy()
    d2s = d2.copy()
    d1s[sel] = w * p1 + (1 - w) * d1[sel]
    d2s[sel] = w * p2 + (1 - w) * d2[sel]
    return d1s, d2s


def _radial_laplacian(profile, r, vals, patch):
    """(positive) Lap h = -(h'' + ((n-1)/r + D'/D) h') on the grid."""
    rmax = r[-1]
    if patch:
        d1, d2 = _origin_patched_derivatives(r, vals, rmax)
    else:
        spl = _even_spline(r, vals, +1)
        d1 = spl.derivative(1)(r)
        d2 = spl.derivative(2)(r)
    out = np.empty_like(vals)
    n = profile.dim
    pos = r > 0
    rp = r[pos]
    out[pos] = -(d2[pos] + ((n - 1) / rp + profile.Dlog(rp)) * d1[pos])
    out[~pos] = -n * d2[~pos]
    return out


def u0(profile, r_grid=None):
    """Leading transport coefficient u_0 = D^{-1/2}; u_0(0) = 1 exactly."""
    r = _cheb_grid(GRID_FRACTION * profile.inj_radius) if r_grid is None \
        else np.asarray(r_grid, dtype=np.float64)
    vals = profile.D(r) ** (-0.5)
    return ParametrixCoefficient(order=0, r_grid=r, values=vals,
                                 diagonal_value=1.0)


def u_next(profile, u_prev, f_bracket=None):
    """One step of the transport recursion: u_{i-1} -> u_i.

    f_bracket, when given, is the potential bracket evaluated along the ray
    (signed arc length); it is supported for the first step on flat profiles,
    where the ray profile of a non-radial weight is still well-defined. The
    origin value comes from Richardson extrapolation of the even expansion
    of the transport integral."""
    i = u_prev.order + 1
    r = u_prev.r_grid
    rmax = r[-1]

    if f_bracket is not None:
        if not profile.flat or i != 1:
            raise NotImplementedError(
                "ray brackets are supported on flat profiles at order 1; "
                "higher orders and curved models need radial data")
        rr = np.concatenate([-r[:0:-1], r])
        integrand = np.asarray(f_bracket(rr), dtype=np.float64) \
            * np.concatenate([u_prev.values[:0:-1], u_prev.values])
        anti = make_interp_spline(rr, integrand, k=5).antiderivative()
        radial = False
    else:
        # transported coefficients (and perfectly flat profiles, whose
        # spline-differentiated constants are pure noise) get the origin
        # patch; the analytic sphere u_0 is measurably better unpatched
        patch = (i >= 2) or profile.flat
        lap_prev = _radial_laplacian(profile, r, u_prev.values, patch=patch)
        integrand = profile.D(r) ** 0.5 * lap_prev * r ** (i - 1)
        parity = 1 if i % 2 == 1 else -1
        anti = _even_spline(r, integrand, parity).antiderivative()
        radial = True

    a0 = anti(0.0)

    def eval_u(rv):
        rv = np.asarray(rv, dtype=np.float64)
        return -(anti(rv) - a0) * profile.D(rv) ** (-0.5) * rv ** (-float(i))

    vals = np.empty_like(r)
    pos = r > 0
    vals[pos] = eval_u(r[pos])

    h = RICHARDSON_H * profile.inj_radius
    hs = np.array([h, h / 2.0, h / 4.0])
    if radial:
        a = eval_u(hs)
    else:
        # ray profiles are not even in r: symmetrizing over +-h removes the
        # odd orders so the h^2/h^4 extrapolation below applies again
        a = 0.5 * (eval_u(hs) + eval_u(-hs))
    b = (4.0 * a[1:] - a[:-1]) / 3.0
    diag = float((16.0 * b[1] - b[0]) / 15.0)
    vals[~pos] = diag
    return ParametrixCoefficient(order=i, r_grid=r, values=vals,
                                 diagonal_value=diag, radial=radial)


@dataclass(frozen=True)
class HeatInvariants:
    a0: float
    a1: float
    a2: float | None
    method: str
    note: str = ""

    def to_json(self):
        return {"a0": self.a0, "a1": self.a1, "a2": self.a2,
                "method": self.method, "note": self.note}


def heat_invariants(model, f=None, m=2):
    """Expansion invariants a_0..a_m from the transport recursion.

    Homogeneous models make u_i(0) position-independent, so a_i = u_i(0) Vol.
    With a drifting weight f on a flat model the order-1 invariant is the
    integral of the (sign-flipped) Witten bracket — evaluated by quadrature,
    since u_1(0, x) = -((1/2) Lap f + (1/4)|grad f|^2)(x) varies with the
    base point. Curved models with weights are out of scope here, as is
    m > 2 (no validated reference beyond u_2)."""
    if m > 2 or m < 0:
        raise ValueError("orders 0..2 are supported")
    vol = model.volume
    if f is None:
        prof = radial_profile(model)
        a1 = a2 = None
        if m >= 1:
            u1 = u_next(prof, u0(prof))
            a1 = u1.diagonal_value * vol
            if m >= 2:
                u2 = u_next(prof, u1)
                a2 = u2.diagonal_value * vol
        return HeatInvariants(vol, a1, a2, method="transport_recursion")
    if model.kind == "sphere":
        raise NotImplementedError(
            "weighted invariants are implemented on flat models; the sphere "
            "path has no validated reference for non-radial weights")
    if m > 1:
        m_note = "a2 requires f = 0; reported through order 1"
    else:
        m_note = ""
    vw = witten_potential(model, f)
    nodes, w = model.quadrature
    a1 = -math.fsum(w * vw.reconstruction())
    return HeatInvariants(vol, a1, None, method="witten_quadrature",
                          note=m_note)


def ray_bracket(model, f, base_point, direction):
    """Witten bracket along the ray base + s * direction (flat models).

    Returns a callable of signed arc length for u_next's f_bracket hook."""
    if model.kind == "sphere":
        raise NotImplementedError("ray brackets target flat models")
    vw = witten_potential(model, f)
    base = np.asarray(base_point, dtype=np.float64).ravel()
    e = np.asarray(direction, dtype=np.float64).ravel()
    e = e / np.linalg.norm(e)

    def bracket(s):
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        pts = base[None, :] + s[:, None] * e[None, :]
        return vw(pts)

    return bracket


def weighted_kernel_relation(model, f, t, x, y, N=64):
    """Both sides of H_f(t,x,y) = H_V(t,x,y) e^{(f(x)+f(y))/2}.

    The left side sums the Galerkin pencil's B-orthonormal eigenpairs (the
    natural frame for the e^{-f} measure); the right side sums the
    conjugated Schrodinger eigenpairs and multiplies the ground-state
    factor back in. Agreement is the ground-state transform made concrete."""
    if t <= 0:
        raise ValueError("t must be positive")
    px = np.atleast_2d(np.asarray(x, dtype=np.float64))
    py = np.atleast_2d(np.asarray(y, dtype=np.float64))
    phi_x = model.eigenfunctions(px)[0, :N]
    phi_y = model.eigenfunctions(py)[0, :N]

    A, B = assemble_drifting_galerkin(model, f, N)
    spec_f, C = eigen_system((A, B), "drifting_galerkin")
    psi_x = phi_x @ C
    psi_y = phi_y @ C
    lhs = float(math.fsum(np.exp(-spec_f.eigenvalues * t) * psi_x * psi_y))

    H = assemble_drifting_conjugated(model, f, N)
    spec_v, U = eigen_system(H, "drifting_conjugated")
    chi_x = phi_x @ U
    chi_y = phi_y @ U
    hv = float(math.fsum(np.exp(-spec_v.eigenvalues * t) * chi_x * chi_y))
    fx = float(f(px)[0])
    fy = float(f(py)[0])
    rhs = hv * math.exp(0.5 * (fx + fy))
    return lhs, rhs
