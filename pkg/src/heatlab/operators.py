"""Finite-rank operators on model eigenbases.

Three operators share one picture: pick the first N exact Laplace modes as a
Galerkin basis and represent

    schrodinger            H = diag(lambda) + M,  M_jk = int V phi_j phi_k
    drifting (conjugated)  same H with V = (1/2) Lap f + (1/4)|grad f|^2
    drifting (Galerkin)    pencil (A, B), A = int grad.grad e^{-f},
                                          B = int phi phi e^{-f}

The conjugated route *is* assemble_schrodinger applied to the Witten
potential — the ground-state transform turns the weighted Laplacian into a
Schrodinger operator unitarily, so the two drifting routes must produce the
same spectrum up to Galerkin truncation; tests pin that agreement.

Coupling matrices on flat models are assembled algebraically: the product of
two real trig modes expands into at most two lattice frequencies, so each
entry is an O(1) read from a dense table of the potential's Fourier
coefficients — exact in the coefficients, no quadrature, and trivially
symmetric. The sphere path integrates against the quadrature grid instead.

Eigenvalue lists carry a trusted_count: Galerkin eigenvalues approximate the
operator from above and degrade near the truncation edge, so only a prefix
(N/4 by default, validated against reference runs) is treated as converged.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .fields import witten_potential


@dataclass(frozen=True)
class OperatorSpectrum:
    """Ascending eigenvalue list with provenance and a trusted prefix."""
    eigenvalues: np.ndarray
    basis_size: int
    trusted_count: int
    operator_tag: str
    negative_count: int
    model_ref: dict | None = None

    def __post_init__(self):
        ev = np.ascontiguousarray(self.eigenvalues, dtype=np.float64)
        object.__setattr__(self, "eigenvalues", ev)
        if not (0 <= self.trusted_count <= ev.shape[0]):
            raise ValueError("trusted_count outside the eigenvalue list")
        if np.any(np.diff(ev) < -1e-9 * max(1.0, abs(float(ev[-1])))):
            raise ValueError("eigenvalues must be ascending")

    @property
    def trusted(self):
        return self.eigenvalues[:self.trusted_count]

    def to_json(self):
        return {"operator_tag": self.operator_tag,
                "basis_size": int(self.basis_size),
                "trusted_count": int(self.trusted_count),
                "negative_count": int(self.negative_count),
                "model_ref": self.model_ref,
                "eigenvalues": [float(v) for v in self.eigenvalues]}


@dataclass(frozen=True)
class CouplingMatrix:
    matrix: np.ndarray
    route: str                      # "algebraic" | "quadrature"
    field_name: str

    @property
    def basis_size(self):
        return self.matrix.shape[0]


DEFAULT_TRUSTED_FRACTION = 4        # trusted prefix = N // 4


def _fourier_tables(model, coeffs):
    """Dense real/imag Fourier tables of V over the lattice [-2K, 2K]^n.

    With c_p = (a_p - i b_p)/sqrt(2 Vol) for cos/sin coefficients (a, b), the
    tables hold Re c and Im c on every lattice point reachable as p +- q."""
    half = 2 * model.band_limit
    dim = model.dim
    width = 2 * half + 1
    cre = np.zeros((width,) * dim)
    cim = np.zeros((width,) * dim)
    vol = model.volume
    P = model.mode_P if model.mode_P.ndim == 2 else model.mode_P[:, None]
    s2 = 1.0 / math.sqrt(2.0 * vol)
    origin = (half,) * dim
    for k in range(model.n_modes):
        v = coeffs[k]
        if v == 0.0:
            continue
        t = model.mode_T[k]
        if t == 0:
            cre[origin] += v / math.sqrt(vol)
            continue
        p = tuple(P[k] + half)
        m = tuple(-P[k] + half)
        if t == 1:
            cre[p] += v * s2
            cre[m] += v * s2
        else:
            cim[p] -= v * s2
            cim[m] += v * s2
    return cre, cim, half


def coupling_matrix(model, V, N, route="auto"):
    """M_jk = int V phi_j phi_k over the first N modes.

    route 'algebraic' (flat models: exact closed forms in the Fourier
    coefficients of V), 'quadrature' (grid integration against the
    band-limited representative of V), or 'auto'. Both routes consume the
    same coefficient content, so they agree to quadrature accuracy; tests
    compare them directly."""
    if V.model is not model:
        raise ValueError("potential lives on a different model")
    if not (1 <= N <= model.n_modes):
        raise ValueError(f"basis size {N} outside [1, {model.n_modes}]")
    if route == "auto":
        route = "quadrature" if model.kind == "sphere" else "algebraic"
    if route == "algebraic":
        if model.kind == "sphere":
            raise ValueError("algebraic coupling exists only on flat models")
        cre, cim, half = _fourier_tables(model, V.coefficients)
        P = model.mode_P if model.mode_P.ndim == 2 else model.mode_P[:, None]
        M = kernels.flat_coupling(P[:N], model.mode_T[:N], cre, cim, half)
    elif route == "quadrature":
        nodes, w = model.quadrature
        Phi = model.basis[:, :N]
        vals = V.reconstruction()
        M = Phi.T @ (w[:, None] * vals[:, None] * Phi)
        M = 0.5 * (M + M.T)
    else:
        raise ValueError(f"unknown coupling route {route!r}")
    return CouplingMatrix(M, route, V.name)


def assemble_schrodinger(model, V, N, route="auto"):
    """Galerkin matrix of Lap + V on the first N exact modes."""
    H = np.diag(model.eigenvalues[:N].copy())
    H += coupling_matrix(model, V, N, route=route).matrix
    return H


def assemble_drifting_conjugated(model, f, N, route="auto"):
    """Drifting Laplacian via the ground-state transform: literally the
    Schrodinger assembly at the Witten potential, hence bit-identical to it."""
    return assemble_schrodinger(model, witten_potential(model, f), N,
                                route=route)


def _gradient_basis(model, N):
    """Per-axis derivative samples of the first N modes (flat models).

    d/dx_d of sqrt(2/Vol) cos(p.x) = -omega_d * (sin partner); the trig basis
    is closed under differentiation, so these are exact samples."""
    nodes, _ = model.quadrature
    P = model.mode_P if model.mode_P.ndim == 2 else model.mode_P[:, None]
    P = P[:N]
    T = model.mode_T[:N]
    L = np.asarray(model.params, dtype=np.float64).ravel()
    freq = 2.0 * math.pi * P / L[None, :]          # (N, dim)
    arg = nodes @ freq.T                           # (Q, N)
    amp = math.sqrt(2.0 / model.volume)
    cos_a, sin_a = np.cos(arg), np.sin(arg)
    grads = []
    for d in range(model.dim):
        g = np.where(T[None, :] == 1, -sin_a, cos_a) * (amp * freq[None, :, d])
        g[:, T == 0] = 0.0
        grads.append(g)
    return grads


def assemble_drifting_galerkin(model, f, N):
    """Weighted-measure pencil (A, B) for the drifting Laplacian.

    A_jk = int grad phi_j . grad phi_k e^{-f} dmu,  B_jk = int phi_j phi_k
    e^{-f} dmu. Gradients are spectral (exact on flat models); e^{-f} is
    integrated on the periodic grid, where the trapezoid rule converges
    geometrically for band-limited f. B must come out positive definite or
    the quadrature is declared too coarse."""
    if model.kind == "sphere":
        raise NotImplementedError(
            "Galerkin pencil is implemented for flat models; on the sphere "
            "use the conjugated route")
    if f.model is not model:
        raise ValueError("weight f lives on a different model")
    if not (1 <= N <= model.n_modes):
        raise ValueError(f"basis size {N} outside [1, {model.n_modes}]")
    nodes, w = model.quadrature
    ef = np.exp(-f.reconstruction())
    wE = w * ef
    Phi = model.basis[:, :N]
    B = Phi.T @ (wE[:, None] * Phi)
    B = 0.5 * (B + B.T)
    A = np.zeros((N, N))
    for g in _gradient_basis(model, N):
        A += g.T @ (wE[:, None] * g)
    A = 0.5 * (A + A.T)
    try:
        np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        raise ValueError("weighted mass matrix is not positive definite: "
                         "quadrature too coarse for this weight") from None
    return A, B


def eigen_decompose(operator, operator_tag, trusted_count=None,
                    model_ref=None):
    """Ascending spectrum of a symmetric matrix or a definite pencil (A, B).

    trusted_count defaults to N // 4: the validated prefix within which
    Galerkin eigenvalues of band-limited problems have converged."""
    spectrum, _ = eigen_system(operator, operator_tag,
                               trusted_count=trusted_count,
                               model_ref=model_ref, want_vectors=False)
    return spectrum


def eigen_system(operator, operator_tag, trusted_count=None, model_ref=None,
                 want_vectors=True):
    """Like eigen_decompose but also returns eigenvectors (columns).

    Pencil eigenvectors come back B-orthonormal, which is exactly the
    normalization the weighted kernel sums need."""
    if isinstance(operator, tuple):
        A, B = operator
        _check_sym(A, "A")
        _check_sym(B, "B")
        vals, vecs = scipy.linalg.eigh(A, B)
    else:
        H = np.asarray(operator, dtype=np.float64)
        _check_sym(H, "H")
        vals, vecs = np.linalg.eigh(H)
    N = vals.shape[0]
    if trusted_count is None:
        trusted_count = max(1, N // DEFAULT_TRUSTED_FRACTION)
    spectrum = OperatorSpectrum(
        eigenvalues=vals,
        basis_size=N,
        trusted_count=int(trusted_count),
        operator_tag=operator_tag,
        negative_count=int(np.count_nonzero(vals < 0.0)),
        model_ref=model_ref)
    return spectrum, (vecs if want_vectors else None)


def _check_sym(M, name):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square")
    scale = np.abs(M).max() or 1.0
    if np.abs(M - M.T).max() > 1e-10 * scale:
        raise ValueError(f"{name} is not symmetric")


def exact_spectrum(model, count=None):
    """The model's own (exact) Laplace eigenvalues as an OperatorSpectrum.

    Every enumerated eigenvalue is below the completeness cutoff, so the
    whole list is trusted."""
    ev = model.eigenvalues if count is None else model.eigenvalues[:count]
    return OperatorSpectrum(
        eigenvalues=ev.copy(),
        basis_size=ev.shape[0],
        trusted_count=ev.shape[0],
        operator_tag="exact",
        negative_count=int(np.count_nonzero(ev < 0.0)),
        model_ref=model.ref())


def schrodinger_spectrum(model, V, N, trusted_count=None, route="auto"):
    """Convenience: assemble + decompose in one step."""
    H = assemble_schrodinger(model, V, N, route=route)
    return eigen_decompose(H, "schrodinger", trusted_count=trusted_count,
                           model_ref=model.ref())
