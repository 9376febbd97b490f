"""Scalar fields on spectral models: potentials V and weights f.

A field is its spectral content: samples at the quadrature nodes plus
coefficients v_k = int V phi_k dmu within the model band. Downstream operators
consume the coefficients (equivalently the band-limited reconstruction), so a
rough field like the sawtooth participates as its truncation — the honest
finite-rank surrogate; its H^1 character survives in how the coefficients
scale with frequency, which is exactly what the divergence diagnostic and the
remainder exponent measure.

Standard test fields straddle the regularity boundary:
  trig polynomials   smooth
  triangle wave      H^1 but not C^1  (coefficients ~ 1/k^2)
  sawtooth           L^inf but not H^1 (coefficients ~ 1/k)

All differentiation is spectral. The pointwise squared gradient, needed for
the Witten potential, uses |grad f|^2 = f * (Lap f) - (1/2) Lap(f^2) with the
positive Laplacian — term-by-term exact for band-limited f on any model, no
finite differences anywhere.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScalarField:
    model: object
    coefficients: np.ndarray          # aligned with model modes
    samples: np.ndarray               # raw samples at quadrature nodes
    sup_norm: float
    name: str = "field"

    def reconstruction(self):
        """Band-limited samples Phi @ c (== samples for band-limited input)."""
        return self.model.basis @ self.coefficients

    def __call__(self, points):
        """Evaluate the band-limited representative at arbitrary points."""
        return self.model.eigenfunctions(points) @ self.coefficients

    def to_json(self):
        return {"model_ref": self.model.ref(),
                "coefficients": [float(v) for v in self.coefficients]}


def project(model, fn, name="field"):
    """Project a callable (or node-sample array) onto the model eigenbasis.

    Coefficients by quadrature; exact for fields inside the band limit."""
    nodes, w = model.quadrature
    if callable(fn):
        samples = np.asarray(fn(nodes), dtype=np.float64).reshape(-1)
    elif np.ndim(fn) == 0:
        samples = np.full(nodes.shape[0], float(fn))
    else:
        samples = np.asarray(fn, dtype=np.float64).reshape(-1)
    if samples.shape[0] != nodes.shape[0]:
        raise ValueError("field samples do not match quadrature nodes "
                         f"({samples.shape[0]} vs {nodes.shape[0]})")
    coeffs = model.basis.T @ (w * samples)
    return ScalarField(model, coeffs, samples, float(np.abs(samples).max()),
                       name=name)


def from_coefficients(model, coeffs, name="field"):
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape[0] != model.n_modes:
        raise ValueError("coefficient vector does not match model modes")
    samples = model.basis @ coeffs
    return ScalarField(model, coeffs, samples, float(np.abs(samples).max()),
                       name=name)


def zero_field(model):
    return ScalarField(model, np.zeros(model.n_modes),
                       np.zeros(model.quadrature[0].shape[0]), 0.0, name="zero")


# ----------------------------------------------------------------------
# norms and the divergence diagnostic
# ----------------------------------------------------------------------

def l2_norm_sq(field, detail=False):
    """||V||^2_{L^2} = sum v_k^2 (Parseval within the band).

    detail=True additionally reports the top dyadic block as a truncation
    indicator (small block => the band holds essentially all the mass)."""
    c2 = field.coefficients**2
    total = math.fsum(c2)
    if not detail:
        return total
    lam = field.model.eigenvalues
    lam_max = lam[-1] if lam[-1] > 0 else 1.0
    top = math.fsum(c2[lam > lam_max / 4.0])
    return {"value": total, "top_block": top, "band_limit": field.model.band_limit}


@dataclass(frozen=True)
class H1Report:
    value: float                      # partial sum at full band
    partial_sums: tuple               # (lambda_cutoff, partial_sum) pairs
    block_sums: tuple                 # dyadic block sums, top block first
    growth_rate: float                # log2(top/previous); > 0 means growing
    divergent: bool
    note: str = ""


def h1_seminorm_sq(model, field, detail=False):
    """||grad V||^2 partial sum  sum_k lambda_k v_k^2  over the band.

    H^1 membership is undecidable at finite truncation; what is decidable is
    how the partial sums behave as the cutoff grows. detail=True returns an
    H1Report with dyadic block sums: blocks that keep growing (sawtooth:
    each octave contributes ~ pi * K/2) flag divergence, blocks that shrink
    (triangle: ~ 1/K per octave) flag convergence."""
    lam = model.eigenvalues
    c2 = field.coefficients**2
    terms = lam * c2
    value = math.fsum(terms)
    if not detail:
        return value

    lam_max = lam[-1]
    if lam_max <= 0 or value == 0.0:
        return H1Report(value, ((lam_max, value),), (0.0, 0.0), float("-inf"),
                        False, note="empty or zero field")

    cuts, partials, blocks = [], [], []
    prev_cut = lam_max
    for _ in range(6):
        lo = prev_cut / 4.0
        blocks.append(math.fsum(terms[(lam > lo) & (lam <= prev_cut)]))
        cuts.append(prev_cut)
        partials.append(math.fsum(terms[lam <= prev_cut]))
        prev_cut = lo
    top, second = blocks[0], blocks[1]
    floor = 1e-12 * max(value, 1e-300)
    if top <= floor:
        rate = float("-inf")
        divergent = False
        note = "tail block empty: band holds the full seminorm"
    elif second <= floor:
        rate = float("inf")
        divergent = True
        note = "mass concentrated at the band edge"
    else:
        rate = math.log2(top / second)
        divergent = rate > 0.0
        note = ""
    return H1Report(value, tuple(zip(cuts, partials)), tuple(blocks), rate,
                    divergent, note=note)


# ----------------------------------------------------------------------
# Witten potential
# ----------------------------------------------------------------------

def _spectral_band(model, coeffs, rel=1e-12):
    """Highest frequency order carrying coefficient mass: per-axis max |k|
    on flat models, max degree l on the sphere."""
    mask = np.abs(coeffs) > rel * (1.0 + np.abs(coeffs).max())
    if not mask.any():
        return 0
    if model.kind == "sphere":
        return int(model.mode_L[mask].max())
    return int(np.abs(model.mode_P[mask]).max())


def witten_potential(model, f, name=None):
    """V = (1/2) Lap f + (1/4) |grad f|^2  (positive Laplacian).

    Exact for band-limited f with 2*band(f) <= model band; anything else is
    refused — aliasing in f^2 would silently corrupt the equivalence tests.
    Satisfies int V dmu = (1/4) int |grad f|^2 dmu since int Lap f = 0."""
    if f.model is not model:
        raise ValueError("weight f lives on a different model")
    recon = f.reconstruction()
    resid = np.abs(recon - f.samples).max()
    if resid > 1e-8 * (1.0 + f.sup_norm):
        raise ValueError(
            f"weight is not band-limited on this model "
            f"(reconstruction residual {resid:.2e})")
    bf = _spectral_band(model, f.coefficients)
    if 2 * bf > model.band_limit:
        raise ValueError(
            f"weight band {bf} too high: need 2*band(f) <= model band "
            f"{model.band_limit} so that |grad f|^2 stays representable")

    lam = model.eigenvalues
    lap_f = model.basis @ (lam * f.coefficients)
    f_sq = project(model, recon * recon)
    lap_fsq = model.basis @ (lam * f_sq.coefficients)
    grad_sq = recon * lap_f - 0.5 * lap_fsq
    vw = 0.5 * lap_f + 0.25 * grad_sq
    out = project(model, vw, name=name or f"witten({f.name})")
    return out


def dirichlet_norm(model, f):
    """int |grad f|^2 dmu = h1 seminorm of f (exact for band-limited f)."""
    return h1_seminorm_sq(model, f)


# ----------------------------------------------------------------------
# built-in test fields
# ----------------------------------------------------------------------

def _require_circle(model, who):
    if model.kind != "circle":
        raise ValueError(f"{who} builtin is defined on the circle")


def sawtooth(model, amplitude=1.0):
    """amp * sum_k sin(2 pi k x / L)/k: the L^inf-not-H^1 canary.

    Coefficients from the closed-form Fourier series (exact), samples from
    the raw 2pi-periodic shape amp*(pi - theta)/2."""
    _require_circle(model, "sawtooth")
    L = model.params[0]
    coeffs = np.zeros(model.n_modes)
    sin_modes = model.mode_T == 2
    k = model.mode_P[sin_modes]
    coeffs[sin_modes] = amplitude * math.sqrt(L / 2.0) / k
    nodes = model.quadrature[0][:, 0]
    theta = 2 * math.pi * np.mod(nodes, L) / L
    samples = amplitude * (math.pi - theta) / 2.0
    samples[np.isclose(theta, 0.0)] = 0.0  # Fourier value at the jump
    return ScalarField(model, coeffs, samples,
                       float(np.abs(samples).max()), name="sawtooth")


def triangle(model, amplitude=1.0):
    """amp * (|theta - pi| - pi/2), theta = 2 pi x / L: H^1 but not C^1.

    Coefficients 4 amp sqrt(L/2) / (pi k^2) on odd cosine modes (closed
    form)."""
    _require_circle(model, "triangle")
    L = model.params[0]
    coeffs = np.zeros(model.n_modes)
    cos_modes = model.mode_T == 1
    k = model.mode_P[cos_modes]
    vals = np.where(k % 2 == 1,
                    amplitude * 4.0 * math.sqrt(L / 2.0) / (math.pi * k.astype(float)**2),
                    0.0)
    coeffs[cos_modes] = vals
    nodes = model.quadrature[0][:, 0]
    theta = 2 * math.pi * np.mod(nodes, L) / L
    samples = amplitude * (np.abs(theta - math.pi) - math.pi / 2.0)
    return ScalarField(model, coeffs, samples,
                       float(np.abs(samples).max()), name="triangle")


def trig_polynomial(model, terms, const=0.0, name="trig"):
    """Exact trig polynomial from (amplitude, k, 'cos'|'sin') terms.

    k is an integer frequency on the circle or an integer lattice vector on a
    torus. Everything (samples and coefficients) is exact."""
    coeffs = np.zeros(model.n_modes)
    vol = model.volume
    coeffs[model.mode_T == 0] = const * math.sqrt(vol)
    scale = math.sqrt(vol / 2.0)
    for amp, k, kind in terms:
        want_t = 1 if kind == "cos" else 2
        kvec = np.atleast_1d(np.asarray(k, dtype=np.int64))
        if model.kind == "sphere":
            raise ValueError("trig_polynomial builtin targets flat models")
        P = model.mode_P if model.mode_P.ndim == 2 else model.mode_P[:, None]
        hit = (model.mode_T == want_t) & np.all(P == kvec[None, :], axis=1)
        idx = np.nonzero(hit)[0]
        if idx.size == 0:
            # canonical representative may be -k with flipped sign on sin
            hit = (model.mode_T == want_t) & np.all(P == -kvec[None, :], axis=1)
            idx = np.nonzero(hit)[0]
            if idx.size == 0:
                raise ValueError(f"frequency {k} outside the model band")
            coeffs[idx[0]] += (amp if want_t == 1 else -amp) * scale
        else:
            coeffs[idx[0]] += amp * scale
    return from_coefficients(model, coeffs, name=name)


def random_trig(model, rng, n_terms=4, max_freq=None, amp=1.0, name="random_trig"):
    """Seedable random trig polynomial (property-test fodder; pass a seeded
    numpy Generator). Frequencies uniform in [1, max_freq], amplitudes in
    [-amp, amp]."""
    K = max_freq or max(1, model.band_limit // 4)
    terms = []
    for _ in range(n_terms):
        k = int(rng.integers(1, K + 1))
        if model.kind == "flat_torus" and model.dim > 1:
            kv = rng.integers(-K, K + 1, size=model.dim)
            if not kv.any():
                kv[0] = 1
            k = kv
        a = float(rng.uniform(-amp, amp))
        kind = "cos" if rng.integers(2) else "sin"
        terms.append((a, k, kind))
    c = float(rng.uniform(-amp, amp))
    return trig_polynomial(model, terms, const=c, name=name)


BUILTINS = {
    "sawtooth": sawtooth,
    "triangle": triangle,
    "trig": trig_polynomial,
    "random_trig": random_trig,
    "zero": lambda model: zero_field(model),
}


def builtin_field(model, spec, rng=None):
    """Instantiate a field from a JSON-ish {"builtin": name, "params": {...}}
    description (CLI surface)."""
    name = spec["builtin"]
    params = dict(spec.get("params") or {})
    if name == "sawtooth":
        return sawtooth(model, amplitude=float(params.get("amplitude", 1.0)))
    if name == "triangle":
        return triangle(model, amplitude=float(params.get("amplitude", 1.0)))
    if name == "trig":
        terms = [(float(a), k, kind) for a, k, kind in params["terms"]]
        return trig_polynomial(model, terms, const=float(params.get("const", 0.0)))
    if name == "random_trig":
        if rng is None:
            raise ValueError("random_trig requires a seeded generator")
        return random_trig(model, rng,
                           n_terms=int(params.get("n_terms", 4)),
                           max_freq=params.get("max_freq"),
                           amp=float(params.get("amp", 1.0)))
    if name == "zero":
        return zero_field(model)
    raise ValueError(f"unknown builtin field {name!r}")


def field_from_config(model, cfg, rng=None):
    """CLI/config entry: {"builtin": ...} or {"coefficients": [...]} or None."""
    if cfg is None:
        return None
    if "builtin" in cfg:
        return builtin_field(model, cfg, rng=rng)
    if "coefficients" in cfg:
        return from_coefficients(model, np.asarray(cfg["coefficients"], dtype=float))
    raise ValueError("field config needs 'builtin' or 'coefficients'")
