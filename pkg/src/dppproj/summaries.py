"""Pair correlation and normalized Ripley functions of projected DPPs.

For a separable kernel and a coordinate subset I the projected process has
pair correlation

    g_I(x, y) = 1 - kappa_{I^c} |K_I(x, y)|^2 / (K_I(x, x) K_I(y, y)),

with kappa_{I^c} the product of the per-dimension repulsion factors of the
discarded coordinates.  Every statistic here is built on that identity,
either from the spectra (the general path) or from family closed forms.

Closed forms follow the torus-periodic kernels used everywhere else: the
Gaussian factor is an image sum and the L1-exponential factor a hyperbolic
cosine.  ``periodized=False`` gives the plain (non-periodic) expressions.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.signal import fftconvolve

from .errors import (
    DimensionMismatch,
    EmptyInput,
    InvalidParameter,
    InvalidRadius,
    NonNegativityViolation,
    NotProjectionKernel,
    SeriesDivergence,
)
from .kernels import (
    Family,
    IndexSet,
    SeparableKernel,
    Spectrum1D,
    gaussian_kappa_series,
    kappa,
    l1exp_kappa_exact,
)
from .patterns import GEOMETRY, pair_counts
from .sampler import make_rng

logger = logging.getLogger(__name__)

PROJECTION_TOL = 1e-12


# --------------------------------------------------------------------------
# curves


@dataclass(frozen=True, eq=False)
class SummaryCurve:
    """Values of a statistic on a grid of radii, with optional dispersion."""

    r_grid: np.ndarray
    values: np.ndarray
    se: np.ndarray | None = None
    band_lo: np.ndarray | None = None
    band_hi: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        r = np.asarray(self.r_grid, dtype=float)
        object.__setattr__(self, "r_grid", r)
        for name in ("values", "se", "band_lo", "band_hi"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=float)
            if v.shape != r.shape:
                raise DimensionMismatch(f"{name} has shape {v.shape}, grid has {r.shape}")
            object.__setattr__(self, name, v)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.meta, sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "value", "se", "band_lo", "band_hi"])
        nan = np.full(self.r_grid.shape, np.nan)
        cols = [self.r_grid, self.values] + [nan if c is None else c for c in (self.se, self.band_lo, self.band_hi)]
        for row in zip(*cols):
            writer.writerow(["" if np.isnan(v) else format(v, ".17g") for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SummaryCurve":
        lines = text.splitlines()
        meta = json.loads(lines[0][1:]) if lines and lines[0].startswith("#") else {}
        body = [ln for ln in lines if not ln.startswith("#")]
        rows = list(csv.reader(body))[1:]
        cols = list(zip(*rows)) if rows else [()] * 5

        def col(k):
            vals = np.array([float(v) if v else np.nan for v in cols[k]])
            return None if np.isnan(vals).all() and k > 1 else vals

        return cls(col(0), col(1), col(2), col(3), col(4), meta)


# --------------------------------------------------------------------------
# helpers


def _wrap(t):
    """Torus difference mapped to [-1/2, 1/2)."""
    return (np.asarray(t, dtype=float) + 0.5) % 1.0 - 0.5


def _complement_kappa(k: SeparableKernel, I: IndexSet) -> float:
    return float(np.prod([kappa(k.spectra[i]) for i in I.complement]))


def _check_points(x, y, iota):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1:] != (iota,) or y.shape[-1:] != (iota,):
        raise DimensionMismatch(f"points must have {iota} coordinates")
    return x, y


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if r.size and (not np.all(r > 0) or np.any(r > 0.5)):
        raise InvalidRadius("radii must lie in (0, 1/2]")
    return r


def autocorrelation(s: Spectrum1D) -> tuple[np.ndarray, np.ndarray]:
    """Lags and A_D = sum_j lam_j lam_{j+D} of the listed eigenvalues.

    |K(t)|^2 = sum_D A_D exp(2 i pi D t) up to the tail model, if any.
    """
    lo, hi = int(s.indices.min()), int(s.indices.max())
    dense = np.zeros(hi - lo + 1)
    np.add.at(dense, s.indices - lo, s.eigenvalues)
    if dense.size > 4096:
        acf = fftconvolve(dense, dense[::-1])
        acf[np.abs(acf) < 1e-300] = 0.0
    else:
        acf = np.correlate(dense, dense, mode="full")
    lags = np.arange(-(dense.size - 1), dense.size)
    return lags, acf


# --------------------------------------------------------------------------
# pair correlation


def pcf_projected(k: SeparableKernel, I, x, y) -> np.ndarray:
    """Pair correlation of the projection on I from the spectral trace formula.

    ``x`` and ``y`` are points of [0, 1]^iota (broadcast over leading axes).
    Coincident points get the value 0.
    """
    I = IndexSet.coerce(I, k.d)
    x, y = _check_points(x, y, I.iota)
    if k.is_poisson:
        out = np.ones(np.broadcast_shapes(x.shape, y.shape)[:-1])
    else:
        diff = x - y
        ratio = np.ones(diff.shape[:-1])
        for pos, i in enumerate(I.indices):
            s = k.spectra[i]
            ratio = ratio * np.abs(s.evaluate(diff[..., pos])) ** 2 / s.evaluate(0.0).real ** 2
        out = 1.0 - _complement_kappa(k, I) * ratio
    same = np.all(x == y, axis=-1)
    return np.where(same, 0.0, out)


def gaussian_ratio(t, alpha: float, periodized: bool = True) -> np.ndarray:
    """K_0(t) / K_0(0) for the Gaussian factor."""
    t = np.asarray(t, dtype=float)
    if not periodized:
        return np.exp(-((t / alpha) ** 2))
    t = _wrap(t)
    K = int(math.ceil(6.2 * alpha)) + 1
    shifts = np.arange(-K, K + 1)
    num = np.exp(-(((t[..., None] + shifts) / alpha) ** 2)).sum(axis=-1)
    den = np.exp(-((shifts / alpha) ** 2)).sum()
    return num / den


def l1exp_ratio(t, alpha: float, periodized: bool = True) -> np.ndarray:
    """K_0(t) / K_0(0) for the L1-exponential factor."""
    t = np.asarray(t, dtype=float)
    if not periodized:
        return np.exp(-np.abs(t) / alpha)
    u = np.abs(_wrap(t))
    # cosh((u - 1/2)/alpha) / cosh(1/(2 alpha)) without overflow
    return (np.exp((u - 1.0) / alpha) + np.exp(-u / alpha)) / (1.0 + np.exp(-1.0 / alpha))


def dirichlet_ratio(t, n: int) -> np.ndarray:
    """|K_i(t)|^2 / K_i(0)^2 = (1/n) sum_{|j|<n} (1 - |j|/n) cos(2 pi j t)."""
    t = np.asarray(t, dtype=float)
    j = np.arange(1, n)
    tri = 1.0 + 2.0 * np.cos(2 * np.pi * t[..., None] * j) @ (1.0 - j / n)
    return tri / n


def family_kappa(k: SeparableKernel) -> float:
    """Repulsion factor of one dimension from the family series formulas."""
    if k.family is Family.GAUSSIAN:
        return gaussian_kappa_series(k.alpha, 10_000)
    if k.family is Family.L1EXP:
        return l1exp_kappa_exact(k.alpha)
    raise InvalidParameter(f"no common kappa for {k.family.value}")


def pcf_closed_form(k: SeparableKernel, I, x, y, periodized: bool = True) -> np.ndarray:
    """Family-specific pair correlation of the projection on I."""
    I = IndexSet.coerce(I, k.d)
    x, y = _check_points(x, y, I.iota)
    diff = x - y
    if k.is_poisson:
        out = np.ones(diff.shape[:-1])
    elif k.family is Family.DIRICHLET:
        prod = np.ones(diff.shape[:-1])
        for pos, i in enumerate(I.indices):
            prod = prod * dirichlet_ratio(diff[..., pos], k.factors[i]) * k.factors[i]
        out = 1.0 - prod / float(np.prod(k.factors))
    else:
        ratio = gaussian_ratio if k.family is Family.GAUSSIAN else l1exp_ratio
        kap = family_kappa(k) ** (k.d - I.iota)
        prod = np.prod(ratio(diff, k.alpha, periodized) ** 2, axis=-1)
        out = 1.0 - kap * prod
    same = np.all(x == y, axis=-1)
    return np.where(same, 0.0, out)


# --------------------------------------------------------------------------
# normalized Ripley function


_GL_T, _GL_W = np.polynomial.legendre.leggauss(128)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


def ripley_factor(s: Spectrum1D, r) -> np.ndarray:
    """int_0^1 |K_i(t r)|^2 / K_i(0)^2 dt for each radius."""
    r = np.asarray(r, dtype=float)
    k0 = s.evaluate(0.0).real
    if s.tail is None:
        lags, acf = autocorrelation(s)
        keep = acf != 0
        # np.sinc(x) = sin(pi x)/(pi x), so sinc(2 pi D r) in the sin(t)/t convention is np.sinc(2 D r)
        out = np.sinc(2.0 * np.multiply.outer(r, lags[keep])) @ acf[keep]
        return out / k0**2
    vals = np.abs(s.evaluate(np.multiply.outer(r, _GL_T))) ** 2
    return vals @ _GL_W / k0**2


def ripley_projected(k: SeparableKernel, I, r) -> np.ndarray:
    """Normalized sup-norm Ripley function of the projection on I (spectral path)."""
    r = _check_radius(r)
    I = IndexSet.coerce(I, k.d)
    if k.is_poisson:
        return np.ones(r.shape)
    prod = np.ones(r.shape)
    done: dict = {}
    for i in I.indices:
        s = k.spectra[i]
        if id(s) not in done:
            done[id(s)] = ripley_factor(s, r)
        prod = prod * done[id(s)]
    return 1.0 - _complement_kappa(k, I) * prod


def _gaussian_ripley_factor(r, alpha, periodized):
    r = np.asarray(r, dtype=float)
    if not periodized:
        c = math.sqrt(2.0) / alpha
        return math.sqrt(math.pi) / 2.0 * special.erf(c * r) / (c * r)
    K = int(math.ceil(6.2 * alpha)) + 2
    shifts = np.arange(-K, K + 1)
    kk, ll = np.meshgrid(shifts, shifts, indexing="ij")
    mid = (kk + ll).ravel() / 2.0
    gap = np.exp(-((kk - ll).ravel() ** 2) / (2 * alpha**2))
    c = math.sqrt(2.0) / alpha
    # int_0^r exp(-2 (s + mid)^2 / alpha^2) ds for every image pair
    rr = r[..., None]
    integ = math.sqrt(math.pi) / (2 * c) * (special.erf(c * (rr + mid)) - special.erf(c * mid))
    den = np.exp(-((shifts / alpha) ** 2)).sum() ** 2
    return (integ @ gap) / (r * den)


def _l1exp_ripley_factor(r, alpha, periodized):
    r = np.asarray(r, dtype=float)
    a = alpha
    if not periodized:
        return a / (2 * r) * (-np.expm1(-2 * r / a))
    e1 = math.exp(-1.0 / a)
    num = 0.5 * a * (np.exp(2 * (r - 1) / a) - e1**2) + 2 * r * e1 + 0.5 * a * (-np.expm1(-2 * r / a))
    return num / (r * (1 + e1) ** 2)


def _dirichlet_ripley_factor(r, n):
    j = np.arange(-(n - 1), n)
    return np.sinc(2.0 * np.multiply.outer(np.asarray(r, dtype=float), j)) @ (1.0 - np.abs(j) / n) / n


def ripley_closed_form(k: SeparableKernel, I, r, periodized: bool = True) -> np.ndarray:
    """Family closed forms of the projected Ripley function."""
    r = _check_radius(r)
    I = IndexSet.coerce(I, k.d)
    if k.is_poisson:
        return np.ones(r.shape)
    if k.family is Family.DIRICHLET:
        prod = np.ones(r.shape)
        for i in I.indices:
            prod = prod * _dirichlet_ripley_factor(r, k.factors[i]) * k.factors[i]
        return 1.0 - prod / float(np.prod(k.factors))
    factor = _gaussian_ripley_factor if k.family is Family.GAUSSIAN else _l1exp_ripley_factor
    kap = family_kappa(k) ** (k.d - I.iota)
    return 1.0 - kap * factor(r, k.alpha, periodized) ** I.iota


def empirical_ripley(
    patterns, rho: float, r_grid, normalization: str = "intensity"
) -> SummaryCurve:
    """Torus estimate of the normalized Ripley function, averaged over patterns.

    Per pattern, ordered pairs within sup-distance r are divided by
    ``rho**2 (2r)**iota`` (``normalization="intensity"``), which is unbiased
    for every stationary process with intensity rho.  The ratio form
    ``count * rho * (2r)**iota`` (``normalization="count"``) has bias
    ``-1/rho`` under the Poisson law; for fixed-count processes the two
    coincide.
    """
    patterns = list(patterns)
    if not patterns:
        raise EmptyInput("no patterns given")
    if not rho > 0:
        raise InvalidParameter("rho must be positive")
    if normalization not in ("intensity", "count"):
        raise InvalidParameter(f"unknown normalization {normalization!r}")
    r = _check_radius(r_grid)
    iota = patterns[0].iota
    if any(p.iota != iota for p in patterns):
        raise DimensionMismatch("patterns have different dimensions")
    vol = (2.0 * r) ** iota
    per = np.empty((len(patterns), r.size))
    empty = 0
    for row, p in enumerate(patterns):
        if p.count == 0:
            empty += 1
            per[row] = 0.0
            continue
        pairs = pair_counts(p, r)
        denom = rho * rho if normalization == "intensity" else p.count * rho
        per[row] = pairs / (denom * vol)
    if empty:
        warnings.warn(f"{empty} empty pattern(s) contribute 0 to the Ripley estimate", RuntimeWarning, stacklevel=2)
    m = len(patterns)
    se = per.std(axis=0, ddof=1) / math.sqrt(m) if m > 1 else np.full(r.shape, np.nan)
    meta = {"estimator": f"torus-{normalization}", "geometry": GEOMETRY, "iota": iota, "rho": rho, "replications": m}
    return SummaryCurve(r, per.mean(axis=0), se, None, None, meta)


def _subsets(d: int, iota: int, n_subsets, rng) -> list[tuple]:
    total = math.comb(d, iota)
    if (n_subsets is None and total <= 1000) or (n_subsets is not None and n_subsets >= total):
        return list(itertools.combinations(range(d), iota))
    if n_subsets is None:
        n_subsets = 1000
    seen: dict = {}
    while len(seen) < n_subsets:
        pick = tuple(sorted(rng.choice(d, size=iota, replace=False).tolist()))
        seen.setdefault(pick, None)
    return list(seen)


def ripley_envelope(k: SeparableKernel, iota: int, n_subsets, seed, r_grid, center: str = "mean") -> SummaryCurve:
    """Mean and quartiles of the analytic Ripley curve over coordinate subsets.

    All subsets of size iota are used when ``n_subsets`` is None and there
    are at most 1000 of them, or when ``n_subsets`` reaches their number;
    otherwise ``n_subsets`` distinct subsets are drawn at random.  The mean
    can leave the quartile band when the subset curves are skewed;
    ``center="median"`` keeps it inside.
    """
    if center not in ("mean", "median"):
        raise InvalidParameter(f"unknown center {center!r}")
    if not 1 <= iota <= k.d:
        raise InvalidParameter(f"iota must lie in [1, {k.d}]")
    r = _check_radius(r_grid)
    subsets = _subsets(k.d, iota, n_subsets, make_rng(seed))
    curves = np.array([ripley_projected(k, I, r) for I in subsets])
    q1, mid, q3 = np.quantile(curves, [0.25, 0.5, 0.75], axis=0)
    meta = {
        "center": center,
        "estimator": "analytic-envelope",
        "model": k.family.value,
        "iota": iota,
        "subsets": len(subsets),
        "enumerated": len(subsets) == math.comb(k.d, iota),
    }
    return SummaryCurve(r, curves.mean(axis=0) if center == "mean" else mid, None, q1, q3, meta)


# --------------------------------------------------------------------------
# higher-order intensities


def alpha_determinant(A: np.ndarray, alpha: float) -> complex:
    """sum over permutations of alpha^(k - #cycles) prod_i A[i, sigma(i)]."""
    A = np.asarray(A)
    k = A.shape[0]
    if A.shape != (k, k):
        raise DimensionMismatch("alpha_determinant needs a square matrix")
    if k > 8:
        raise InvalidParameter("permutation sums are limited to k <= 8")
    total = 0.0
    rows = np.arange(k)
    for perm in itertools.permutations(range(k)):
        total += alpha ** (k - _cycle_count(perm)) * np.prod(A[rows, perm])
    return total


def _cycles(perm) -> list[int]:
    seen = [False] * len(perm)
    sizes = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        size = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            size += 1
        sizes.append(size)
    return sizes


def _cycle_count(perm) -> int:
    return len(_cycles(perm))


def _kernel_matrix(k: SeparableKernel, I: IndexSet, pts: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - pts[None, :, :]
    out = np.ones(diff.shape[:2], dtype=complex)
    for pos, i in enumerate(I.indices):
        out = out * k.spectra[i].evaluate(diff[..., pos])
    return out


def rho_k_projected(k: SeparableKernel, I, points) -> float:
    """k-th order intensity of the projection on I via the cycle expansion.

    sum_sigma (-1)^(k - C(sigma)) prod_i K_I(x_i, x_sigma(i))
        tr(K_{I^c})^(k - c(sigma)) prod_{cycles e} tr(K_{I^c}^(|e|)),
    where c(sigma) counts the moved indices and the product runs over the
    cycles of length at least two.
    """
    I = IndexSet.coerce(I, k.d)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != I.iota:
        raise DimensionMismatch(f"points must have {I.iota} coordinates")
    n = len(pts)
    if n > 8:
        raise InvalidParameter("permutation sums are limited to k <= 8")
    if len({tuple(p) for p in pts.tolist()}) < n:
        return 0.0
    A = _kernel_matrix(k, I, pts)
    comp = [k.spectra[i] for i in I.complement]

    def tr(m):
        return float(np.prod([s.power_sum(m) for s in comp]))

    total = 0.0
    rows = np.arange(n)
    for perm in itertools.permutations(range(n)):
        sizes = _cycles(perm)
        moved = sum(c for c in sizes if c > 1)
        weight = (-1) ** (n - len(sizes)) * tr(1) ** (n - moved)
        for c in sizes:
            if c > 1:
                weight *= tr(c)
        total += weight * np.prod(A[rows, perm])
    return float(np.real(total))


def _require_projection(k: SeparableKernel, I: IndexSet) -> float:
    for i in I.complement:
        lam = k.spectra[i].eigenvalues
        if k.spectra[i].tail is not None or np.any(np.minimum(np.abs(lam), np.abs(lam - 1)) > PROJECTION_TOL):
            raise NotProjectionKernel(f"coordinate {i} does not carry a projection kernel")
    return float(np.prod([k.spectra[i].eigenvalues.sum() for i in I.complement]))


def rho2_alpha_det(k: SeparableKernel, I, x, y) -> float:
    """Second-order intensity of the projection when K_{I^c} is a projection.

    The projection is then an alpha-DPP with alpha = -1/M, M = tr(K_{I^c}):
    rho2 = M^2 K_I(x,x) K_I(y,y) - M |K_I(x,y)|^2.
    """
    I = IndexSet.coerce(I, k.d)
    if k.is_poisson:
        raise NotProjectionKernel("the Poisson reference has no kernel")
    M = _require_projection(k, I)
    x, y = _check_points(x, y, I.iota)
    if np.array_equal(x, y):
        return 0.0
    A = _kernel_matrix(k, I, np.stack([x, y]))
    alpha = -1.0 / M
    return float(np.real(alpha_determinant(-A / alpha, alpha)))


# --------------------------------------------------------------------------
# Laplace functional


@dataclass(frozen=True)
class LaplaceResult:
    series: float       # trace series form
    product: float      # superposition product form
    terms: int
    nodes: int


def _grid_values(h, nodes: int, iota: int) -> np.ndarray:
    mids = (np.arange(nodes) + 0.5) / nodes
    if callable(h):
        mesh = np.meshgrid(*([mids] * iota), indexing="ij")
        pts = np.stack(mesh, axis=-1).reshape(-1, iota)
        vals = np.asarray(h(pts if iota > 1 else pts[:, 0]), dtype=float)
        return np.broadcast_to(vals, (len(pts),)).astype(float).copy()
    vals = np.asarray(h, dtype=float)
    if vals.shape != (nodes,) * iota:
        raise DimensionMismatch(f"grid values must have shape {(nodes,) * iota}")
    return vals.reshape(-1)


def _nystrom_eigenvalues(k: SeparableKernel, I: IndexSet, weight: np.ndarray, nodes: int) -> np.ndarray:
    """Eigenvalues of the midpoint discretization of sqrt(w) K_I sqrt(w)."""
    mids = (np.arange(nodes) + 0.5) / nodes
    spectra = [k.spectra[i] for i in I.indices]
    rank = math.prod(s.indices.size for s in spectra)
    cells = nodes**I.iota
    if all(s.tail is None for s in spectra) and rank <= cells:
        # K_I = Phi diag(lam) Phi^H has finite rank; work with the rank x rank matrix
        feats = []
        for s in spectra:
            feats.append(np.exp(2j * np.pi * np.outer(mids, s.indices)) * np.sqrt(s.eigenvalues))
        Phi = feats[0]
        for f in feats[1:]:
            Phi = (Phi[:, None, :, None] * f[None, :, None, :]).reshape(Phi.shape[0] * f.shape[0], -1)
        G = (Phi.conj().T * (weight / cells)) @ Phi
    else:
        if cells > 4096:
            raise InvalidParameter(f"dense Nystrom grid of {cells} cells is too large; lower the node count")
        mesh = np.stack(np.meshgrid(*([mids] * I.iota), indexing="ij"), axis=-1).reshape(-1, I.iota)
        Kmat = _kernel_matrix(k, I, mesh)
        sw = np.sqrt(weight)
        G = sw[:, None] * Kmat * sw[None, :] / cells
    mu = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    return np.clip(mu, 0.0, None)


def laplace_projected(
    k: SeparableKernel, I, h, nodes: int = 256, tol: float = 1e-12, max_terms: int = 100_000
) -> LaplaceResult:
    """Laplace functional E[prod exp(-h(x))] of the projection on I.

    ``h`` is a callable on [0, 1]^iota or its values at the midpoint grid
    with ``nodes`` points per axis.  Two forms are returned: the trace series
    exp(-sum_k tr(K_{I^c}^(k)) tr(Kh^(k)) / k) and the product
    prod_l prod_a (1 - lam_l mu_a) over the eigenvalues lam_l of K_{I^c}
    and mu_a of Kh = sqrt(1 - e^-h) K_I sqrt(1 - e^-h).
    """
    I = IndexSet.coerce(I, k.d)
    if k.is_poisson:
        raise InvalidParameter("use the Poisson formula exp(-rho int(1 - e^-h)) for the reference")
    if I.iota > 2:
        raise InvalidParameter("the Nystrom grid is limited to iota <= 2")
    vals = _grid_values(h, nodes, I.iota)
    if np.any(np.isnan(vals)) or np.any(vals < 0):
        raise NonNegativityViolation("h must be non-negative")
    weight = -np.expm1(-vals)
    mu = _nystrom_eigenvalues(k, I, weight, nodes)
    mu = mu[mu > 0]
    comp = [k.spectra[i] for i in I.complement]

    # product form over the (listed) complement spectrum
    lam_c = np.ones(1)
    for s in comp:
        lam_c = np.multiply.outer(lam_c, s.eigenvalues).ravel()
        lam_c = lam_c[lam_c > 0]
    with np.errstate(divide="ignore"):
        log_prod = float(np.sum(np.log1p(-np.clip(np.multiply.outer(lam_c, mu), 0.0, 1.0))))
    product = math.exp(log_prod) if log_prod > -745 else 0.0

    # trace series
    lam_max = math.prod(float(s.eigenvalues.max()) for s in comp) if comp else 1.0
    q = lam_max * (float(mu.max()) if mu.size else 0.0)
    if q >= 1.0:
        raise SeriesDivergence(f"series ratio {q:.17g} >= 1; the product form gives {product!r}")
    total = 0.0
    terms = 0
    for m in range(1, max_terms + 1):
        tr_c = math.prod(s.power_sum(m) for s in comp) if comp else 1.0
        term = tr_c * float(np.sum(mu**m)) / m
        total += term
        terms = m
        # remaining terms are bounded by a geometric tail of ratio q
        if term * q / (1.0 - q) < tol:
            break
    else:
        raise SeriesDivergence(f"series did not reach tolerance {tol:g} in {max_terms} terms (ratio {q:.6g})")
    return LaplaceResult(math.exp(-total), product, terms, nodes)
