"""Separable stationary kernels on [0, 1]^d described by their Fourier spectra.

Every one-dimensional factor is a periodic stationary kernel

    K_i(t) = sum_j lam_j exp(2 i pi j t),

so the Mercer eigenfunctions are the Fourier modes and the eigenvalues are
stored explicitly.  The Gaussian and L1-exponential factors are the
periodised versions of ``exp(-(t/alpha)^2)`` and ``exp(-|t|/alpha)``,
rescaled so that ``K_i(0) = rho**(1/d)``; their eigenvalues are proportional
to the spectral densities sampled at the integers.  Dirichlet factors are
projection kernels with ``n_i`` unit eigenvalues at ``0, ..., n_i - 1``.

The L1-exponential spectrum decays like ``j**-2``.  Listing it down to a
relative tail of 1e-9 is impractical, so its spectrum carries a
:class:`RationalTail` that accounts for the eigenvalues beyond the listed
ones in traces and kernel evaluations.  Only the listed eigenvalues take
part in sampling.
"""

from __future__ import annotations

import enum
import functools
import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
from scipy import special

from .errors import (
    DimensionMismatch,
    EmptySpectrum,
    ExistenceViolation,
    IndexOutOfRange,
    InvalidParameter,
)

logger = logging.getLogger(__name__)

DEFAULT_TRUNC_EPS = 1e-9
# Explicit L1-exponential terms per side; beyond this the tail model takes over.
MAX_L1EXP_TERMS = 2**16
# Gaussian spectra are always listed to double precision.
GAUSSIAN_FLOOR_EPS = 1e-17
EXISTENCE_RTOL = 1e-12


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    L1EXP = "l1exp"
    DIRICHLET = "dirichlet"
    POISSON = "poisson"


def _readonly(a):
    a = np.array(a)
    a.flags.writeable = False
    return a


@functools.lru_cache(maxsize=None)
def _bernoulli_numbers(p: int) -> tuple:
    # exact recurrence; scipy.special.bernoulli loses ~1e-14 already at B_4
    b = [Fraction(1)]
    for m in range(1, p + 1):
        b.append(-sum(math.comb(m + 1, k) * b[k] for k in range(m)) / Fraction(m + 1))
    return tuple(b)


def _bernoulli_poly(p: int, x):
    b = _bernoulli_numbers(p)
    coeffs = [float(math.comb(p, k) * b[k]) for k in range(p + 1)]  # highest power first
    return np.polyval(coeffs, x)


def _cos_zeta(p: int, t):
    """sum_{j>=1} cos(2 pi j t) / j**p for even p, via Bernoulli polynomials."""
    q = p // 2
    frac = np.mod(t, 1.0)
    return (-1) ** (q + 1) * (2 * np.pi) ** p / (2 * math.factorial(p)) * _bernoulli_poly(p, frac)


def fourier_sum(t, lo: int, coeffs) -> np.ndarray:
    """sum_j coeffs[w, j] exp(2 i pi (lo + j) t) for every t and row w.

    Writing j = c B + b with B ~ sqrt(L) turns the sum into one complex
    matrix product plus O(sqrt(L)) exponentials per point.  Returns an
    array of shape ``t.shape + (W,)``.
    """
    t = np.asarray(t, dtype=float)
    coeffs = np.atleast_2d(np.asarray(coeffs))
    W, L = coeffs.shape
    B = max(1, int(math.ceil(math.sqrt(L))))
    C = -(-L // B)
    padded = np.zeros((W, C * B), dtype=complex)
    padded[:, :L] = coeffs
    blocks = padded.reshape(W * C, B).T  # (B, W*C)
    flat = t.reshape(-1)
    out = np.empty((flat.size, W), dtype=complex)
    step = max(1, 2**21 // max(1, W * C + B))
    b = np.arange(B)
    c = np.arange(C) * B
    for start in range(0, flat.size, step):
        tc = flat[start:start + step]
        inner = (np.exp(2j * np.pi * np.outer(tc, b)) @ blocks).reshape(tc.size, W, C)
        outer = np.exp(2j * np.pi * np.outer(tc, c + lo))
        out[start:start + step] = np.einsum("mwc,mc->mw", inner, outer)
    return out.reshape(t.shape + (W,))


@dataclass(frozen=True)
class RationalTail:
    """Eigenvalues ``scale / (1 + (rate * j)**2)`` for every ``|j| > bound``."""

    scale: float
    rate: float
    bound: int

    def _orders(self, m: int, rtol: float = 1e-20) -> Iterator[tuple[int, float]]:
        # expansion (1 + x)^-m = sum_k binom(-m, k) x^k with x = 1/(rate j)^2
        a2 = self.rate**2
        first = None
        for k in range(64):
            coef = (-1) ** k * math.comb(m + k - 1, k) / a2 ** (m + k)
            zeta = special.zeta(2 * (m + k), self.bound + 1)
            term = coef * zeta
            if first is None:
                first = abs(term)
            yield 2 * (m + k), coef
            if abs(term) <= rtol * first:
                return

    def power_sum(self, m: int) -> float:
        """sum over |j| > bound of lam_j**m."""
        total = 0.0
        for p, coef in self._orders(m):
            total += coef * special.zeta(p, self.bound + 1)
        return 2.0 * self.scale**m * total

    def evaluate(self, t) -> np.ndarray:
        """sum over |j| > bound of lam_j exp(2 i pi j t) (real by symmetry)."""
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1)
        orders = list(self._orders(1, rtol=1e-18))
        j = np.arange(1, self.bound + 1, dtype=float)
        weights = np.array([j**-p for p, _ in orders])
        partial = fourier_sum(flat, 1, weights).real
        out = np.zeros(flat.shape)
        for w, (p, coef) in enumerate(orders):
            out += coef * (_cos_zeta(p, flat) - partial[:, w])
        return (2.0 * self.scale * out).reshape(t.shape)


@dataclass(frozen=True, eq=False)
class Spectrum1D:
    """Eigenvalues of a one-dimensional stationary kernel on the Fourier basis.

    ``indices`` are the signed integer frequencies, ``eigenvalues`` the
    matching lam_j.  ``discarded_mass`` is the eigenvalue mass that is not
    listed explicitly (whether or not a ``tail`` model accounts for it).
    """

    indices: np.ndarray
    eigenvalues: np.ndarray
    discarded_mass: float = 0.0
    tail: RationalTail | None = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        lam = np.asarray(self.eigenvalues, dtype=float)
        if idx.shape != lam.shape or idx.ndim != 1:
            raise InvalidParameter("indices and eigenvalues must be 1-d arrays of equal length")
        if lam.size and (lam.min() < 0 or lam.max() > 1 + EXISTENCE_RTOL):
            raise ExistenceViolation("eigenvalues must lie in [0, 1]")
        object.__setattr__(self, "indices", _readonly(idx))
        object.__setattr__(self, "eigenvalues", _readonly(lam))

    @property
    def truncation_bound(self) -> int:
        return int(np.abs(self.indices).max()) if self.indices.size else 0

    @property
    def is_symmetric(self) -> bool:
        if self.tail is None and not self.indices.size:
            return True
        lookup = dict(zip(self.indices.tolist(), self.eigenvalues.tolist()))
        return all(lookup.get(-j) == lam for j, lam in lookup.items())

    def power_sum(self, m: int) -> float:
        """Trace of the m-fold iterated kernel, sum_j lam_j**m."""
        if m < 1:
            raise InvalidParameter("m must be a positive integer")
        if not self.indices.size:
            raise EmptySpectrum("spectrum has no eigenvalues")
        total = float(np.sum(self.eigenvalues**m))
        if self.tail is not None:
            total += self.tail.power_sum(m)
        return total

    def trace(self) -> float:
        return self.power_sum(1)

    def evaluate(self, t) -> np.ndarray:
        """K(t) = sum_j lam_j exp(2 i pi j t), complex."""
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1)
        lo, hi = int(self.indices.min()), int(self.indices.max())
        dense = np.zeros(hi - lo + 1)
        np.add.at(dense, self.indices - lo, self.eigenvalues)
        out = fourier_sum(flat, lo, dense)[:, 0]
        if self.tail is not None:
            out += self.tail.evaluate(flat)
        return out.reshape(t.shape)

    def scaled(self, c: float) -> "Spectrum1D":
        tail = None
        if self.tail is not None:
            tail = RationalTail(self.tail.scale * c, self.tail.rate, self.tail.bound)
        return Spectrum1D(self.indices, self.eigenvalues * c, self.discarded_mass * c, tail)


def kappa(s: Spectrum1D) -> float:
    """Repulsion factor tr(K^(2)) / tr(K)^2 of a one-dimensional factor."""
    tr = s.power_sum(1)
    if tr <= 0:
        raise EmptySpectrum("kappa needs a positive trace")
    return s.power_sum(2) / tr**2


def iterated_trace(s: Spectrum1D, m: int) -> float:
    return s.power_sum(m)


# --------------------------------------------------------------------------
# index sets


@dataclass(frozen=True)
class IndexSet:
    """Sorted 0-based coordinate indices kept by a projection."""

    indices: tuple
    d: int

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        if len(set(idx)) != len(idx):
            raise InvalidParameter(f"repeated coordinate in {self.indices}")
        if not 1 <= len(idx) <= self.d:
            raise InvalidParameter(f"index set must have between 1 and d={self.d} entries")
        if idx[0] < 0 or idx[-1] >= self.d:
            raise IndexOutOfRange(f"coordinates {idx} out of range for d={self.d}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def coerce(cls, I, d: int) -> "IndexSet":
        if isinstance(I, IndexSet):
            if I.d != d:
                raise DimensionMismatch(f"index set built for d={I.d}, kernel has d={d}")
            return I
        return cls(tuple(I), d)

    @classmethod
    def full(cls, d: int) -> "IndexSet":
        return cls(tuple(range(d)), d)

    @property
    def iota(self) -> int:
        return len(self.indices)

    @property
    def complement(self) -> tuple:
        return tuple(i for i in range(self.d) if i not in self.indices)


# --------------------------------------------------------------------------
# kernels


@dataclass(frozen=True, eq=False)
class SeparableKernel:
    family: Family
    d: int
    rho: float
    spectra: tuple = ()
    alpha: float | None = None
    factors: tuple | None = None
    trunc_eps: float = DEFAULT_TRUNC_EPS

    @property
    def is_poisson(self) -> bool:
        return self.family is Family.POISSON

    def traces(self) -> np.ndarray:
        return np.array([s.trace() for s in self.spectra])

    def kappas(self) -> np.ndarray:
        return np.array([kappa(s) for s in self.spectra])

    def intensity(self) -> float:
        """Product of the per-dimension traces, i.e. K(x, x) = tr_B(K)."""
        if self.is_poisson:
            return self.rho
        return float(np.prod(self.traces()))

    def projected_intensity(self, I) -> float:
        """K_I(x, x) tr(K_{I^c}); equals :meth:`intensity` for separable kernels."""
        if self.is_poisson:
            return self.rho
        I = IndexSet.coerce(I, self.d)
        tr = self.traces()
        k_ii = np.prod([self.spectra[i].evaluate(0.0).real for i in I.indices])
        return float(k_ii * np.prod(tr[list(I.complement)]))

    def to_dict(self) -> dict:
        out = {"family": self.family.value, "d": self.d}
        if self.family is Family.DIRICHLET:
            out["N"] = int(round(self.rho))
            out["factors"] = list(self.factors)
        else:
            out["rho"] = self.rho
        if self.family in (Family.GAUSSIAN, Family.L1EXP):
            out["alpha"] = self.alpha
            out["trunc_eps"] = self.trunc_eps
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _check_positive(**kw):
    for name, value in kw.items():
        if value is None or not np.isfinite(value) or value <= 0:
            raise InvalidParameter(f"{name} must be positive, got {value!r}")


def _check_dim(d):
    if int(d) != d or d < 1:
        raise InvalidParameter(f"d must be a positive integer, got {d!r}")
    return int(d)


def gaussian_boundary_alpha(rho: float, d: int) -> float:
    """Largest alpha for which rho (alpha sqrt(pi))^d <= 1."""
    return 1.0 / (math.sqrt(math.pi) * rho ** (1.0 / d))


def l1exp_boundary_alpha(rho: float, d: int) -> float:
    return 1.0 / (2.0 * rho ** (1.0 / d))


def _gaussian_1d(rho_1d: float, alpha: float, trunc_eps: float) -> Spectrum1D:
    eps = min(trunc_eps, GAUSSIAN_FLOOR_EPS)
    jmax = int(math.ceil(math.sqrt(745.0) / (math.pi * alpha))) + 1
    j = np.arange(jmax + 1)
    half = alpha * math.sqrt(math.pi) * np.exp(-((math.pi * alpha * j) ** 2))
    # tail beyond J, both sides: 2 * sum_{j > J} half[j]
    tails = 2.0 * (np.cumsum(half[::-1])[::-1] - half)
    total = half[0] + 2.0 * half[1:].sum()
    J = int(np.argmax(tails <= eps * total))
    idx = np.arange(-J, J + 1)
    raw = half[np.abs(idx)]
    norm = rho_1d / raw.sum()
    return Spectrum1D(idx, raw * norm, float(tails[J] * norm))


def _l1exp_1d(rho_1d: float, alpha: float, trunc_eps: float) -> Spectrum1D:
    a = 2.0 * math.pi * alpha
    approx_total = 1.0 / (2.0 * alpha) + 1.0
    J = int(math.ceil(2.0 / (a * a * trunc_eps * approx_total)))
    J = max(J, int(math.ceil(8.0 / a)))
    if J > MAX_L1EXP_TERMS:
        logger.debug("L1-exponential spectrum capped at %d explicit terms", MAX_L1EXP_TERMS)
        J = max(MAX_L1EXP_TERMS, int(math.ceil(8.0 / a)))
    idx = np.arange(-J, J + 1)
    raw = 1.0 / (1.0 + (a * idx) ** 2)
    raw_tail = RationalTail(1.0, a, J)
    norm = rho_1d / (raw.sum() + raw_tail.power_sum(1))
    tail = RationalTail(norm, a, J)
    return Spectrum1D(idx, raw * norm, tail.power_sum(1), tail)


def gaussian_spectrum(rho: float, alpha: float, d: int, trunc_eps: float = DEFAULT_TRUNC_EPS) -> SeparableKernel:
    """Gaussian DPP kernel rho * exp(-|x - y|^2 / alpha^2), periodised on the torus."""
    _check_positive(rho=rho, alpha=alpha, trunc_eps=trunc_eps)
    d = _check_dim(d)
    if rho * (alpha * math.sqrt(math.pi)) ** d > 1 + EXISTENCE_RTOL:
        raise ExistenceViolation(
            f"rho (alpha sqrt(pi))^d = {rho * (alpha * math.sqrt(math.pi)) ** d:.6g} > 1"
        )
    s = _gaussian_1d(rho ** (1.0 / d), alpha, trunc_eps)
    return SeparableKernel(Family.GAUSSIAN, d, float(rho), (s,) * d, alpha=float(alpha), trunc_eps=trunc_eps)


def l1exp_spectrum(rho: float, alpha: float, d: int, trunc_eps: float = DEFAULT_TRUNC_EPS) -> SeparableKernel:
    """L1-exponential DPP kernel rho * exp(-|x - y|_1 / alpha), periodised."""
    _check_positive(rho=rho, alpha=alpha, trunc_eps=trunc_eps)
    d = _check_dim(d)
    if rho * (2 * alpha) ** d > 1 + EXISTENCE_RTOL:
        raise ExistenceViolation(f"rho (2 alpha)^d = {rho * (2 * alpha) ** d:.6g} > 1")
    s = _l1exp_1d(rho ** (1.0 / d), alpha, trunc_eps)
    return SeparableKernel(Family.L1EXP, d, float(rho), (s,) * d, alpha=float(alpha), trunc_eps=trunc_eps)


def _divisors(n: int) -> list[int]:
    small = [k for k in range(1, math.isqrt(n) + 1) if n % k == 0]
    return sorted(set(small + [n // k for k in small]))


def _factorizations(n: int, slots: int, largest: int) -> Iterator[tuple]:
    if slots == 1:
        if n <= largest:
            yield (n,)
        return
    for f in reversed(_divisors(n)):
        if f > largest:
            continue
        if f**slots < n:
            break
        for rest in _factorizations(n // f, slots - 1, f):
            yield (f,) + rest


def balanced_factorization(N: int, d: int) -> list[int]:
    """Split N into d factors n_1 >= ... >= n_d with the smallest spread.

    Spread is max - min; ties go to the smallest squared deviation from
    N**(1/d), then to the lexicographically largest sequence.
    """
    if int(N) != N or N < 1:
        raise InvalidParameter(f"N must be a positive integer, got {N!r}")
    d = _check_dim(d)
    N = int(N)
    target = N ** (1.0 / d)

    def key(fs):
        return (fs[0] - fs[-1], sum((f - target) ** 2 for f in fs), tuple(-f for f in fs))

    return list(min(_factorizations(N, d, N), key=key))


def dirichlet_spectrum(N: int, d: int, factors: Sequence[int] | None = None) -> SeparableKernel:
    """(N, d)-Dirichlet projection kernel with frequencies {0..n_i-1} per axis."""
    if int(N) != N or N < 1:
        raise InvalidParameter(f"N must be a positive integer, got {N!r}")
    d = _check_dim(d)
    if factors is None:
        factors = balanced_factorization(N, d)
    factors = tuple(int(f) for f in factors)
    if len(factors) != d or any(f < 1 for f in factors) or math.prod(factors) != N:
        raise InvalidParameter(f"factors {factors} must be {d} positive integers with product {N}")
    spectra = tuple(Spectrum1D(np.arange(n), np.ones(n)) for n in factors)
    return SeparableKernel(Family.DIRICHLET, d, float(N), spectra, factors=factors)


def poisson_reference(rho: float, d: int) -> SeparableKernel:
    _check_positive(rho=rho)
    return SeparableKernel(Family.POISSON, _check_dim(d), float(rho))


def kernel_eval(k: SeparableKernel, x, y) -> np.ndarray:
    """K(x, y) = prod_i K_i(x_i - y_i); broadcasts over leading axes."""
    if k.is_poisson:
        raise InvalidParameter("the Poisson reference has no kernel")
    return kernel_eval_on(k.spectra, x, y)


def kernel_eval_on(spectra: Sequence[Spectrum1D], x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dim = len(spectra)
    if x.shape[-1:] != (dim,) or y.shape[-1:] != (dim,):
        raise DimensionMismatch(f"points must have {dim} coordinates")
    diff = x - y
    out = np.ones(diff.shape[:-1], dtype=complex)
    for i, s in enumerate(spectra):
        out = out * s.evaluate(diff[..., i])
    return out


# --------------------------------------------------------------------------
# kappa series written directly in terms of alpha


def gaussian_kappa_series(alpha: float, J: int) -> float:
    """Truncated series sum e^{-2(j alpha pi)^2} / (sum e^{-(j alpha pi)^2})^2, |j| <= J."""
    j = np.arange(-J, J + 1)
    e = np.exp(-((j * alpha * np.pi) ** 2))
    return float(np.sum(e**2) / np.sum(e) ** 2)


def l1exp_kappa_series(alpha: float, J: int) -> float:
    j = np.arange(-J, J + 1)
    q = 1.0 / (1.0 + (2 * np.pi * alpha * j) ** 2)
    return float(np.sum(q**2) / np.sum(q) ** 2)


def l1exp_kappa_exact(alpha: float) -> float:
    """Limit of :func:`l1exp_kappa_series` as J -> infinity (hyperbolic sums)."""
    b = 1.0 / (2 * np.pi * alpha)
    x = np.pi * b
    s1 = (np.pi / b) / np.tanh(x)
    s2 = np.pi / (2 * b**3) / np.tanh(x) + np.pi**2 / (2 * b**2) / np.sinh(x) ** 2
    return float(s2 / s1**2)


# --------------------------------------------------------------------------
# JSON round trip

_KEYS = {
    Family.GAUSSIAN: ({"family", "d", "rho", "alpha"}, {"trunc_eps", "schema"}),
    Family.L1EXP: ({"family", "d", "rho", "alpha"}, {"trunc_eps", "schema"}),
    Family.DIRICHLET: ({"family", "d", "N"}, {"factors", "schema", "rho"}),
    Family.POISSON: ({"family", "d", "rho"}, {"schema"}),
}


def kernel_from_dict(spec: dict) -> SeparableKernel:
    """Build a kernel from its JSON description; unknown keys are rejected.

    ``alpha`` may be the string ``"boundary"`` for the largest admissible
    range parameter.
    """
    try:
        family = Family(spec["family"])
    except (KeyError, ValueError):
        raise InvalidParameter(f"unknown or missing kernel family in {spec!r}") from None
    required, optional = _KEYS[family]
    missing = required - spec.keys()
    unknown = spec.keys() - required - optional
    if missing:
        raise InvalidParameter(f"missing keys for {family.value}: {sorted(missing)}")
    if unknown:
        raise InvalidParameter(f"unknown keys for {family.value}: {sorted(unknown)}")
    d = spec["d"]
    if family is Family.DIRICHLET:
        if "rho" in spec and spec["rho"] != spec["N"]:
            raise InvalidParameter("Dirichlet rho must equal N")
        return dirichlet_spectrum(spec["N"], d, spec.get("factors"))
    if family is Family.POISSON:
        return poisson_reference(spec["rho"], d)
    rho = spec["rho"]
    alpha = spec["alpha"]
    build, boundary = {
        Family.GAUSSIAN: (gaussian_spectrum, gaussian_boundary_alpha),
        Family.L1EXP: (l1exp_spectrum, l1exp_boundary_alpha),
    }[family]
    if alpha == "boundary":
        _check_positive(rho=rho)
        alpha = boundary(rho, _check_dim(d))
    return build(rho, alpha, d, spec.get("trunc_eps", DEFAULT_TRUNC_EPS))


def kernel_from_json(text: str) -> SeparableKernel:
    return kernel_from_dict(json.loads(text))
