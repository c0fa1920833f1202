"""Exact spectral sampling of separable Fourier DPPs and Poisson baselines.

The sampler follows the usual two phases.  Each eigenfunction of the kernel
is kept independently with probability equal to its eigenvalue, which gives
a projection DPP on the kept functions.  Points of that projection DPP are
then drawn one at a time from their conditional densities by rejection.

Eigenfunctions are taken in a real tensor-product form.  In one dimension
the frequencies f and -f share an eigenvalue, so sqrt(2) cos(2 pi f x) and
sqrt(2) sin(2 pi f x) span the same eigenspace as the two exponentials;
products over the dimensions are again eigenfunctions.  Real features make
the linear algebra about four times cheaper than complex arithmetic.

Their squared modulus is not bounded by one, so the proposal is not the
uniform law but the first-point density K_S(x, x) / n of the kept set S.
It is a uniform mixture of product densities and is sampled exactly; the
acceptance ratio |F^T phi(x)|^2 / |phi(x)|^2 never exceeds one.

Dirichlet frequencies ``0..n_i-1`` are shifted by ``(n_i - 1)/2`` so the
frequency set is symmetric.  The shift multiplies the kernel by a unimodular
factor ``h(x) conj(h(y))``, which leaves the law of the DPP unchanged.

Orthogonal complements are maintained with Householder reflections that are
accumulated in blocks and applied in compact WY form.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, ExistenceViolation, InvalidParameter, RejectionBudgetExceeded
from .kernels import EXISTENCE_RTOL, Family, SeparableKernel
from .patterns import PointPattern

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 1e-12
DEFAULT_MAX_CANDIDATES = 10**7
TRIALS_PER_POINT = 10**4
BLOCK = 48
POOL_ENTRIES = 2**23


# --------------------------------------------------------------------------
# seeding


def make_rng(seed, *spawn_key) -> np.random.Generator:
    """Generator for replication ``spawn_key`` of master ``seed``.

    Streams come from ``SeedSequence(entropy=seed, spawn_key=spawn_key)``, so
    each replication is reproducible on its own, whatever order replications
    run in.
    """
    if isinstance(seed, np.random.Generator):
        if spawn_key:
            raise InvalidParameter("spawn keys need an integer seed")
        return seed
    if isinstance(seed, np.random.SeedSequence):
        if spawn_key:
            seed = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(spawn_key))
        return np.random.default_rng(seed)
    if seed is None or int(seed) != seed or seed < 0:
        raise InvalidParameter(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in spawn_key)))


# --------------------------------------------------------------------------
# enumeration


@dataclass(frozen=True, eq=False)
class ActiveIndexSet:
    """Multi-indices whose eigenvalue ``prod_i lam_{j_i}`` is at least ``delta``.

    ``indices`` holds the spectral labels (rows of length d).  ``discarded_bound``
    certifies the eigenvalue mass left out.
    """

    indices: np.ndarray
    eigenvalues: np.ndarray
    discarded_bound: float
    delta: float

    @property
    def expected_count(self) -> float:
        return float(self.eigenvalues.sum())

    def __len__(self) -> int:
        return len(self.eigenvalues)


def enumerate_indices(
    k: SeparableKernel, delta: float = DEFAULT_DELTA, max_candidates: int = DEFAULT_MAX_CANDIDATES
) -> ActiveIndexSet:
    """Branch and bound over the product spectrum, one dimension at a time."""
    if k.is_poisson:
        raise InvalidParameter("the Poisson reference has no spectrum")
    if not 0 < delta < 1:
        raise InvalidParameter(f"delta must lie in (0, 1), got {delta}")
    order = [np.argsort(-s.eigenvalues, kind="stable") for s in k.spectra]
    lam = [s.eigenvalues[o] for s, o in zip(k.spectra, order)]
    best = [float(v[0]) if v.size else 0.0 for v in lam]
    # best completion of dimensions i+1..d-1
    suffix = np.append(np.cumprod(best[::-1])[::-1][1:], 1.0)

    partial = np.ones(1)
    picks = np.zeros((1, 0), dtype=np.int32)
    for i, v in enumerate(lam):
        neg = -v
        if suffix[i] > 0:
            with np.errstate(divide="ignore"):
                need = delta / (partial * suffix[i])
            counts = np.searchsorted(neg, -need, side="right")
        else:
            counts = np.zeros(len(partial), dtype=np.int64)
        total = int(counts.sum())
        if total > max_candidates:
            raise BudgetExceeded(f"more than {max_candidates} indices above delta={delta:g} (dimension {i})")
        parent = np.repeat(np.arange(len(partial)), counts)
        start = np.cumsum(counts) - counts
        pos = np.arange(total) - np.repeat(start, counts)
        partial = partial[parent] * v[pos]
        picks = np.concatenate([picks[parent], pos[:, None].astype(np.int32)], axis=1)

    labels = np.empty(picks.shape, dtype=np.int64)
    for i, (s, o) in enumerate(zip(k.spectra, order)):
        labels[:, i] = s.indices[o][picks[:, i]]
    full = math.prod(float(s.eigenvalues.sum()) + s.discarded_mass for s in k.spectra)
    bound = max(0.0, full - float(partial.sum()))
    return ActiveIndexSet(labels, partial, bound, delta)


# --------------------------------------------------------------------------
# real feature maps


def _centres(k: SeparableKernel) -> np.ndarray:
    if k.family is Family.DIRICHLET:
        return np.array([(n - 1) / 2.0 for n in k.factors])
    return np.zeros(k.d)


def _table(x: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    """psi_f(x) for each x (rows) and signed frequency f (columns)."""
    ang = (2 * np.pi) * np.outer(x, np.abs(freqs))
    out = np.where(freqs > 0, np.cos(ang), np.sin(ang))
    out *= math.sqrt(2.0)
    out[:, freqs == 0] = 1.0
    return out


def _draw_1d(f: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw from the density psi_f(x)^2 on [0, 1) for every entry of f.

    psi_f^2 is 1 + cos(4 pi f x) for cosines and 1 - cos(4 pi f x) for sines.
    Since 2|f| is an integer the density repeats over 2|f| periods: draw the
    period uniformly, then the position within it by rejection.
    """
    a = np.abs(f)
    sign = np.sign(f)
    y = np.empty(len(f))
    todo = np.arange(len(f))
    while todo.size:
        prop = rng.random(todo.size)
        u = rng.random(todo.size)
        s = sign[todo]
        ok = u * (1 + np.abs(s)) < 1 + s * np.cos(2 * np.pi * prop)
        y[todo[ok]] = prop[ok]
        todo = todo[~ok]
    periods = np.maximum(np.rint(2 * a).astype(np.int64), 1)
    r = rng.integers(periods)
    return (r + y) / periods


@dataclass(frozen=True, eq=False)
class _Features:
    """Real tensor-product eigenfunctions prod_i psi_{f_i}(x_i) of the kept labels.

    In each dimension psi_0 = 1, psi_f = sqrt(2) cos(2 pi f x) for f > 0 and
    psi_f = sqrt(2) sin(2 pi |f| x) for f < 0.  ``freqs[i]`` lists the distinct
    frequencies of dimension i and ``inverse[:, i]`` points into it.
    """

    freqs: tuple
    inverse: np.ndarray
    grid: bool  # features are the full product of ``freqs`` in C order

    @property
    def n(self) -> int:
        return len(self.inverse)

    @property
    def d(self) -> int:
        return len(self.freqs)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        tabs = [_table(x[:, i], f) for i, f in enumerate(self.freqs)]
        if self.grid:
            out = tabs[0]
            for tab in tabs[1:]:
                out = (out[:, :, None] * tab[:, None, :]).reshape(len(x), -1)
            return out
        out = np.take(tabs[0], self.inverse[:, 0], axis=1)
        for i in range(1, self.d):
            out *= np.take(tabs[i], self.inverse[:, i], axis=1)
        return out

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draws from K(x, x) / n, a uniform mixture of the product densities psi^2."""
        pick = rng.integers(self.n, size=size)
        x = np.empty((size, self.d))
        for i, f in enumerate(self.freqs):
            x[:, i] = _draw_1d(f[self.inverse[pick, i]], rng)
        return x


def _features(labels: np.ndarray, centres: np.ndarray) -> _Features:
    freq = labels - centres
    freqs, inverse = [], []
    for i in range(freq.shape[1]):
        f, inv = np.unique(freq[:, i], return_inverse=True)
        freqs.append(f)
        inverse.append(inv.reshape(-1))
    inverse = np.stack(inverse, axis=1) if inverse else np.zeros((len(freq), 0), dtype=np.int64)
    shape = tuple(len(f) for f in freqs)
    grid = False
    if len(freq) == math.prod(shape):
        full = np.stack(np.unravel_index(np.arange(len(freq)), shape), axis=1)
        grid = bool(np.array_equal(full, inverse))
    return _Features(tuple(freqs), inverse, grid)


# --------------------------------------------------------------------------
# projection DPP


class _Pool:
    """Proposals, their acceptance draws, squared feature norms and coordinates."""

    def __init__(self):
        self.x = np.empty((0, 0))
        self.u = np.empty(0)
        self.norm2 = np.empty(0)
        self.w = np.empty((0, 0))
        self.pos = 0

    def remaining(self) -> int:
        return len(self.u) - self.pos

    def refill(self, feat: _Features, F: np.ndarray, rng: np.random.Generator, size: int):
        x = feat.draw(rng, size)
        u = rng.random(size)
        V = feat(x)
        self.norm2 = np.einsum("ij,ij->i", V, V)
        self.x, self.u, self.w, self.pos = x, u, V @ F, 0

    def advance(self, k: int):
        self.pos += k


def sample_projection(feat: _Features, rng: np.random.Generator, block: int = BLOCK):
    """Draw the ``feat.n`` points of the projection DPP spanned by ``feat``.

    The proposal is the first-point density K(x, x) / n; a proposal is kept
    with probability |F^T phi(x)|^2 / |phi(x)|^2 where the columns of F span
    the orthogonal complement of the features of the points drawn so far.
    Returns ``(points, trials)``.
    """
    n, d = feat.n, feat.d
    if n == 0:
        return np.empty((0, d)), 0
    F = np.eye(n)
    pool = _Pool()
    points = np.empty((n, d))
    done = 0
    trials = 0
    while done < n:
        m = F.shape[1]
        b = min(block, m)
        Y = np.zeros((m, b))
        T = np.zeros((b, b))
        for t in range(b):
            budget = TRIALS_PER_POINT * (n - done)
            step_trials = 0
            while True:
                if pool.remaining() == 0:
                    want = int(1.1 * sum(n / (m - s) for s in range(t, b))) + 16
                    pool.refill(feat, F, rng, max(1, min(want, POOL_ENTRIES // n)))
                c = min(pool.remaining(), int(2 * n / (m - t)) + 8)
                sl = slice(pool.pos, pool.pos + c)
                w = pool.w[sl]
                if t:
                    # row form of Q_t^T w, Q_t = H_0 ... H_{t-1}
                    w = w - ((w @ Y[:, :t]) @ T[:t, :t]) @ Y[:, :t].T
                res = np.einsum("ij,ij->i", w[:, t:], w[:, t:])
                hit = np.flatnonzero(pool.u[sl] * pool.norm2[sl] < res)
                if hit.size:
                    a = int(hit[0])
                    step_trials += a + 1
                    vec = w[a, t:].copy()
                    points[done] = pool.x[pool.pos + a]
                    pool.advance(a + 1)
                    break
                step_trials += c
                pool.advance(c)
                if step_trials > budget:
                    raise RejectionBudgetExceeded(
                        f"no acceptance after {step_trials} proposals at point {done + 1}/{n}",
                        acceptance_rate=done / max(trials + step_trials, 1),
                    )
            trials += step_trials
            # Householder reflection sending vec to a multiple of e_0, scaled so v[0] = 1
            v = vec
            v[0] += math.copysign(float(np.linalg.norm(v)), v[0])
            v /= v[0]
            tau = 2.0 / float(v @ v)
            Y[t:, t] = v
            if t:
                T[:t, t] = -tau * (T[:t, :t] @ (Y[:, :t].T @ Y[:, t]))
            T[t, t] = tau
            done += 1
        # rematerialize the complement: (F Q)[:, b:] with Q = I - Y T Y^T
        F = F[:, b:] - ((F @ Y) @ T) @ Y[b:, :].T
        if pool.remaining():
            w = pool.w[pool.pos:]
            pool.w = w[:, b:] - ((w @ Y) @ T) @ Y[b:, :].T
            pool.x = pool.x[pool.pos:]
            pool.u = pool.u[pool.pos:]
            pool.norm2 = pool.norm2[pool.pos:]
            pool.pos = 0
    return points, trials


# --------------------------------------------------------------------------
# public API


class SpectralSampler:
    """Sampler for one kernel; the eigenvalue enumeration is computed once."""

    def __init__(self, k: SeparableKernel, delta: float = DEFAULT_DELTA, max_candidates: int = DEFAULT_MAX_CANDIDATES):
        if k.is_poisson:
            raise InvalidParameter("use sample_poisson for the Poisson reference")
        top = max((float(s.eigenvalues.max()) for s in k.spectra if s.eigenvalues.size), default=0.0)
        if top > 1 + EXISTENCE_RTOL:
            raise ExistenceViolation(f"eigenvalue {top} exceeds 1")
        self.kernel = k
        self.active = enumerate_indices(k, delta, max_candidates)
        self._centres = _centres(k)
        self._projection = k.family is Family.DIRICHLET

    def sample(self, seed) -> PointPattern:
        rng = make_rng(seed)
        act = self.active
        if self._projection:
            keep = np.ones(len(act), dtype=bool)
        else:
            keep = rng.random(len(act)) < act.eigenvalues
        feat = _features(act.indices[keep], self._centres)
        pts, trials = sample_projection(feat, rng)
        meta = {
            "model": self.kernel.family.value,
            "count": feat.n,
            "discarded_mass": act.discarded_bound,
            "acceptance_rate": feat.n / trials if trials else 1.0,
        }
        seed_meta = seed if isinstance(seed, (int, np.integer)) else None
        return PointPattern(pts, seed_meta, meta)


def sample_dpp(k: SeparableKernel, seed, delta: float = DEFAULT_DELTA) -> PointPattern:
    if k.is_poisson:
        return sample_poisson(k.rho, k.d, seed)
    return SpectralSampler(k, delta).sample(seed)


def sample_poisson(rho: float, iota: int, seed) -> PointPattern:
    """Homogeneous Poisson process of intensity ``rho`` on [0, 1]^iota."""
    if not rho > 0:
        raise InvalidParameter(f"rho must be positive, got {rho!r}")
    rng = make_rng(seed)
    count = int(rng.poisson(rho))
    pts = rng.random((count, int(iota)))
    seed_meta = seed if isinstance(seed, (int, np.integer)) else None
    return PointPattern(pts, seed_meta, {"model": "poisson", "count": count, "discarded_mass": 0.0, "acceptance_rate": 1.0})
