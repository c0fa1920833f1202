"""Monte-Carlo integration of the bump function with projected designs.

A d-dimensional pattern is drawn once per replication and reused for every
projection size iota, with the kept coordinates chosen at random.  The
estimator sum f(u) / rho_I is unbiased; its variance under a projected
separable DPP factorizes over dimensions into Fourier sums of the 1-d bump.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import BudgetExceeded, ConfigError, DPPError, InvalidParameter
from .kernels import (
    IndexSet,
    SeparableKernel,
    dirichlet_spectrum,
    gaussian_boundary_alpha,
    gaussian_spectrum,
    kappa,
    poisson_reference,
)
from .patterns import PointPattern
from .sampler import DEFAULT_DELTA, SpectralSampler, make_rng, sample_poisson
from .summaries import autocorrelation

logger = logging.getLogger(__name__)

MODELS = ("poisson", "gaussian", "dirichlet")
FOURIER_ORDER = 128
QUAD_RTOL = 1e-13


# --------------------------------------------------------------------------
# integrand


def bump(u) -> np.ndarray:
    """exp(-sum_i 1 / (1 - 4 (u_i - 1/2)^2)), zero where a denominator is <= 0.

    ``u`` has shape (..., iota); a 1-d array is one point.
    """
    u = np.asarray(u, dtype=float)
    den = 1.0 - 4.0 * (u - 0.5) ** 2
    ok = np.all(den > 0, axis=-1)
    with np.errstate(divide="ignore"):
        expo = np.where(den > 0, 1.0 / np.where(den > 0, den, 1.0), 0.0).sum(axis=-1)
    return np.where(ok, np.exp(-expo), 0.0)


def _bump1(t: float) -> float:
    den = 1.0 - 4.0 * (t - 0.5) ** 2
    return math.exp(-1.0 / den) if den > 0 else 0.0


@lru_cache(maxsize=None)
def bump_moments() -> tuple[float, float]:
    """(int_0^1 f_1, int_0^1 f_1^2) by adaptive quadrature."""
    c1 = integrate.quad(_bump1, 0.0, 1.0, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)[0]
    c2 = integrate.quad(lambda t: _bump1(t) ** 2, 0.0, 1.0, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)[0]
    return c1, c2


def true_integral(iota: int) -> float:
    if iota < 1:
        raise InvalidParameter("iota must be at least 1")
    return bump_moments()[0] ** iota


@lru_cache(maxsize=None)
def _fourier_cached(order: int) -> np.ndarray:
    c1 = bump_moments()[0]
    out = np.empty(order + 1)
    out[0] = c1
    # f_1 is symmetric about 1/2, so c_j = (-1)^j * 2 int_0^{1/2} f_1(v + 1/2) cos(2 pi j v) dv
    with warnings.catch_warnings():
        # high orders sit near round-off; the absolute accuracy is what matters
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for j in range(1, order + 1):
            val = integrate.quad(
                lambda v: _bump1(v + 0.5), 0.0, 0.5, weight="cos", wvar=2 * math.pi * j, epsabs=1e-18, limit=400
            )[0]
            out[j] = (-1) ** j * 2.0 * val
    out.flags.writeable = False
    return out


def bump_fourier(order: int = FOURIER_ORDER) -> np.ndarray:
    """Real Fourier coefficients c_0..c_order of the 1-d bump on [0, 1]."""
    return _fourier_cached(int(order))


def bump_fourier_checksum(order: int = FOURIER_ORDER) -> str:
    """Digest of the cached coefficients, rounded to 12 significant digits."""
    text = ",".join(format(v, ".12e") for v in bump_fourier(order))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def mu_hat(p: PointPattern, rho_I: float, f=bump) -> float:
    """Unbiased estimate rho_I^-1 sum_u f(u) of int f."""
    if not rho_I > 0:
        raise InvalidParameter("rho_I must be positive")
    if p.count == 0:
        return 0.0
    return float(np.sum(f(p.points)) / rho_I)


# --------------------------------------------------------------------------
# analytic variance


def _spectral_factor(s, order: int) -> float:
    """int int |K_i(u - v)|^2 f_1(u) f_1(v) du dv / K_i(0)^2."""
    c = bump_fourier(order)
    lags, acf = autocorrelation(s)
    keep = np.abs(lags) <= order
    total = float(acf[keep] @ c[np.abs(lags[keep])] ** 2)
    return total / s.evaluate(0.0).real ** 2


def analytic_variance(k: SeparableKernel, I, order: int = FOURIER_ORDER) -> float:
    """Variance of mu_hat for the projection of ``k`` on I.

    rho^-1 (int f_1^2)^iota - kappa_{I^c} prod_{i in I} S_i, where S_i is
    the Fourier sum of |c_j|^2 against the eigenvalue autocorrelation.
    """
    I = IndexSet.coerce(I, k.d)
    c2 = bump_moments()[1]
    rho_I = k.projected_intensity(I)
    first = c2**I.iota / rho_I
    if k.is_poisson:
        return first
    kap = float(np.prod([kappa(k.spectra[i]) for i in I.complement]))
    prod = 1.0
    done: dict = {}
    for i in I.indices:
        s = k.spectra[i]
        if id(s) not in done:
            done[id(s)] = _spectral_factor(s, order)
        prod *= done[id(s)]
    return first - kap * prod


def subset_variance(k: SeparableKernel, iota: int, policy: str = "random") -> float:
    """Variance of mu_hat when I is uniform over subsets of size iota (or fixed)."""
    if policy == "fixed":
        return analytic_variance(k, range(iota))
    if policy != "random":
        raise InvalidParameter(f"unknown subset policy {policy!r}")
    subsets = list(itertools.combinations(range(k.d), iota))
    # the estimator is unbiased for every I, so the mixture variance is the mean
    return float(np.mean([analytic_variance(k, I) for I in subsets]))


# --------------------------------------------------------------------------
# experiment


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 6
    rho_list: tuple = (200, 400, 600, 800, 1000)
    iota_list: tuple = (6, 5, 4, 3, 2, 1)
    models: tuple = MODELS
    replications: int = 500
    seed: int = 0
    subset_policy: str = "random"
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        object.__setattr__(self, "rho_list", tuple(self.rho_list))
        object.__setattr__(self, "iota_list", tuple(int(i) for i in self.iota_list))
        object.__setattr__(self, "models", tuple(self.models))
        if not isinstance(self.d, int) or self.d < 1:
            raise ConfigError("d must be a positive integer")
        if not self.rho_list or any(not r > 0 for r in self.rho_list):
            raise ConfigError("rho_list must contain positive intensities")
        if not self.iota_list or any(not 1 <= i <= self.d for i in self.iota_list):
            raise ConfigError(f"every iota must lie in [1, {self.d}]")
        if not self.models or any(m not in MODELS for m in self.models):
            raise ConfigError(f"models must be drawn from {MODELS}, got {self.models}")
        if self.replications < 2:
            raise ConfigError("at least 2 replications are needed")
        if self.subset_policy not in ("random", "fixed"):
            raise ConfigError("subset_policy must be 'random' or 'fixed'")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("rho_list", "iota_list", "models"):
            out[key] = list(out[key])
        return out


@dataclass(frozen=True)
class ResultRow:
    model: str
    rho: float
    iota: int
    mean_estimate: float
    true_mu: float
    emp_var: float
    analytic_var: float
    se_var: float
    m: int
    seed: int

    @property
    def mean_se(self) -> float:
        return math.sqrt(self.emp_var / self.m)

    @property
    def unbiased(self) -> bool:
        return abs(self.mean_estimate - self.true_mu) <= 4 * self.mean_se

    @property
    def variance_z(self) -> float:
        return (self.emp_var - self.analytic_var) / self.se_var if self.se_var > 0 else 0.0


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    rows: tuple
    meta: dict = field(default_factory=dict)

    def row(self, model: str, rho: float, iota: int) -> ResultRow:
        for r in self.rows:
            if r.model == model and r.rho == rho and r.iota == iota:
                return r
        raise KeyError((model, rho, iota))

    def summary(self) -> dict:
        return {f"{r.model}|{r.rho:g}|{r.iota}": asdict(r) for r in self.rows}


def jackknife_variance_se(x: np.ndarray) -> float:
    """Jackknife standard error of the unbiased sample variance."""
    x = np.asarray(x, dtype=float)
    m = x.size
    if m < 3:
        return float("nan")
    dev2 = (x - x.mean()) ** 2
    s2 = dev2.sum() / (m - 1)
    loo = ((m - 1) * s2 - m / (m - 1) * dev2) / (m - 2)
    return float(math.sqrt((m - 1) / m * np.sum((loo - loo.mean()) ** 2)))


def build_model(model: str, rho: float, d: int) -> SeparableKernel:
    """Kernels of the integration experiment; Gaussian alpha sits on the existence boundary."""
    if model == "poisson":
        return poisson_reference(rho, d)
    if model == "gaussian":
        return gaussian_spectrum(rho, gaussian_boundary_alpha(rho, d), d)
    if model == "dirichlet":
        N = int(round(rho))
        if N != rho:
            raise ConfigError(f"Dirichlet needs an integer rho, got {rho}")
        return dirichlet_spectrum(N, d)
    raise ConfigError(f"unknown model {model!r}")


_SAMPLERS: dict = {}


def _sampler(model: str, rho: float, d: int, delta: float):
    key = (model, rho, d, delta)
    if key not in _SAMPLERS:
        k = build_model(model, rho, d)
        _SAMPLERS[key] = (k, None if k.is_poisson else SpectralSampler(k, delta))
    return _SAMPLERS[key]


def _replicate(task) -> np.ndarray:
    """Estimates for one replication at every iota of the configuration."""
    cfg, mi, ri, rep = task
    model, rho = cfg.models[mi], cfg.rho_list[ri]
    code = MODELS.index(model)
    k, smp = _sampler(model, rho, cfg.d, cfg.delta)
    seq = np.random.SeedSequence(cfg.seed, spawn_key=(code, ri, rep, 0))
    try:
        pattern = sample_poisson(rho, cfg.d, seq) if smp is None else smp.sample(seq)
    except BudgetExceeded as exc:
        raise type(exc)(f"{exc} (model={model}, rho={rho}, replication={rep})") from exc
    pick = make_rng(cfg.seed, code, ri, rep, 1)
    out = np.empty(len(cfg.iota_list))
    for col, iota in enumerate(cfg.iota_list):
        if cfg.subset_policy == "random":
            I = np.sort(pick.choice(cfg.d, size=iota, replace=False))
        else:
            I = np.arange(iota)
        out[col] = mu_hat(PointPattern(pattern.points[:, I]) if iota < cfg.d else pattern, k.projected_intensity(I))
    return out


def run_experiment(cfg: ExperimentConfig, threads: int = 1, progress=None) -> ExperimentResult:
    """Empirical and analytic variances of mu_hat for every (model, rho, iota).

    Replications are keyed by (model, rho index, replication) in the seed
    tree, so the output does not depend on ``threads``.
    """
    rows = []
    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for mi, model in enumerate(cfg.models):
            for ri, rho in enumerate(cfg.rho_list):
                k = build_model(model, rho, cfg.d)
                for I in (range(cfg.d), (0,)):
                    rho_I = k.projected_intensity(I)
                    if abs(rho_I - k.intensity()) > 1e-8 * k.intensity():
                        raise DPPError(f"projected intensity {rho_I} differs from {k.intensity()}")
                tasks = [(cfg, mi, ri, rep) for rep in range(cfg.replications)]
                if pool is None:
                    est = np.array([_replicate(t) for t in tasks])
                else:
                    est = np.array(list(pool.map(_replicate, tasks, chunksize=max(1, len(tasks) // (4 * threads)))))
                for col, iota in enumerate(cfg.iota_list):
                    x = est[:, col]
                    rows.append(
                        ResultRow(
                            model=model,
                            rho=float(rho),
                            iota=iota,
                            mean_estimate=float(x.mean()),
                            true_mu=true_integral(iota),
                            emp_var=float(x.var(ddof=1)),
                            analytic_var=subset_variance(k, iota, cfg.subset_policy),
                            se_var=jackknife_variance_se(x),
                            m=cfg.replications,
                            seed=cfg.seed,
                        )
                    )
                logger.info("finished %s rho=%g", model, rho)
                if progress is not None:
                    progress(model, rho)
    finally:
        if pool is not None:
            pool.shutdown()
    meta = {"bump_fourier_checksum": bump_fourier_checksum(), "bump_c1": bump_moments()[0]}
    return ExperimentResult(cfg, tuple(rows), meta)


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)
