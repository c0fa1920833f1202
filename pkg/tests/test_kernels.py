import json
import math

import numpy as np
import pytest

from dppproj.errors import DimensionMismatch, EmptySpectrum, ExistenceViolation, IndexOutOfRange, InvalidParameter
from dppproj.kernels import (
    DEFAULT_TRUNC_EPS,
    Family,
    IndexSet,
    Spectrum1D,
    balanced_factorization,
    dirichlet_spectrum,
    gaussian_boundary_alpha,
    gaussian_kappa_series,
    gaussian_spectrum,
    iterated_trace,
    kappa,
    kernel_eval,
    kernel_from_json,
    l1exp_boundary_alpha,
    l1exp_kappa_exact,
    l1exp_spectrum,
    poisson_reference,
)

# Frozen oracles: the kappa series summed to convergence with mpmath (30 digits).
KAPPA2_500_D10 = 0.383083804486020279
KAPPA2_500_D6 = 0.250992076863713492
KAPPA1_500_D10 = 0.301967732542400382


def test_gaussian_boundary_has_unit_leading_eigenvalue():
    k = gaussian_spectrum(500, 1 / (math.sqrt(math.pi) * 500 ** 0.1), 10)
    s = k.spectra[0]
    # trace normalization divides the boundary value 1 by the image sum of the periodized kernel
    theta = sum(math.exp(-((m / k.alpha) ** 2)) for m in range(-5, 6))
    assert s.eigenvalues[s.indices == 0][0] == pytest.approx(1.0 / theta, rel=1e-14)
    assert s.eigenvalues.max() <= 1 + 1e-12


def test_l1exp_boundary_has_unit_leading_eigenvalue():
    k = l1exp_spectrum(500, 1 / (2 * 500 ** 0.1), 10)
    s = k.spectra[0]
    theta = 1.0 / math.tanh(1.0 / (2 * k.alpha))
    assert s.eigenvalues[s.indices == 0][0] == pytest.approx(1.0 / theta, rel=1e-13)


@pytest.mark.parametrize("build", [gaussian_spectrum, l1exp_spectrum])
def test_product_of_traces_is_rho(build):
    alpha = 0.05
    k = build(300, alpha, 3)
    assert np.prod(k.traces()) == pytest.approx(300, rel=10 * DEFAULT_TRUNC_EPS)
    assert k.intensity() == pytest.approx(300, rel=10 * DEFAULT_TRUNC_EPS)


def test_gaussian_discarded_mass_within_tolerance():
    s = gaussian_spectrum(500, 0.05, 4).spectra[0]
    assert s.discarded_mass <= DEFAULT_TRUNC_EPS * s.trace()


def test_kappa_oracles():
    assert kappa(gaussian_spectrum(500, gaussian_boundary_alpha(500, 10), 10).spectra[0]) == pytest.approx(
        KAPPA2_500_D10, abs=1e-13
    )
    assert kappa(gaussian_spectrum(500, gaussian_boundary_alpha(500, 6), 6).spectra[0]) == pytest.approx(
        KAPPA2_500_D6, abs=1e-13
    )
    e = l1exp_spectrum(500, l1exp_boundary_alpha(500, 10), 10)
    assert kappa(e.spectra[0]) == pytest.approx(KAPPA1_500_D10, abs=1e-13)
    assert l1exp_kappa_exact(e.alpha) == pytest.approx(KAPPA1_500_D10, abs=1e-13)


def test_gaussian_series_matches_truncated_kappa_series():
    alpha = gaussian_boundary_alpha(500, 10)
    assert gaussian_kappa_series(alpha, 10) == pytest.approx(KAPPA2_500_D10, abs=1e-12)


def test_existence_violations():
    with pytest.raises(ExistenceViolation):
        gaussian_spectrum(500, 1.01 * gaussian_boundary_alpha(500, 6), 6)
    with pytest.raises(ExistenceViolation):
        l1exp_spectrum(500, 1.01 * l1exp_boundary_alpha(500, 6), 6)
    with pytest.raises(InvalidParameter):
        gaussian_spectrum(-1, 0.1, 2)
    with pytest.raises(InvalidParameter):
        dirichlet_spectrum(0, 2)


@pytest.mark.parametrize(
    "N, d, expected",
    [(100, 6, [5, 5, 2, 2, 1, 1]), (800, 6, [5, 5, 4, 2, 2, 2]), (13, 3, [13, 1, 1]), (7, 1, [7]), (1, 4, [1, 1, 1, 1])],
)
def test_balanced_factorization(N, d, expected):
    assert balanced_factorization(N, d) == expected


def test_dirichlet_spectrum():
    k = dirichlet_spectrum(100, 6)
    assert list(k.factors) == [5, 5, 2, 2, 1, 1]
    assert k.intensity() == 100
    for s, n in zip(k.spectra, k.factors):
        assert list(s.indices) == list(range(n))
        assert np.all(s.eigenvalues == 1)
        assert kappa(s) == 1 / n
    assert dirichlet_spectrum(7, 1).intensity() == 7


def test_kernel_eval_examples():
    k = dirichlet_spectrum(100, 6)
    x = np.random.default_rng(0).random((5, 6))
    assert np.allclose(kernel_eval(k, x, x), 100)
    two = dirichlet_spectrum(2, 1)
    assert abs(kernel_eval(two, [0.5], [0.0])) < 1e-15
    g = gaussian_spectrum(200, gaussian_boundary_alpha(200, 3), 3)
    assert kernel_eval(g, [0.3, 0.1, 0.9], [0.3, 0.1, 0.9]).real == pytest.approx(200, rel=1e-8)
    with pytest.raises(DimensionMismatch):
        kernel_eval(g, [0.1, 0.2], [0.1, 0.2])


def test_iterated_trace():
    s = dirichlet_spectrum(5, 1).spectra[0]
    assert iterated_trace(s, 3) == 5
    g = gaussian_spectrum(500, 0.05, 3).spectra[0]
    assert iterated_trace(g, 1) == pytest.approx(g.trace())
    assert iterated_trace(g, 2) == pytest.approx(kappa(g) * g.trace() ** 2, rel=1e-14)
    with pytest.raises(InvalidParameter):
        iterated_trace(g, 0)


def test_kappa_single_eigenvalue_and_empty():
    assert kappa(Spectrum1D([0], [1.0])) == 1.0
    with pytest.raises(EmptySpectrum):
        kappa(Spectrum1D([], []))


def test_l1exp_tail_power_sums_against_long_sum():
    s = l1exp_spectrum(50, 0.01, 1).spectra[0]
    assert s.tail is not None
    # listed terms plus the tail model recover K(0) = rho^(1/d) and the hyperbolic kappa
    assert s.trace() == pytest.approx(50.0, rel=1e-13)
    assert kappa(s) == pytest.approx(l1exp_kappa_exact(0.01), rel=1e-12)


def test_index_set():
    I = IndexSet.coerce([3, 0], 5)
    assert I.indices == (0, 3) and I.iota == 2 and I.complement == (1, 2, 4)
    assert IndexSet.full(3).indices == (0, 1, 2)
    with pytest.raises(IndexOutOfRange):
        IndexSet.coerce([5], 5)
    with pytest.raises(InvalidParameter):
        IndexSet.coerce([1, 1], 5)
    with pytest.raises(InvalidParameter):
        IndexSet.coerce([], 5)


def test_json_round_trip_is_bit_identical():
    for k in (
        gaussian_spectrum(500, 0.05, 3),
        l1exp_spectrum(100, 0.05, 2),
        dirichlet_spectrum(100, 6),
        poisson_reference(10, 2),
    ):
        again = kernel_from_json(k.to_json())
        assert again.family is k.family
        for a, b in zip(k.spectra, again.spectra):
            assert np.array_equal(a.eigenvalues, b.eigenvalues) and np.array_equal(a.indices, b.indices)
    boundary = kernel_from_json(json.dumps({"family": "gaussian", "d": 6, "rho": 500, "alpha": "boundary"}))
    assert boundary.alpha == gaussian_boundary_alpha(500, 6)
    with pytest.raises(InvalidParameter):
        kernel_from_json(json.dumps({"family": "gaussian", "d": 6, "rho": 500, "alpha": 0.1, "beta": 1}))
    with pytest.raises(InvalidParameter):
        kernel_from_json(json.dumps({"family": "matern", "d": 2}))


def test_poisson_reference():
    k = poisson_reference(42, 3)
    assert k.family is Family.POISSON and k.is_poisson and k.intensity() == 42
