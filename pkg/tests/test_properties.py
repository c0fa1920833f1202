"""Property tests for invariants that hold for every admissible input."""

import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dppproj.kernels import (
    balanced_factorization,
    dirichlet_spectrum,
    gaussian_boundary_alpha,
    gaussian_spectrum,
    kappa,
    kernel_eval,
)
from dppproj.patterns import PointPattern, pair_count, project, torus_sup_distance
from dppproj.quadrature import analytic_variance
from dppproj.summaries import pcf_projected, ripley_projected

unit = st.floats(0, 1, exclude_max=True, allow_nan=False)
GAUSS = gaussian_spectrum(300, gaussian_boundary_alpha(300, 4), 4)
DIRICHLET = dirichlet_spectrum(60, 4)


@st.composite
def patterns(draw, max_n=30, max_iota=4):
    # distinct values in every column, so projections stay simple
    iota = draw(st.integers(1, max_iota))
    n = draw(st.integers(0, max_n))
    cols = [draw(st.lists(unit, min_size=n, max_size=n, unique=True)) for _ in range(iota)]
    return PointPattern(np.array(cols, dtype=float).T.reshape(n, iota))


@given(st.floats(0.01, 1), st.integers(2, 200))
def test_kappa_is_scale_invariant(c, n):
    s = dirichlet_spectrum(n, 1).spectra[0]
    assert math.isclose(kappa(s.scaled(c)), kappa(s), rel_tol=1e-12)


@given(arrays(float, (3,), elements=unit), arrays(float, (3,), elements=unit), arrays(float, (3,), elements=unit))
def test_torus_distance_is_a_metric(x, y, z):
    dxy = torus_sup_distance(x, y)
    assert 0 <= dxy <= 0.5
    assert dxy == torus_sup_distance(y, x)
    assert torus_sup_distance(x, x) == 0
    assert dxy <= torus_sup_distance(x, z) + torus_sup_distance(z, y) + 1e-15


@given(patterns(), st.floats(0.001, 0.5), st.floats(0.001, 0.5))
def test_pair_count_monotone_in_r(p, r1, r2):
    lo, hi = sorted((r1, r2))
    assert pair_count(p, lo) <= pair_count(p, hi) <= p.count * (p.count - 1)


@given(patterns(max_iota=4), st.data())
def test_projection_composes(p, data):
    I = sorted(data.draw(st.sets(st.integers(0, p.iota - 1), min_size=1)))
    J = sorted(data.draw(st.sets(st.integers(0, len(I) - 1), min_size=1)))
    assert project(project(p, I), J) == project(p, [I[j] for j in J])


@given(patterns(max_iota=3), st.data())
def test_projection_cannot_increase_distances(p, data):
    I = sorted(data.draw(st.sets(st.integers(0, p.iota - 1), min_size=1)))
    for r in (0.05, 0.2):
        assert pair_count(project(p, I), r) >= pair_count(p, r)


@given(st.integers(1, 5000), st.integers(1, 8))
def test_factorization(N, d):
    f = balanced_factorization(N, d)
    assert len(f) == d and math.prod(f) == N
    assert f == sorted(f, reverse=True)


@settings(max_examples=30)
@given(arrays(float, (5, 4), elements=unit), arrays(float, (5, 4), elements=unit))
def test_kernel_is_hermitian(x, y):
    for k in (GAUSS, DIRICHLET):
        a = kernel_eval(k, x[:, None, :], y[None, :, :])
        b = kernel_eval(k, y[None, :, :], x[:, None, :])
        assert np.allclose(a, np.conj(b).T.T, atol=1e-12)
        gram = kernel_eval(k, x[:, None, :], x[None, :, :])
        assert np.linalg.eigvalsh((gram + gram.conj().T) / 2).min() > -1e-9


@settings(max_examples=40)
@given(arrays(float, (4,), elements=unit), arrays(float, (4,), elements=unit), st.integers(1, 4))
def test_pcf_bounds(x, y, iota):
    # 1 - kappa_{I^c} <= g_I <= 1 away from the diagonal
    assume(np.any(x[:iota] != y[:iota]))
    g = pcf_projected(GAUSS, list(range(iota)), x[:iota], y[:iota])
    lower = 1 - np.prod(GAUSS.kappas()[iota:])
    assert lower - 1e-12 <= g <= 1 + 1e-12


@settings(max_examples=30)
@given(st.sets(st.integers(0, 3), min_size=2), st.floats(0.005, 0.5))
def test_ripley_nesting_gaussian(I, r):
    # dropping a coordinate replaces its averaged factor by kappa, which is no larger
    I = sorted(I)
    full = ripley_projected(GAUSS, I, [r])[0]
    for drop in I:
        assert ripley_projected(GAUSS, [i for i in I if i != drop], [r])[0] >= full - 1e-12


@settings(max_examples=20)
@given(st.sets(st.integers(0, 3), min_size=1), st.floats(0.005, 0.5))
def test_ripley_between_projection_bound_and_one(I, r):
    for k in (GAUSS, DIRICHLET):
        val = ripley_projected(k, sorted(I), [r])[0]
        comp = [i for i in range(4) if i not in I]
        assert 1 - np.prod(k.kappas()[comp]) - 1e-12 <= val <= 1 + 1e-12


@settings(max_examples=15)
@given(st.sets(st.integers(0, 3), min_size=1))
def test_dpp_variance_below_poisson(I):
    c2 = 0.0665430604224971357784736639773
    for k in (GAUSS, DIRICHLET):
        assert 0 < analytic_variance(k, sorted(I)) < c2 ** len(I) / k.intensity()
