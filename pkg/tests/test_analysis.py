import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bisect
from slicegap.analysis import (
    LambdaCriterionConflict,
    build_rho_tilde,
    classify_lambda,
    discretize_Q,
    kernel_mean_norm,
    min_lambda_k,
    mixing_iterations,
    psi,
    spectral_gap,
    tv_bound,
    wasserstein_coupling_ub,
    wasserstein_dual_lb,
)
from slicegap.geometry import unit_ball_volume
from slicegap.targets import (
    LevelSetFunction,
    make_bimodal,
    make_exponential,
    make_gaussian,
    make_gen_exponential,
    make_target,
    make_volcano,
)

CATALOG = [("gaussian", 2), ("gaussian", 4), ("exponential", 1), ("exponential", 3), ("volcano", 2), ("bimodal", 2)]


@pytest.mark.parametrize("name, d", CATALOG)
def test_kernel_is_stochastic_and_reversible(name, d):
    K = discretize_Q(make_target(name, d).ell, 256)
    np.testing.assert_allclose(K.P.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(K.P >= 0)
    assert K.detailed_balance_error() < 1e-12
    est = spectral_gap(K, refine=False)
    assert abs(est.top_eigenvalue - 1.0) < 1e-10
    assert K.edges[0] == 0.0 and K.edges[-1] == K.t_max


def test_raw_cell_probabilities_against_simulation():
    """P_ij from t_i, checked against level steps simulated from the closed form."""
    K = discretize_Q(make_exponential(1).ell, 64, symmetrize=False)
    i = K.n // 2
    t = K.grid[i]
    rng = np.random.default_rng(21)
    n = 1_000_000
    # ell(t) = 2 log(1/t), so ell^{-1}(v ell(t)) = t^v
    r = t ** rng.uniform(0, 1, n)
    t_new = rng.uniform(0, 1, n) * r
    cells = np.clip(np.searchsorted(K.edges, t_new, side="right") - 1, 0, K.n - 1)
    freq = np.bincount(cells, minlength=K.n) / n
    se = np.sqrt(K.P[i] * (1 - K.P[i]) / n)
    assert abs(freq[i] - K.P[i, i]) < 3 * se[i]
    assert np.all(np.abs(freq - K.P[i]) < 4 * se + 1e-12)


def test_raw_kernel_across_kink():
    tg = make_volcano(2)
    K = discretize_Q(tg.ell, 96, symmetrize=False)
    for i in (K.n // 3, int(np.searchsorted(K.grid, 1.5))):
        rng = np.random.default_rng(i)
        n = 400_000
        r = tg.ell.inverse(rng.uniform(0, 1, n) * tg.ell(K.grid[i]))
        t_new = rng.uniform(0, 1, n) * r
        emp = np.searchsorted(np.sort(t_new), K.edges[1:-1], side="right") / n
        model = np.cumsum(K.P[i])[:-1]
        assert np.max(np.abs(emp - model)) < 2.0 / math.sqrt(n)


def test_volcano_kernel_dimension_free():
    a = discretize_Q(make_volcano(1).ell, 256)
    b = discretize_Q(make_volcano(5).ell, 256)
    assert np.max(np.abs(a.P - b.P)) <= 1e-10
    np.testing.assert_allclose(a.grid, b.grid, rtol=1e-14)


@settings(max_examples=15, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_kernel_scale_invariance_property(c):
    ell = make_bimodal(2).ell
    a = discretize_Q(ell, 64)
    b = discretize_Q(ell.scaled(c), 64)
    assert np.max(np.abs(a.P - b.P)) <= 1e-10


def test_grid_size_validation():
    ell = make_gaussian(2).ell
    with pytest.raises(ValueError):
        discretize_Q(ell, 8)
    with pytest.raises(ValueError):
        discretize_Q(ell, 4096)


def test_gap_values():
    # values frozen from the grid oracle at n = 512
    v = spectral_gap(discretize_Q(make_volcano(3).ell, 512))
    assert v.gap >= 0.5 - 0.02
    assert v.gap == pytest.approx(0.75588, abs=1e-3)
    assert v.refinement_delta < 0.005
    g = spectral_gap(discretize_Q(make_gaussian(4).ell, 512))
    assert g.gap >= 1 / 3 - 0.02
    e = spectral_gap(discretize_Q(make_exponential(3).ell, 512), refine=False)
    assert e.gap == pytest.approx(0.25002, abs=1e-3)
    assert e.refinement_delta is None


def test_gap_needs_balanced_kernel():
    K = discretize_Q(make_gaussian(2).ell, 64, symmetrize=False)
    with pytest.raises(ValueError):
        spectral_gap(K, balance_tol=1e-16)


def test_psi_closed_forms():
    t = np.linspace(0.01, 0.99, 99)
    np.testing.assert_allclose(psi(make_exponential(1).ell, t, 1), -2.0, rtol=1e-12)
    np.testing.assert_allclose(psi(make_gaussian(2).ell, t, 1), -2 * math.pi, rtol=1e-12)
    p4 = psi(make_gaussian(4).ell, np.linspace(0.1, 0.9, 200), 1)
    assert np.any(np.diff(p4) > 0)
    with pytest.raises(ValueError):
        psi(make_gaussian(2).ell, 1.5, 1)


def test_psi_derivative_against_finite_differences():
    # symbolic check of t ell'(t) via a central difference
    ell = make_bimodal(3).ell
    for t in (0.05, 0.2, 0.4):
        h = 1e-7
        fd = (ell(t + h) - ell(t - h)) / (2 * h)
        assert psi(ell, t, 2) == pytest.approx(t * fd / ell(t) ** 0.5, rel=1e-6)


def test_classification_examples():
    g4 = make_gaussian(4).ell
    assert not classify_lambda(g4, 1).member
    assert classify_lambda(g4, 2).member
    for d in range(1, 6):
        assert classify_lambda(make_volcano(d).ell, 1).member
    e3 = make_exponential(3).ell
    assert not classify_lambda(e3, 2).member
    assert classify_lambda(e3, 3).member


def test_min_lambda_k():
    assert min_lambda_k(make_bimodal(2).ell, 6) == 1
    assert min_lambda_k(make_bimodal(3).ell, 6) == 2
    assert min_lambda_k(make_gen_exponential(6, 1.0, 2.0).ell, 10) == 3
    assert min_lambda_k(make_gaussian(1).ell, 4) == 1
    assert min_lambda_k(make_exponential(5).ell, 3) is None
    with pytest.raises(ValueError):
        min_lambda_k(make_gaussian(1).ell, 0)


@pytest.mark.parametrize("d, gamma", [(1, 0.5), (2, 1.0), (3, 2.0), (5, 3.0), (4, 0.5)])
def test_genexp_rule(d, gamma):
    ell = make_gen_exponential(d, 1.0, gamma).ell
    k_star = math.ceil(d / gamma)
    for k in range(1, 11):
        assert classify_lambda(ell, k).member == (k >= k_star)


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-2, 1e2), st.integers(1, 4), st.integers(1, 5))
def test_membership_scale_invariant(c, d, k):
    ell = make_gaussian(d).ell
    assert classify_lambda(ell.scaled(c), k).member == classify_lambda(ell, k).member


@pytest.mark.parametrize("name, d", CATALOG + [("genexp", 3)])
def test_scaled_memberships_match(name, d):
    ell = make_target(name, d, 1.0 if name == "genexp" else None, 0.5 if name == "genexp" else None).ell
    for k in range(1, 7):
        m = classify_lambda(ell, k).member
        for c in (0.5, 3.0):
            assert classify_lambda(ell.scaled(c), k).member == m


def test_criterion_conflict_is_raised():
    # correct ell, deliberately wrong derivative: concavity and psi disagree
    base = make_exponential(3).ell
    bogus = LevelSetFunction(
        ell=base.ell, t_max=base.t_max, ell_sup=base.ell_sup, ell_inverse=base.ell_inverse,
        ell_derivative=lambda t: -np.asarray(t) ** 3, log_ell_inverse=base.log_ell_inverse,
    )
    assert not classify_lambda(base, 2).member
    with pytest.raises(LambdaCriterionConflict) as info:
        classify_lambda(bogus, 2)
    assert info.value.k == 2


def _ell_from_profile_by_bisection(profile, t, k):
    """Level length of a radial profile on R^k, solving phi(r) = -log t by bisection."""
    target = -math.log(t)
    hi = 1.0
    while profile.phi(hi) < target and hi < 1e6:
        hi *= 2
    # phi jumps to +inf at a finite support radius, which bisection handles
    r = bisect(lambda s: profile.phi(s) - target, 0.0, hi, tol=1e-15)
    return unit_ball_volume(k) * r**k


@pytest.mark.parametrize("name, d, k", [("gaussian", 2, 1), ("volcano", 1, 1), ("volcano", 4, 1),
                                        ("bimodal", 2, 1), ("bimodal", 2, 2), ("gaussian", 4, 2)])
def test_rho_tilde_roundtrip(name, d, k):
    ell = make_target(name, d).ell
    prof = build_rho_tilde(ell, k)
    assert prof.d == k
    t = np.linspace(0.01, 0.99, 100) * ell.t_max
    oracle = np.array([_ell_from_profile_by_bisection(prof, ti, k) for ti in t])
    np.testing.assert_allclose(oracle, ell(t), rtol=1e-9)
    np.testing.assert_allclose(prof.level_set_function()(t), ell(t), rtol=1e-9)


def test_rho_tilde_gaussian_closed_form():
    prof = build_rho_tilde(make_gaussian(2).ell, 1)
    for y in (0.0, 0.3, 2.0, 7.5):
        assert prof.rho(np.array([y])) == pytest.approx(math.exp(-abs(y) / math.pi), rel=1e-12)
    assert prof.is_log_concave()


def test_rho_tilde_requires_membership():
    with pytest.raises(ValueError):
        build_rho_tilde(make_gaussian(4).ell, 1)


def test_mixing_iterations():
    assert mixing_iterations(9, 0.01, 1.0) == 47
    assert mixing_iterations(1, math.exp(-1), 1.0) == 2
    assert mixing_iterations(4, 0.5, 0.2) == 0
    with pytest.raises(ValueError):
        mixing_iterations(3, 0.0, 1.0)
    with pytest.raises(ValueError):
        mixing_iterations(3, 1.5, 1.0)


def test_tv_bound():
    assert tv_bound(0.5, 10, 4.0) == pytest.approx(0.00390625)
    assert tv_bound(1.0, 1, 7.0) == 0.0
    assert tv_bound(0.25, 0, 2.0) == 2.0
    with pytest.raises(ValueError):
        tv_bound(0.0, 3, 1.0)


def _exp_points(d, a, b):
    x = np.zeros(d)
    y = np.zeros(d)
    x[0], y[min(1, d - 1)] = a, b
    return x, y


def test_wasserstein_equality_case():
    tg = make_exponential(3)
    x, y = _exp_points(3, 2.0, 0.5)
    ub = wasserstein_coupling_ub(tg, x, y, 100_000, seed=1)
    lb = wasserstein_dual_lb(tg, x, y, 100_000, seed=2)
    assert abs(ub.value - 1.125) < 0.02
    assert abs(lb.value - 1.125) < 0.02
    assert ub.se > 0 and lb.se > 0


def test_wasserstein_identical_points():
    tg = make_gaussian(3)
    x = np.array([1.0, 2.0, -0.5])
    assert wasserstein_coupling_ub(tg, x, x, 1000, seed=1) == (0.0, 0.0)
    assert wasserstein_dual_lb(tg, x, x, 1000, seed=1) == (0.0, 0.0)


def test_wasserstein_gaussian_contraction():
    ub = wasserstein_coupling_ub(make_gaussian(2), [3.0, 0.0], [0.0, 1.0], 100_000, seed=3)
    assert ub.value <= 4 / 3 + 3 * ub.se


def test_kernel_mean_norm_against_brute_force():
    """E|Z| from |x| = 2 for exp(-|x|) in d = 3, with the radius drawn by hand."""
    rng = np.random.default_rng(31)
    n = 400_000
    t = math.exp(-2.0) * (1 - rng.uniform(0, 1, n))
    radius = -np.log(t) * rng.uniform(0, 1, n) ** (1 / 3)
    oracle = radius.mean()
    est = kernel_mean_norm(make_exponential(3), [2.0, 0.0, 0.0], 100_000, seed=4)
    assert abs(oracle - 2.25) < 0.02
    assert abs(est.value - oracle) < 0.02
