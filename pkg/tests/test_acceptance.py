"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary
under "acceptance criteria".
"""

import math

import numpy as np
import pytest

from oracles import ks_statistic
from slicegap.analysis import (
    build_rho_tilde,
    classify_lambda,
    discretize_Q,
    min_lambda_k,
    spectral_gap,
    wasserstein_coupling_ub,
    wasserstein_dual_lb,
)
from slicegap.geometry import sample_uniform_ball
from slicegap.io import chain_csv
from slicegap.rng import stream
from slicegap.sampler import coupled_draws, kernel_draws, run_chain, run_coupled, run_level_chain, slice_step
from slicegap.suites import random_endpoints
from slicegap.targets import make_bimodal, make_exponential, make_gaussian, make_gen_exponential, make_volcano

REPS = 100_000


def test_1_equality_case(criterion):
    tg = make_exponential(3, 1.0)
    x = np.array([2.0, 0.0, 0.0])
    y = np.array([0.0, 0.0, 0.5])
    ub = wasserstein_coupling_ub(tg, x, y, REPS, seed=101)
    lb = wasserstein_dual_lb(tg, x, y, REPS, seed=102)
    decay = run_coupled(tg, x, y, 20, REPS, seed=103).decay
    ok = abs(ub.value - 1.125) <= 0.02 and abs(lb.value - 1.125) <= 0.02 and abs(decay - 0.75) <= 0.02
    criterion("1 equality case", ok, f"ub={ub.value:.4f} lb={lb.value:.4f} decay={decay:.4f} (1.125/1.125/0.75 +- 0.02)")
    assert ok


def test_2_contraction_bound(criterion):
    rng = stream(202, 1)
    worst = -math.inf
    cases = 0
    for d in (2, 4):
        tg = make_gaussian(d)
        for i, (x, y) in enumerate(random_endpoints(d, 6, rng)):
            ub = wasserstein_coupling_ub(tg, x, y, REPS, seed=200 + 10 * d + i)
            bound = (1 - 1 / (d + 1)) * abs(np.linalg.norm(x) - np.linalg.norm(y))
            worst = max(worst, (ub.value - bound) / ub.se)
            cases += 1
    ok = worst <= 3.0
    criterion("2 contraction bound", ok, f"{cases} pairs, max (ub - bound)/SE = {worst:.2f} (<= 3)")
    assert ok


GAP_CASES = (
    [(f"volcano d={d}", make_volcano(d), 0.5) for d in (1, 2, 3)]
    + [("bimodal d=2", make_bimodal(2), 0.5), ("gaussian d=4", make_gaussian(4), 1 / 3)]
    + [(f"exponential d={d}", make_exponential(d), 1 / (d + 1)) for d in range(1, 6)]
)


def test_3_gap_bounds(criterion):
    lines = []
    ok = True
    for label, tg, bound in GAP_CASES:
        gap = spectral_gap(discretize_Q(tg.ell, 512), refine=False).gap
        delta = spectral_gap(discretize_Q(tg.ell, 1024)).refinement_delta
        good = gap >= bound - 0.02 and delta < 0.005
        ok &= good
        lines.append(f"{label}: {gap:.4f}>={bound:.4f}-0.02 delta={delta:.1e}")
    criterion("3 gap bounds", ok, "; ".join(lines))
    assert ok


def test_4_level_set_invariance(criterion):
    diff = np.max(np.abs(discretize_Q(make_volcano(1).ell, 512).P - discretize_Q(make_volcano(5).ell, 512).P))
    tg = make_bimodal(2)
    x = run_chain(tg, np.zeros(2), REPS, seed=401)
    t = run_level_chain(tg.ell, 0.25, REPS, seed=402)
    ks = ks_statistic(x.levels, t.states)
    ok = diff <= 1e-10 and ks < 0.015
    criterion("4 level-set invariance", ok, f"max|Q1-Q5|={diff:.2e} (<=1e-10) KS={ks:.4f} (<0.015)")
    assert ok


def test_5_lambda_table(criterion):
    wrong = []
    for d in range(1, 6):
        for gamma in (0.5, 1.0, 2.0, 3.0):
            ell = make_gen_exponential(d, 1.0, gamma).ell
            for k in range(1, 11):
                if classify_lambda(ell, k).member != (k >= math.ceil(d / gamma)):
                    wrong.append((d, gamma, k))
    kv = min_lambda_k(make_volcano(3).ell, 6)
    kg = min_lambda_k(make_gaussian(4).ell, 8)
    ok = not wrong and kv == 1 and kg == 2
    criterion("5 Lambda_k table", ok, f"{200 - len(wrong)}/200 cells agree, volcano k_min={kv}, gaussian d=4 k_min={kg}")
    assert ok


def _reversibility():
    t = run_level_chain(make_volcano(2).ell, 1.0, 400_000, seed=601).states
    edges = np.quantile(t, np.linspace(0, 1, 31))
    a = np.clip(np.searchsorted(edges, t[:-1], side="right") - 1, 0, 29)
    b = np.clip(np.searchsorted(edges, t[1:], side="right") - 1, 0, 29)
    C = np.zeros((30, 30))
    np.add.at(C, (a, b), 1)
    tot = C + C.T
    z = (np.abs(C - C.T)[tot > 0] / np.sqrt(tot[tot > 0])).max()
    return z < 4.0, f"30x30 max |C-C^T|/sqrt(C+C^T) = {z:.2f} (<4)"


def _marginals():
    tg = make_gaussian(3)
    x = np.array([1.5, 0.0, 0.0])
    y = np.array([0.0, -0.3, 0.0])
    X, Y = coupled_draws(tg, x, y, REPS, seed=602)
    rng = stream(603)
    rx = np.array([slice_step(tg, x, rng) for _ in range(REPS)])
    ry = np.array([slice_step(tg, y, rng) for _ in range(REPS)])
    ks = max(ks_statistic(np.linalg.norm(X, axis=1), np.linalg.norm(rx, axis=1)),
             ks_statistic(np.linalg.norm(Y, axis=1), np.linalg.norm(ry, axis=1)),
             ks_statistic(X[:, 0], rx[:, 0]), ks_statistic(Y[:, 1], ry[:, 1]))
    return ks < 0.015, f"max KS = {ks:.4f} (<0.015)"


def _monotone():
    X, Y = coupled_draws(make_gaussian(4), [0.7, 0, 0, 0], [0, 0, 2.0, 0], REPS, seed=604)
    bad = int(np.sum(np.linalg.norm(X, axis=1) > np.linalg.norm(Y, axis=1)))
    return bad == 0, f"{bad} of {REPS} replicates out of order"


def _ball_mean_norm():
    worst = 0.0
    for d in (1, 2, 3, 5, 10):
        r = np.linalg.norm(sample_uniform_ball(d, 1.0, stream(605, d), size=REPS), axis=1)
        worst = max(worst, abs(r.mean() - d / (d + 1)) / (r.std(ddof=1) / math.sqrt(REPS)))
    return worst <= 5.0, f"max |mean - d/(d+1)|/SE = {worst:.2f} (<=5)"


def _rho_tilde():
    worst = 0.0
    for ell, k in ((make_gaussian(2).ell, 1), (make_volcano(3).ell, 1), (make_bimodal(2).ell, 2), (make_gaussian(4).ell, 2)):
        t = np.linspace(0.01, 0.99, 100) * ell.t_max
        back = build_rho_tilde(ell, k).level_set_function()(t)
        worst = max(worst, float(np.max(np.abs(back / ell(t) - 1))))
    return worst <= 1e-9, f"max relative ell error = {worst:.1e} (<=1e-9)"


def _determinism():
    tg = make_bimodal(2)
    a = chain_csv(run_chain(tg, np.zeros(2), 2000, seed=606))
    b = chain_csv(run_chain(tg, np.zeros(2), 2000, seed=606))
    za = kernel_draws(make_gaussian(2), [1.0, 0.0], 5000, seed=607).tobytes()
    zb = kernel_draws(make_gaussian(2), [1.0, 0.0], 5000, seed=607).tobytes()
    return a == b and za == zb, "reruns byte-identical" if a == b and za == zb else "reruns differ"


@pytest.mark.parametrize("name, check", [
    ("6a T-chain reversibility histogram", _reversibility),
    ("6b coupling marginals", _marginals),
    ("6c monotone coupling", _monotone),
    ("6d ball sampler mean norm", _ball_mean_norm),
    ("6e rho-tilde round trip", _rho_tilde),
    ("6f seeded determinism", _determinism),
])
def test_6_property_suites(name, check, criterion):
    ok, detail = check()
    criterion(name, ok, detail)
    assert ok
