"""Discretization of the level (T-)chain kernel and its spectral gap.

Given the current level t, the slice sampler's next level is U * r where
``ell(r)`` is uniform on (0, ell(t)). Writing

    J(a) = int_a^{t_max} ell(r) / r^2 dr,     K(t) = ell(t) / t - J(t),

the transition law has CDF ``a K(t) / ell(t)`` for a <= t and
``1 - a J(a) / ell(t)`` for a >= t. Only integrals of ``ell`` are needed, so
kinks in ``ell`` need no special treatment beyond splitting quadrature there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from slicegap.targets import LevelSetFunction, truncation_level

MIN_GRID = 16
MAX_GRID = 2048
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


@dataclass(frozen=True)
class DiscretizedKernel:
    """Row-stochastic matrix on level cells, reversible w.r.t. ``mu_weights``.

    ``grid`` holds the level nodes, ``edges`` the n + 1 cell boundaries with
    edges[0] = 0 and edges[-1] = t_max, so the cells cover all of (0, t_max].
    """

    grid: np.ndarray
    edges: np.ndarray
    P: np.ndarray
    mu_weights: np.ndarray
    t_lo: float
    t_max: float
    ell: LevelSetFunction = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.grid.shape[0]

    def flux(self) -> np.ndarray:
        return self.mu_weights[:, None] * self.P

    def detailed_balance_error(self) -> float:
        F = self.flux()
        return float(np.max(np.abs(F - F.T)) / np.max(self.mu_weights))


@dataclass(frozen=True)
class GapEstimate:
    gap: float
    grid_size: int
    refinement_delta: float | None
    top_eigenvalue: float


def _level_integrals(ell: LevelSetFunction, points: np.ndarray) -> np.ndarray:
    """J at each of the sorted ``points`` (last point must be t_max, where J = 0)."""
    u0 = np.log(points[:-1])
    u1 = np.log(points[1:])
    half = 0.5 * (u1 - u0)
    mid = 0.5 * (u1 + u0)
    r = np.exp(mid[:, None] + half[:, None] * _GL_NODES[None, :])
    # ell(r) / r^2 dr = ell(e^u) e^{-u} du
    seg = (np.asarray(ell(r)) / r) @ _GL_WEIGHTS * half
    return np.append(np.cumsum(seg[::-1])[::-1], 0.0)


def discretize_Q(
    ell: LevelSetFunction,
    n: int,
    t_lo: float | None = None,
    t_max: float | None = None,
    symmetrize: bool = True,
) -> DiscretizedKernel:
    """Transition matrix P_ij = Q(t_i, cell_j) on a log-uniform level grid.

    The rows are exact cell probabilities (up to quadrature of J). With
    ``symmetrize`` the fluxes ``ell(t_i) w_i P_ij`` are averaged with their
    transposes, and the weights are reset to the resulting row masses, so the
    returned P is row-stochastic and reversible to rounding.
    """
    if int(n) != n or not (MIN_GRID <= n <= MAX_GRID):
        raise ValueError(f"grid size must be an integer in [{MIN_GRID}, {MAX_GRID}], got {n!r}")
    n = int(n)
    t_max = ell.t_max if t_max is None else float(t_max)
    t_lo = truncation_level(ell, t_lo)
    if not (0.0 < t_lo < t_max):
        raise ValueError("need 0 < t_lo < t_max")

    a, b = math.log(t_lo), math.log(t_max)
    edges = np.exp(a + (b - a) * np.arange(n + 1) / n)
    edges[0], edges[-1] = 0.0, t_max
    nodes = np.exp(a + (b - a) * (np.arange(n) + 0.5) / n)

    ell_nodes = np.asarray(ell(nodes), dtype=float)
    if not (np.all(ell_nodes > 0) and np.all(np.diff(ell_nodes) < 0)):
        raise ValueError("level-set function is not strictly decreasing and positive on the grid")

    kinks = [k for k in ell.kinks if t_lo < k < t_max]
    points = np.unique(np.concatenate([nodes, edges[1:], kinks]))
    J = _level_integrals(ell, points)
    J_nodes = J[np.searchsorted(points, nodes)]
    J_edges = np.zeros(n + 1)
    J_edges[1:] = J[np.searchsorted(points, edges[1:])]

    K = ell_nodes / nodes - J_nodes
    A = edges * J_edges  # A(0) = 0 and A(t_max) = 0
    widths = np.diff(edges)

    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    below = widths[None, :] * (K / ell_nodes)[:, None]
    above = (A[:-1] - A[1:])[None, :] / ell_nodes[:, None]
    P = np.where(j < i, below, np.where(j > i, above, 0.0))
    np.fill_diagonal(P, 0.0)
    np.fill_diagonal(P, 1.0 - P.sum(axis=1))
    if P.min() < -1e-12:
        raise ArithmeticError(f"negative transition probability {P.min():.3g}")
    P = np.maximum(P, 0.0)

    weights = ell_nodes * widths
    if symmetrize:
        F = weights[:, None] * P
        F = 0.5 * (F + F.T)
        weights = F.sum(axis=1)
        P = F / weights[:, None]
    else:
        P = P / P.sum(axis=1, keepdims=True)
    return DiscretizedKernel(
        grid=nodes, edges=edges, P=P, mu_weights=weights / weights.sum(),
        t_lo=t_lo, t_max=t_max, ell=ell,
    )


def _gap_from_kernel(kernel: DiscretizedKernel, balance_tol: float) -> tuple[float, float]:
    err = kernel.detailed_balance_error()
    if err > balance_tol:
        raise ValueError(f"kernel violates detailed balance by {err:.3g} (tolerance {balance_tol:.1g})")
    mu = kernel.mu_weights
    root = np.sqrt(mu)
    S = root[:, None] * kernel.P / root[None, :]
    S = 0.5 * (S + S.T)
    ev = np.linalg.eigvalsh(S)
    # the top eigenvalue is the constant function; the gap is two-sided
    second = max(abs(ev[-2]), abs(ev[0]))
    return 1.0 - second, float(ev[-1])


def spectral_gap(kernel: DiscretizedKernel, refine: bool = True, balance_tol: float = 1e-8) -> GapEstimate:
    """1 - second-largest eigenvalue modulus of the mu-symmetrized kernel.

    With ``refine`` the kernel is rebuilt on a grid twice as fine (capped at
    2048 nodes) and the absolute change of the gap is reported.
    """
    gap, top = _gap_from_kernel(kernel, balance_tol)
    delta = None
    if refine:
        fine_n = min(2 * kernel.n, MAX_GRID)
        if fine_n > kernel.n:
            fine = discretize_Q(kernel.ell, fine_n, kernel.t_lo, kernel.t_max)
            delta = abs(_gap_from_kernel(fine, balance_tol)[0] - gap)
    return GapEstimate(gap=float(gap), grid_size=kernel.n, refinement_delta=delta, top_eigenvalue=top)
