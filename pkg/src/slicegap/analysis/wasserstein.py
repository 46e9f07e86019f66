"""Monte Carlo bounds on W1 between the one-step kernels from two states."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from slicegap.sampler import coupled_draws, kernel_draws

_UB_STREAM = 10


class Estimate(NamedTuple):
    value: float
    se: float


def _mean_se(total: float, total_sq: float, n: int) -> Estimate:
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    return Estimate(float(mean), float(np.sqrt(var / (n - 1))))


def wasserstein_coupling_ub(profile, x, y, reps: int, seed: int) -> Estimate:
    """Mean |x' - y'| under the shared-(r, z) coupling; any coupling bounds W1 above."""
    if reps < 2:
        raise ValueError("need at least 2 replicates")
    X, Y = coupled_draws(profile, x, y, reps, seed, key=_UB_STREAM)
    dist = np.linalg.norm(X - Y, axis=1)
    return _mean_se(dist.sum(), (dist * dist).sum(), dist.shape[0])


def kernel_mean_norm(profile, x, reps: int, seed: int, key: int = 0) -> Estimate:
    """Mean of |Z| for Z ~ U_rho(x, .)."""
    z = np.linalg.norm(kernel_draws(profile, x, reps, seed, key), axis=1)
    return _mean_se(z.sum(), (z * z).sum(), z.shape[0])


def wasserstein_dual_lb(profile, x, y, reps: int, seed: int) -> Estimate:
    """|E|Z_x| - E|Z_y|| with z -> |z| as the 1-Lipschitz test function.

    The two means come from independent draws, so their standard errors add
    in quadrature. Identical states give identical kernels and a zero bound.
    """
    if reps < 2:
        raise ValueError("need at least 2 replicates")
    if np.array_equal(np.atleast_1d(np.asarray(x, dtype=float)), np.atleast_1d(np.asarray(y, dtype=float))):
        return Estimate(0.0, 0.0)
    mx = kernel_mean_norm(profile, x, reps, seed, key=0)
    my = kernel_mean_norm(profile, y, reps, seed, key=1)
    return Estimate(abs(mx.value - my.value), float(np.hypot(mx.se, my.se)))
