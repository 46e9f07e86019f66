"""Closed-form consequences of a contraction factor or a spectral gap."""

from __future__ import annotations

import math


def mixing_iterations(d: int, epsilon: float, w0: float) -> int:
    """Steps n with (1 - 1/(d+1))^n w0 <= epsilon, via n >= (d+1) log(w0/epsilon)."""
    if int(d) != d or d < 1:
        raise ValueError("dimension must be a positive integer")
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if not w0 > 0:
        raise ValueError("initial distance w0 must be positive")
    if epsilon >= w0:
        return 0
    return math.ceil((d + 1) * math.log(w0 / epsilon))


def tv_bound(gap: float, n: int, chi: float) -> float:
    """Total variation bound (1 - gap)^n * chi after n steps.

    ``chi`` is the L2(pi) norm of d(nu)/d(pi) - 1 for the initial law nu.
    """
    if not (0.0 < gap <= 1.0):
        raise ValueError(f"gap must lie in (0, 1], got {gap!r}")
    if int(n) != n or n < 0:
        raise ValueError("n must be a nonnegative integer")
    if chi < 0:
        raise ValueError("chi must be nonnegative")
    return (1.0 - gap) ** int(n) * chi
