"""Membership of level-set functions in the classes Lambda_k.

``ell`` is in Lambda_k when s -> log ell^{-1}(s^k) is concave on
(0, ell_sup^{1/k}). For differentiable ``ell`` this is equivalent to
psi(t) = t ell'(t) / ell(t)^{1 - 1/k} being non-increasing; both tests are
run when possible and must agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from slicegap.geometry import unit_ball_volume
from slicegap.targets import LevelSetFunction, RadialProfile, truncation_level

_REL_TOL = 1e-8
# grid stays this far (relatively) below t_max so ell(t) is not rounded to 0
_T_HI_REL = 1e-6


class LambdaCriterionConflict(ArithmeticError):
    """The concavity and psi criteria disagree on a grid."""

    def __init__(self, k, concave, psi_ok, points):
        self.k = k
        self.points = points
        super().__init__(
            f"Lambda_{k} criteria disagree: concavity says {concave}, psi monotonicity says "
            f"{psi_ok}; offending levels t = {points}"
        )


@dataclass(frozen=True)
class LambdaReport:
    k: int
    member: bool
    s: np.ndarray
    second_diff: np.ndarray
    t: np.ndarray
    psi: np.ndarray | None
    grid_size: int

    @property
    def concave(self) -> bool:
        return bool(np.all(self.second_diff <= _REL_TOL))


def psi(ell: LevelSetFunction, t, k: int):
    """t ell'(t) / ell(t)^{1 - 1/k}; negative on the support of ell."""
    if not ell.has_derivative:
        raise ValueError("psi needs the derivative of ell")
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0) or np.any(t_arr >= ell.t_max):
        raise ValueError(f"t must lie in the support (0, {ell.t_max})")
    val = np.asarray(ell(t_arr), dtype=float)
    if np.any(val <= 0):
        raise ValueError("ell vanishes at the requested level")
    out = t_arr * np.asarray(ell.derivative(t_arr)) / val ** (1.0 - 1.0 / k)
    return float(out) if out.ndim == 0 else out


def _s_range(ell: LevelSetFunction, k: int) -> tuple[float, float]:
    if math.isinf(ell.ell_sup):
        s_hi = float(ell(truncation_level(ell))) ** (1.0 / k)
    else:
        s_hi = ell.ell_sup ** (1.0 / k)
    s_lo = float(ell(ell.t_max * (1.0 - _T_HI_REL))) ** (1.0 / k)
    return s_lo, s_hi


def _increments_ok(values: np.ndarray, diffs: np.ndarray) -> np.ndarray:
    """Relative increments, scaled by the local magnitude of ``values``."""
    scale = np.maximum(np.abs(values[:-1]), np.abs(values[1:]))
    scale = np.where(scale > 0, scale, 1.0)
    return diffs / scale


def classify_lambda(ell: LevelSetFunction, k: int, grid_size: int = 512) -> LambdaReport:
    """Decide ``ell`` in Lambda_k on a geometric grid of s, boundary points dropped."""
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    k = int(k)
    s_lo, s_hi = _s_range(ell, k)
    s = np.geomspace(s_lo, s_hi, grid_size + 2)[1:-1]
    f = np.asarray(ell.log_inverse(s**k), dtype=float)
    slopes = np.diff(f) / np.diff(s)
    second = _increments_ok(slopes, np.diff(slopes))
    concave = bool(np.all(second <= _REL_TOL))

    t = np.exp(f)
    psi_vals = None
    member = concave
    if ell.has_derivative:
        inside = (t > 0) & (t < ell.t_max)
        t_asc = np.sort(t[inside])
        psi_vals = psi(ell, t_asc, k)
        rel = _increments_ok(psi_vals, np.diff(psi_vals))
        psi_ok = bool(np.all(rel <= _REL_TOL))
        if psi_ok != concave:
            bad_psi = t_asc[1:][rel > _REL_TOL]
            bad_cc = t[1:-1][second > _REL_TOL]
            pts = np.union1d(bad_psi, bad_cc)[:10].tolist()
            raise LambdaCriterionConflict(k, concave, psi_ok, pts)
    return LambdaReport(
        k=k, member=member, s=s, second_diff=second, t=t, psi=psi_vals, grid_size=grid_size,
    )


def min_lambda_k(ell: LevelSetFunction, k_max: int, grid_size: int = 512) -> int | None:
    """Smallest k <= k_max with ell in Lambda_k, else None."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    for k in range(1, int(k_max) + 1):
        if classify_lambda(ell, k, grid_size).member:
            return k
    return None


def build_rho_tilde(ell: LevelSetFunction, k: int, check: bool = True) -> RadialProfile:
    """Rotationally invariant density on R^k with the same level-set function.

    rho(y) = ell^{-1}(vol_k |y|^k) on the ball of radius (ell_sup / vol_k)^{1/k},
    i.e. phi(s) = -log ell^{-1}(vol_k s^k), which is convex iff ell is in Lambda_k.
    """
    if check and not classify_lambda(ell, k).member:
        raise ValueError(f"level-set function is not in Lambda_{k}")
    vol = unit_ball_volume(k)
    R = math.inf if math.isinf(ell.ell_sup) else (ell.ell_sup / vol) ** (1.0 / k)
    log_t_max = math.log(ell.t_max)

    def phi(s):
        s = np.asarray(s, dtype=float)
        inside = s < R
        with np.errstate(divide="ignore", invalid="ignore"):
            val = -np.asarray(ell.log_inverse(vol * np.where(inside, s, 0.0) ** k))
        # rho vanishes from the support radius on
        out = np.where(inside, np.where(s > 0, val, -log_t_max), math.inf)
        return float(out) if out.ndim == 0 else out

    def phi_inverse(u):
        u = np.asarray(u, dtype=float)
        t = np.exp(-np.maximum(u, -log_t_max))
        with np.errstate(invalid="ignore"):
            r = (np.asarray(ell(t), dtype=float) / vol) ** (1.0 / k)
        # extended inverse: R once ell reaches its supremum
        r = np.where(np.isfinite(r), np.minimum(r, R), R)
        return float(r) if r.ndim == 0 else r

    return RadialProfile(d=k, phi=phi, R=R, phi_inverse=phi_inverse)
