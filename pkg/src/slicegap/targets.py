"""Target densities whose super-level sets are finite unions of annuli.

Every catalog entry carries its exact level-set function ``ell(t)`` (the
Lebesgue volume of ``{rho >= t}``, ball-volume constant included) together
with closed-form inverse and derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from slicegap.geometry import Annulus, unit_ball_volume

TARGET_NAMES = ("gaussian", "exponential", "genexp", "volcano", "bimodal")

# grid computations over levels never go below this fraction of t_max by default
DEFAULT_T_LO_REL = 1e-8
MU_TAIL_TOL = 1e-8


def _as_float_or_array(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


@dataclass(frozen=True)
class LevelSetFunction:
    """t -> volume of the super-level set at t, with its support metadata.

    ``ell_inverse`` maps (0, ell_sup) onto (0, t_max). ``kinks`` lists levels
    where ``ell`` is continuous but not differentiable; quadrature splits there.
    """

    ell: Callable
    t_max: float
    ell_sup: float
    ell_inverse: Callable | None = None
    ell_derivative: Callable | None = None
    log_ell_inverse: Callable | None = None
    kinks: tuple = ()

    def __call__(self, t):
        return self.ell(t)

    @property
    def has_derivative(self) -> bool:
        return self.ell_derivative is not None

    def inverse(self, s):
        if self.ell_inverse is not None:
            return self.ell_inverse(s)
        s_arr = np.asarray(s, dtype=float)
        out = np.vectorize(lambda v: level_set_inverse_numeric(self, v), otypes=[float])(s_arr)
        return _as_float_or_array(out)

    def log_inverse(self, s):
        """log of ell^{-1}(s); closed form when available to avoid exp/log round trips."""
        if self.log_ell_inverse is not None:
            return self.log_ell_inverse(s)
        return _as_float_or_array(np.log(self.inverse(s)))

    def derivative(self, t):
        if self.ell_derivative is None:
            raise ValueError("this level-set function has no derivative")
        return self.ell_derivative(t)

    def scaled(self, c: float) -> "LevelSetFunction":
        """The function c * ell; Lambda_k membership is invariant under this."""
        if not c > 0:
            raise ValueError("scale must be positive")
        inv = self.ell_inverse
        log_inv = self.log_ell_inverse
        der = self.ell_derivative
        return LevelSetFunction(
            ell=lambda t: c * self.ell(t),
            t_max=self.t_max,
            ell_sup=c * self.ell_sup,
            ell_inverse=(lambda s: inv(np.asarray(s) / c)) if inv is not None else None,
            ell_derivative=(lambda t: c * der(t)) if der is not None else None,
            log_ell_inverse=(lambda s: log_inv(np.asarray(s) / c)) if log_inv is not None else None,
            kinks=self.kinks,
        )

    def total_mass(self) -> float:
        """Integral of ell over (0, t_max); equals the integral of rho."""
        # substitute t = t_max * exp(-u) so the integrable blow-up at 0 becomes a tail
        def f(u):
            t = self.t_max * math.exp(-u)
            return float(self.ell(t)) * t if t > 0 else 0.0

        points = sorted(-math.log(k / self.t_max) for k in self.kinks if 0 < k < self.t_max)
        lo = 0.0
        total = 0.0
        for b in points + [math.inf]:
            val, _ = integrate.quad(f, lo, b, limit=200, epsabs=0.0, epsrel=1e-12)
            total += val
            lo = b
        return total


def level_set_inverse_numeric(ell: LevelSetFunction, s: float) -> float:
    """Solve ell(t) = s by bisection on (0, t_max), using strict monotonicity."""
    s = float(s)
    if not (0.0 < s < ell.ell_sup):
        raise ValueError(f"s must lie in (0, {ell.ell_sup}), got {s}")
    tol = 1e-10 * max(1.0, s)
    hi = ell.t_max
    lo = 0.5 * hi
    # bracket from above: ell(lo) >= s >= ell(hi)
    while float(ell(lo)) < s:
        hi = lo
        lo *= 0.5
        if lo < 1e-300:
            raise ValueError(f"could not bracket ell(t) = {s}")
    best, best_err = lo, abs(float(ell(lo)) - s)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        val = float(ell(mid))
        if abs(val - s) < best_err:
            best, best_err = mid, abs(val - s)
        if val > s:
            lo = mid
        else:
            hi = mid
    if best_err > tol:
        raise ArithmeticError(f"bisection stalled at |ell(t) - s| = {best_err:.3g} for s = {s}")
    return best


@dataclass(frozen=True)
class RadialProfile:
    """rho(x) = exp(-phi(|x|)) on the open ball of radius R in R^d.

    ``phi_inverse`` is the extended inverse on [phi(0), inf): it returns R for
    arguments at or beyond -log(inf rho).
    """

    d: int
    phi: Callable
    R: float
    phi_inverse: Callable

    @property
    def rho_sup(self) -> float:
        return math.exp(-float(self.phi(0.0)))

    def rho(self, x):
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.where(r < self.R, np.exp(-self.phi(np.minimum(r, self._r_safe))), 0.0)
        return _as_float_or_array(out)

    @property
    def _r_safe(self) -> float:
        return self.R if math.isinf(self.R) else np.nextafter(self.R, 0.0)

    def level_radius(self, t):
        """Radius of the ball {rho >= t}; zero for t above the maximum."""
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = -np.log(t)
            r = np.where(t <= self.rho_sup, self.phi_inverse(np.maximum(u, self.phi(0.0))), 0.0)
        return _as_float_or_array(r)

    def level_set_function(self) -> LevelSetFunction:
        d = self.d
        vol = unit_ball_volume(d)
        rho_sup = self.rho_sup

        def ell(t):
            return _as_float_or_array(vol * np.asarray(self.level_radius(t)) ** d)

        def ell_inverse(s):
            r = (np.asarray(s, dtype=float) / vol) ** (1.0 / d)
            return _as_float_or_array(np.exp(-self.phi(r)))

        sup = math.inf if math.isinf(self.R) else vol * self.R**d
        return LevelSetFunction(ell=ell, t_max=rho_sup, ell_sup=sup, ell_inverse=ell_inverse)

    def is_log_concave(self, n: int = 257) -> bool:
        """Grid check that phi is convex (so rho is log-concave)."""
        hi = 10.0 if math.isinf(self.R) else self.R
        s = np.linspace(0.0, hi, n + 1)[:-1]
        f = np.asarray(self.phi(s), dtype=float)
        second = f[2:] - 2 * f[1:-1] + f[:-2]
        return bool(np.all(second >= -1e-9 * np.maximum(1.0, np.abs(f[1:-1]))))


@dataclass(frozen=True)
class TargetDensity:
    name: str
    d: int
    rho: Callable
    rho_sup: float
    level_set: Callable
    ell: LevelSetFunction
    profile: RadialProfile | None = None
    params: dict = field(default_factory=dict)
    rho_point: Callable | None = field(default=None, repr=False)

    def density_at(self, x: np.ndarray) -> float:
        """rho at a single point, through the scalar fast path when there is one."""
        if self.rho_point is not None:
            return self.rho_point(x)
        return float(self.rho(x))

    @property
    def is_radial(self) -> bool:
        return self.profile is not None

    def support_radius(self, t_min: float = 1e-12) -> float:
        """Euclidean radius of a centered ball containing {rho >= t_min}."""
        return max(float(np.linalg.norm(a.center)) + a.r_out for a in self.level_set(t_min))


def _safe_log_inv(t):
    """log(1/t) as an array, +inf at t <= 0."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(t > 0, -np.log(np.where(t > 0, t, 1.0)), np.inf)


def _gen_exponential(name: str, d: int, alpha: float, gamma: float, params: dict) -> TargetDensity:
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    if not (alpha > 0 and gamma > 0):
        raise ValueError("alpha and gamma must be positive")
    d = int(d)
    vol = unit_ball_volume(d)
    m = d / gamma

    profile = RadialProfile(
        d=d,
        phi=lambda s: alpha * np.asarray(s, dtype=float) ** gamma,
        R=math.inf,
        phi_inverse=lambda u: (np.maximum(np.asarray(u, dtype=float), 0.0) / alpha) ** (1.0 / gamma),
    )

    def ell(t):
        L = _safe_log_inv(t)
        with np.errstate(invalid="ignore"):
            out = np.where(L > 0, vol * (np.maximum(L, 0.0) / alpha) ** m, 0.0)
        return _as_float_or_array(out)

    def ell_inverse(s):
        return _as_float_or_array(np.exp(log_ell_inverse(s)))

    def log_ell_inverse(s):
        return _as_float_or_array(-alpha * (np.asarray(s, dtype=float) / vol) ** (1.0 / m))

    def ell_derivative(t):
        t = np.asarray(t, dtype=float)
        L = _safe_log_inv(t)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(L > 0, -vol * m * (np.maximum(L, 0.0) / alpha) ** (m - 1) / (alpha * t), 0.0)
        return _as_float_or_array(out)

    lsf = LevelSetFunction(
        ell=ell,
        t_max=1.0,
        ell_sup=math.inf,
        ell_inverse=ell_inverse,
        ell_derivative=ell_derivative,
        log_ell_inverse=log_ell_inverse,
    )
    origin = np.zeros(d)
    inv_gamma = 1.0 / gamma
    half_gamma = 0.5 * gamma

    def level_set(t):
        t = float(t)
        if not (0.0 < t < 1.0):
            return []
        return [Annulus(origin, 0.0, (-math.log(t) / alpha) ** inv_gamma)]

    def rho_point(x):
        return math.exp(-alpha * float(x @ x) ** half_gamma)

    return TargetDensity(
        name=name, d=d, rho=profile.rho, rho_sup=1.0, level_set=level_set,
        ell=lsf, profile=profile, params=params, rho_point=rho_point,
    )


def make_gaussian(d: int) -> TargetDensity:
    """Standard normal: rho(x) = exp(-|x|^2 / 2)."""
    return _gen_exponential("gaussian", d, 0.5, 2.0, {"dim": d})


def make_exponential(d: int, alpha: float = 1.0) -> TargetDensity:
    """rho(x) = exp(-alpha |x|); level sets are balls of radius log(1/t) / alpha."""
    return _gen_exponential("exponential", d, alpha, 1.0, {"dim": d, "alpha": alpha})


def make_gen_exponential(d: int, alpha: float = 1.0, gamma: float = 1.0) -> TargetDensity:
    """rho(x) = exp(-alpha |x|^gamma)."""
    return _gen_exponential("genexp", d, alpha, gamma, {"dim": d, "alpha": alpha, "gamma": gamma})


def make_volcano(d: int) -> TargetDensity:
    """rho(x) = exp(-|x|^{2d} + 2|x|^d), maximal (= e) on the sphere |x| = 1.

    With u = |x|^d the level set {rho >= t} is 1 - sqrt(1 - log t) <= u <=
    1 + sqrt(1 - log t), clipped below at u = 0, i.e. a ball for t <= 1 and an
    annulus for 1 < t <= e.
    """
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    vol = unit_ball_volume(d)
    e = math.e
    origin = np.zeros(d)

    def rho(x):
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        u = r**d
        return _as_float_or_array(np.exp(-u * u + 2.0 * u))

    def _root(t):
        # sqrt(1 + log(1/t)) on (0, e]
        return np.sqrt(np.maximum(1.0 + _safe_log_inv(t), 0.0))

    def ell(t):
        t = np.asarray(t, dtype=float)
        w = _root(t)
        out = np.where(t <= 1.0, vol * (1.0 + w), np.where(t <= e, 2.0 * vol * w, 0.0))
        return _as_float_or_array(out)

    def log_ell_inverse(s):
        v = np.asarray(s, dtype=float) / vol
        return _as_float_or_array(np.where(v < 2.0, 1.0 - 0.25 * v * v, -v * v + 2.0 * v))

    def ell_inverse(s):
        return _as_float_or_array(np.exp(log_ell_inverse(s)))

    def ell_derivative(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = _root(t)
            out = np.where(
                t <= 1.0, -vol / (2.0 * t * w), np.where(t < e, -vol / (t * w), 0.0)
            )
        return _as_float_or_array(out)

    lsf = LevelSetFunction(
        ell=ell, t_max=e, ell_sup=math.inf, ell_inverse=ell_inverse,
        ell_derivative=ell_derivative, log_ell_inverse=log_ell_inverse, kinks=(1.0,),
    )

    def level_set(t):
        t = float(t)
        if not (0.0 < t <= e):
            return []
        w = math.sqrt(max(1.0 - math.log(t), 0.0))
        outer = (1.0 + w) ** (1.0 / d)
        if t <= 1.0:
            return [Annulus(origin, 0.0, outer)]
        inner = max(1.0 - w, 0.0) ** (1.0 / d)
        if inner >= outer:
            # t == e: the level set is the unit sphere, a null set
            return []
        return [Annulus(origin, inner, outer)]

    def rho_point(x):
        u = float(x @ x) ** (0.5 * d)
        return math.exp(-u * u + 2.0 * u)

    return TargetDensity(
        name="volcano", d=d, rho=rho, rho_sup=e, level_set=level_set, ell=lsf,
        params={"dim": d}, rho_point=rho_point,
    )


def make_bimodal(d: int) -> TargetDensity:
    """max(exp(-|x|^2/2), exp(-|x - m0|^2/4)) - 1/2 with m0 = (5, 0, ..., 0).

    Positive only on two disjoint open balls; clipped to zero elsewhere.
    """
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    vol = unit_ball_volume(d)
    c = (2.0 ** (d / 2) + 4.0 ** (d / 2)) * vol
    m0 = np.zeros(d)
    m0[0] = 5.0
    origin = np.zeros(d)

    def rho(x):
        x = np.asarray(x, dtype=float)
        a = np.exp(-0.5 * np.sum(x * x, axis=-1))
        y = x - m0
        b = np.exp(-0.25 * np.sum(y * y, axis=-1))
        return _as_float_or_array(np.maximum(np.maximum(a, b) - 0.5, 0.0))

    def _L(t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0.5, -np.log(0.5 + np.clip(t, 0.0, 0.5)), 0.0)

    def ell(t):
        return _as_float_or_array(c * _L(t) ** (d / 2))

    def log_ell_inverse(s):
        y = (np.asarray(s, dtype=float) / c) ** (2.0 / d)
        with np.errstate(divide="ignore"):
            return _as_float_or_array(np.log(np.expm1(-y) + 0.5))

    def ell_inverse(s):
        y = (np.asarray(s, dtype=float) / c) ** (2.0 / d)
        return _as_float_or_array(np.expm1(-y) + 0.5)

    def ell_derivative(t):
        t = np.asarray(t, dtype=float)
        L = _L(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(t < 0.5, -c * (d / 2) * L ** (d / 2 - 1) / (0.5 + t), 0.0)
        return _as_float_or_array(out)

    lsf = LevelSetFunction(
        ell=ell, t_max=0.5, ell_sup=c * math.log(2.0) ** (d / 2), ell_inverse=ell_inverse,
        ell_derivative=ell_derivative, log_ell_inverse=log_ell_inverse,
    )

    def level_set(t):
        t = float(t)
        if not (0.0 < t < 0.5):
            return []
        L = -math.log(0.5 + t)
        return [Annulus(origin, 0.0, math.sqrt(2.0 * L)), Annulus(m0, 0.0, math.sqrt(4.0 * L))]

    def rho_point(x):
        y = x - m0
        return max(max(math.exp(-0.5 * float(x @ x)), math.exp(-0.25 * float(y @ y))) - 0.5, 0.0)

    return TargetDensity(
        name="bimodal", d=d, rho=rho, rho_sup=0.5, level_set=level_set, ell=lsf,
        params={"dim": d}, rho_point=rho_point,
    )


def make_target(name: str, dim: int, alpha: float | None = None, gamma: float | None = None) -> TargetDensity:
    """Catalog lookup by CLI identifier."""
    if name == "gaussian":
        return make_gaussian(dim)
    if name == "exponential":
        return make_exponential(dim, 1.0 if alpha is None else alpha)
    if name == "genexp":
        return make_gen_exponential(dim, 1.0 if alpha is None else alpha, 1.0 if gamma is None else gamma)
    if name == "volcano":
        return make_volcano(dim)
    if name == "bimodal":
        return make_bimodal(dim)
    raise ValueError(f"unknown target {name!r}; choose from {', '.join(TARGET_NAMES)}")


def truncation_level(ell: LevelSetFunction, t_lo: float | None = None, tail_tol: float = MU_TAIL_TOL) -> float:
    """Lower cut-off for grids over levels.

    Starts at ``t_max * 1e-8`` and moves down by decades until the mass proxy
    ``ell(t_lo) * t_lo / total_mass`` is at most ``tail_tol``. An explicit
    ``t_lo`` is returned unchanged.
    """
    if t_lo is not None:
        if not (0.0 < t_lo < ell.t_max):
            raise ValueError("t_lo must lie in (0, t_max)")
        return float(t_lo)
    total = ell.total_mass()
    k = -round(math.log10(DEFAULT_T_LO_REL))
    t = ell.t_max * 10.0**-k
    while float(ell(t)) * t / total > tail_tol and k < 250:
        k += 1
        t = ell.t_max * 10.0**-k
    return t
