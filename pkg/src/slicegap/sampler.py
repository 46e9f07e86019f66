"""Simple slice sampling, the auxiliary level chain, and the radial coupling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from slicegap.geometry import annulus_radius_from_uniform, radius_from_volume, sample_uniform_ball
from slicegap.rng import check_seed, stream
from slicegap.targets import LevelSetFunction, RadialProfile, TargetDensity, truncation_level

DEFAULT_BURN_IN = 1000
# replicates are simulated in blocks, each block on its own sub-stream
REPLICATE_BLOCK = 4096
_DRAW_BLOCK = 1024

_X_STREAM = 0
_T_STREAM = 1
_COUPLED_STREAM = 2
_MARGINAL_STREAM = 3


@dataclass(frozen=True)
class ChainTrace:
    """Recorded states after burn-in.

    For an X-chain ``states`` is (n, d) and ``levels[i]`` is the level the
    i-th state was drawn from, so rho(states[i]) >= levels[i]. For a T-chain
    ``states`` is (n,) and ``levels`` is None.
    """

    states: np.ndarray
    seed: int
    target_name: str
    burn_in: int
    levels: np.ndarray | None = None
    rho: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.states.shape[0]


@dataclass(frozen=True)
class CoupledTrace:
    """One coupled path: ``pairs[i] = (x_i, y_i)`` for i = 0..n."""

    pairs: np.ndarray
    seed: int

    @property
    def dist(self) -> np.ndarray:
        return np.linalg.norm(self.pairs[:, 0] - self.pairs[:, 1], axis=-1)

    @property
    def norm_gap(self) -> np.ndarray:
        norms = np.linalg.norm(self.pairs, axis=-1)
        return np.abs(norms[:, 0] - norms[:, 1])


@dataclass(frozen=True)
class CoupledStats:
    """Replicate means per step; index 0 is the starting pair."""

    mean_dist: np.ndarray
    se_dist: np.ndarray
    mean_norm_gap: np.ndarray
    se_norm_gap: np.ndarray
    decay: float
    decay_dist: float
    reps: int
    seed: int

    @property
    def steps(self) -> int:
        return self.mean_dist.shape[0] - 1


def _uniform_open_closed(rng: np.random.Generator, size=None):
    """Uniform on (0, 1]."""
    return 1.0 - rng.random(size)


def _draw_from_level_set(target: TargetDensity, t: float, u_pick: float, u_rad: float, g: np.ndarray) -> np.ndarray:
    """Uniform point of {rho >= t} from pre-drawn uniforms and a Gaussian vector ``g``."""
    annuli = target.level_set(t)
    if not annuli:
        raise ValueError(f"empty level set at t = {t}")
    ann = annuli[0]
    if len(annuli) > 1:
        d = target.d
        # the common factor vol(B_1) cancels
        vols = np.array([a.r_out**d - a.r_in**d for a in annuli])
        cum = np.cumsum(vols)
        idx = min(int(np.searchsorted(cum, u_pick * cum[-1], side="right")), len(annuli) - 1)
        ann = annuli[idx]
    r = float(annulus_radius_from_uniform(target.d, ann.r_in, ann.r_out, u_rad))
    norm = math.sqrt(float(g @ g))
    return ann.center + (r / norm) * g


def _slice_move(target: TargetDensity, x: np.ndarray, rho_x: float, u: np.ndarray, g: np.ndarray):
    """Transition from ``x`` given three uniforms u = (level, annulus pick, radius)."""
    if not rho_x > 0:
        raise ValueError("state lies outside the support (rho(x) = 0)")
    t = rho_x * (1.0 - u[0])
    return _draw_from_level_set(target, t, u[1], u[2], g), t


def _draws(rng: np.random.Generator, d: int, size: int):
    u = rng.random((size, 3))
    g = rng.standard_normal((size, d))
    # a zero Gaussian vector has probability zero; redraw to be safe
    while True:
        bad = ~np.any(g != 0, axis=1)
        if not bad.any():
            return u, g
        g[bad] = rng.standard_normal((int(bad.sum()), d))


def slice_step(target: TargetDensity, x, rng: np.random.Generator) -> np.ndarray:
    """One transition of simple slice sampling from ``x``.

    Draws a level t uniformly on (0, rho(x)] and returns a uniform point of
    {rho >= t}, picking an annulus of the level set with probability
    proportional to its volume.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u, g = _draws(rng, target.d, 1)
    return _slice_move(target, x, target.density_at(x), u[0], g[0])[0]


def run_chain(
    target: TargetDensity, x0, n: int, seed: int, burn_in: int = DEFAULT_BURN_IN
) -> ChainTrace:
    """``burn_in + n`` slice-sampling steps from ``x0``; the last ``n`` are kept."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    if int(burn_in) != burn_in or burn_in < 0:
        raise ValueError("burn_in must be a nonnegative integer")
    seed = check_seed(seed)
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    if x.shape != (target.d,):
        raise ValueError(f"x0 must have dimension {target.d}, got shape {x.shape}")
    rng = stream(seed, _X_STREAM)
    states = np.empty((n, target.d))
    levels = np.empty(n)
    rhos = np.empty(n)
    rho_x = target.density_at(x)
    total = burn_in + n
    for start in range(0, total, _DRAW_BLOCK):
        u, g = _draws(rng, target.d, min(_DRAW_BLOCK, total - start))
        for k in range(u.shape[0]):
            x, t = _slice_move(target, x, rho_x, u[k], g[k])
            rho_x = target.density_at(x)
            if rho_x < t * (1.0 - 1e-12):
                raise ArithmeticError(f"drawn point has rho = {rho_x} below its level {t}")
            j = start + k - burn_in
            if j >= 0:
                states[j], levels[j], rhos[j] = x, t, rho_x
    return ChainTrace(
        states=states, seed=seed, target_name=target.name, burn_in=int(burn_in),
        levels=levels, rho=rhos,
    )


def _level_move(ell: LevelSetFunction, t, rng: np.random.Generator, size=None):
    # level of a uniform point on G(t): ell(r) is uniform on (0, ell(t))
    s = _uniform_open_closed(rng, size) * np.asarray(ell(t))
    r = np.minimum(np.asarray(ell.inverse(s)), ell.t_max)
    return _uniform_open_closed(rng, size) * r


def level_step(ell: LevelSetFunction, t: float, rng: np.random.Generator) -> float:
    """One transition of the level chain; depends on the target only through ``ell``."""
    t = float(t)
    if not (0.0 < t < ell.t_max):
        raise ValueError(f"level must lie in the support (0, {ell.t_max}), got {t}")
    return float(_level_move(ell, t, rng))


def run_level_chain(
    ell: LevelSetFunction, t0: float, n: int, seed: int, burn_in: int = DEFAULT_BURN_IN,
    target_name: str = "",
) -> ChainTrace:
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    seed = check_seed(seed)
    t = float(t0)
    if not (0.0 < t < ell.t_max):
        raise ValueError(f"t0 must lie in (0, {ell.t_max})")
    rng = stream(seed, _T_STREAM)
    out = np.empty(n)
    for i in range(burn_in + n):
        t = float(_level_move(ell, t, rng))
        if i >= burn_in:
            out[i - burn_in] = t
    return ChainTrace(states=out, seed=seed, target_name=target_name, burn_in=int(burn_in))


def sample_level_stationary(
    ell: LevelSetFunction, size: int, rng: np.random.Generator, grid: int = 1 << 14,
    t_lo: float | None = None,
) -> np.ndarray:
    """Draws from mu (density proportional to ell) by inverse CDF on a truncated log grid."""
    t_lo = truncation_level(ell, t_lo)
    u = np.linspace(math.log(t_lo), math.log(ell.t_max), grid + 1)
    t = np.exp(u)
    dens = np.asarray(ell(t)) * t  # density in u = log t
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(u))])
    cdf /= cdf[-1]
    return np.exp(np.interp(rng.random(size), cdf, u))


def _as_profile(obj) -> RadialProfile:
    if isinstance(obj, RadialProfile):
        return obj
    if isinstance(obj, TargetDensity) and obj.profile is not None:
        return obj.profile
    raise ValueError("the coupling needs a rotationally invariant target with ball level sets")


def _coupled_move(profile: RadialProfile, ell: LevelSetFunction, X, Y, rng, size=None):
    d = profile.d
    r = _uniform_open_closed(rng, size)
    z = sample_uniform_ball(d, 1.0, rng, size=size)
    rx = radius_from_volume(d, ell(r * np.asarray(profile.rho(X))))
    ry = radius_from_volume(d, ell(r * np.asarray(profile.rho(Y))))
    return np.asarray(rx)[..., None] * z, np.asarray(ry)[..., None] * z


def coupled_step(profile, x, y, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Joint move of two slice-sampling chains sharing (r, z).

    Each coordinate is the ball {rho >= r rho(.)} scaled onto the same unit-ball
    point z, so the pair is a coupling of the two one-step kernels.
    """
    profile = _as_profile(profile)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if not (float(profile.rho(x)) > 0 and float(profile.rho(y)) > 0):
        raise ValueError("both states must lie in the support")
    return _coupled_move(profile, profile.level_set_function(), x, y, rng)


def _blocks(reps: int):
    for b, start in enumerate(range(0, reps, REPLICATE_BLOCK)):
        yield b, min(REPLICATE_BLOCK, reps - start)


def _decay(means: np.ndarray) -> float:
    steps = np.arange(1, means.shape[0])
    m = means[1:]
    if np.all(m == 0):
        return 0.0
    if np.any(m <= 0):
        raise ArithmeticError("cannot fit a geometric rate to a sequence hitting zero")
    slope = np.polyfit(steps, np.log(m), 1)[0]
    return float(math.exp(slope))


def run_coupled(profile, x0, y0, n: int, reps: int, seed: int) -> CoupledStats:
    """``reps`` independent coupled paths of ``n`` steps each.

    The geometric decay rate is exp(slope) of a least-squares line through
    log(mean) over steps 1..n.
    """
    profile = _as_profile(profile)
    ell = profile.level_set_function()
    seed = check_seed(seed)
    if int(n) != n or n < 1 or int(reps) != reps or reps < 2:
        raise ValueError("need n >= 1 steps and reps >= 2 replicates")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if not (float(profile.rho(x0)) > 0 and float(profile.rho(y0)) > 0):
        raise ValueError("both states must lie in the support")

    sum_d = np.zeros(n + 1)
    sum_d2 = np.zeros(n + 1)
    sum_g = np.zeros(n + 1)
    sum_g2 = np.zeros(n + 1)
    for b, m in _blocks(int(reps)):
        rng = stream(seed, _COUPLED_STREAM, b)
        X = np.tile(x0, (m, 1))
        Y = np.tile(y0, (m, 1))
        for step in range(n + 1):
            if step:
                X, Y = _coupled_move(profile, ell, X, Y, rng, size=m)
            dist = np.linalg.norm(X - Y, axis=1)
            gap = np.abs(np.linalg.norm(X, axis=1) - np.linalg.norm(Y, axis=1))
            sum_d[step] += dist.sum()
            sum_d2[step] += (dist * dist).sum()
            sum_g[step] += gap.sum()
            sum_g2[step] += (gap * gap).sum()
    mean_d = sum_d / reps
    mean_g = sum_g / reps
    se_d = np.sqrt(np.maximum(sum_d2 / reps - mean_d**2, 0.0) / (reps - 1))
    se_g = np.sqrt(np.maximum(sum_g2 / reps - mean_g**2, 0.0) / (reps - 1))
    return CoupledStats(
        mean_dist=mean_d, se_dist=se_d, mean_norm_gap=mean_g, se_norm_gap=se_g,
        decay=_decay(mean_g), decay_dist=_decay(mean_d), reps=int(reps), seed=seed,
    )


def run_coupled_path(profile, x0, y0, n: int, seed: int) -> CoupledTrace:
    """A single coupled path, for trace output."""
    profile = _as_profile(profile)
    ell = profile.level_set_function()
    rng = stream(check_seed(seed), _COUPLED_STREAM)
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    y = np.atleast_1d(np.asarray(y0, dtype=float))
    pairs = np.empty((n + 1, 2, x.shape[0]))
    pairs[0] = x, y
    for i in range(1, n + 1):
        x, y = _coupled_move(profile, ell, x, y, rng)
        pairs[i] = x, y
    return CoupledTrace(pairs=pairs, seed=int(seed))


def coupled_draws(profile, x, y, reps: int, seed: int, key: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """``reps`` independent one-step coupled draws (x', y') from the pair (x, y)."""
    profile = _as_profile(profile)
    ell = profile.level_set_function()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if int(reps) != reps or reps < 1:
        raise ValueError("reps must be a positive integer")
    if not (float(profile.rho(x)) > 0 and float(profile.rho(y)) > 0):
        raise ValueError("both states must lie in the support")
    xs, ys = [], []
    for b, m in _blocks(int(reps)):
        rng = stream(check_seed(seed), _COUPLED_STREAM, 1000 + key, b)
        X, Y = _coupled_move(profile, ell, np.tile(x, (m, 1)), np.tile(y, (m, 1)), rng, size=m)
        xs.append(X)
        ys.append(Y)
    return np.concatenate(xs), np.concatenate(ys)


def kernel_draws(target, x, reps: int, seed: int, key: int = 0) -> np.ndarray:
    """``reps`` independent one-step draws from U_rho(x, .) (radial targets, vectorized)."""
    profile = _as_profile(target)
    ell = profile.level_set_function()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = []
    for b, m in _blocks(int(reps)):
        rng = stream(check_seed(seed), _MARGINAL_STREAM, key, b)
        t = float(profile.rho(x)) * _uniform_open_closed(rng, m)
        radius = radius_from_volume(profile.d, ell(t))
        out.append(np.asarray(radius)[:, None] * sample_uniform_ball(profile.d, 1.0, rng, size=m))
    return np.concatenate(out)
