"""Ball and annulus volumes, and exact uniform sampling on them in any dimension."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _check_dim(d: int) -> int:
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    return int(d)


def unit_ball_volume(d: int) -> float:
    """Lebesgue volume of the closed unit ball in R^d.

    Uses lambda_1 = 2, lambda_2 = pi, lambda_d = lambda_{d-2} * 2 pi / d,
    which is exact for integer d and needs no Gamma function.
    """
    d = _check_dim(d)
    vol = 2.0 if d % 2 else math.pi
    for j in range(4 if d % 2 == 0 else 3, d + 1, 2):
        vol *= 2.0 * math.pi / j
    return vol


@dataclass(frozen=True)
class Annulus:
    """The closed shell {x : r_in <= |x - center| <= r_out}; r_in = 0 is a ball."""

    center: np.ndarray
    r_in: float
    r_out: float

    def __post_init__(self):
        if not (isinstance(self.center, np.ndarray) and self.center.ndim == 1):
            object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not (0.0 <= self.r_in < self.r_out):
            raise ValueError(f"annulus needs 0 <= r_in < r_out, got ({self.r_in}, {self.r_out})")

    @property
    def d(self) -> int:
        return self.center.shape[0]

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.d) * (self.r_out**self.d - self.r_in**self.d)

    def contains(self, x: np.ndarray) -> np.ndarray:
        """Membership test for points stacked along the last axis."""
        r = np.linalg.norm(np.asarray(x, dtype=float) - self.center, axis=-1)
        return (r >= self.r_in) & (r <= self.r_out)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        r = sample_annulus_radius(self.d, self.r_in, self.r_out, rng, size=size)
        u = sample_unit_sphere(self.d, rng, size=size)
        return self.center + np.asarray(r)[..., None] * u


def sample_unit_sphere(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform direction(s) on the unit sphere S^{d-1} via normalized Gaussians."""
    d = _check_dim(d)
    shape = (d,) if size is None else (size, d)
    while True:
        g = rng.standard_normal(shape)
        norms = np.linalg.norm(g, axis=-1, keepdims=True)
        # all-zero draws have probability zero, but guard anyway
        if np.all(norms > 0):
            return g / norms


def sample_uniform_ball(
    d: int, radius: float, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Uniform point(s) in the centered ball of the given radius.

    Direction from normalized standard normals, norm ``radius * V**(1/d)``.
    """
    d = _check_dim(d)
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    u = sample_unit_sphere(d, rng, size=size)
    v = rng.random() if size is None else rng.random(size)
    r = radius * np.asarray(v) ** (1.0 / d)
    return r[..., None] * u


def annulus_radius_from_uniform(d: int, r_in, r_out, v):
    """Inverse radial CDF of the uniform law on an annulus, evaluated at ``v`` in [0, 1]."""
    r_in = np.asarray(r_in, dtype=float)
    r_out = np.asarray(r_out, dtype=float)
    inner = r_in**d
    r = (inner + np.asarray(v) * (r_out**d - inner)) ** (1.0 / d)
    # rounding can push a hair outside [r_in, r_out]
    return np.clip(r, r_in, r_out)


def sample_annulus_radius(
    d: int, r_in: float, r_out: float, rng: np.random.Generator, size: int | None = None
):
    d = _check_dim(d)
    if not (0.0 <= r_in < r_out):
        raise ValueError(f"annulus needs 0 <= r_in < r_out, got ({r_in}, {r_out})")
    v = rng.random() if size is None else rng.random(size)
    r = annulus_radius_from_uniform(d, r_in, r_out, v)
    return float(r) if size is None else r


def radius_from_volume(d: int, v):
    """Radius of the d-ball with volume ``v`` (vectorized over ``v``)."""
    d = _check_dim(d)
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0):
        raise ValueError("volume must be nonnegative")
    r = (v_arr / unit_ball_volume(d)) ** (1.0 / d)
    return float(r) if r.ndim == 0 else r
