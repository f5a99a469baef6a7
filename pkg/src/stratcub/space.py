"""Metric measure spaces: flat torus T^d and the unit sphere S^2.

The torus carries the wraparound sup-metric, so metric balls are cubes and
every ball measure is in closed form.  The sphere carries the geodesic
metric; balls are caps with area ``2*pi*(1 - cos r)``.

Points are float arrays: shape ``(d,)`` with coordinates in ``[0, 1)`` on the
torus, shape ``(3,)`` with unit Euclidean norm on the sphere.  All geometric
operations broadcast over leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TORUS = "torus"
SPHERE2 = "sphere2"


@dataclass(frozen=True)
class SpaceDescriptor:
    """A space M with two-sided power bounds ``H r^d <= |B(y,r)| <= K r^d``."""

    kind: str
    d: int
    total_measure: float
    ahlfors_H: float
    ahlfors_K: float
    diameter: float


def make_space(kind: str, d: int = 2) -> SpaceDescriptor:
    """Build a space descriptor. The torus needs d >= 1; only S^2 is supported."""
    if kind == TORUS:
        if d < 1:
            raise ValueError(f"torus dimension must be >= 1, got {d}")
        # sup-metric balls are cubes: |B(y,r)| = (2r)^d exactly for r < 1/2
        return SpaceDescriptor(TORUS, int(d), 1.0, 2.0**d, 2.0**d, 0.5)
    if kind == SPHERE2:
        if d != 2:
            raise ValueError(f"only the 2-sphere is supported, got d={d}")
        # cap area 4*pi*sin^2(r/2): the ratio to r^2 decreases from pi (r->0)
        # to 4/pi (r=pi), which pins both Ahlfors constants.
        return SpaceDescriptor(SPHERE2, 2, 4.0 * math.pi, 4.0 / math.pi, math.pi, math.pi)
    raise ValueError(f"unsupported space kind {kind!r}")


def distance(space: SpaceDescriptor, a, b):
    """Distance between points (broadcasts over leading axes).

    Torus: sup over coordinates of the wraparound distance.
    Sphere: geodesic angle, with the dot product clamped to [-1, 1].
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if space.kind == TORUS:
        diff = np.abs(a - b)
        diff = np.minimum(diff, 1.0 - diff)
        return diff.max(axis=-1)
    dot = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    return np.arccos(dot)


def pairwise_distance(space: SpaceDescriptor, a: np.ndarray, b: np.ndarray,
                      chunk: int = 4_000_000) -> np.ndarray:
    """Distance matrix between point sets ``a (n, dim)`` and ``b (m, dim)``.

    Torus rows are processed in chunks to bound the (n, m, d) intermediate.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if space.kind == SPHERE2:
        dot = np.clip(a @ b.T, -1.0, 1.0)
        return np.arccos(dot)
    n, m = a.shape[0], b.shape[0]
    rows = max(1, chunk // max(1, m * space.d))
    out = np.empty((n, m))
    for i in range(0, n, rows):
        diff = np.abs(a[i:i + rows, None, :] - b[None, :, :])
        diff = np.minimum(diff, 1.0 - diff)
        out[i:i + rows] = diff.max(axis=-1)
    return out


def ball_measure(space: SpaceDescriptor, center, r: float) -> float:
    """Measure of the metric ball B(center, r); closed form on both spaces.

    Both spaces are homogeneous, so the center does not enter the value; it
    is kept in the signature for interface symmetry.
    """
    if r < 0:
        raise ValueError(f"radius must be nonnegative, got {r}")
    if space.kind == TORUS:
        return min(2.0 * r, 1.0) ** space.d
    return 2.0 * math.pi * (1.0 - math.cos(min(r, math.pi)))


def sample_uniform(space: SpaceDescriptor, rng: np.random.Generator, n: int | None = None):
    """Sample points from the normalized measure. ``n=None`` gives one point."""
    size = 1 if n is None else int(n)
    if space.kind == TORUS:
        pts = rng.random((size, space.d))
    else:
        z = 1.0 - 2.0 * rng.random(size)
        phi = 2.0 * math.pi * rng.random(size)
        s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        pts = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)
    return pts[0] if n is None else pts


def sample_ball(space: SpaceDescriptor, center, r: float,
                rng: np.random.Generator, n: int) -> np.ndarray:
    """Sample ``n`` points uniformly from the metric ball B(center, r)."""
    center = np.asarray(center, dtype=float)
    if space.kind == TORUS:
        off = r * (2.0 * rng.random((n, space.d)) - 1.0)
        return np.mod(center + off, 1.0)
    # area-uniform radius in a cap, then a uniform tangent direction
    u = rng.random(n)
    s = np.arccos(1.0 - u * (1.0 - math.cos(min(r, math.pi))))
    t = _random_tangent(center, rng, n)
    return np.cos(s)[:, None] * center + np.sin(s)[:, None] * t


def _random_tangent(center: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    v -= (v @ center)[:, None] * center
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # degenerate draws are measure zero; nudge deterministically
    norms[norms < 1e-300] = 1.0
    return v / norms


def geodesic_step(center: np.ndarray, direction: np.ndarray, s: float) -> np.ndarray:
    """Point at geodesic distance ``s`` from ``center`` along a unit tangent."""
    return math.cos(s) * center + math.sin(s) * direction


def east_tangent(p: np.ndarray) -> np.ndarray:
    """A unit tangent at p on S^2; the longitude direction away from the poles."""
    x, y = p[0], p[1]
    h = math.hypot(x, y)
    if h < 1e-12:
        return np.array([1.0, 0.0, 0.0])
    return np.array([-y / h, x / h, 0.0])


def torus1d_radial_integral(antideriv, center: float, lo: float, hi: float) -> float:
    """Integrate ``profile(dist(z, center))`` for z in [lo, hi] on the circle.

    ``antideriv(t)`` must be the antiderivative of the radial profile with
    antideriv(0) = 0.  The distance to ``center`` is piecewise linear in z
    with slope +-1 and breakpoints at center and center + 1/2 (mod 1); the
    integral over each monotone piece is |A(t_hi) - A(t_lo)|.
    """
    if hi < lo:
        raise ValueError("need lo <= hi")
    if hi - lo >= 1.0:
        full = 2.0 * float(antideriv(0.5))
        return full * (hi - lo)
    breaks = [lo, hi]
    z = center + 0.5 * math.floor((lo - center) / 0.5)
    while z <= hi:
        if lo < z < hi:
            breaks.append(z)
        z += 0.5
    breaks = sorted(set(breaks))
    total = 0.0
    for z0, z1 in zip(breaks[:-1], breaks[1:]):
        d0 = abs(z0 - center) % 1.0
        d0 = min(d0, 1.0 - d0)
        d1 = abs(z1 - center) % 1.0
        d1 = min(d1, 1.0 - d1)
        total += abs(float(antideriv(d1)) - float(antideriv(d0)))
    return total
