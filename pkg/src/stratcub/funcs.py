"""Test-function registry with closed-form reference integrals.

Every function carries an exact integral (never a numerical quadrature), so
the cubature oracles stay independent of the machinery under test.  Where a
closed form exists, functions also carry exact per-cell means against the
grid/zonal partitions, which the moment-bracket estimators use.

Smoothness certificates: a bounded L-Lipschitz function with sup bound S
admits the constant gradient family ``g_n == (L/2)^alpha * S^(1-alpha)``
(optimize ``min(2S, L s) / (2 s^alpha)`` over the pair distance s), giving
the certified norm bound ``(L/2)^alpha S^(1-alpha) |M|^(1/p)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .partition import Cell
from .sets import (SPHERE_CAP, TORUS_ARC, TORUS_BOX, SetDescriptor,
                   set_contains)
from .space import (SPHERE2, TORUS, SpaceDescriptor, distance,
                    torus1d_radial_integral)


@dataclass
class TestFunction:
    """Evaluable function with an exact reference integral and metadata."""

    fid: str
    space: SpaceDescriptor
    evaluate: Callable[[np.ndarray], np.ndarray]
    exact_integral: float
    params: dict = field(default_factory=dict)
    lipschitz: float | None = None
    sup_bound: float | None = None
    besov_norm: Callable[[float, float], float] | None = None
    cell_mean: Callable[[Cell], float] | None = None

    def __call__(self, pts) -> np.ndarray:
        return self.evaluate(np.atleast_2d(np.asarray(pts, dtype=float)))


def _lipschitz_besov_norm(space: SpaceDescriptor, lip: float, sup: float):
    def norm(alpha: float, p: float) -> float:
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"certificate covers 0 < alpha <= 1, got {alpha}")
        g = (lip / 2.0) ** alpha * sup ** (1.0 - alpha)
        return g * space.total_measure ** (1.0 / p)
    return norm


def constant_fn(space: SpaceDescriptor, c: float) -> TestFunction:
    return TestFunction(
        fid="constant", space=space,
        evaluate=lambda pts: np.full(len(np.atleast_2d(pts)), float(c)),
        exact_integral=c * space.total_measure,
        params={"c": c}, lipschitz=0.0, sup_bound=abs(c),
        cell_mean=lambda cell: float(c),
    )


def coordinate_fn(space: SpaceDescriptor, axis: int = 0) -> TestFunction:
    """f(x) = x_axis on the torus (a measurable, not continuous, function)."""
    if space.kind != TORUS:
        raise ValueError("coordinate function lives on the torus")

    def mean(cell: Cell) -> float:
        lo = cell.geometry["lo"][axis]
        hi = cell.geometry["hi"][axis]
        return (lo + hi) / 2.0

    return TestFunction(
        fid="coordinate", space=space,
        evaluate=lambda pts: np.atleast_2d(pts)[:, axis].astype(float),
        exact_integral=0.5, params={"axis": axis},
        sup_bound=1.0, cell_mean=mean,
    )


def square_wave_fn(space: SpaceDescriptor, k: int = 1) -> TestFunction:
    """+-1 square wave with k periods on T^1; mean zero."""
    if space.kind != TORUS or space.d != 1:
        raise ValueError("square wave lives on T^1")

    def evaluate(pts):
        frac = np.mod(np.atleast_2d(pts)[:, 0] * k, 1.0)
        return np.where(frac < 0.5, 1.0, -1.0)

    def mean(cell: Cell) -> float:
        a = cell.geometry["lo"][0]
        b = cell.geometry["hi"][0]
        plus = 0.0
        for j in range(k):
            plus += _interval_overlap(j / k, 0.5 / k, a, b - a)
        return (2.0 * plus - (b - a)) / (b - a)

    return TestFunction(
        fid="square_wave", space=space, evaluate=evaluate, exact_integral=0.0,
        params={"k": k}, sup_bound=1.0, cell_mean=mean,
    )


def cos_fn(space: SpaceDescriptor, freq) -> TestFunction:
    """f(x) = cos(2 pi k . x) on T^d."""
    if space.kind != TORUS:
        raise ValueError("trigonometric function lives on the torus")
    freq = tuple(int(v) for v in np.atleast_1d(freq))
    if len(freq) != space.d:
        raise ValueError("frequency vector length must match dimension")
    kvec = np.array(freq, dtype=float)

    def evaluate(pts):
        return np.cos(2.0 * math.pi * (np.atleast_2d(pts) @ kvec))

    def mean(cell: Cell) -> float:
        prod = 1.0 + 0.0j
        vol = 1.0
        for a, (lo, hi) in enumerate(zip(cell.geometry["lo"], cell.geometry["hi"])):
            vol *= hi - lo
            ka = freq[a]
            if ka == 0:
                prod *= hi - lo
            else:
                w = 2.0j * math.pi * ka
                prod *= (np.exp(w * hi) - np.exp(w * lo)) / w
        return float(prod.real) / vol

    exact = space.total_measure if all(v == 0 for v in freq) else 0.0
    lip = 2.0 * math.pi * float(np.abs(kvec).sum())  # sup-metric Lipschitz bound
    return TestFunction(
        fid="cos", space=space, evaluate=evaluate, exact_integral=exact,
        params={"freq": freq}, lipschitz=lip, sup_bound=1.0,
        besov_norm=_lipschitz_besov_norm(space, lip, 1.0),
        cell_mean=mean,
    )


def cone_bump_fn(space: SpaceDescriptor, center, radius: float) -> TestFunction:
    """Lipschitz cone f(x) = (1 - dist(x, center)/radius)_+ ."""
    center = np.asarray(center, dtype=float)
    if space.kind == TORUS:
        if not 0.0 < radius <= 0.5:
            raise ValueError("torus cone radius must be in (0, 1/2]")
        exact = (2.0 * radius) ** space.d / (space.d + 1)
    else:
        if not 0.0 < radius <= math.pi:
            raise ValueError("sphere cone radius must be in (0, pi]")
        exact = 2.0 * math.pi * (1.0 - math.sin(radius) / radius)

    def evaluate(pts):
        t = distance(space, np.atleast_2d(pts), center)
        return np.maximum(0.0, 1.0 - t / radius)

    mean = None
    if space.kind == TORUS and space.d == 1:
        c0 = float(center[0])

        def antideriv(t, r=radius):
            if t <= r:
                return t - t * t / (2.0 * r)
            return r / 2.0

        def mean(cell: Cell) -> float:
            a = cell.geometry["lo"][0]
            b = cell.geometry["hi"][0]
            return torus1d_radial_integral(antideriv, c0, a, b) / (b - a)

    return TestFunction(
        fid="cone", space=space, evaluate=evaluate, exact_integral=exact,
        params={"center": tuple(center), "radius": radius},
        lipschitz=1.0 / radius, sup_bound=1.0,
        besov_norm=_lipschitz_besov_norm(space, 1.0 / radius, 1.0),
        cell_mean=mean,
    )


def indicator_fn(space: SpaceDescriptor, setd: SetDescriptor) -> TestFunction:
    """Characteristic function of a region; integral = its measure."""
    if setd.space_kind != space.kind:
        raise ValueError("region and space kinds disagree")

    def evaluate(pts):
        return set_contains(setd, pts).astype(float)

    mean = None
    if setd.kind == TORUS_ARC:
        s = setd.params["start"]
        length = setd.params["length"]

        def mean(cell: Cell) -> float:
            a = cell.geometry["lo"][0]
            b = cell.geometry["hi"][0]
            return _interval_overlap(s, length, a, b - a) / (b - a)

    elif setd.kind == TORUS_BOX:
        lo_s = setd.params["lo"]
        hi_s = setd.params["hi"]

        def mean(cell: Cell) -> float:
            vol = 1.0
            over = 1.0
            for a, (lo, hi) in enumerate(zip(cell.geometry["lo"], cell.geometry["hi"])):
                vol *= hi - lo
                over *= max(0.0, min(hi, hi_s[a]) - max(lo, lo_s[a]))
            return over / vol

    elif setd.kind == SPHERE_CAP and abs(setd.params["center"][2]) > 1.0 - 1e-15:
        # pole-centered cap against zonal cells: z-interval overlap
        north = setd.params["center"][2] > 0
        z_edge = math.cos(setd.params["radius"])

        def mean(cell: Cell) -> float:
            z_top, z_bot = cell.geometry["z"]
            if north:
                over = max(0.0, min(z_top, 1.0) - max(z_bot, z_edge))
            else:
                over = max(0.0, min(z_top, z_edge) - max(z_bot, -1.0))
            return over / (z_top - z_bot)

    return TestFunction(
        fid=f"indicator_{setd.kind}", space=space, evaluate=evaluate,
        exact_integral=setd.measure, params={"set": setd}, sup_bound=1.0,
        cell_mean=mean,
    )


def zonal_monomial_fn(space: SpaceDescriptor, power: int) -> TestFunction:
    """f(x) = z^power on S^2 (z = height coordinate)."""
    if space.kind != SPHERE2:
        raise ValueError("zonal monomial lives on the sphere")
    m = int(power)
    exact = 4.0 * math.pi / (m + 1) if m % 2 == 0 else 0.0

    def evaluate(pts):
        return np.atleast_2d(pts)[:, 2] ** m

    def mean(cell: Cell) -> float:
        z_top, z_bot = cell.geometry["z"]
        return (z_top ** (m + 1) - z_bot ** (m + 1)) / ((m + 1) * (z_top - z_bot))

    lip = float(m)  # |d/dtheta cos^m| <= m
    return TestFunction(
        fid="zonal", space=space, evaluate=evaluate, exact_integral=exact,
        params={"power": m}, lipschitz=lip, sup_bound=1.0,
        besov_norm=_lipschitz_besov_norm(space, lip, 1.0) if m > 0 else None,
        cell_mean=mean,
    )


def _interval_overlap(start: float, length: float, a: float, width: float) -> float:
    """Overlap measure of circle intervals [start, start+length) and [a, a+width)."""
    total = 0.0
    for s0, l0 in _unroll(start, length):
        for a0, w0 in _unroll(a % 1.0, width):
            total += max(0.0, min(s0 + l0, a0 + w0) - max(s0, a0))
    return total


def _unroll(start: float, length: float):
    """Split a circle interval into at most two linear pieces in [0, 1]."""
    start = start % 1.0
    if start + length <= 1.0:
        return [(start, length)]
    return [(start, 1.0 - start), (0.0, start + length - 1.0)]


def make_function(space: SpaceDescriptor, fid: str, **params) -> TestFunction:
    """Registry entry point used by the CLI and experiment configs."""
    if fid == "constant":
        return constant_fn(space, params.get("c", 1.0))
    if fid == "coordinate":
        return coordinate_fn(space, params.get("axis", 0))
    if fid == "square_wave":
        return square_wave_fn(space, params.get("k", 1))
    if fid == "cos":
        return cos_fn(space, params.get("freq", (1,) * space.d))
    if fid == "cone":
        center = params.get("center")
        if center is None:
            center = (0.5,) * space.d if space.kind == TORUS else (0.0, 0.0, 1.0)
        radius = params.get("radius", 0.25 if space.kind == TORUS else 1.0)
        return cone_bump_fn(space, center, radius)
    if fid == "zonal":
        return zonal_monomial_fn(space, params.get("power", 2))
    raise ValueError(f"unknown function id {fid!r}")
