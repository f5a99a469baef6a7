"""Scale-indexed gradient machinery and the fixed-function error bounds.

A family {g_n}, n >= n_min, is a phi-gradient for f (phi(t) = t^alpha) when

    |f(x) - f(y)| <= phi(2^-n) (g_n(x) + g_n(y))   whenever dist(x, y) <= 2^-n,

and the associated smoothness norm is sup_n ||g_n||_p.  Indicators of nice
regions carry the explicit inner-tube gradient; bounded Lipschitz functions
carry constant gradients.  The error of the stratified rule on such f is
bounded by three computable right-hand sides (rhs1 for every p, rhs2 for
p <= 2, rhs3 for p >= 2), all driven by the cell diameters and weights, plus
the moment-comparison constant B(p) supplied empirically by the ``mz``
module.

The sharpness constructions place two opposite bumps inside one cell
(difference of cones, mean zero), and their sum over all cells; these attain
the bounds' rates up to constants.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import rng as rngmod
from .funcs import TestFunction, _lipschitz_besov_norm
from .partition import Cell, Partition, cell_inradius, cell_sample, find_cell
from .sets import SetDescriptor, boundary_distance, psi_tube_measure, set_contains
from .space import (SPHERE2, TORUS, SpaceDescriptor, distance, east_tangent,
                    geodesic_step)


@dataclass
class PhiGradient:
    """Gradient family g(n, points) for phi(t) = t^alpha, defined for n >= n_min."""

    alpha: float
    n_min: int
    g: Callable[[int, np.ndarray], np.ndarray]


def scale_floor(space: SpaceDescriptor) -> int:
    """Smallest integer n with 2^-n <= diam(M); scales above that are vacuous."""
    return math.ceil(-math.log2(space.diameter))


def chi_phi_gradient(space: SpaceDescriptor, setd: SetDescriptor,
                     alpha: float) -> PhiGradient:
    """Inner-tube gradient of an indicator: g_n = 2^(alpha n) on the part of
    the region within 2^-n of its boundary, zero elsewhere."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    def g(n: int, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        inside = set_contains(setd, pts)
        near = boundary_distance(setd, space, pts) <= 2.0 ** (-n)
        return np.where(inside & near, 2.0 ** (alpha * n), 0.0)

    return PhiGradient(alpha=alpha, n_min=scale_floor(space), g=g)


def besov_norm_bound_chi(space: SpaceDescriptor, setd: SetDescriptor,
                         alpha: float, p: float,
                         tail_measure: float = 1e-9) -> float:
    """sup_n of phi(2^-n)^{-1} psi(2^-n)^{1/p} over the admissible scales.

    Valid (finite) for p * alpha <= beta; otherwise the sup diverges along
    the small scales and the function returns inf with a warning.
    """
    if p * alpha > setd.beta + 1e-12:
        warnings.warn(
            f"indicator is not in the p={p}, alpha={alpha} class "
            f"(need p*alpha <= beta={setd.beta}); bound is infinite")
        return math.inf
    n = scale_floor(space)
    best = 0.0
    floor = tail_measure * space.total_measure
    while True:
        t = 2.0 ** (-n)
        psi = psi_tube_measure(space, setd, t)
        if psi <= floor:
            break
        best = max(best, t ** (-alpha) * psi ** (1.0 / p))
        n += 1
        if n > 200:
            break
    return best


@dataclass
class PoincareReport:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    holds: bool


def poincare_check(space: SpaceDescriptor, f: TestFunction, gradient: PhiGradient,
                   cell: Cell, p: float, n: int, budget: int = 4096,
                   seed: int = 0) -> PoincareReport:
    """Monte Carlo check of the cell-mean inequality

        {(1/w) int_X |f - f_X|^p}^{1/p} <= 2 * 2^(-n alpha) {(1/w) int_X g_n^p}^{1/p}

    for a cell of diameter <= 2^-n.  Standard errors by the delta method on
    the p-th moments; ``holds`` allows 3 combined standard errors of slack.
    """
    if cell.diameter > 2.0 ** (-n):
        raise ValueError(f"cell diameter {cell.diameter} exceeds scale 2^-{n}")
    if n < gradient.n_min:
        raise ValueError(f"scale n={n} below the gradient's n_min={gradient.n_min}")
    rng = rngmod.substream(seed, rngmod.POINCARE, cell.id, n)
    x = cell_sample(cell, rng, budget)
    fx = f.evaluate(x)
    if f.cell_mean is not None:
        f_mean = f.cell_mean(cell)
    else:
        f_mean = float(f.evaluate(cell_sample(cell, rng, budget)).mean())
    lhs, lhs_se = _power_mean(np.abs(fx - f_mean) ** p, 1.0 / p)
    phi = 2.0 ** (-n * gradient.alpha)
    gx = gradient.g(n, x)
    rhs_core, rhs_se = _power_mean(gx ** p, 1.0 / p)
    rhs = 2.0 * phi * rhs_core
    rhs_se *= 2.0 * phi
    return PoincareReport(lhs, lhs_se, rhs, rhs_se,
                          holds=lhs <= rhs + 3.0 * (lhs_se + rhs_se))


def _power_mean(u: np.ndarray, power: float) -> tuple[float, float]:
    """(mean u)^power and its delta-method standard error."""
    m = float(u.mean())
    se_m = float(u.std(ddof=1)) / math.sqrt(len(u))
    if m <= 0.0:
        return 0.0, se_m ** power if power < 1 else se_m
    val = m ** power
    return val, abs(power) * m ** (power - 1.0) * se_m


@dataclass
class RhsBounds:
    rhs1: float
    rhs2: float
    rhs3: float
    rhs2_applicable: bool
    rhs3_applicable: bool


def besov_rhs_bounds(partition: Partition, p: float, alpha: float,
                     norm_value: float, b_p: float = 1.0) -> RhsBounds:
    """The three computable right-hand sides for the p-th moment error of a
    function with smoothness norm <= norm_value (phi(t) = t^alpha).

    ``b_p`` is the moment-comparison constant; pass the empirical envelope
    from the ``mz`` module for p != 2 (it is exactly 1 at p = 2).  rhs2 is
    scoped to 1 <= p <= 2 and rhs3 to 2 <= p < inf; requesting the other
    range warns and flags the value as inapplicable.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    total = partition.space.total_measure
    w = partition.weights()
    max_delta = max(c.diameter for c in partition.cells)
    phi = (2.0 * max_delta) ** alpha
    rhs1 = 2.0 * total ** (1.0 - 1.0 / p) * phi * norm_value
    rhs2 = 2.0 * b_p * float(np.max(w ** (1.0 - 1.0 / p))) * phi * norm_value
    rhs3 = 2.0 * b_p * total ** (0.5 - 1.0 / p) * float(np.max(np.sqrt(w))) * phi * norm_value
    rhs2_ok = p <= 2.0
    rhs3_ok = p >= 2.0
    if not rhs2_ok:
        warnings.warn(f"rhs2 is scoped to 1 <= p <= 2, got p={p}")
    if not rhs3_ok:
        warnings.warn(f"rhs3 is scoped to 2 <= p < inf, got p={p}")
    return RhsBounds(rhs1, rhs2, rhs3, rhs2_ok, rhs3_ok)


# ---------------------------------------------------------------------------
# sharpness constructions
# ---------------------------------------------------------------------------

def _bump_integral(space: SpaceDescriptor, rho: float) -> float:
    """Integral of (1 - dist/rho)_+ around any center (homogeneous spaces)."""
    if space.kind == TORUS:
        return (2.0 * rho) ** space.d / (space.d + 1)
    return 2.0 * math.pi * (1.0 - math.sin(rho) / rho)


def _bump_centers(space: SpaceDescriptor, cell: Cell) -> tuple[np.ndarray, np.ndarray, float]:
    """Two centers inside the cell holding disjoint balls of radius r_in/4;
    returns (center_a, center_b, support_radius) with support = r_in/8."""
    r_in = cell_inradius(cell)
    anchor = np.asarray(cell.anchor, dtype=float)
    if space.kind == TORUS:
        e = np.zeros(space.d)
        e[0] = 1.0
        a = np.mod(anchor + (r_in / 2.0) * e, 1.0)
        b = np.mod(anchor - (r_in / 2.0) * e, 1.0)
    else:
        e = east_tangent(anchor)
        a = geodesic_step(anchor, e, r_in / 2.0)
        b = geodesic_step(anchor, e, -r_in / 2.0)
    return a, b, r_in / 8.0


def sharpness_fj(partition: Partition, j: int, alpha: float) -> TestFunction:
    """Mean-zero two-bump function supported in cell j: a positive cone at
    one center minus theta times the twin cone; theta = 1 by the equal-radius
    symmetry (computed from the closed forms and asserted, not assumed)."""
    space = partition.space
    cell = partition.cells[j]
    ca, cb, rho = _bump_centers(space, cell)
    integral_a = _bump_integral(space, rho)
    integral_b = _bump_integral(space, rho)
    theta = integral_a / integral_b

    def evaluate(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ta = distance(space, pts, ca)
        tb = distance(space, pts, cb)
        return (np.maximum(0.0, 1.0 - ta / rho)
                - theta * np.maximum(0.0, 1.0 - tb / rho))

    lip = 1.0 / rho
    return TestFunction(
        fid=f"sharpness_cell{j}", space=space, evaluate=evaluate,
        exact_integral=0.0,
        params={"cell": j, "centers": (tuple(ca), tuple(cb)), "rho": rho,
                "theta": theta, "alpha": alpha},
        lipschitz=lip, sup_bound=max(1.0, theta),
        besov_norm=_lipschitz_besov_norm(space, lip, max(1.0, theta)),
        cell_mean=lambda cell_: 0.0,
    )


def sharpness_sum(partition: Partition, alpha: float) -> TestFunction:
    """Sum of the per-cell two-bump functions (disjoint supports).

    Globally Lipschitz with constant max_j 1/rho_j ~ N^{1/d}, hence smoothness
    norm O(N^{alpha/d}); its p-th moment error decays like N^{-1/2} for p > 2.
    """
    space = partition.space
    ca = np.empty((partition.N, 3 if space.kind == SPHERE2 else space.d))
    cb = np.empty_like(ca)
    rho = np.empty(partition.N)
    theta = np.empty(partition.N)
    for j, cell in enumerate(partition.cells):
        a, b, r = _bump_centers(space, cell)
        ca[j], cb[j], rho[j] = a, b, r
        theta[j] = 1.0

    def evaluate(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        cid = find_cell(partition, pts)
        ta = distance(space, pts, ca[cid])
        tb = distance(space, pts, cb[cid])
        r = rho[cid]
        return (np.maximum(0.0, 1.0 - ta / r)
                - theta[cid] * np.maximum(0.0, 1.0 - tb / r))

    lip = float(1.0 / rho.min())
    return TestFunction(
        fid="sharpness_sum", space=space, evaluate=evaluate, exact_integral=0.0,
        params={"alpha": alpha, "min_rho": float(rho.min())},
        lipschitz=lip, sup_bound=1.0,
        besov_norm=_lipschitz_besov_norm(space, lip, 1.0),
        cell_mean=lambda cell_: 0.0,
    )
