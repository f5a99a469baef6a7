"""Empirical two-sided moment comparison for sums of independent cell terms.

For a draw x the error is a sum of independent centered variables
c_j = omega_j f(x_j) - integral over X_j of f.  The module measures

    middle  = {E |sum_j c_j|^p}^{1/p}
    bracket = {E (sum_j c_j^2)^{p/2}}^{1/p}

whose ratio is pinched between the best comparison constants A(p) <= 1 <= B(p)
(equality at p = 2 by variance additivity).  The constants are open
analytically, so the module only exports observed ratio envelopes, clearly
labeled empirical; ``besov_rhs_bounds`` consumes the upper envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .cubature import draw_nodes
from .funcs import TestFunction
from .partition import Partition, cell_sample

DEGENERATE_TOL = 1e-15


@dataclass
class MzReport:
    p: float
    n_draws: int
    middle: float
    middle_se: float
    bracket: float
    bracket_se: float
    ratio: float
    ratio_se: float
    degenerate: bool


@dataclass
class RatioEnvelope:
    p: float
    lo: float
    hi: float
    reports: list[MzReport]
    label: str = "empirical, not certified"


def mz_pair(f: TestFunction, partition: Partition, p: float, n_draws: int,
            seed: int, m_cell: int = 4096) -> MzReport:
    """Monte Carlo estimates of the middle and bracket quantities.

    Cell integrals of f come from closed forms when the function provides
    them; otherwise from a dedicated Monte Carlo batch of ``m_cell`` samples
    per cell (the induced relative bias on the bracket is O(1/m_cell)).
    Standard errors and the ratio's standard error are draw-jackknives
    (middle and bracket share draws, so the ratio is jackknifed directly).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if n_draws < 2:
        raise ValueError("need at least 2 draws")
    w = partition.weights()
    means = _cell_means(f, partition, seed, m_cell)
    mid_pow = np.empty(n_draws)
    brk_pow = np.empty(n_draws)
    for k in range(n_draws):
        nodes = draw_nodes(partition, seed, k, stream=rngmod.MZ).nodes
        c = w * (f.evaluate(nodes) - means)
        mid_pow[k] = abs(c.sum()) ** p
        brk_pow[k] = float(c @ c) ** (p / 2.0)
    middle, middle_se = _jack(mid_pow, 1.0 / p)
    bracket, bracket_se = _jack(brk_pow, 1.0 / p)
    if bracket < DEGENERATE_TOL:
        return MzReport(p, n_draws, middle, middle_se, bracket, bracket_se,
                        ratio=math.nan, ratio_se=math.nan, degenerate=True)
    ratio, ratio_se = _jack_ratio(mid_pow, brk_pow, 1.0 / p)
    return MzReport(p, n_draws, middle, middle_se, bracket, bracket_se,
                    ratio, ratio_se, degenerate=False)


def ratio_envelope(functions: list[TestFunction], partitions: list[Partition],
                   p: float, n_draws: int, seed: int) -> RatioEnvelope:
    """Min/max observed middle/bracket ratio over a configuration battery."""
    reports = []
    for i, f in enumerate(functions):
        for j, part in enumerate(partitions):
            rep = mz_pair(f, part, p, n_draws, seed + 1000 * i + j)
            if not rep.degenerate:
                reports.append(rep)
    if not reports:
        raise ValueError("all configurations degenerate; envelope undefined")
    ratios = [r.ratio for r in reports]
    return RatioEnvelope(p=p, lo=min(ratios), hi=max(ratios), reports=reports)


def _cell_means(f: TestFunction, partition: Partition, seed: int,
                m_cell: int) -> np.ndarray:
    if f.cell_mean is not None:
        return np.array([f.cell_mean(c) for c in partition.cells])
    means = np.empty(partition.N)
    for j, cell in enumerate(partition.cells):
        rng = rngmod.substream(seed, rngmod.MZ, 1, j)
        means[j] = float(f.evaluate(cell_sample(cell, rng, m_cell)).mean())
    return means


def _jack(u: np.ndarray, power: float) -> tuple[float, float]:
    K = len(u)
    total = u.sum()
    theta = (total / K) ** power
    loo = ((total - u) / (K - 1)) ** power
    se = math.sqrt((K - 1) / K * float(np.sum((loo - loo.mean()) ** 2)))
    return float(theta), se


def _jack_ratio(mid_pow: np.ndarray, brk_pow: np.ndarray,
                power: float) -> tuple[float, float]:
    K = len(mid_pow)
    tm, tb = mid_pow.sum(), brk_pow.sum()
    theta = (tm / K) ** power / (tb / K) ** power
    loo_m = ((tm - mid_pow) / (K - 1)) ** power
    loo_b = ((tb - brk_pow) / (K - 1)) ** power
    loo = loo_m / loo_b
    se = math.sqrt((K - 1) / K * float(np.sum((loo - loo.mean()) ** 2)))
    return float(theta), se
