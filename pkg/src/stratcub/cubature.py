"""Stratified node draws and the cubature error functional.

A draw places one uniform node in each cell.  For a draw ``x`` the error of
the equal-weight-per-cell rule is

    E(f) = sum_j omega_j f(x_j) - integral of f,

whose p-th moment over draws is the fixed-function error estimated by
``estimate_BN``.  Nodes for draw k come from the stream keyed (seed, stream,
k), consumed in cell order, so node j derives from (seed, k, j) by counter
position: deterministic and parallel-safe across draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .funcs import TestFunction
from .partition import Partition
from .space import TORUS


@dataclass(frozen=True)
class NodeDraw:
    seed: int
    index: int
    nodes: np.ndarray  # (N, dim), nodes[j] in cell j


@dataclass
class ErrorStats:
    p: float
    n_draws: int
    moment: float
    stderr: float
    values: np.ndarray | None = None


def draw_nodes(partition: Partition, seed: int, index: int = 0,
               stream: int = rngmod.NODES) -> NodeDraw:
    """One independent uniform node per cell, deterministic in (seed, index)."""
    rng = rngmod.substream(seed, stream, index)
    nodes = sample_all_cells(partition, rng, 1)[:, 0, :]
    return NodeDraw(seed=seed, index=index, nodes=nodes)


def sample_all_cells(partition: Partition, rng: np.random.Generator,
                     m: int) -> np.ndarray:
    """m uniform samples from every cell at once; shape (N, m, dim).

    Cells are consumed in id order from a single stream, which keeps the
    result independent of how callers split the work.
    """
    N = partition.N
    if partition.space.kind == TORUS:
        lo = np.array([c.geometry["lo"] for c in partition.cells])
        hi = np.array([c.geometry["hi"] for c in partition.cells])
        u = rng.random((N, m, partition.space.d))
        return lo[:, None, :] + (hi - lo)[:, None, :] * u
    z_top = np.array([c.geometry["z"][0] for c in partition.cells])
    z_bot = np.array([c.geometry["z"][1] for c in partition.cells])
    lon_lo = np.array([c.geometry["lon"][0] for c in partition.cells])
    lon_hi = np.array([c.geometry["lon"][1] for c in partition.cells])
    u = rng.random((N, m))
    v = rng.random((N, m))
    z = z_top[:, None] - (z_top - z_bot)[:, None] * u
    lon = lon_lo[:, None] + (lon_hi - lon_lo)[:, None] * v
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([s * np.cos(lon), s * np.sin(lon), z], axis=-1)


def cubature_error(f: TestFunction, draw: NodeDraw, partition: Partition) -> float:
    w = partition.weights()
    return float(w @ f.evaluate(draw.nodes) - f.exact_integral)


def estimate_BN(f: TestFunction, partition: Partition, p: float, n_draws: int,
                seed: int, keep_values: bool = False) -> ErrorStats:
    """{mean over draws of |E(f)|^p}^{1/p} with a jackknife standard error."""
    if p < 1:
        raise ValueError(f"moment exponent must be >= 1, got {p}")
    if n_draws < 2:
        raise ValueError("need at least 2 draws")
    w = partition.weights()
    errors = np.empty(n_draws)
    for k in range(n_draws):
        nodes = draw_nodes(partition, seed, k).nodes
        errors[k] = w @ f.evaluate(nodes) - f.exact_integral
    moment, stderr = jackknife_power_mean(np.abs(errors) ** p, 1.0 / p)
    return ErrorStats(p=p, n_draws=n_draws, moment=moment, stderr=stderr,
                      values=errors if keep_values else None)


def jackknife_power_mean(u: np.ndarray, power: float) -> tuple[float, float]:
    """(mean u)^power with a leave-one-out jackknife standard error.

    Slightly negative means (possible for signed product estimators) are
    clamped to zero before the fractional power.
    """
    u = np.asarray(u, dtype=float)
    K = len(u)
    total = u.sum()
    theta = _signed_power(total / K, power)
    loo = _signed_power((total - u) / (K - 1), power)
    se = np.sqrt((K - 1) / K * np.sum((loo - loo.mean()) ** 2))
    return float(theta), float(se)


def _signed_power(x, power: float):
    return np.maximum(np.asarray(x, dtype=float), 0.0) ** power
