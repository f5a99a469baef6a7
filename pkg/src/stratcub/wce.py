"""Worst-case integration error over potential-space unit balls.

For conjugate exponents 1/p + 1/q = 1, the error functional of a draw x has
the exact dual form

    wce(x)^q = integral over M of |F(y)|^q dy,
    F(y) = sum_j integral over X_j of (Phi(x_j, y) - Phi(z, y)) dz
         = sum_j omega_j (Phi(x_j, y) - cell mean of Phi(. , y)),

so everything here reduces to Monte Carlo estimates of F.  The draw-averaged
quantity A_N = {E_x wce^q}^{1/q} is bracketed by two computable functionals:
Gamma (sum of per-cell q-norms, an upper bound for every p >= 1) and Delta
(the square-function form, two-sided up to the moment-comparison constants,
an equality at p = q = 2 by variance additivity).

Estimator design: each per-cell term T_j(y) = omega_j (Phi(x_j, y) - mean_j(y))
is computed twice from independent cell samples; products of the two
replicas give unbiased squares at q = 2 independent of the inner budget m_z.
For q != 2 the plug-in power of the pooled estimate is used and its bias is
m_z-dependent; ``inner_budget_check`` quantifies it by doubling m_z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .cubature import (ErrorStats, NodeDraw, cubature_error, draw_nodes,
                       jackknife_power_mean, sample_all_cells)
from .funcs import TestFunction
from .kernel import (CONST, SINGULAR_TOL, KernelSpec, cell_kernel_mean,
                     kernel_antiderivative, kernel_profile, regime_classify)
from .partition import Partition, cell_boundary_distance, cell_sample
from .space import TORUS, distance, pairwise_distance, sample_uniform

MAX_REDRAWS = 100


@dataclass(frozen=True)
class WceConfig:
    """Budgets and exponents for the worst-case-error estimators.

    ``m_y``: outer samples of y per draw; ``m_z``: inner cell samples per
    replica for the cell kernel means; ``gamma_pairs``: (x, y) pairs per
    cell for the per-cell functional.
    """

    partition: Partition
    kernel: KernelSpec
    p: float
    m_y: int = 512
    m_z: int = 8
    n_draws: int = 100
    seed: int = 0
    gamma_pairs: int = 256

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must lie in (1, inf]; the p = 1 endpoint is "
                             "not Monte Carlo estimable (sup norm)")
        if self.kernel.family != CONST:
            if self.kernel.d != self.partition.space.d:
                raise ValueError("kernel and space dimension disagree")
            if self.kernel.alpha <= self.partition.space.d / self.p:
                raise ValueError(
                    f"integrability needs alpha > d/p, got alpha={self.kernel.alpha}, "
                    f"d/p={self.partition.space.d / self.p}")

    @property
    def q(self) -> float:
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)


@dataclass
class WceReport:
    config_label: dict
    a_n: ErrorStats
    delta: ErrorStats
    gamma: ErrorStats | None
    regime: str


# ---------------------------------------------------------------------------
# per-draw tables
# ---------------------------------------------------------------------------

def _cell_y_distances(partition: Partition, Z: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Distances from per-cell samples Z (N, m, dim) to Y (m_y, dim)."""
    space = partition.space
    N, m, _ = Z.shape
    m_y = len(Y)
    out = np.empty((N, m, m_y))
    if space.kind == TORUS:
        step = max(1, 4_000_000 // max(1, m * m_y * space.d))
        for i in range(0, N, step):
            diff = np.abs(Z[i:i + step, :, None, :] - Y[None, None, :, :])
            diff = np.minimum(diff, 1.0 - diff)
            out[i:i + step] = diff.max(axis=-1)
        return out
    step = max(1, 4_000_000 // max(1, m * m_y))
    for i in range(0, N, step):
        dot = np.clip(np.einsum("nmd,yd->nmy", Z[i:i + step], Y), -1.0, 1.0)
        out[i:i + step] = np.arccos(dot)
    return out


def _draw_tables(cfg: WceConfig, ctx: int, index: int, rep: int = 0,
                 nodes: np.ndarray | None = None) -> np.ndarray:
    """Two-replica per-cell terms T (2, N, m_y) for one draw."""
    part = cfg.partition
    space = part.space
    if nodes is None:
        nodes = draw_nodes(part, cfg.seed, index,
                           stream=rngmod.path_key(ctx, rngmod.NODES)).nodes
    rng_y = rngmod.substream(cfg.seed, ctx, rngmod.WCE_Y, index, rep)
    Y = sample_uniform(space, rng_y, cfg.m_y)
    for _ in range(MAX_REDRAWS):
        dn = pairwise_distance(space, nodes, Y)
        bad = dn.min(axis=0) < SINGULAR_TOL
        if not bad.any():
            break
        Y[bad] = sample_uniform(space, rng_y, int(bad.sum()))
    else:
        raise RuntimeError("singular y redraw budget exhausted")
    phi_nodes = kernel_profile(cfg.kernel, dn)  # (N, m_y)
    w = part.weights()
    T = np.empty((2, part.N, cfg.m_y))
    for r in (0, 1):
        rng_z = rngmod.substream(cfg.seed, ctx, rngmod.WCE_Z, index, rep, r)
        for _ in range(MAX_REDRAWS):
            Z = sample_all_cells(part, rng_z, cfg.m_z)
            D = _cell_y_distances(part, Z, Y)
            if D.min() >= SINGULAR_TOL:
                break
        else:
            raise RuntimeError("singular cell-sample redraw budget exhausted")
        mean_r = kernel_profile(cfg.kernel, D).mean(axis=1)  # (N, m_y)
        T[r] = w[:, None] * (phi_nodes - mean_r)
    return T


def _wq_samples(cfg: WceConfig, T: np.ndarray) -> np.ndarray:
    """Per-y samples whose mean estimates wce^q for this draw."""
    total = cfg.partition.space.total_measure
    F = T.sum(axis=1)  # (2, m_y)
    if cfg.q == 2.0:
        return total * F[0] * F[1]
    f_bar = 0.5 * (F[0] + F[1])
    return total * np.abs(f_bar) ** cfg.q


def _dq_samples(cfg: WceConfig, T: np.ndarray) -> np.ndarray:
    """Per-y samples whose mean estimates the square-function form^q."""
    total = cfg.partition.space.total_measure
    S = (T[0] * T[1]).sum(axis=0)  # unbiased for sum_j T_j^2
    if cfg.q == 2.0:
        return total * S
    return total * np.clip(S, 0.0, None) ** (cfg.q / 2.0)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def dual_density_F(cfg: WceConfig, draw: NodeDraw, y,
                   rng: np.random.Generator) -> float:
    """F(y) = sum_j omega_j (Phi(x_j, y) - cell mean), inner means by MC."""
    part = cfg.partition
    y = np.asarray(y, dtype=float)
    t = distance(part.space, draw.nodes, y)
    phi_x = kernel_profile(cfg.kernel, t)
    means = np.array([
        cell_kernel_mean(cfg.kernel, part.space, cell, y, cfg.m_z, rng)
        for cell in part.cells
    ])
    return float(part.weights() @ (phi_x - means))


def worst_case_error(cfg: WceConfig, draw: NodeDraw, rep: int = 0) -> float:
    """Monte Carlo estimate of the dual-form worst-case error for one draw.

    At q = 2 the squared quantity uses the two-replica product estimator and
    is unbiased for any inner budget; for q != 2 the plug-in power is used.
    ``rep`` selects an independent replication (fresh y and z streams).
    """
    T = _draw_tables(cfg, rngmod.WCE_OP, draw.index, rep=rep, nodes=draw.nodes)
    wq = float(_wq_samples(cfg, T).mean())
    return max(wq, 0.0) ** (1.0 / cfg.q)


def estimate_AN(cfg: WceConfig) -> ErrorStats:
    """{mean over draws of wce^q}^{1/q} with jackknife standard error."""
    if cfg.n_draws < 2:
        raise ValueError("need at least 2 draws")
    u = np.empty(cfg.n_draws)
    for k in range(cfg.n_draws):
        T = _draw_tables(cfg, rngmod.AN, k)
        u[k] = _wq_samples(cfg, T).mean()
    moment, se = jackknife_power_mean(u, 1.0 / cfg.q)
    return ErrorStats(p=cfg.q, n_draws=cfg.n_draws, moment=moment, stderr=se)


def delta_phi(cfg: WceConfig) -> ErrorStats:
    """Square-function bracket: {E_x E_y |M| (sum_j T_j^2)^{q/2}}^{1/q}.

    Independent of ``estimate_AN`` (separate streams), so the p = q = 2
    identity between the two is a genuine dual-route check.
    """
    if cfg.n_draws < 2:
        raise ValueError("need at least 2 draws")
    v = np.empty(cfg.n_draws)
    for k in range(cfg.n_draws):
        T = _draw_tables(cfg, rngmod.DELTA, k)
        v[k] = _dq_samples(cfg, T).mean()
    moment, se = jackknife_power_mean(v, 1.0 / cfg.q)
    return ErrorStats(p=cfg.q, n_draws=cfg.n_draws, moment=moment, stderr=se)


def gamma_phi(cfg: WceConfig, n_blocks: int = 10) -> ErrorStats:
    """Sum over cells of per-cell q-norms of T_j, sampled per cell.

    Standard error by leave-one-block-out jackknife over the shared pair
    blocks (the statistic is a sum of fractional powers, so per-draw
    jackknife does not apply).
    """
    part = cfg.partition
    space = part.space
    q = cfg.q
    P = cfg.gamma_pairs
    if P < n_blocks:
        raise ValueError("gamma_pairs must be >= n_blocks")
    total = space.total_measure
    w = part.weights()
    # per-cell, per-pair samples u with E[u] = |M| * E_x E_y |T_j|^q
    u_all = np.empty((part.N, P))
    for j, cell in enumerate(part.cells):
        rng_x = rngmod.substream(cfg.seed, rngmod.GAMMA, 1, j)
        rng_y = rngmod.substream(cfg.seed, rngmod.GAMMA, 2, j)
        x = cell_sample(cell, rng_x, P)
        y = sample_uniform(space, rng_y, P)
        for _ in range(MAX_REDRAWS):
            t = distance(space, x, y)
            bad = t < SINGULAR_TOL
            if not bad.any():
                break
            y[bad] = sample_uniform(space, rng_y, int(bad.sum()))
        else:
            raise RuntimeError("singular y redraw budget exhausted")
        phi_xy = kernel_profile(cfg.kernel, t)
        reps = []
        for r in (0, 1):
            rng_z = rngmod.substream(cfg.seed, rngmod.GAMMA, 3, j, r)
            for _ in range(MAX_REDRAWS):
                z = cell_sample(cell, rng_z, cfg.m_z)
                dz = pairwise_distance(space, z, y)
                if dz.min() >= SINGULAR_TOL:
                    break
            else:
                raise RuntimeError("singular cell-sample redraw budget exhausted")
            reps.append(kernel_profile(cfg.kernel, dz).mean(axis=0))
        t1 = w[j] * (phi_xy - reps[0])
        t2 = w[j] * (phi_xy - reps[1])
        if q == 2.0:
            u_all[j] = total * t1 * t2
        else:
            u_all[j] = total * np.abs(0.5 * (t1 + t2)) ** q
    gamma = float(np.sum(np.clip(u_all.mean(axis=1), 0.0, None) ** (1.0 / q)))
    # block jackknife
    blocks = np.array_split(np.arange(P), n_blocks)
    loo = []
    for b in blocks:
        mask = np.ones(P, dtype=bool)
        mask[b] = False
        vj = np.clip(u_all[:, mask].mean(axis=1), 0.0, None)
        loo.append(float(np.sum(vj ** (1.0 / q))))
    loo = np.array(loo)
    se = math.sqrt((n_blocks - 1) / n_blocks * float(np.sum((loo - loo.mean()) ** 2)))
    return ErrorStats(p=q, n_draws=P, moment=gamma, stderr=se)


def inner_budget_check(cfg: WceConfig) -> tuple[float, float, float, bool]:
    """Plug-in bias probe for q != 2: A_N at m_z and at 2 m_z.

    Returns (value, value_doubled, combined se, consistent).
    """
    a1 = estimate_AN(cfg)
    cfg2 = WceConfig(cfg.partition, cfg.kernel, cfg.p, cfg.m_y, 2 * cfg.m_z,
                     cfg.n_draws, cfg.seed + 1, cfg.gamma_pairs)
    a2 = estimate_AN(cfg2)
    se = a1.stderr + a2.stderr
    return a1.moment, a2.moment, se, abs(a1.moment - a2.moment) <= 3.0 * se


def run_report(cfg: WceConfig, include_gamma: bool = True) -> WceReport:
    gamma = gamma_phi(cfg) if include_gamma else None
    return WceReport(
        config_label={"N": cfg.partition.N, "p": cfg.p, **cfg.kernel.as_dict()},
        a_n=estimate_AN(cfg),
        delta=delta_phi(cfg),
        gamma=gamma,
        regime=regime_classify(cfg.kernel),
    )


# ---------------------------------------------------------------------------
# extremal witness (duality self-check, T^1 grids)
# ---------------------------------------------------------------------------

@dataclass
class WitnessReport:
    ratio: float
    ratio_coarse: float
    witness_rate: float
    wce_mc: float
    ok: bool
    reason: str = ""


def _graded_circle_mesh(nodes: np.ndarray, G: int, levels: int = 22):
    """Midpoint mesh on the circle: G uniform base points plus geometric
    ladders toward each node, where the dual density is singular.  Returns
    (midpoints, widths); the innermost segments stay wide enough that their
    midpoints clear the singularity tolerance."""
    brk = set((np.arange(G) / G).tolist())
    for x in np.atleast_1d(nodes.ravel()):
        x = float(x) % 1.0
        brk.add(x)
        for k in range(levels):
            step = 2.0 ** (-k) / G
            brk.add((x + step) % 1.0)
            brk.add((x - step) % 1.0)
    arr = np.sort(np.unique(np.fromiter(brk, dtype=float)))
    widths = np.diff(np.append(arr, arr[0] + 1.0))
    keep = widths > 0
    arr, widths = arr[keep], widths[keep]
    return arr + widths / 2.0, widths


def extremal_witness_check(cfg: WceConfig, draw: NodeDraw,
                           y_grid_size: int = 4096) -> WitnessReport:
    """Rebuild the extremal direction g = F on a deterministic y-mesh, form
    its potential f, and compare E(f)/||g||_2 against the Monte Carlo
    worst-case error of the same draw.  The ratio tends to 1 as budgets grow.

    Restricted to T^1, N <= 8, p = q = 2, where a graded mesh of 2^12+ base
    points integrates the singular density reliably.
    """
    part = cfg.partition
    space = part.space
    if space.kind != TORUS or space.d != 1:
        raise ValueError("witness check is implemented on T^1 only")
    if part.N > 8:
        raise ValueError("witness check needs N <= 8")
    if cfg.q != 2.0:
        raise ValueError("witness check is implemented for p = q = 2")

    def grid_ratio(G: int) -> tuple[float, float]:
        ys, w = _graded_circle_mesh(draw.nodes, G)
        t = pairwise_distance(space, draw.nodes, ys[:, None])  # (N, len(ys))
        phi = kernel_profile(cfg.kernel, t)
        anti = kernel_antiderivative(cfg.kernel)
        i_m = 2.0 * anti(0.5)  # integral of Phi(., y) over T^1, y-independent
        F = part.weights() @ phi - i_m
        gnorm = math.sqrt(float(np.sum(F * F * w)))
        if gnorm < 1e-12:
            return math.nan, 0.0

        def f_eval(pts):
            tt = pairwise_distance(space, np.atleast_2d(pts), ys[:, None])
            return kernel_profile(cfg.kernel, tt) @ (F * w)

        f = TestFunction(fid="witness_potential", space=space, evaluate=f_eval,
                         exact_integral=float(np.sum(F * w) * i_m))
        err = cubature_error(f, draw, part)
        return err / gnorm, gnorm

    wce_mc = worst_case_error(cfg, draw)
    witness_rate, gnorm = grid_ratio(y_grid_size)
    if not math.isfinite(witness_rate) or gnorm == 0.0:
        return WitnessReport(math.nan, math.nan, witness_rate, wce_mc, False,
                             "degenerate witness (zero dual density)")
    ratio = witness_rate / wce_mc
    coarse_rate, _ = grid_ratio(max(8, y_grid_size // 2))
    ratio_coarse = coarse_rate / wce_mc
    if abs(ratio - ratio_coarse) > 0.2:
        return WitnessReport(ratio, ratio_coarse, witness_rate, wce_mc, False,
                             "grid too coarse: refinement moved the ratio by > 0.2")
    return WitnessReport(ratio, ratio_coarse, witness_rate, wce_mc, True)


# ---------------------------------------------------------------------------
# lower-bound hypothesis probe
# ---------------------------------------------------------------------------

@dataclass
class ProbeReport:
    min_ratio: float
    median_ratio: float
    n_samples: int
    n_skipped: int


def lower_hypothesis_probe(cfg: WceConfig, n_pairs: int, seed: int | None = None,
                           m_x: int = 32) -> ProbeReport:
    """Sampled infimum of

        [integral over X_j of |Phi(x, y) - Phi(z, y)| dx]
        / [N^(-1-eps/d) dist(y, X_j)^(alpha-d-eps)]

    over cells j, z in X_j, and y with dist(y, X_j) >= 2 delta_j.  A positive,
    N-stable minimum supports the matching-lower-bound hypothesis for the
    kernel; a vanishing minimum refutes it.
    """
    part = cfg.partition
    space = part.space
    kern = cfg.kernel
    seed = cfg.seed if seed is None else seed
    rng = rngmod.substream(seed, rngmod.PROBE, part.N)
    if kern.family == CONST:
        alpha, eps, d = 0.5, 1.0, space.d
    else:
        alpha, eps, d = kern.alpha, kern.eps, kern.d
    ratios = []
    skipped = 0
    for _ in range(n_pairs):
        j = int(rng.integers(part.N))
        cell = part.cells[j]
        z = cell_sample(cell, rng)
        y = None
        for _ in range(200):
            cand = sample_uniform(space, rng)
            dist_cell = float(cell_boundary_distance(cell, cand[None, :])[0])
            if dist_cell >= 2.0 * cell.diameter and dist_cell > SINGULAR_TOL:
                y = cand
                break
        if y is None:
            skipped += 1
            continue
        x = cell_sample(cell, rng, m_x)
        phi_x = kernel_profile(kern, np.maximum(distance(space, x, y), SINGULAR_TOL))
        phi_z = kernel_profile(kern, np.maximum(distance(space, z, y)[None], SINGULAR_TOL))
        lhs = cell.measure * float(np.mean(np.abs(phi_x - phi_z)))
        rhs = part.N ** (-1.0 - eps / d) * dist_cell ** (alpha - d - eps)
        ratios.append(lhs / rhs)
    if not ratios:
        raise RuntimeError("no admissible probe samples; cells too large vs space")
    arr = np.array(ratios)
    return ProbeReport(float(arr.min()), float(np.median(arr)), len(arr), skipped)
