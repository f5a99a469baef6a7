"""Equal-measure, diameter-bounded partitions of the torus and the sphere.

Torus: a dyadic grid of ``m^d`` congruent half-open boxes.  Sphere: a zonal
equal-area layout (two polar caps plus collars cut into longitude sectors),
with collar boundaries solved in closed form from the cap-area formula so
that every cell has area exactly ``4*pi/N``.

Cells are half-open in every splitting coordinate, so coverage and
disjointness are exact, not approximate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .space import (SPHERE2, TORUS, SpaceDescriptor, distance, make_space,
                    sample_ball, sample_uniform)


@dataclass(frozen=True)
class Cell:
    """One partition cell: exact measure, a closed-form diameter upper bound,
    a designated interior anchor, and enough geometry to sample and test
    membership exactly."""

    id: int
    space_kind: str
    measure: float
    diameter: float
    anchor: tuple[float, ...]
    geometry: dict


@dataclass(frozen=True)
class Partition:
    space: SpaceDescriptor
    cells: tuple[Cell, ...]
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.cells)

    def weights(self) -> np.ndarray:
        return np.array([c.measure for c in self.cells])


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def torus_grid_partition(space: SpaceDescriptor, m: int) -> Partition:
    """Grid of m^d half-open boxes of side 1/m; exact weights m^{-d}."""
    if space.kind != TORUS:
        raise ValueError("torus_grid_partition needs a torus space")
    if m < 1:
        raise ValueError(f"grid resolution must be >= 1, got {m}")
    d = space.d
    measure = m ** (-d)
    diam = 1.0 / m if m >= 2 else 0.5
    cells = []
    for cid in range(m ** d):
        idx = []
        k = cid
        for _ in range(d):
            idx.append(k % m)
            k //= m
        idx = idx[::-1]
        lo = tuple(i / m for i in idx)
        hi = tuple((i + 1) / m for i in idx)
        anchor = tuple((i + 0.5) / m for i in idx)
        cells.append(Cell(cid, TORUS, measure, diam, anchor, {"lo": lo, "hi": hi}))
    return Partition(space, tuple(cells), {"scheme": "torus_grid", "m": m})


def sphere_zonal_partition(space: SpaceDescriptor, N: int) -> Partition:
    """Zonal equal-area partition of S^2 into N cells of area exactly 4*pi/N.

    Collar boundaries are placed at z = 1 - 2*c/N for cumulative cell counts
    c, so cell areas are exact by construction; sector counts per collar come
    from accumulator rounding of the ideal (area-proportional) counts.
    """
    if space.kind != SPHERE2:
        raise ValueError("sphere_zonal_partition needs the sphere space")
    if N < 2:
        raise ValueError(f"need at least 2 cells, got {N}")
    measure = 4.0 * math.pi / N
    counts = _collar_counts(N)
    cells: list[Cell] = []
    cum = 1
    z_hi_cap = 1.0 - 2.0 / N
    cells.append(_cap_cell(0, N, north=True, z_edge=z_hi_cap, measure=measure))
    for k in counts:
        z_top = 1.0 - 2.0 * cum / N
        z_bot = 1.0 - 2.0 * (cum + k) / N
        for s in range(k):
            lon_lo = 2.0 * math.pi * s / k
            lon_hi = 2.0 * math.pi * (s + 1) / k
            cells.append(_band_cell(len(cells), z_top, z_bot, lon_lo, lon_hi,
                                    full=(k == 1), measure=measure))
        cum += k
    z_lo_cap = 1.0 - 2.0 * (N - 1) / N
    cells.append(_cap_cell(len(cells), N, north=False, z_edge=z_lo_cap, measure=measure))
    if len(cells) != N:
        raise AssertionError(f"built {len(cells)} cells for N={N}")
    bands = [[1.0, z_hi_cap, 1, 0]]
    first = 1
    cum = 1
    for k in counts:
        bands.append([1.0 - 2.0 * cum / N, 1.0 - 2.0 * (cum + k) / N, k, first])
        first += k
        cum += k
    bands.append([z_lo_cap, -1.0, 1, N - 1])
    return Partition(space, tuple(cells), {"scheme": "sphere_zonal", "bands": bands})


def _collar_counts(N: int) -> list[int]:
    """Sector counts per collar; accumulator rounding keeps the total N - 2."""
    if N == 2:
        return []
    theta_c = math.acos(1.0 - 2.0 / N)
    band = math.pi - 2.0 * theta_c
    ideal_side = math.sqrt(4.0 * math.pi / N)
    n_collars = max(1, round(band / ideal_side))
    edges = [theta_c + band * i / n_collars for i in range(n_collars + 1)]
    counts = []
    acc = 0.0
    for i in range(n_collars):
        ideal = N * (math.cos(edges[i]) - math.cos(edges[i + 1])) / 2.0
        k = round(ideal + acc)
        acc += ideal - k
        counts.append(int(k))
    if sum(counts) != N - 2 or any(k < 1 for k in counts):
        raise AssertionError(f"collar rounding failed for N={N}: {counts}")
    return counts


def _cap_cell(cid: int, N: int, north: bool, z_edge: float, measure: float) -> Cell:
    colat_edge = math.acos(z_edge)
    if north:
        geometry = {"shape": "cap", "north": True, "z": (1.0, z_edge),
                    "lon": (0.0, 2.0 * math.pi)}
        anchor = (0.0, 0.0, 1.0)
        diam = min(2.0 * colat_edge, math.pi)
    else:
        geometry = {"shape": "cap", "north": False, "z": (z_edge, -1.0),
                    "lon": (0.0, 2.0 * math.pi)}
        anchor = (0.0, 0.0, -1.0)
        diam = min(2.0 * (math.pi - colat_edge), math.pi)
    return Cell(cid, SPHERE2, measure, diam, anchor, geometry)


def _band_cell(cid: int, z_top: float, z_bot: float, lon_lo: float, lon_hi: float,
               full: bool, measure: float) -> Cell:
    colat_lo = math.acos(z_top)
    colat_hi = math.acos(z_bot)
    if full:
        # full annulus: exact diameter from the antipodal-longitude pair
        if colat_lo <= math.pi / 2.0 <= colat_hi:
            diam = math.pi
        elif colat_hi < math.pi / 2.0:
            diam = 2.0 * colat_hi
        else:
            diam = 2.0 * (math.pi - colat_lo)
    else:
        if colat_lo <= math.pi / 2.0 <= colat_hi:
            sin_max = 1.0
        else:
            sin_max = max(math.sin(colat_lo), math.sin(colat_hi))
        diam = min((colat_hi - colat_lo) + sin_max * (lon_hi - lon_lo), math.pi)
    z_mid = 0.5 * (z_top + z_bot)
    lon_mid = 0.5 * (lon_lo + lon_hi)
    s = math.sqrt(max(0.0, 1.0 - z_mid * z_mid))
    anchor = (s * math.cos(lon_mid), s * math.sin(lon_mid), z_mid)
    geometry = {"shape": "band", "z": (z_top, z_bot), "lon": (lon_lo, lon_hi)}
    return Cell(cid, SPHERE2, measure, diam, anchor, geometry)


# ---------------------------------------------------------------------------
# membership, sampling, geometry queries
# ---------------------------------------------------------------------------

def cell_contains(cell: Cell, pts: np.ndarray) -> np.ndarray:
    """Exact membership test; half-open conventions make it a true partition."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if cell.space_kind == TORUS:
        lo = np.array(cell.geometry["lo"])
        hi = np.array(cell.geometry["hi"])
        return np.all((pts >= lo) & (pts < hi), axis=1)
    z = pts[:, 2]
    z_top, z_bot = cell.geometry["z"]
    if cell.geometry["shape"] == "cap":
        if cell.geometry["north"]:
            return z > z_bot
        return z <= z_top
    in_band = (z <= z_top) & (z > z_bot)
    lon_lo, lon_hi = cell.geometry["lon"]
    if lon_hi - lon_lo >= 2.0 * math.pi:
        return in_band
    lon = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * math.pi)
    return in_band & (lon >= lon_lo) & (lon < lon_hi)


def find_cell(partition: Partition, pts: np.ndarray) -> np.ndarray:
    """Index of the cell containing each point (vectorized)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if partition.space.kind == TORUS:
        m = partition.meta["m"]
        idx = np.minimum((pts * m).astype(int), m - 1)
        flat = np.zeros(len(pts), dtype=int)
        for a in range(partition.space.d):
            flat = flat * m + idx[:, a]
        return flat
    bands = partition.meta["bands"]
    bots = np.array([b[1] for b in bands])  # strictly decreasing
    z = pts[:, 2]
    # band index: first i with z > bots[i]; clamp so z = -1 lands in the
    # south cap (whose open bottom edge is the pole itself)
    band_idx = np.searchsorted(-bots, -z, side="right")
    band_idx = np.minimum(band_idx, len(bands) - 1)
    lon = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * math.pi)
    out = np.empty(len(pts), dtype=int)
    ks = np.array([b[2] for b in bands])
    firsts = np.array([b[3] for b in bands])
    k = ks[band_idx]
    sector = np.minimum((lon * k / (2.0 * math.pi)).astype(int), k - 1)
    out = firsts[band_idx] + sector
    # float rounding at sector boundaries: nudge to the true half-open cell
    for shift in (-1, 1):
        cand = out + shift
        need = ~_contains_by_id(partition, out, pts)
        if not np.any(need):
            break
        valid = need & (cand >= 0) & (cand < partition.N)
        ok = np.zeros(len(pts), dtype=bool)
        ok[valid] = _contains_by_id(partition, cand[valid], pts[valid])
        out = np.where(ok, cand, out)
    return out


def _contains_by_id(partition: Partition, ids: np.ndarray, pts: np.ndarray) -> np.ndarray:
    res = np.zeros(len(pts), dtype=bool)
    for cid in np.unique(ids):
        sel = ids == cid
        res[sel] = cell_contains(partition.cells[int(cid)], pts[sel])
    return res


def cell_sample(cell: Cell, rng: np.random.Generator, n: int | None = None):
    """Uniform sample from the measure restricted to the cell.

    Torus boxes sample coordinates directly; sphere cells sample the
    z-coordinate uniformly on the cell's z-interval (area measure) and the
    longitude uniformly, which is exact for zonal geometry.
    """
    size = 1 if n is None else int(n)
    if cell.space_kind == TORUS:
        lo = np.array(cell.geometry["lo"])
        hi = np.array(cell.geometry["hi"])
        pts = lo + (hi - lo) * rng.random((size, len(lo)))
    else:
        z_top, z_bot = cell.geometry["z"]
        # u=0 lands on the closed (top) edge, matching the half-open bands
        z = z_top - (z_top - z_bot) * rng.random(size)
        lon_lo, lon_hi = cell.geometry["lon"]
        lon = lon_lo + (lon_hi - lon_lo) * rng.random(size)
        s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        pts = np.stack([s * np.cos(lon), s * np.sin(lon), z], axis=-1)
    return pts[0] if n is None else pts


def cell_inradius(cell: Cell) -> float:
    """Closed-form lower bound on the radius of a ball around the anchor
    that stays inside the cell."""
    if cell.space_kind == TORUS:
        lo = np.array(cell.geometry["lo"])
        hi = np.array(cell.geometry["hi"])
        return float(np.min(hi - lo) / 2.0)
    z_top, z_bot = cell.geometry["z"]
    colat_lo = math.acos(z_top)
    colat_hi = math.acos(z_bot)
    if cell.geometry["shape"] == "cap":
        # the anchor is the pole, so the cap is itself a ball around it
        return colat_hi - colat_lo
    dth = (colat_hi - colat_lo) / 2.0
    lon_lo, lon_hi = cell.geometry["lon"]
    if lon_hi - lon_lo >= 2.0 * math.pi:
        return dth
    sin_min = min(math.sin(colat_lo), math.sin(colat_hi))
    return min(dth, sin_min * (lon_hi - lon_lo) / 2.0)


def cell_boundary_distance(cell: Cell, pts: np.ndarray) -> np.ndarray:
    """Distance from points to the cell (0 inside). Exact on both spaces."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if cell.space_kind == TORUS:
        lo = np.array(cell.geometry["lo"])
        hi = np.array(cell.geometry["hi"])
        mid = (lo + hi) / 2.0
        half = (hi - lo) / 2.0
        diff = np.abs(pts - mid)
        diff = np.minimum(diff, 1.0 - diff)
        gap = np.maximum(diff - half, 0.0)
        return gap.max(axis=1)
    z = np.clip(pts[:, 2], -1.0, 1.0)
    colat = np.arccos(z)
    z_top, z_bot = cell.geometry["z"]
    colat_lo = math.acos(z_top)
    colat_hi = math.acos(min(max(z_bot, -1.0), 1.0))
    if cell.geometry["shape"] == "cap":
        if cell.geometry["north"]:
            return np.maximum(colat - colat_hi, 0.0)
        return np.maximum(colat_lo - colat, 0.0)
    lon_lo, lon_hi = cell.geometry["lon"]
    band_gap = np.maximum(np.maximum(colat_lo - colat, colat - colat_hi), 0.0)
    if lon_hi - lon_lo >= 2.0 * math.pi:
        return band_gap
    lon = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * math.pi)
    dlon = np.mod(lon - lon_lo, 2.0 * math.pi)
    inside_lon = dlon < (lon_hi - lon_lo)
    out = np.where(inside_lon, band_gap, np.inf)
    miss = ~inside_lon
    if np.any(miss):
        sub = pts[miss]
        best = np.full(sub.shape[0], np.inf)
        for lon_e in (lon_lo, lon_hi):
            best = np.minimum(best, _meridian_segment_distance(
                sub, lon_e, colat_lo, colat_hi))
        out[miss] = best
    return out


def _meridian_segment_distance(pts: np.ndarray, lon0: float,
                               colat_lo: float, colat_hi: float) -> np.ndarray:
    """Geodesic distance from points to a meridian arc segment."""
    normal = np.array([-math.sin(lon0), math.cos(lon0), 0.0])
    comp = pts @ normal
    foot = pts - comp[:, None] * normal
    norms = np.linalg.norm(foot, axis=1)
    ok = norms > 1e-12
    # perpendicular foot on the great circle; valid if its colatitude lies
    # in the segment and it is on the meridian side (x-component along lon0)
    along = np.array([math.cos(lon0), math.sin(lon0), 0.0])
    with np.errstate(invalid="ignore"):
        footn = foot / np.where(ok, norms, 1.0)[:, None]
    foot_colat = np.arccos(np.clip(footn[:, 2], -1.0, 1.0))
    on_side = (footn @ along) >= 0.0
    perp = np.arcsin(np.clip(np.abs(comp), -1.0, 1.0))
    use_perp = ok & on_side & (foot_colat >= colat_lo) & (foot_colat <= colat_hi)
    d = np.where(use_perp, perp, np.inf)
    for colat_e in (colat_lo, colat_hi):
        endpoint = np.array([math.sin(colat_e) * math.cos(lon0),
                             math.sin(colat_e) * math.sin(lon0),
                             math.cos(colat_e)])
        d = np.minimum(d, np.arccos(np.clip(pts @ endpoint, -1.0, 1.0)))
    return d


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

@dataclass
class PartitionReport:
    n_cells: int
    sample_budget: int
    measure_residual: float
    max_cell_measure_error: float
    coverage_violations: int
    overlap_violations: int
    diameter_violations: int
    delta_scaled: tuple[float, float]
    c1_scaled: float
    c2_scaled: float
    equal_measure_ok: bool
    coverage_ok: bool
    diameter_ok: bool

    @property
    def ok(self) -> bool:
        return self.equal_measure_ok and self.coverage_ok and self.diameter_ok


def geometric_cell_measure(cell: Cell) -> float:
    """Recompute the cell measure from its stored geometry (independent of
    the stored ``measure`` field)."""
    if cell.space_kind == TORUS:
        lo = np.array(cell.geometry["lo"])
        hi = np.array(cell.geometry["hi"])
        return float(np.prod(hi - lo))
    z_top, z_bot = cell.geometry["z"]
    lon_lo, lon_hi = cell.geometry["lon"]
    return (lon_hi - lon_lo) * (z_top - z_bot)


def verify_partition(partition: Partition, sample_budget: int = 10_000,
                     seed: int = 0, pairs_per_cell: int = 32,
                     inradius_probe_cells: int = 64) -> PartitionReport:
    """Empirical check of the partition contract.

    Reports exact-measure residuals, coverage/disjointness counts from
    brute-force membership over uniform samples, sampled diameter-bound
    violations, and measured inclusion constants: ``c1`` from the largest
    sampled ball around an anchor that stays inside its cell, ``c2`` from
    the farthest sampled cell point from the anchor (both scaled by
    ``N^{1/d}``).
    """
    space = partition.space
    N = partition.N
    total = space.total_measure
    target = total / N

    weights = partition.weights()
    measure_residual = abs(weights.sum() - total) / total
    max_cell_err = max(
        max(abs(c.measure - target) / target for c in partition.cells),
        max(abs(geometric_cell_measure(c) - target) / target for c in partition.cells),
    )

    rng = rngmod.substream(seed, rngmod.VERIFY, N)
    pts = sample_uniform(space, rng, sample_budget)
    counts = _membership_counts(partition, pts)
    coverage_violations = int(np.sum(counts == 0))
    overlap_violations = int(np.sum(counts > 1))

    scale = N ** (1.0 / space.d)
    diam_violations = 0
    c2 = 0.0
    for cell in partition.cells:
        a = cell_sample(cell, rngmod.substream(seed, rngmod.VERIFY, N, cell.id, 0),
                        pairs_per_cell)
        b = cell_sample(cell, rngmod.substream(seed, rngmod.VERIFY, N, cell.id, 1),
                        pairs_per_cell)
        dd = distance(space, a, b)
        diam_violations += int(np.sum(dd > cell.diameter * (1 + 1e-12)))
        anchor = np.asarray(cell.anchor)
        c2 = max(c2, float(distance(space, anchor, a).max()),
                 float(distance(space, anchor, b).max()))
    c2 *= scale

    deltas = np.array([c.diameter for c in partition.cells]) * scale
    c1 = _probe_inradius(partition, seed, inradius_probe_cells) * scale

    return PartitionReport(
        n_cells=N,
        sample_budget=sample_budget,
        measure_residual=measure_residual,
        max_cell_measure_error=max_cell_err,
        coverage_violations=coverage_violations,
        overlap_violations=overlap_violations,
        diameter_violations=diam_violations,
        delta_scaled=(float(deltas.min()), float(deltas.max())),
        c1_scaled=c1,
        c2_scaled=c2,
        equal_measure_ok=(measure_residual <= 1e-12 and max_cell_err <= 1e-12),
        coverage_ok=(coverage_violations == 0 and overlap_violations == 0),
        diameter_ok=(diam_violations == 0),
    )


def _membership_counts(partition: Partition, pts: np.ndarray) -> np.ndarray:
    """Brute-force count of containing cells per point (every pair tested)."""
    n = len(pts)
    counts = np.zeros(n, dtype=np.int32)
    if partition.space.kind == TORUS:
        lo = np.array([c.geometry["lo"] for c in partition.cells])  # (N, d)
        hi = np.array([c.geometry["hi"] for c in partition.cells])
        rows = max(1, 2_000_000 // max(1, partition.N * partition.space.d))
        for i in range(0, n, rows):
            block = pts[i:i + rows]
            inside = np.all((block[:, None, :] >= lo[None]) &
                            (block[:, None, :] < hi[None]), axis=2)
            counts[i:i + rows] = inside.sum(axis=1)
        return counts
    z = pts[:, 2]
    lon = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * math.pi)
    two_pi = 2.0 * math.pi
    for cell in partition.cells:
        z_top, z_bot = cell.geometry["z"]
        if cell.geometry["shape"] == "cap":
            inside = (z > z_bot) if cell.geometry["north"] else (z <= z_top)
        else:
            inside = (z <= z_top) & (z > z_bot)
            lon_lo, lon_hi = cell.geometry["lon"]
            if lon_hi - lon_lo < two_pi:
                inside &= (lon >= lon_lo) & (lon < lon_hi)
        counts += inside
    return counts


def _probe_inradius(partition: Partition, seed: int, max_cells: int) -> float:
    """Largest r (min over probed cells) with sampled B(anchor, r) inside."""
    N = partition.N
    ids = range(N) if N <= max_cells else np.linspace(0, N - 1, max_cells, dtype=int)
    worst = np.inf
    for cid in ids:
        cell = partition.cells[int(cid)]
        anchor = np.asarray(cell.anchor)
        lo_r, hi_r = 0.0, cell.diameter
        rng = rngmod.substream(seed, rngmod.VERIFY, N, cid, 2)
        for _ in range(14):
            mid = 0.5 * (lo_r + hi_r)
            ball = sample_ball(partition.space, anchor, mid, rng, 48)
            if bool(np.all(cell_contains(cell, ball))):
                lo_r = mid
            else:
                hi_r = mid
        worst = min(worst, lo_r)
    return float(worst)


# ---------------------------------------------------------------------------
# export / import
# ---------------------------------------------------------------------------

def partition_to_json(partition: Partition) -> str:
    doc = {
        "space": {"kind": partition.space.kind, "d": partition.space.d},
        "N": partition.N,
        "meta": partition.meta,
        "cells": [
            {
                "id": c.id,
                "measure": c.measure,
                "diameter": c.diameter,
                "anchor": list(c.anchor),
                "geometry": _geometry_doc(c.geometry),
            }
            for c in partition.cells
        ],
    }
    return json.dumps(doc)


def _geometry_doc(geometry: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in geometry.items()}


def partition_from_json(text: str) -> Partition:
    doc = json.loads(text)
    space = make_space(doc["space"]["kind"], doc["space"]["d"])
    cells = []
    for c in doc["cells"]:
        geometry = {k: (tuple(v) if isinstance(v, list) else v)
                    for k, v in c["geometry"].items()}
        cells.append(Cell(c["id"], space.kind, c["measure"], c["diameter"],
                          tuple(c["anchor"]), geometry))
    return Partition(space, tuple(cells), doc.get("meta", {}))
