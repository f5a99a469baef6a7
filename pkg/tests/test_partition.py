import json
import math

import numpy as np
import pytest

from stratcub import rng as rngmod
from stratcub.partition import (Cell, Partition, cell_boundary_distance,
                                cell_contains, cell_inradius, cell_sample,
                                find_cell, geometric_cell_measure,
                                partition_from_json, partition_to_json,
                                sphere_zonal_partition, torus_grid_partition,
                                verify_partition)
from stratcub.space import SPHERE2, TORUS, distance, make_space, sample_uniform

T1 = make_space(TORUS, 1)
T2 = make_space(TORUS, 2)
S2 = make_space(SPHERE2)


def test_torus_grid_examples():
    part = torus_grid_partition(T2, 4)
    assert part.N == 16
    assert all(c.measure == pytest.approx(1 / 16, rel=1e-15) for c in part.cells)
    assert all(c.diameter == 0.25 for c in part.cells)
    arcs = torus_grid_partition(T1, 8)
    assert arcs.N == 8
    assert all(c.geometry["hi"][0] - c.geometry["lo"][0] == pytest.approx(1 / 8)
               for c in arcs.cells)
    with pytest.raises(ValueError):
        torus_grid_partition(T1, 0)
    with pytest.raises(ValueError):
        torus_grid_partition(S2, 4)


def test_sphere_equal_split():
    part = sphere_zonal_partition(S2, 2)
    assert part.N == 2
    for c in part.cells:
        assert geometric_cell_measure(c) == pytest.approx(2 * math.pi, rel=1e-14)
    with pytest.raises(ValueError):
        sphere_zonal_partition(S2, 1)
    with pytest.raises(ValueError):
        sphere_zonal_partition(T2, 8)


@pytest.mark.parametrize("N", [3, 5, 12, 37, 100, 513, 2048])
def test_sphere_exact_measures(N):
    part = sphere_zonal_partition(S2, N)
    target = 4 * math.pi / N
    assert part.N == N
    for c in part.cells:
        assert abs(geometric_cell_measure(c) - target) / target < 1e-12
        assert abs(c.measure - target) / target < 1e-12


def test_sphere_diameter_scaling():
    d100 = max(c.diameter for c in sphere_zonal_partition(S2, 100).cells) * 10
    d400 = max(c.diameter for c in sphere_zonal_partition(S2, 400).cells) * 20
    assert max(d100, d400) / min(d100, d400) < 4


def test_cell_sample_containment_and_determinism():
    part = torus_grid_partition(T2, 4)
    cell = part.cells[5]
    pts = cell_sample(cell, rngmod.substream(1, 2, 3), 200)
    assert np.all(cell_contains(cell, pts))
    a = cell_sample(cell, rngmod.substream(9, 9))
    b = cell_sample(cell, rngmod.substream(9, 9))
    assert np.array_equal(a, b)


def test_sphere_cell_sample_colatitude_mean():
    part = sphere_zonal_partition(S2, 12)
    cell = next(c for c in part.cells if c.geometry["shape"] == "band")
    z_top, z_bot = cell.geometry["z"]
    th1, th2 = math.acos(z_top), math.acos(z_bot)
    pts = cell_sample(cell, rngmod.substream(2, 3, 4), 10_000)
    assert np.all(cell_contains(cell, pts))
    colat = np.arccos(np.clip(pts[:, 2], -1, 1))
    # analytic mean colatitude of the area measure on the band
    mean_exact = ((math.sin(th2) - th2 * math.cos(th2))
                  - (math.sin(th1) - th1 * math.cos(th1))) / (z_top - z_bot)
    se = colat.std(ddof=1) / math.sqrt(len(colat))
    assert abs(colat.mean() - mean_exact) < 3 * se


@pytest.mark.parametrize("part", [torus_grid_partition(T1, 8),
                                  torus_grid_partition(T2, 5),
                                  sphere_zonal_partition(S2, 33)])
def test_exactly_one_cell_covers_each_point(part):
    pts = sample_uniform(part.space, rngmod.substream(5, 6), 5000)
    counts = np.zeros(len(pts), dtype=int)
    for cell in part.cells:
        counts += cell_contains(cell, pts)
    assert np.all(counts == 1)
    # find_cell agrees with brute force membership
    ids = find_cell(part, pts)
    for cid in np.unique(ids):
        assert np.all(cell_contains(part.cells[int(cid)], pts[ids == cid]))


def test_verify_partition_clean():
    rep = verify_partition(torus_grid_partition(T1, 8), 5000, seed=3)
    assert rep.ok
    assert rep.c1_scaled == pytest.approx(0.5, abs=0.02)
    assert rep.delta_scaled == (1.0, 1.0)
    rep_s = verify_partition(sphere_zonal_partition(S2, 100), 20_000, seed=3)
    assert rep_s.ok
    assert rep_s.coverage_violations == 0 and rep_s.overlap_violations == 0


def test_inclusion_constants_stable_over_n():
    # sampled inradius and circumradius around anchors, scaled by sqrt(N),
    # stay in a fixed band as N grows
    c1s, c2s = [], []
    for N in (32, 128, 512):
        rep = verify_partition(sphere_zonal_partition(S2, N), 2000, seed=5)
        c1s.append(rep.c1_scaled)
        c2s.append(rep.c2_scaled)
    assert min(c1s) > 0
    assert max(c1s) / min(c1s) < 4
    assert max(c2s) / min(c2s) < 4


def test_verify_partition_flags_corruption():
    part = torus_grid_partition(T1, 4)
    cells = list(part.cells)
    bad = cells[2]
    cells[2] = Cell(bad.id, bad.space_kind, bad.measure * 1.5, bad.diameter,
                    bad.anchor, bad.geometry)
    rep = verify_partition(Partition(part.space, tuple(cells), part.meta), 1000, seed=0)
    assert not rep.equal_measure_ok
    assert not rep.ok


def test_cell_inradius_ball_inside():
    for part in (torus_grid_partition(T2, 4), sphere_zonal_partition(S2, 24)):
        for cell in part.cells[:: max(1, part.N // 6)]:
            r = cell_inradius(cell)
            assert r > 0
            from stratcub.space import sample_ball
            pts = sample_ball(part.space, np.asarray(cell.anchor), r * 0.999,
                              rngmod.substream(7, cell.id), 200)
            assert np.all(cell_contains(cell, pts))


def test_cell_boundary_distance():
    part = torus_grid_partition(T1, 4)
    cell = part.cells[0]  # [0, 0.25)
    d = cell_boundary_distance(cell, np.array([[0.5], [0.3], [0.1]]))
    assert d[0] == pytest.approx(0.25)
    assert d[1] == pytest.approx(0.05)
    assert d[2] == 0.0
    part_s = sphere_zonal_partition(S2, 33)
    cell_s = next(c for c in part_s.cells
                  if c.geometry["shape"] == "band"
                  and c.geometry["lon"][1] - c.geometry["lon"][0] < 2 * math.pi)
    pts = sample_uniform(S2, rngmod.substream(8, 1), 2000)
    d = cell_boundary_distance(cell_s, pts)
    inside = cell_contains(cell_s, pts)
    assert np.all(d[inside] == 0.0)
    # exact distance matches a dense sampled minimum over the cell
    probe = cell_sample(cell_s, rngmod.substream(8, 2), 4000)
    outside = ~inside
    approx = distance(S2, pts[outside, None, :], probe[None, :, :]).min(axis=1)
    assert np.all(d[outside] <= approx + 1e-6)
    assert np.quantile(approx - d[outside], 0.95) < 0.05


def test_json_round_trip_torus_bit_exact():
    part = torus_grid_partition(T2, 3)
    back = partition_from_json(partition_to_json(part))
    assert back.N == part.N
    for a, b in zip(part.cells, back.cells):
        assert a == b
    assert partition_to_json(back) == partition_to_json(part)


def test_json_round_trip_sphere():
    part = sphere_zonal_partition(S2, 37)
    back = partition_from_json(partition_to_json(part))
    for a, b in zip(part.cells, back.cells):
        assert a.measure == b.measure
        assert a.diameter == b.diameter
        assert a.geometry == b.geometry
    doc = json.loads(partition_to_json(part))
    assert doc["N"] == 37


def test_cell_sample_chi_square_subbands():
    """Marginals of the restricted measure: chi-square on 8 sub-boxes."""
    part = torus_grid_partition(T1, 4)
    cell = part.cells[1]
    pts = cell_sample(cell, rngmod.substream(11, 0), 10_000)[:, 0]
    lo, hi = cell.geometry["lo"][0], cell.geometry["hi"][0]
    counts, _ = np.histogram(pts, bins=8, range=(lo, hi))
    expected = len(pts) / 8
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    # 7 dof: mean 7, sd sqrt(14); 3 sigma
    assert chi2 < 7 + 3 * math.sqrt(14)
