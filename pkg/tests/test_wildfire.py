import math

import numpy as np
import pytest

from spreadcontrol.impact import check_discount_stability
from spreadcontrol.wildfire import (
    CellType,
    CompileConfig,
    Landscape,
    SpreadRateTable,
    Wind,
    analogue_landscape,
    analogue_network,
    compile_landscape,
    vegetation_factor,
    wind_factor,
)

CALM = Wind(speed=0.0, from_deg=0.0)
NE_WIND = Wind(speed=4.0, from_deg=45.0)


def small_landscape(rows, wind=CALM, likelihood=None):
    height = len(rows)
    width = len(rows[0])
    if likelihood is None:
        likelihood = [[0.5] * width for _ in range(height)]
    return Landscape.from_rows(rows, wind, likelihood)


def test_wind_factor_calm_is_one():
    for drow, dcol in ((-1, 0), (1, 1), (0, -1)):
        assert wind_factor(drow, dcol, CALM) == 1.0


def test_wind_factor_aligned_downwind():
    # wind from the north blows southward; southward spread is fully aligned
    wind = Wind(speed=4.0, from_deg=0.0)
    assert wind_factor(1, 0, wind) == pytest.approx(math.exp(4 * 0.045), rel=1e-12)


def test_downwind_beats_upwind():
    for speed in (1.0, 4.0, 9.0):
        wind = Wind(speed=speed, from_deg=45.0)
        down = wind_factor(1, -1, wind)  # toward southwest
        up = wind_factor(-1, 1, wind)  # toward northeast
        assert down > up
        assert down == pytest.approx(math.exp(speed * 0.045), rel=1e-12)


def test_vegetation_factors():
    assert vegetation_factor(CellType.DESERT) == 0.1
    assert vegetation_factor(CellType.GRASSLAND) == 1.0
    assert vegetation_factor(CellType.FOREST) == 1.4
    assert vegetation_factor(CellType.CITY) == 1.0
    with pytest.raises(ValueError, match="unburnable"):
        vegetation_factor(CellType.WATER)


def test_two_by_two_grassland_no_wind():
    net = compile_landscape(small_landscape(["GG", "GG"]))
    assert net.n == 4
    assert net.n_edges == 12  # 4 horizontal/vertical pairs + 2 diagonal pairs
    for e in net.edges:
        drow = abs(e.target // 2 - e.source // 2)
        dcol = abs(e.target % 2 - e.source % 2)
        expected = 0.5 if drow + dcol == 1 else 0.5 * 0.785
        assert e.params.beta == pytest.approx(expected, rel=1e-12)


def test_all_water_has_no_edges():
    net = compile_landscape(small_landscape(["WW", "WW"]))
    assert net.n == 4
    assert net.n_edges == 0


def test_water_severs_incident_edges():
    net = compile_landscape(small_landscape(["GWG", "GGG"]))
    water = 1
    for e in net.edges:
        assert e.target != water and e.source != water


def test_edge_support_symmetry():
    net = compile_landscape(small_landscape(["GWG", "GGG", "GGW"]))
    support = {(e.target, e.source) for e in net.edges}
    assert all((j, i) in support for i, j in support)


def test_wind_neutrality_when_calm():
    ls = small_landscape(["GE", "DG"])
    net = compile_landscape(ls)
    for e in net.edges:
        drow = abs(e.target // 2 - e.source // 2)
        dcol = abs(e.target % 2 - e.source % 2)
        veg = vegetation_factor(ls.cells[e.source])
        expected = 0.5 * veg * (0.785 if drow == 1 and dcol == 1 else 1.0)
        assert e.params.beta == pytest.approx(expected, rel=1e-12)


def test_costs_and_likelihoods_follow_config():
    ls = small_landscape(["GC", "WG"], likelihood=[[0.3, 0.8], [0.0, 0.1]])
    net = compile_landscape(ls)
    assert net.cost.tolist() == [0.01, 1.0, 0.01, 0.01]
    assert net.likelihood.tolist() == [0.3, 0.8, 0.0, 0.1]


def test_compile_respects_config_bounds():
    config = CompileConfig(discount_rate=2.0, delta=0.3, delta_lo=0.2, delta_hi=0.5,
                           beta_lo=1e-3, edge_weight=2.0)
    net = compile_landscape(small_landscape(["GG"]), config=config)
    assert net.discount_rate == 2.0
    assert np.all(net.delta == 0.3)
    assert np.all(net.delta_lo == 0.2)
    assert np.all(net.delta_hi == 0.5)
    assert np.all(net.beta_lo == 1e-3)
    assert np.all(net.edge_weight == 2.0)


def test_beta_lo_clamped_to_rate():
    # desert rates can undercut a large floor; the bound must stay consistent
    config = CompileConfig(beta_lo=0.2)
    net = compile_landscape(small_landscape(["DD"]), config=config)
    for e in net.edges:
        assert e.params.beta_lo <= e.params.beta


def test_landscape_validation():
    with pytest.raises(ValueError, match="unknown cell code"):
        Landscape.from_rows(["GX"], CALM, [[0.0, 0.0]])
    with pytest.raises(ValueError, match="length"):
        Landscape.from_rows(["GG", "G"], CALM, [[0.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ValueError, match="likelihood"):
        Landscape.from_rows(["GG"], CALM, [[0.0]])
    with pytest.raises(ValueError, match="\\[0, 1\\]"):
        Landscape.from_rows(["GG"], CALM, [[0.0, 1.5]])
    with pytest.raises(ValueError):
        Wind(speed=-1.0, from_deg=0.0)


def test_analogue_landscape_shape_and_count():
    ls = analogue_landscape()
    assert (ls.rows, ls.cols, ls.n) == (25, 40, 1000)
    net = analogue_network()
    assert net.n == 1000
    assert net.n_edges == 3892  # frozen; documented property of the benchmark
    assert 3000 <= net.n_edges <= 4000
    water = sum(1 for c in ls.cells if c is CellType.WATER)
    assert 0 < water < 1000
    for e in net.edges:
        assert ls.cells[e.source] is not CellType.WATER
        assert ls.cells[e.target] is not CellType.WATER


def test_analogue_is_stable_at_default_rates():
    report = check_discount_stability(analogue_network())
    assert report.stable
    assert report.margin > 0.3


def test_analogue_costs_follow_cell_types():
    ls = analogue_landscape()
    net = analogue_network()
    for idx, cell in enumerate(ls.cells):
        assert net.cost[idx] == (1.0 if cell is CellType.CITY else 0.01)


def test_spread_table_validation():
    with pytest.raises(ValueError):
        SpreadRateTable(beta_base=0.0)
    with pytest.raises(ValueError):
        SpreadRateTable(diagonal_factor=-0.1)
