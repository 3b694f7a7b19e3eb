"""Grid landscapes compiled into spreading networks.

Cells are typed (desert / grassland / eucalypt forest / city / water) on a
rows x cols grid; fire spreads to the 8 neighbours. Spread rates factor as

    beta = beta_base * vegetation(source cell) * wind(direction) [* diagonal]

Water is unburnable: water cells keep their node (so the grid indexing stays
dense) but have no incident edges. Node costs protect cities through the
objective rather than through immunity.

Wind follows the exponential bias ``exp(c1 V) * exp(V c2 (cos theta - 1))``
with ``theta`` the angle between the spread direction and the direction the
wind blows toward. The coefficient defaults ``(c1, c2) = (0.045, 0.131)`` and
the diagonal overlap factor ``0.785`` are configuration defaults, not ground
truth; override them in :class:`SpreadRateTable` as needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .network import EdgeParams, NodeParams, SpreadingNetwork


class CellType(str, Enum):
    DESERT = "D"
    GRASSLAND = "G"
    FOREST = "E"
    CITY = "C"
    WATER = "W"


@dataclass(frozen=True)
class Wind:
    """Wind at ``speed`` m/s blowing *from* the compass direction ``from_deg``
    (0 = north, 90 = east); a northeasterly wind has ``from_deg = 45``."""

    speed: float
    from_deg: float

    def __post_init__(self) -> None:
        if self.speed < 0.0:
            raise ValueError(f"wind speed must be nonnegative, got {self.speed}")


DEFAULT_VEGETATION = {
    CellType.DESERT: 0.1,
    CellType.GRASSLAND: 1.0,
    CellType.FOREST: 1.4,
    CellType.CITY: 1.0,
}


@dataclass(frozen=True)
class SpreadRateTable:
    beta_base: float = 0.5
    vegetation: Mapping[CellType, float] = field(
        default_factory=lambda: dict(DEFAULT_VEGETATION)
    )
    wind_c1: float = 0.045
    wind_c2: float = 0.131
    diagonal_factor: float = 0.785

    def __post_init__(self) -> None:
        if self.beta_base <= 0.0:
            raise ValueError("beta_base must be positive")
        for cell, factor in self.vegetation.items():
            if factor < 0.0:
                raise ValueError(f"vegetation factor for {cell} must be nonnegative")
        if self.diagonal_factor < 0.0:
            raise ValueError("diagonal factor must be nonnegative")


@dataclass(frozen=True, eq=False)
class Landscape:
    """Typed cell grid with wind and an outbreak likelihood map.

    ``cells`` is row-major with row 0 at the north edge and column 0 at the
    west edge; ``likelihood`` has the same layout in [0, 1].
    """

    rows: int
    cols: int
    cells: tuple[CellType, ...]
    wind: Wind
    likelihood: np.ndarray

    def __post_init__(self) -> None:
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("grid dimensions must be positive")
        if len(self.cells) != self.rows * self.cols:
            raise ValueError(
                f"expected {self.rows * self.cols} cells, got {len(self.cells)}"
            )
        lik = np.asarray(self.likelihood, dtype=float).reshape(self.rows * self.cols)
        if np.any((lik < 0.0) | (lik > 1.0)):
            raise ValueError("likelihood entries must lie in [0, 1]")
        object.__setattr__(self, "likelihood", lik)

    @property
    def n(self) -> int:
        return self.rows * self.cols

    def index(self, row: int, col: int) -> int:
        return row * self.cols + col

    def cell(self, row: int, col: int) -> CellType:
        return self.cells[self.index(row, col)]

    @staticmethod
    def from_rows(
        rows: Sequence[str], wind: Wind, likelihood: Sequence[Sequence[float]]
    ) -> "Landscape":
        """Build from one string per grid row using codes D/G/E/C/W."""
        if not rows:
            raise ValueError("empty cell rows")
        width = len(rows[0])
        cells: list[CellType] = []
        for r, line in enumerate(rows):
            if len(line) != width:
                raise ValueError(f"row {r} has length {len(line)}, expected {width}")
            for ch in line:
                try:
                    cells.append(CellType(ch))
                except ValueError:
                    raise ValueError(f"unknown cell code {ch!r} in row {r}") from None
        lik = np.asarray(likelihood, dtype=float)
        if lik.shape != (len(rows), width):
            raise ValueError(
                f"likelihood shape {lik.shape} does not match grid {(len(rows), width)}"
            )
        return Landscape(
            rows=len(rows), cols=width, cells=tuple(cells), wind=wind,
            likelihood=lik.reshape(-1),
        )


# 8-neighbour offsets in fixed order: N, NE, E, SE, S, SW, W, NW.
_DIRECTIONS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


def wind_factor(
    drow: int, dcol: int, wind: Wind, c1: float = 0.045, c2: float = 0.131
) -> float:
    """Wind bias for spread moving ``drow`` rows south and ``dcol`` cols east.

    Equals 1 in calm air; maximal downwind, minimal upwind.
    """
    if wind.speed == 0.0:
        return 1.0
    spread_angle = math.atan2(float(dcol), float(-drow))  # from north, clockwise
    toward = math.radians(wind.from_deg + 180.0)
    cos_theta = math.cos(spread_angle - toward)
    return math.exp(c1 * wind.speed) * math.exp(wind.speed * c2 * (cos_theta - 1.0))


def vegetation_factor(cell: CellType, table: SpreadRateTable | None = None) -> float:
    """Vegetation multiplier of a burnable source cell."""
    table = table or SpreadRateTable()
    if cell is CellType.WATER:
        raise ValueError("water is unburnable and has no vegetation factor")
    return table.vegetation[cell]


@dataclass(frozen=True)
class CompileConfig:
    """Node-level parameters applied uniformly when compiling a landscape."""

    discount_rate: float = 3.5
    delta: float = 0.2
    delta_lo: float | None = None  # default: delta (recovery not controllable)
    delta_hi: float | None = None
    beta_lo: float = 1e-4
    cost_city: float = 1.0
    cost_other: float = 0.01
    edge_weight: float = 1.0
    node_weight: float = 1.0


def compile_landscape(
    landscape: Landscape,
    table: SpreadRateTable | None = None,
    config: CompileConfig | None = None,
) -> SpreadingNetwork:
    """Compile the grid into a spreading network.

    Every cell becomes a node (n = rows * cols); burnable cells get directed
    edges to each burnable 8-neighbour, rated by the source cell's vegetation,
    the wind bias of the travel direction, and the diagonal factor. The
    computed rate is the no-investment upper bound; ``config.beta_lo`` caps
    how far investment can push each edge down.
    """
    table = table or SpreadRateTable()
    config = config or CompileConfig()
    delta_lo = config.delta_lo if config.delta_lo is not None else config.delta
    delta_hi = config.delta_hi if config.delta_hi is not None else config.delta

    nodes = []
    for idx in range(landscape.n):
        cell = landscape.cells[idx]
        cost = config.cost_city if cell is CellType.CITY else config.cost_other
        nodes.append(
            NodeParams(
                delta=config.delta, delta_lo=delta_lo, delta_hi=delta_hi,
                weight=config.node_weight, cost=cost,
                likelihood=float(landscape.likelihood[idx]),
            )
        )

    edges = []
    for row in range(landscape.rows):
        for col in range(landscape.cols):
            source_cell = landscape.cell(row, col)
            if source_cell is CellType.WATER:
                continue
            source = landscape.index(row, col)
            for drow, dcol in _DIRECTIONS:
                trow, tcol = row + drow, col + dcol
                if not (0 <= trow < landscape.rows and 0 <= tcol < landscape.cols):
                    continue
                if landscape.cell(trow, tcol) is CellType.WATER:
                    continue
                beta = (
                    table.beta_base
                    * vegetation_factor(source_cell, table)
                    * wind_factor(drow, dcol, landscape.wind, table.wind_c1, table.wind_c2)
                )
                if drow != 0 and dcol != 0:
                    beta *= table.diagonal_factor
                target = landscape.index(trow, tcol)
                edges.append(
                    (
                        target,
                        source,
                        EdgeParams(
                            beta=beta, beta_lo=min(config.beta_lo, beta),
                            beta_hi=beta, weight=config.edge_weight,
                        ),
                    )
                )
    return SpreadingNetwork(nodes, edges, config.discount_rate)


# Outbreak-likelihood hot spots of the benchmark landscape: (row, col, sigma,
# peak). One sits inside the forest belt; three sit on the grass approaches a
# few cells upwind of the city, which is what makes protecting the city the
# binding concern.
_ANALOGUE_HOT_SPOTS = (
    (2.5, 29.0, 1.6, 0.90),
    (6.5, 23.0, 1.4, 0.92),
    (6.0, 28.0, 1.4, 0.92),
    (6.5, 33.0, 1.4, 0.92),
)


def analogue_landscape() -> Landscape:
    """Deterministic 25 x 40 benchmark landscape (1000 nodes).

    An island in a surrounding sea: a river bisects the northern half, a
    desert lies southwest, an eucalypt forest belt sits upwind (northeast)
    holding an outbreak-likelihood hot spot, and the city block sits a few
    cells downwind of three more grass hot spots. Ignition likelihood is
    moderate across the upwind quarter and low elsewhere. Compiled with the
    default tables this yields 3892 directed edges and a stable discounted
    system (margin about 0.57 at the default rates).
    """
    rows, cols = 25, 40
    grid = [[CellType.GRASSLAND] * cols for _ in range(rows)]

    # Sea: everything outside the island ellipse.
    for r in range(rows):
        for c in range(cols):
            if ((r - 11.5) / 10.4) ** 2 + ((c - 20.0) / 16.8) ** 2 > 1.0:
                grid[r][c] = CellType.WATER

    # River bisecting the island's northern half.
    for r in range(0, 9):
        for c in (13, 14, 15):
            grid[r][c] = CellType.WATER

    # Desert in the southwest.
    for r in range(14, 20):
        for c in range(5, 12):
            if grid[r][c] is CellType.GRASSLAND:
                grid[r][c] = CellType.DESERT

    # Eucalypt forest belt upwind (northeast).
    for r in range(1, 7):
        for c in range(22, 38):
            if grid[r][c] is CellType.GRASSLAND:
                grid[r][c] = CellType.FOREST

    # City block downwind (southwest) of the forest and hot spots.
    for r in range(10, 16):
        for c in range(20, 33):
            if grid[r][c] is CellType.GRASSLAND:
                grid[r][c] = CellType.CITY

    likelihood = np.zeros((rows, cols))
    for r in range(rows):
        for c in range(cols):
            cell = grid[r][c]
            if cell is CellType.WATER:
                continue
            if cell is CellType.CITY:
                lik = 0.002  # ignition inside the city is rare
            else:
                lik = 0.25 if (r <= 8 and c >= 16) else 0.02
                for hr, hc, hs, hp in _ANALOGUE_HOT_SPOTS:
                    lik += hp * math.exp(-((r - hr) ** 2 + (c - hc) ** 2) / (2.0 * hs**2))
            likelihood[r, c] = round(min(1.0, lik), 4)

    cells = tuple(cell for row_cells in grid for cell in row_cells)
    return Landscape(
        rows=rows, cols=cols, cells=cells,
        wind=Wind(speed=4.0, from_deg=45.0), likelihood=likelihood,
    )


def analogue_network(config: CompileConfig | None = None) -> SpreadingNetwork:
    """The benchmark landscape compiled with the default tables."""
    return compile_landscape(analogue_landscape(), SpreadRateTable(), config)
