"""Dyadic-parabolic tiling of the thickened cone section and its adapted bumps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

import numpy as np

from .curve import CurveModel
from .cutoff import eta
from .errors import InputError

_TOL = 1e-9


@dataclass(frozen=True)
class DecompositionParams:
    """Thickening delta, height step beta and the derived lateral scale gamma = delta^(1/m)."""

    delta: float
    beta: float
    m: int
    gamma: float = field(init=False)

    def __post_init__(self):
        if not (self.delta > 0):
            raise InputError("delta must be positive")
        if self.delta >= 1:
            raise InputError("delta >= 1 leaves no dyadic level")
        if not (self.beta > 0):
            raise InputError("beta must be positive")
        inv = 1.0 / self.beta
        if abs(inv - round(inv)) > 1e-9 * inv:
            raise InputError(f"1/beta must be an integer, got {inv}")
        if self.beta > self.delta * (1 + 1e-12):
            raise InputError("beta must not exceed delta")
        if int(self.m) != self.m or self.m < 3:
            raise InputError("m must be an integer >= 3")
        object.__setattr__(self, "gamma", self.delta ** (1.0 / self.m))

    @property
    def n_range(self) -> range:
        inv = round(1.0 / self.beta)
        return range(inv, 2 * inv)

    @property
    def level_count(self) -> int:
        val = math.log2(1.0 / self.gamma)
        rounded = round(val)
        if abs(val - rounded) < _TOL:
            return max(int(rounded), 1)
        return max(math.ceil(val), 1)

    def gamma_k(self, k: int) -> float:
        return 2.0 ** (k * (1 - self.m / 2)) * self.gamma

    def level_bounds(self, k: int) -> tuple[float, float]:
        g = self.gamma
        return (2.0**k - 1) * g, (2.0 ** (k + 1) - 1) * g

    def lateral_count(self, k: int) -> int:
        val = 2.0 ** (k * self.m / 2)
        return int(math.ceil(val - _TOL))


@dataclass(frozen=True)
class Cell:
    """Lateral (x-direction) cell of a level; shared by all height layers n."""

    k: int
    j: int
    x_lo: float
    x_hi: float
    gamma_k: float


@dataclass(frozen=True)
class Tile:
    k: int
    j: int
    n: int
    x_lo: float
    x_hi: float
    gamma_k: float
    delta: float
    beta: float
    model: CurveModel = field(repr=False, compare=False)

    @property
    def index(self) -> tuple[int, int, int]:
        return (self.k, self.j, self.n)

    @property
    def z_lo(self) -> float:
        return self.n * self.beta

    @property
    def z_hi(self) -> float:
        return (self.n + 1) * self.beta


@dataclass(frozen=True)
class TileSet:
    """All tiles Gamma_{kjn}, addressable by the triple (k, j, n)."""

    params: DecompositionParams
    model: CurveModel
    cells: tuple[Cell, ...]

    @cached_property
    def _cell_index(self) -> dict[tuple[int, int], int]:
        return {(c.k, c.j): i for i, c in enumerate(self.cells)}

    @property
    def n_range(self) -> range:
        return self.params.n_range

    @property
    def levels(self) -> list[int]:
        return sorted({c.k for c in self.cells})

    def level_cells(self, k: int) -> list[Cell]:
        return [c for c in self.cells if c.k == k]

    def cell(self, k: int, j: int) -> Cell:
        try:
            return self.cells[self._cell_index[(k, j)]]
        except KeyError:
            raise InputError(f"no lateral cell (k={k}, j={j})") from None

    def cell_id(self, k: int, j: int) -> int:
        return self._cell_index[(k, j)]

    def has(self, index) -> bool:
        k, j, n = index
        return (k, j) in self._cell_index and n in self.n_range

    def __getitem__(self, index) -> Tile:
        k, j, n = index
        if n not in self.n_range:
            raise InputError(f"height index n={n} outside {self.n_range.start}..{self.n_range.stop - 1}")
        c = self.cell(k, j)
        p = self.params
        return Tile(k, j, n, c.x_lo, c.x_hi, c.gamma_k, p.delta, p.beta, self.model)

    def __iter__(self) -> Iterator[Tile]:
        for c in self.cells:
            for n in self.n_range:
                yield self[(c.k, c.j, n)]

    def __len__(self) -> int:
        return len(self.cells) * len(self.n_range)

    @property
    def x_cover(self) -> float:
        """Right end of the x-range covered by the tiling."""
        return max(c.x_hi for c in self.cells)

    def locate(self, point) -> list[tuple[int, int, int]]:
        """Indices of all tiles containing ``point``."""
        return [t.index for t in self._candidates(point) if tile_membership(t, point)]

    def _candidates(self, point) -> Iterator[Tile]:
        x, _, z = point
        for c in self.cells:
            if c.x_lo - _TOL <= x <= c.x_hi + _TOL:
                for n in self.n_range:
                    if n * self.params.beta - _TOL <= z <= (n + 1) * self.params.beta + _TOL:
                        yield self[(c.k, c.j, n)]


def build_decomposition(model: CurveModel, params: DecompositionParams) -> TileSet:
    """Lateral cells for every level k < ceil(log2(1/gamma)); widths gamma_k, last cell clamped."""
    if params.m != model.m:
        raise InputError(f"params built for m={params.m} but model has m={model.m}")
    cells = []
    for k in range(params.level_count):
        lo, hi = params.level_bounds(k)
        gk = params.gamma_k(k)
        hi = min(hi, 1.0)
        for j in range(params.lateral_count(k)):
            x_lo = lo + j * gk
            if x_lo >= hi - _TOL * gk:
                break
            cells.append(Cell(k, j, x_lo, min(x_lo + gk, hi), gk))
    if not cells:
        raise InputError("delta too large: no tiles")
    return TileSet(params, model, tuple(cells))


def tile_membership(tile: Tile, point) -> bool:
    """True iff n beta <= z <= (n+1) beta, Phi(x/z) <= y/z <= Phi(x/z) + delta, x_lo <= x < x_hi."""
    x, y, z = (float(v) for v in point)
    if not (tile.z_lo <= z <= tile.z_hi):
        return False
    if not (tile.x_lo <= x < tile.x_hi):
        return False
    base = float(tile.model.poly(x / z))
    return base <= y / z <= base + tile.delta


def bump_eval(tile: Tile, point) -> float:
    """Product cutoff equal to 1 on the tile and vanishing outside its 5/4-enlargement.

    The height coordinate is normalised as (y/z - Phi(x/z))/delta, the same
    quantity the tile definition bounds; Phi is evaluated by polynomial extension.
    """
    x, y, z = (np.asarray(v, dtype=float) for v in point)
    fx = eta((x - tile.x_lo) / tile.gamma_k)
    fz = eta((z - tile.z_lo) / tile.beta)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (y / z - tile.model.poly(x / z)) / tile.delta
    fy = np.where(z > 0, eta(np.nan_to_num(t, nan=10.0, posinf=10.0, neginf=-10.0)), 0.0)
    out = fx * fy * fz
    return float(out) if out.ndim == 0 else out


def in_enlarged_tile(tile: Tile, point) -> bool:
    """Membership in the 5/4-enlargement of the tile (the bump support)."""
    x, y, z = (float(v) for v in point)
    if z <= 0:
        return False
    t = (y / z - float(tile.model.poly(x / z))) / tile.delta
    return (abs((x - tile.x_lo) / tile.gamma_k) <= 1.25 and abs(t) <= 1.25
            and abs((z - tile.z_lo) / tile.beta) <= 1.25)


@dataclass(frozen=True)
class DoubledTile:
    """Union of the in-range neighbours of a tile shifted vertically by v*delta."""

    center: tuple[int, int, int]
    parts: tuple[tuple[tuple[int, int, int], int], ...]
    tileset: TileSet = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.parts)

    def contains(self, point) -> bool:
        x, y, z = point
        d = self.tileset.params.delta
        for idx, v in self.parts:
            if tile_membership(self.tileset[idx], (x, y - v * d, z)):
                return True
        return False


def doubled_tile(tileset: TileSet, alpha) -> DoubledTile:
    k, j, n = alpha
    if not tileset.has(alpha):
        raise InputError(f"invalid tile index {alpha}")
    parts = []
    for u in (-1, 0, 1):
        for w in (-1, 0, 1):
            idx = (k, j + u, n + w)
            if not tileset.has(idx):
                continue
            for v in (-1, 0, 1):
                parts.append((idx, v))
    return DoubledTile(tuple(alpha), tuple(parts), tileset)


def sample_cone_points(tileset: TileSet, count: int, seed: int) -> np.ndarray:
    """Quasi-random points of the thickened cone section with x below the covered range."""
    from .sampling import halton

    u = halton(3, count, seed)
    x = u[:, 0] * tileset.x_cover
    z = 1.0 + u[:, 2]
    y = z * (tileset.model.poly(x / z) + tileset.params.delta * u[:, 1])
    return np.column_stack([x, y, z])
