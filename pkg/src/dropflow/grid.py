"""Half-space lattice, binary set masks, scalar fields and set algebra.

The computational domain is a bounded box of cubic cells inside the upper
half-space.  The last axis is vertical: cell ``(..., j)`` occupies heights
``[j*h, (j+1)*h)``, so every cell center sits strictly above the supporting
plane.  Everything outside the box is implicitly *not* in the set, which makes
all sets bounded by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "HalfSpaceGrid",
    "SetMask",
    "ScalarField",
    "BetaField",
    "make_grid",
    "cap_mask",
    "box_mask",
    "mask_from_array",
    "empty_mask",
    "full_mask",
    "sym_diff_volume",
]


@dataclass(frozen=True)
class HalfSpaceGrid:
    """Uniform cell grid on a box inside the upper half-space.

    ``d`` is the ambient dimension (2 or 3), ``extents`` the number of cells
    per axis, ``h`` the cell spacing.  The bottom faces of the lowest cell row
    lie on the supporting plane (the boundary of the half-space).
    """

    d: int
    extents: tuple[int, ...]
    h: float

    def __post_init__(self) -> None:
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if len(self.extents) != self.d:
            raise ValueError(
                f"extents {self.extents} do not match dimension {self.d}"
            )
        if any(int(n) != n or n < 1 for n in self.extents):
            raise ValueError(f"extents must be positive integers, got {self.extents}")
        if not (self.h > 0):
            raise ValueError(f"spacing must be positive, got {self.h}")
        object.__setattr__(self, "extents", tuple(int(n) for n in self.extents))
        object.__setattr__(self, "h", float(self.h))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.extents))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    @property
    def face_area(self) -> float:
        return self.h ** (self.d - 1)

    def cell_centers(self) -> np.ndarray:
        """Array of shape ``extents + (d,)`` with the center of each cell."""
        axes = [(np.arange(n) + 0.5) * self.h for n in self.extents]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HalfSpaceGrid):
            return NotImplemented
        return (
            self.d == other.d
            and self.extents == other.extents
            and self.h == other.h
        )

    def __hash__(self) -> int:
        return hash((self.d, self.extents, self.h))


def _check_same_grid(a: "SetMask | ScalarField", b: "SetMask | ScalarField") -> None:
    if a.grid != b.grid:
        raise ValueError("operands live on different grids")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SetMask:
    """A bounded set of cells: one boolean per cell, True = cell in the set."""

    grid: HalfSpaceGrid
    cells: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        cells = np.asarray(self.cells, dtype=bool)
        if cells.shape != self.grid.extents:
            raise ValueError(
                f"cell array shape {cells.shape} does not match grid extents "
                f"{self.grid.extents}"
            )
        object.__setattr__(self, "cells", _frozen(cells))

    @property
    def cell_count(self) -> int:
        return int(np.count_nonzero(self.cells))

    @property
    def volume(self) -> float:
        return self.cell_count * self.grid.cell_volume

    @property
    def is_empty(self) -> bool:
        return not self.cells.any()

    def union(self, other: "SetMask") -> "SetMask":
        _check_same_grid(self, other)
        return SetMask(self.grid, self.cells | other.cells)

    def intersection(self, other: "SetMask") -> "SetMask":
        _check_same_grid(self, other)
        return SetMask(self.grid, self.cells & other.cells)

    def difference(self, other: "SetMask") -> "SetMask":
        _check_same_grid(self, other)
        return SetMask(self.grid, self.cells & ~other.cells)

    def complement_in_box(self) -> "SetMask":
        return SetMask(self.grid, ~self.cells)

    def issubset(self, other: "SetMask") -> bool:
        _check_same_grid(self, other)
        return bool(np.all(~self.cells | other.cells))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SetMask):
            return NotImplemented
        return self.grid == other.grid and bool(np.array_equal(self.cells, other.cells))

    def __hash__(self) -> int:
        return hash((self.grid, self.cells.tobytes()))

    def wetted_columns(self) -> np.ndarray:
        """Boolean array over bottom columns: True where the bottom cell is in the set."""
        return self.cells[..., 0].copy()


@dataclass(frozen=True)
class ScalarField:
    """Real-valued per-cell data.  +inf is allowed (distance to the empty set)."""

    grid: HalfSpaceGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.grid.extents:
            raise ValueError(
                f"value array shape {values.shape} does not match grid extents "
                f"{self.grid.extents}"
            )
        if np.isnan(values).any():
            raise ValueError("scalar field contains NaN")
        object.__setattr__(self, "values", _frozen(values))


@dataclass(frozen=True)
class BetaField:
    """Contact-angle cosine sampled at the bottom-face center of each column.

    Admissibility requires -1 <= beta <= 1 - 2*kappa everywhere, with
    kappa in (0, 1/2].
    """

    grid: HalfSpaceGrid
    values: np.ndarray = field(repr=False)
    kappa: float = 0.25

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        expected = self.grid.extents[:-1]
        if values.shape != expected:
            raise ValueError(
                f"beta array shape {values.shape} does not match column shape {expected}"
            )
        if not (0.0 < self.kappa <= 0.5):
            raise ValueError(f"kappa must lie in (0, 1/2], got {self.kappa}")
        if np.isnan(values).any():
            raise ValueError("beta field contains NaN")
        if np.min(values) < -1.0 or np.max(values) > 1.0 - 2.0 * self.kappa:
            raise ValueError(
                "beta out of the admissible range "
                f"[-1, 1-2*kappa] = [-1, {1.0 - 2.0 * self.kappa}]"
            )
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "kappa", float(self.kappa))

    @classmethod
    def constant(cls, grid: HalfSpaceGrid, value: float, kappa: float = 0.25) -> "BetaField":
        return cls(grid, np.full(grid.extents[:-1], float(value)), kappa)

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())


def make_grid(d: int, extents: Sequence[int], h: float) -> HalfSpaceGrid:
    """Build a grid; rejects d not in {2,3}, nonpositive extents or spacing."""
    return HalfSpaceGrid(d=int(d), extents=tuple(extents), h=float(h))


def _as_boundary_point(grid: HalfSpaceGrid, center: Sequence[float]) -> np.ndarray:
    pt = np.asarray(center, dtype=np.float64)
    if pt.shape == (grid.d - 1,):
        pt = np.concatenate([pt, [0.0]])
    if pt.shape != (grid.d,):
        raise ValueError(
            f"center must have {grid.d} (or {grid.d - 1} horizontal) coordinates"
        )
    if pt[-1] != 0.0:
        raise ValueError("center must lie on the supporting plane (last coordinate 0)")
    return pt


def cap_mask(grid: HalfSpaceGrid, center_on_boundary: Sequence[float], radius: float) -> SetMask:
    """Digitized spherical cap: cells whose centers lie inside the half-ball.

    The ball is centered at a point of the supporting plane; an empty result
    (radius below half a cell) is returned, not an error.
    """
    if not (radius > 0):
        raise ValueError(f"radius must be positive, got {radius}")
    pt = _as_boundary_point(grid, center_on_boundary)
    centers = grid.cell_centers()
    dist2 = ((centers - pt) ** 2).sum(axis=-1)
    return SetMask(grid, dist2 < radius * radius)


def box_mask(
    grid: HalfSpaceGrid, lo: Sequence[float], hi: Sequence[float]
) -> SetMask:
    """Digitized axis-aligned box: cells whose centers lie in [lo, hi)."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if lo.shape != (grid.d,) or hi.shape != (grid.d,):
        raise ValueError(f"corner points must have {grid.d} coordinates")
    centers = grid.cell_centers()
    inside = np.all((centers >= lo) & (centers < hi), axis=-1)
    return SetMask(grid, inside)


def mask_from_array(grid: HalfSpaceGrid, cells: Iterable) -> SetMask:
    return SetMask(grid, np.asarray(cells, dtype=bool))


def empty_mask(grid: HalfSpaceGrid) -> SetMask:
    return SetMask(grid, np.zeros(grid.extents, dtype=bool))


def full_mask(grid: HalfSpaceGrid) -> SetMask:
    return SetMask(grid, np.ones(grid.extents, dtype=bool))


def sym_diff_volume(a: SetMask, b: SetMask) -> float:
    """Volume of the symmetric difference; the metric of the time-stepping scheme."""
    _check_same_grid(a, b)
    return int(np.count_nonzero(a.cells ^ b.cells)) * a.grid.cell_volume
