"""Exhaustive exact minimization over all subsets of tiny grids.

Ground truth for the min-cut and relaxation solvers: enumerates every one of
the 2^N cell subsets (N capped at 22), evaluates the requested energy, and
reports the exact minimum together with *all* minimizing masks and their
lattice envelope.  A vectorized sweep locates near-minimal candidates; the
winners are then re-evaluated through the canonical energy functions so that
reported values are bit-identical to what the solvers are compared against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import energy as en
from .distance import signed_distance
from .grid import BetaField, ScalarField, SetMask, mask_from_array

__all__ = ["OracleReport", "enumerate_masks"]

MAX_CELLS = 22
_CHUNK = 1 << 16
_FILTER_TOL = 1e-6


@dataclass(frozen=True)
class OracleReport:
    min_energy: float
    minimizers: tuple[SetMask, ...]
    lattice_min: SetMask
    lattice_max: SetMask
    subsets_examined: int

    def to_json_record(self) -> dict:
        def bits(m: SetMask) -> str:
            return "".join("1" if b else "0" for b in m.cells.ravel())

        return {
            "min_energy": self.min_energy,
            "subsets_examined": self.subsets_examined,
            "n_minimizers": len(self.minimizers),
            "minimizers": [bits(m) for m in self.minimizers],
            "lattice_min": bits(self.lattice_min),
            "lattice_max": bits(self.lattice_max),
        }


def _canonical_energy(
    mask: SetMask,
    objective: str,
    prev: SetMask,
    beta: BetaField,
    lam: float,
    stencil: en.Stencil,
    dist: ScalarField | None,
) -> float:
    if objective == "atw":
        return en.atw(mask, prev, beta, lam, stencil, dist).atw_total
    return en.capillary(mask, beta, stencil).capillary_total


def enumerate_masks(
    prev: SetMask,
    beta: BetaField,
    lam: float,
    stencil: en.Stencil,
    objective: str = "atw",
) -> OracleReport:
    """Exhaustive minimum of the chosen objective over all cell subsets.

    ``objective`` is one of "atw" (one-step energy relative to ``prev``),
    "capillary", or "constrained-capillary" (capillary restricted to
    supersets of ``prev``).
    """
    if objective not in ("atw", "capillary", "constrained-capillary"):
        raise ValueError(f"unknown objective {objective!r}")
    grid = prev.grid
    n = grid.n_cells
    if n > MAX_CELLS:
        raise ValueError(f"grid has {n} cells, oracle cap is {MAX_CELLS}")
    if beta.grid != grid:
        raise ValueError("beta lives on a different grid")

    pairs = en.stencil_pairs(grid, stencil)
    prev_bits = prev.cells.ravel()
    dist = None
    dvals = None
    if objective == "atw":
        if prev.is_empty:
            raise ValueError("atw objective needs a nonempty previous set")
        dist = signed_distance(prev)
        dvals = np.abs(dist.values.ravel()) * grid.cell_volume * lam

    beta_cells = np.zeros(grid.extents)
    bcols = (slice(None),) * (grid.d - 1) + (0,)
    beta_cells[bcols] = beta.values
    beta_flat = beta_cells.ravel() * grid.face_area
    bottom_flat = np.zeros(grid.extents, dtype=bool)
    bottom_flat[bcols] = True
    bottom_flat = bottom_flat.ravel()

    constrained = objective == "constrained-capillary"
    total = 1 << n
    examined = 0
    weights_bits = 1 << np.arange(n, dtype=np.int64)

    def chunk_energies(start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
        codes = np.arange(start, stop, dtype=np.int64)
        bits = (codes[:, None] & weights_bits[None, :]) != 0
        if constrained and prev_bits.any():
            keep = np.all(bits[:, prev_bits], axis=1)
            codes = codes[keep]
            bits = bits[keep]
        if not len(codes):
            return codes, np.zeros(0)
        e = np.zeros(len(codes))
        for ps in pairs:
            if ps.ia.size:
                e += ps.weight * np.count_nonzero(bits[:, ps.ia] ^ bits[:, ps.ib], axis=1)
            if ps.bnd.size:
                e += ps.weight * np.count_nonzero(bits[:, ps.bnd], axis=1)
        e -= bits[:, bottom_flat].astype(np.float64) @ beta_flat[bottom_flat]
        if dvals is not None:
            e += (bits ^ prev_bits[None, :]).astype(np.float64) @ dvals
        return codes, e

    best = np.inf
    for start in range(0, total, _CHUNK):
        codes, e = chunk_energies(start, min(start + _CHUNK, total))
        examined += len(codes)
        if len(codes):
            best = min(best, float(e.min()))
    candidates: list[int] = []
    for start in range(0, total, _CHUNK):
        codes, e = chunk_energies(start, min(start + _CHUNK, total))
        if len(codes):
            candidates.extend(int(c) for c in codes[e <= best + _FILTER_TOL])

    # canonical re-evaluation of the shortlisted masks
    exact: dict[int, float] = {}
    for code in candidates:
        cells = ((code & weights_bits) != 0).reshape(grid.extents)
        mask = mask_from_array(grid, cells)
        exact[code] = _canonical_energy(mask, objective, prev, beta, lam, stencil, dist)
    min_energy = min(exact.values())
    winners = sorted(code for code, v in exact.items() if v == min_energy)
    minimizers = tuple(
        mask_from_array(grid, ((code & weights_bits) != 0).reshape(grid.extents))
        for code in winners
    )

    bits_min = np.ones(n, dtype=bool)
    bits_max = np.zeros(n, dtype=bool)
    for m in minimizers:
        flat = m.cells.ravel()
        bits_min &= flat
        bits_max |= flat
    lattice_min = mask_from_array(grid, bits_min.reshape(grid.extents))
    lattice_max = mask_from_array(grid, bits_max.reshape(grid.extents))

    for mm, name in ((lattice_min, "intersection"), (lattice_max, "union")):
        v = _canonical_energy(mm, objective, prev, beta, lam, stencil, dist)
        if v != min_energy:
            raise RuntimeError(
                f"lattice {name} of minimizers is not a minimizer "
                f"({v} != {min_energy}); submodular closure violated"
            )
    # pairwise lattice closure spot-check
    cap = min(len(minimizers), 16)
    for i in range(cap):
        for j in range(i + 1, cap):
            for m in (
                minimizers[i].intersection(minimizers[j]),
                minimizers[i].union(minimizers[j]),
            ):
                v = _canonical_energy(m, objective, prev, beta, lam, stencil, dist)
                if v != min_energy:
                    raise RuntimeError("pairwise lattice closure violated")

    return OracleReport(
        min_energy=min_energy,
        minimizers=minimizers,
        lattice_min=lattice_min,
        lattice_max=lattice_max,
        subsets_examined=examined,
    )
