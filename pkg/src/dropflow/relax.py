"""Convex level-set solver for the one-step energy over u in [0, 1].

First-order primal-dual iteration on the anisotropic-TV-plus-linear form,
with a certified duality gap from the standard primal/dual pair.  Any level
set of an exact minimizer is a minimizer of the binary problem, so the
thresholded field cross-validates the min-cut route.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distance import signed_distance
from .energy import Stencil, stencil_pairs
from .grid import BetaField, ScalarField, SetMask, mask_from_array

__all__ = ["RelaxSolution", "minimize_levelset", "threshold"]


@dataclass(frozen=True)
class RelaxSolution:
    """Relaxed minimizer with its optimality certificate.

    ``primal`` is reported in the one-step (ATW) gauge, i.e. including the
    constant term that aligns it with the binary energy of the min-cut
    route, so the certified interval [primal - gap, primal] brackets the
    binary optimum.
    """

    u: ScalarField
    primal: float
    gap: float
    iterations: int
    converged: bool
    trace: tuple[tuple[int, float, float], ...] = field(repr=False, default=())


def _operator(grid, stencil):
    pairs = stencil_pairs(grid, stencil)
    ia = np.concatenate([ps.ia for ps in pairs]) if pairs else np.zeros(0, np.int64)
    ib = np.concatenate([ps.ib for ps in pairs])
    w_int = np.concatenate([np.full(ps.ia.shape, ps.weight) for ps in pairs])
    bnd = np.concatenate([ps.bnd for ps in pairs])
    w_bnd = np.concatenate([np.full(ps.bnd.shape, ps.weight) for ps in pairs])
    n = grid.n_cells
    incid = np.bincount(ia, minlength=n) + np.bincount(ib, minlength=n)
    incid = 2.0 * incid + np.bincount(bnd, minlength=n)
    l2 = float(incid.max()) if n else 1.0
    return ia, ib, w_int, bnd, w_bnd, max(l2, 1.0)


def minimize_levelset(
    prev: SetMask,
    beta: BetaField,
    lam: float,
    stencil: Stencil,
    tol: float = 1e-8,
    max_iter: int = 200_000,
    record_trace: bool = False,
) -> RelaxSolution:
    """Minimize the relaxed one-step energy to a certified duality gap.

    Warm-started at the indicator of ``prev`` with zero duals.  Returns when
    the gap drops below ``tol`` or after ``max_iter`` iterations (reported
    via ``converged``, not an error).
    """
    if not (tol > 0):
        raise ValueError("tol must be positive")
    grid = prev.grid
    if beta.grid != grid:
        raise ValueError("beta lives on a different grid")
    if lam > 0 and prev.is_empty:
        raise ValueError("relaxation from the empty set is degenerate; handle upstream")

    n = grid.n_cells
    a = np.zeros(n)
    offset = 0.0
    if lam > 0:
        dist = signed_distance(prev)
        dv = dist.values.ravel()
        a += lam * dv * grid.cell_volume
        offset = -lam * float(np.sum(dv[prev.cells.ravel()])) * grid.cell_volume
    bcols = (slice(None),) * (grid.d - 1) + (0,)
    beta_cells = np.zeros(grid.extents)
    beta_cells[bcols] = beta.values
    bsel = np.zeros(grid.extents, dtype=bool)
    bsel[bcols] = True
    a -= np.where(bsel, beta_cells, 0.0).ravel() * grid.face_area

    ia, ib, w_int, bnd, w_bnd, l2 = _operator(grid, stencil)
    sigma = tau = 1.0 / np.sqrt(l2)

    u = prev.cells.ravel().astype(np.float64)
    u_bar = u.copy()
    p_int = np.zeros(ia.shape[0])
    p_bnd = np.zeros(bnd.shape[0])

    def div_p(pi, pb):
        out = np.bincount(ib, weights=pi, minlength=n) - np.bincount(
            ia, weights=pi, minlength=n
        )
        out += np.bincount(bnd, weights=pb, minlength=n)
        return out

    def primal_value(uv):
        tv = float(np.sum(w_int * np.abs(uv[ib] - uv[ia])))
        tv += float(np.sum(w_bnd * np.abs(uv[bnd])))
        return tv + float(np.dot(a, uv))

    def dual_value(pi, pb):
        ktp = div_p(pi, pb)
        return -float(np.sum(np.maximum(0.0, -ktp - a)))

    trace: list[tuple[int, float, float]] = []
    gap = np.inf
    it = 0
    check_every = 25
    while it < max_iter:
        z_int = u_bar[ib] - u_bar[ia]
        z_bnd = u_bar[bnd]
        p_int = np.clip(p_int + sigma * z_int, -w_int, w_int)
        p_bnd = np.clip(p_bnd + sigma * z_bnd, -w_bnd, w_bnd)
        u_new = np.clip(u - tau * (div_p(p_int, p_bnd) + a), 0.0, 1.0)
        u_bar = 2.0 * u_new - u
        u = u_new
        it += 1
        if it % check_every == 0 or it == max_iter:
            pv = primal_value(u)
            gap = pv - dual_value(p_int, p_bnd)
            if record_trace:
                trace.append((it, pv + offset, gap))
            if gap <= tol:
                break

    pv = primal_value(u)
    gap = pv - dual_value(p_int, p_bnd)
    field_u = ScalarField(grid, u.reshape(grid.extents))
    return RelaxSolution(
        u=field_u,
        primal=pv + offset,
        gap=max(gap, 0.0),
        iterations=it,
        converged=gap <= tol,
        trace=tuple(trace),
    )


def threshold(u: ScalarField, t: float) -> SetMask:
    """Super-level set {u > t} for a threshold strictly inside (0, 1)."""
    if not (0.0 < t < 1.0):
        raise ValueError(f"threshold must lie in (0, 1), got {t}")
    return mask_from_array(u.grid, u.values > t)
