"""Exact binary energy minimization via s/t max-flow.

The one-step energy is submodular: pairwise stencil terms plus per-cell
linear terms.  It maps onto an s/t cut graph whose finite cuts are in
bijection with masks, with cut value + recorded offset equal to the energy.
Max flow is computed with a deterministic array-based Dinic; the minimal and
maximal minimizers are read off the final residual graph by reachability.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .distance import signed_distance
from .energy import Stencil, stencil_pairs
from .grid import BetaField, ScalarField, SetMask, mask_from_array

__all__ = [
    "EnergyGraph",
    "CutResult",
    "build_graph",
    "solve_min_cut",
    "minimal_minimizer",
    "maximal_minimizer",
    "dimacs_dump",
]


@dataclass
class EnergyGraph:
    """s/t cut encoding of a one-step energy.

    Arcs are stored in pairs (arc 2k and 2k+1 are mutual reverses); ``cap``
    holds residual capacities once solved.  ``offset`` is the constant such
    that cut value + offset equals the energy of the corresponding mask.
    """

    grid: object
    n_cells: int
    source: int
    sink: int
    arc_to: np.ndarray = field(repr=False)
    cap: np.ndarray = field(repr=False)
    node_ptr: np.ndarray = field(repr=False)
    adj: np.ndarray = field(repr=False)
    offset: float = 0.0
    big: float = 0.0
    solved: bool = False
    flow: float = 0.0
    phases: int = 0
    augmentations: int = 0

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 2

    @property
    def n_arcs(self) -> int:
        return int(self.arc_to.shape[0])


@dataclass(frozen=True)
class CutResult:
    value: float
    offset: float
    mask: SetMask
    phases: int
    augmentations: int

    @property
    def energy(self) -> float:
        return self.value + self.offset


def build_graph(
    prev: SetMask,
    beta: BetaField,
    lam: float,
    stencil: Stencil,
    constraints: SetMask | None = None,
    dist: ScalarField | None = None,
    corrupt_unary_sign: bool = False,
) -> EnergyGraph:
    """Assemble the cut graph of the one-step energy around ``prev``.

    With ``lam == 0`` the fidelity term is absent (pure capillary energy;
    combine with ``constraints`` for the constrained minimization).  The
    previous set must be nonempty when ``lam > 0``.  ``corrupt_unary_sign``
    deliberately flips one linear coefficient; it exists as a negative
    control for the oracle comparison harness.
    """
    grid = prev.grid
    if beta.grid != grid:
        raise ValueError("beta lives on a different grid")
    if constraints is not None and constraints.grid != grid:
        raise ValueError("constraint mask lives on a different grid")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam > 0 and prev.is_empty:
        raise ValueError(
            "one-step energy from the empty set is degenerate; handle it upstream"
        )

    n = grid.n_cells
    unary = np.zeros(n)
    offset = 0.0
    if lam > 0:
        if dist is None:
            dist = signed_distance(prev)
        elif dist.grid != grid:
            raise ValueError("distance field lives on a different grid")
        dv = dist.values.ravel()
        unary += lam * dv * grid.cell_volume
        offset += -lam * float(np.sum(dv[prev.cells.ravel()])) * grid.cell_volume

    bcols = (slice(None),) * (grid.d - 1) + (0,)
    bottom = np.zeros(grid.extents, dtype=bool)
    bottom[bcols] = True
    beta_cells = np.zeros(grid.extents)
    beta_cells[bcols] = beta.values
    unary -= np.where(bottom, beta_cells, 0.0).ravel() * grid.face_area

    pairs = stencil_pairs(grid, stencil)
    for ps in pairs:
        np.add.at(unary, ps.bnd, ps.weight)

    if corrupt_unary_sign:
        k = int(np.argmax(np.abs(unary)))
        unary[k] = -unary[k]

    mass = float(np.sum(np.abs(unary)))
    for ps in pairs:
        mass += ps.weight * len(ps.ia)
    big = 1.0 + mass + abs(offset)

    s = n
    t = n + 1
    tails = []
    heads = []
    caps = []

    def add_pair(u: int | np.ndarray, v: int | np.ndarray, c) -> None:
        tails.append(np.asarray(u, dtype=np.int64).ravel())
        heads.append(np.asarray(v, dtype=np.int64).ravel())
        caps.append(np.asarray(c, dtype=np.float64).ravel())

    for ps in pairs:
        if ps.ia.size:
            w = np.full(ps.ia.shape, ps.weight)
            add_pair(ps.ia, ps.ib, w)
            add_pair(ps.ib, ps.ia, w)

    pos = np.flatnonzero(unary > 0)
    neg = np.flatnonzero(unary < 0)
    if pos.size:
        add_pair(pos, np.full(pos.shape, t), unary[pos])
        add_pair(np.full(pos.shape, t), pos, np.zeros(pos.shape))
    if neg.size:
        add_pair(np.full(neg.shape, s), neg, -unary[neg])
        add_pair(neg, np.full(neg.shape, s), np.zeros(neg.shape))
        offset += float(np.sum(unary[neg]))
    if constraints is not None:
        fixed = np.flatnonzero(constraints.cells.ravel())
        if fixed.size:
            add_pair(np.full(fixed.shape, s), fixed, np.full(fixed.shape, big))
            add_pair(fixed, np.full(fixed.shape, s), np.zeros(fixed.shape))

    if tails:
        tails_all, heads_all, caps_all = _interleave_pairs(tails, heads, caps)
    else:
        tails_all = np.zeros(0, dtype=np.int64)
        heads_all = np.zeros(0, dtype=np.int64)
        caps_all = np.zeros(0, dtype=np.float64)

    n_nodes = n + 2
    order = np.argsort(tails_all, kind="stable")
    adj = order.astype(np.int64)
    node_ptr = np.searchsorted(tails_all[order], np.arange(n_nodes + 1)).astype(np.int64)

    return EnergyGraph(
        grid=grid,
        n_cells=n,
        source=s,
        sink=t,
        arc_to=heads_all,
        cap=caps_all,
        node_ptr=node_ptr,
        adj=adj,
        offset=offset,
        big=big,
    )


def _interleave_pairs(tails, heads, caps):
    """Chunks arrive as alternating forward/reverse blocks of equal length;
    interleave them so that arc 2k+1 is the reverse of arc 2k."""
    fw_t, fw_h, fw_c = [], [], []
    bw_t, bw_h, bw_c = [], [], []
    for i in range(0, len(tails), 2):
        fw_t.append(tails[i]); fw_h.append(heads[i]); fw_c.append(caps[i])
        bw_t.append(tails[i + 1]); bw_h.append(heads[i + 1]); bw_c.append(caps[i + 1])
    ft = np.concatenate(fw_t); fh = np.concatenate(fw_h); fc = np.concatenate(fw_c)
    bt = np.concatenate(bw_t); bh = np.concatenate(bw_h); bc = np.concatenate(bw_c)
    m = len(ft)
    t_all = np.empty(2 * m, dtype=np.int64)
    h_all = np.empty(2 * m, dtype=np.int64)
    c_all = np.empty(2 * m, dtype=np.float64)
    t_all[0::2] = ft; t_all[1::2] = bt
    h_all[0::2] = fh; h_all[1::2] = bh
    c_all[0::2] = fc; c_all[1::2] = bc
    return t_all, h_all, c_all


@njit(cache=True)
def _dinic(node_ptr, adj, arc_to, cap, s, t):  # pragma: no cover - jitted
    n = node_ptr.shape[0] - 1
    level = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    it = np.empty(n, dtype=np.int64)
    stack_nodes = np.empty(n + 1, dtype=np.int64)
    stack_arcs = np.empty(n + 1, dtype=np.int64)
    flow = 0.0
    phases = 0
    augmentations = 0
    while True:
        for i in range(n):
            level[i] = -1
        level[s] = 0
        qh = 0
        qt = 0
        queue[qt] = s
        qt += 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            for k in range(node_ptr[u], node_ptr[u + 1]):
                a = adj[k]
                v = arc_to[a]
                if cap[a] > 0.0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
        if level[t] < 0:
            break
        phases += 1
        for i in range(n):
            it[i] = node_ptr[i]
        depth = 0
        stack_nodes[0] = s
        while True:
            u = stack_nodes[depth]
            if u == t:
                bott = np.inf
                for k in range(1, depth + 1):
                    a = stack_arcs[k]
                    if cap[a] < bott:
                        bott = cap[a]
                for k in range(1, depth + 1):
                    a = stack_arcs[k]
                    cap[a] -= bott
                    cap[a ^ 1] += bott
                flow += bott
                augmentations += 1
                depth = 0
                continue
            advanced = False
            while it[u] < node_ptr[u + 1]:
                a = adj[it[u]]
                v = arc_to[a]
                if cap[a] > 0.0 and level[v] == level[u] + 1:
                    depth += 1
                    stack_nodes[depth] = v
                    stack_arcs[depth] = a
                    advanced = True
                    break
                it[u] += 1
            if advanced:
                continue
            if depth == 0:
                break
            level[u] = -2  # dead end this phase
            depth -= 1
            it[stack_nodes[depth]] += 1
    return flow, phases, augmentations


@njit(cache=True)
def _reach_from_source(node_ptr, adj, arc_to, cap, s):  # pragma: no cover
    n = node_ptr.shape[0] - 1
    seen = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    qh = 0
    qt = 0
    seen[s] = True
    queue[qt] = s
    qt += 1
    while qh < qt:
        u = queue[qh]
        qh += 1
        for k in range(node_ptr[u], node_ptr[u + 1]):
            a = adj[k]
            v = arc_to[a]
            if cap[a] > 0.0 and not seen[v]:
                seen[v] = True
                queue[qt] = v
                qt += 1
    return seen


@njit(cache=True)
def _reach_to_sink(node_ptr, adj, arc_to, cap, t):  # pragma: no cover
    n = node_ptr.shape[0] - 1
    seen = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    qh = 0
    qt = 0
    seen[t] = True
    queue[qt] = t
    qt += 1
    while qh < qt:
        v = queue[qh]
        qh += 1
        for k in range(node_ptr[v], node_ptr[v + 1]):
            a = adj[k]
            u = arc_to[a]
            # u -> v is the reverse arc of v -> u; residual(u -> v) = cap[a^1]
            if cap[a ^ 1] > 0.0 and not seen[u]:
                seen[u] = True
                queue[qt] = u
                qt += 1
    return seen


def solve_min_cut(g: EnergyGraph, selection: str = "minimal") -> CutResult:
    """Run max-flow and return the globally minimal-energy mask.

    Deterministic for a given graph.  The returned mask is the minimal
    minimizer unless ``selection="maximal"``.
    """
    if not g.solved:
        flow, phases, augmentations = _dinic(
            g.node_ptr, g.adj, g.arc_to, g.cap, g.source, g.sink
        )
        g.flow = float(flow)
        g.phases = int(phases)
        g.augmentations = int(augmentations)
        g.solved = True
    if selection == "minimal":
        mask = minimal_minimizer(g)
    elif selection == "maximal":
        mask = maximal_minimizer(g)
    else:
        raise ValueError(f"unknown selection {selection!r}")
    return CutResult(
        value=g.flow,
        offset=g.offset,
        mask=mask,
        phases=g.phases,
        augmentations=g.augmentations,
    )


def _require_solved(g: EnergyGraph) -> None:
    if not g.solved:
        raise ValueError("graph not solved yet; call solve_min_cut first")


def minimal_minimizer(g: EnergyGraph) -> SetMask:
    """Lattice-minimum minimizer: the source side of the residual reachability."""
    _require_solved(g)
    seen = _reach_from_source(g.node_ptr, g.adj, g.arc_to, g.cap, g.source)
    cells = np.asarray(seen[: g.n_cells]).reshape(g.grid.extents)
    return mask_from_array(g.grid, cells)


def maximal_minimizer(g: EnergyGraph) -> SetMask:
    """Lattice-maximum minimizer: complement of the nodes that still reach the sink."""
    _require_solved(g)
    seen = _reach_to_sink(g.node_ptr, g.adj, g.arc_to, g.cap, g.sink)
    cells = ~np.asarray(seen[: g.n_cells]).reshape(g.grid.extents)
    return mask_from_array(g.grid, cells)


def dimacs_dump(g: EnergyGraph) -> str:
    """Max-flow problem in DIMACS format (1-indexed), for debugging."""
    lines = [f"p max {g.n_nodes} {g.n_arcs}"]
    lines.append(f"n {g.source + 1} s")
    lines.append(f"n {g.sink + 1} t")
    tails = np.empty(g.n_arcs, dtype=np.int64)
    for u in range(g.n_nodes):
        tails[g.adj[g.node_ptr[u] : g.node_ptr[u + 1]]] = u
    for a in range(g.n_arcs):
        lines.append(f"a {tails[a] + 1} {g.arc_to[a] + 1} {g.cap[a]:.17g}")
    return "\n".join(lines) + "\n"
