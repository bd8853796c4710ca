"""Diagnostics connecting trajectories to the quantitative continuum theory.

Evaluates the closed-form constants of the density/regularity estimates,
measures Hölder moduli, distance-bound scalings, volume-fraction densities,
contact angles along the wetted line, and interface velocities against
independent curvature fits.  The Besicovitch and relative-isoperimetric
constants are configuration inputs with documented conservative defaults;
quantities involving them are reported, never used as pass/fail gates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import energy as en
from .distance import interface_faces
from .grid import BetaField, SetMask, sym_diff_volume

__all__ = [
    "TheoryConstants",
    "constants",
    "holder_modulus",
    "fit_power_law",
    "max_dist_per_step",
    "density_report",
    "DensityReport",
    "contact_angle_profile",
    "ContactAngleSample",
    "VelocitySample",
    "velocity_curvature_report",
    "VelocityReport",
    "dissipation_ledger",
    "run_report",
]

# Lebesgue measures of unit balls in dimensions 1..3
_OMEGA = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}

# conservative defaults for the constants the theory names but never evaluates
DEFAULT_BESICOVITCH = {1: 5.0, 2: 16.0}
DEFAULT_REL_ISOPERIMETRIC = {2: 1.5, 3: 1.8}


@dataclass(frozen=True)
class TheoryConstants:
    """Closed-form constants of the density estimates and their derived bounds.

    ``n`` is the hypersurface dimension (ambient dimension minus one) and
    ``kappa`` the coercivity margin of the contact cosine.  ``b_n`` is the
    Besicovitch covering constant, ``c_iso`` the relative isoperimetric
    constant of the ball in ambient dimension.
    """

    n: int
    kappa: float
    b_n: float
    c_iso: float
    R: float
    gamma: float
    C_density: float
    c_density: float
    C_flat: float
    theta: float
    alpha: float
    mu: float

    def to_json_record(self) -> dict:
        return {
            "n": self.n,
            "kappa": self.kappa,
            "besicovitch_b_n": self.b_n,
            "rel_isoperimetric_c": self.c_iso,
            "R": self.R,
            "gamma": self.gamma,
            "C_density": self.C_density,
            "c_density": self.c_density,
            "C_flat": self.C_flat,
            "theta": self.theta,
            "alpha": self.alpha,
            "mu": self.mu,
        }


def constants(
    n: int,
    kappa: float,
    b_n: float | None = None,
    c_iso: float | None = None,
) -> TheoryConstants:
    """Evaluate the closed-form constants for hypersurface dimension n.

    R bounds sqrt(lambda) times the sup of the step displacement distance;
    gamma scales the radius window of the density estimates; C/c bound the
    perimeter density from above/below; C_flat controls the L1 flatness
    estimate; theta = C_flat/kappa + 1 is the 1/2-Hölder constant of the
    limit flow; alpha bounds the time-integrated squared velocity.
    """
    if n not in (1, 2):
        raise ValueError("hypersurface dimension must be 1 or 2")
    if not (0.0 < kappa <= 0.5):
        raise ValueError("kappa must lie in (0, 1/2]")
    if b_n is None:
        b_n = DEFAULT_BESICOVITCH[n]
    if c_iso is None:
        c_iso = DEFAULT_REL_ISOPERIMETRIC[n + 1]
    if b_n <= 0 or c_iso <= 0:
        raise ValueError("covering and isoperimetric constants must be positive")
    w_n = _OMEGA[n]
    w_n1 = _OMEGA[n + 1]
    R = math.sqrt(2.0 ** (n + 3) * (w_n + (n + 1) * w_n1) / (w_n1 * kappa ** (n + 1)))
    gamma = kappa * (n + 1) / (math.sqrt(R * R + 4.0 * kappa * (n + 1)) + R)
    C_density = (n + 1) * w_n1 + 2.0 * w_n + 0.5 * kappa * (n + 1) * w_n1
    c_density = c_iso * (kappa / 4.0) ** n
    C_flat = (8.0 / kappa) ** (n + 1) * w_n1 ** (1.0 / (n + 1)) * b_n * c_iso
    theta = C_flat / kappa + 1.0
    alpha = 75.0 * ((n + 1) * w_n1 + w_n) * b_n / ((kappa / 2.0) ** (n + 1) * w_n1)
    mu = (1.0 / kappa + 2.0) ** ((n + 1) / n)
    return TheoryConstants(
        n=n,
        kappa=kappa,
        b_n=b_n,
        c_iso=c_iso,
        R=R,
        gamma=gamma,
        C_density=C_density,
        c_density=c_density,
        C_flat=C_flat,
        theta=theta,
        alpha=alpha,
        mu=mu,
    )


def holder_modulus(traj) -> float:
    """Worst ratio of symmetric difference to sqrt of the time gap.

    Normalized by the closed axis perimeter of the initial frame; pairs with
    time gaps outside (0, 1) are skipped.  Zero for constant trajectories.
    """
    masks = traj.masks
    times = [m.t for m in traj.metrics]
    if len(masks) < 2:
        raise ValueError("need at least two frames")
    p0 = en.full_perimeter(masks[0], en.Stencil.axis(masks[0].grid))
    if p0 == 0.0:
        return 0.0
    worst = 0.0
    for i in range(len(masks)):
        for j in range(i + 1, len(masks)):
            gap = abs(times[j] - times[i])
            if not (0.0 < gap < 1.0):
                continue
            worst = max(worst, sym_diff_volume(masks[i], masks[j]) / (p0 * math.sqrt(gap)))
    return worst


def max_dist_per_step(traj) -> list[float]:
    """Per-step sup of the previous-set distance over the flipped cells."""
    return [m.max_dist_on_symdiff for m in traj.metrics[1:]]


def fit_power_law(x, y) -> float:
    """Least-squares exponent of y ~ x^p on log-log axes.

    Entries with nonpositive y are dropped; fewer than three surviving
    points is a degenerate sweep and raises.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 3:
        raise ValueError("degenerate sweep: need at least 3 positive samples")
    lx = np.log(x[keep])
    ly = np.log(y[keep])
    slope = float(np.polyfit(lx, ly, 1)[0])
    return slope


@dataclass(frozen=True)
class DensityReport:
    radii: tuple[float, ...]
    min_fraction: float
    max_fraction: float
    per_radius: tuple[tuple[float, float], ...]


def density_report(
    mask: SetMask, radii, max_points: int = 2000, points: np.ndarray | None = None
) -> DensityReport:
    """Extremal volume fractions of the set in balls centered on its interface.

    Fractions use denominators clipped to the half-space and the box, so
    boundary-touching balls are not biased.  Centers default to all interface
    face centers (subsampled deterministically beyond ``max_points``); pass
    ``points`` to measure at chosen locations instead.
    """
    grid = mask.grid
    radii = tuple(float(r) for r in radii)
    if any(r < 2.0 * grid.h for r in radii):
        raise ValueError("radii below two cells are not resolvable")
    if points is not None:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, grid.d)
    else:
        faces = interface_faces(mask)
        if faces.count == 0:
            raise ValueError("empty interface")
        pts = faces.centers
        if len(pts) > max_points:
            stride = int(np.ceil(len(pts) / max_points))
            pts = pts[::stride]
    centers = grid.cell_centers().reshape(-1, grid.d)
    inside = mask.cells.ravel()
    per_radius = []
    gmin, gmax = np.inf, -np.inf
    for r in radii:
        lo, hi = np.inf, -np.inf
        for p in pts:
            d2 = ((centers - p) ** 2).sum(axis=1)
            ball = d2 < r * r
            denom = int(np.count_nonzero(ball))
            if denom == 0:
                continue
            frac = int(np.count_nonzero(ball & inside)) / denom
            lo = min(lo, frac)
            hi = max(hi, frac)
        per_radius.append((lo, hi))
        gmin = min(gmin, lo)
        gmax = max(gmax, hi)
    return DensityReport(
        radii=radii,
        min_fraction=float(gmin),
        max_fraction=float(gmax),
        per_radius=tuple(per_radius),
    )


@dataclass(frozen=True)
class ContactAngleSample:
    location: tuple[float, ...]
    cosine: float
    beta_here: float
    n_points: int
    flagged: bool


def _contact_locations(mask: SetMask) -> list[tuple[int, ...]]:
    """Bottom-row columns where the wetted footprint meets dry columns."""
    wet = mask.cells[..., 0]
    grid = mask.grid
    out = []
    if grid.d == 2:
        for i in range(grid.extents[0]):
            if not wet[i]:
                continue
            left_dry = i == 0 or not wet[i - 1]
            right_dry = i == grid.extents[0] - 1 or not wet[i + 1]
            if left_dry:
                out.append((i, 0))
            if right_dry and (i, 0) not in out:
                out.append((i, 0))
    else:
        nx, ny = grid.extents[:2]
        for i in range(nx):
            for j in range(ny):
                if not wet[i, j]:
                    continue
                nbrs = [
                    (i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1),
                ]
                if any(
                    not (0 <= a < nx and 0 <= b < ny) or not wet[a, b]
                    for a, b in nbrs
                ):
                    out.append((i, j))
    return out


def contact_angle_profile(
    mask: SetMask, beta: BetaField | None = None, window: float | None = None
) -> list[ContactAngleSample]:
    """Measured contact cosines along the contact set.

    At each contact location the nearby interface face centers (within the
    window, default six cells) are fitted with a line/plane by total least
    squares; the cosine is the vertical component of the outward unit
    normal.  Samples with too few points are flagged and carry NaN.
    """
    grid = mask.grid
    if window is None:
        window = 6.0 * grid.h
    if window < 3.0 * grid.h:
        raise ValueError("window must be at least three cells")
    if not mask.cells[..., 0].any():
        raise ValueError("mask does not touch the supporting plane")
    faces = interface_faces(mask)
    pts = faces.centers
    normals = faces.outward_normals()
    samples = []
    for loc in _contact_locations(mask):
        x0 = np.array([(loc[a] + 0.5) * grid.h for a in range(grid.d - 1)] + [0.0])
        d2 = ((pts - x0) ** 2).sum(axis=1)
        sel = d2 <= window * window
        npts = int(sel.sum())
        bh = float(beta.values[loc[: grid.d - 1]]) if beta is not None else float("nan")
        if npts < 3:
            samples.append(
                ContactAngleSample(tuple(x0), float("nan"), bh, npts, True)
            )
            continue
        cloud = pts[sel]
        centered = cloud - cloud.mean(axis=0)
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        normal = vt[-1]
        orient = normals[sel].sum(axis=0)
        if float(normal @ orient) < 0.0:
            normal = -normal
        samples.append(
            ContactAngleSample(tuple(x0), float(normal[-1]), bh, npts, False)
        )
    samples.sort(key=lambda s: s.location)
    return samples


@dataclass(frozen=True)
class VelocitySample:
    point: tuple[float, ...]
    v: float
    curvature: float
    flagged: bool


@dataclass(frozen=True)
class VelocityReport:
    samples: tuple[VelocitySample, ...] = field(repr=False)
    median_relative_deviation: float = float("nan")
    dissipation_sum: float = 0.0
    n_flagged: int = 0


def _point_signed_distance(points: np.ndarray, prev: SetMask) -> np.ndarray:
    """Signed distance of arbitrary points to the interface of ``prev``."""
    grid = prev.grid
    faces = interface_faces(prev).centers
    d = np.sqrt(
        ((points[:, None, :] - faces[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    )
    idx = np.clip(
        np.floor(points / grid.h).astype(int), 0, np.array(grid.extents) - 1
    )
    inside = prev.cells[tuple(idx.T)]
    return np.where(inside, -d, d)


def _osculating_curvature_2d(cloud: np.ndarray, outward: np.ndarray) -> float:
    """Signed curvature from a parabola fit in the local tangent frame.

    Positive where the set is locally convex (center of curvature inside).
    Exactly zero for collinear samples.
    """
    center = cloud.mean(axis=0)
    x = cloud - center
    _, _, vt = np.linalg.svd(x, full_matrices=False)
    tangent = vt[0]
    nrm = np.array([-tangent[1], tangent[0]])
    if float(nrm @ outward) < 0.0:
        nrm = -nrm
    u = x @ tangent
    w = x @ nrm
    a = np.column_stack([u * u, u, np.ones(len(u))])
    sol, *_ = np.linalg.lstsq(a, w, rcond=None)
    # graph bends away from the outward normal where the set is convex
    return float(-2.0 * sol[0])


def _osculating_curvature_3d(cloud: np.ndarray, outward: np.ndarray) -> float:
    """Signed sum of principal curvatures from a quadric fit in the tangent frame."""
    e3 = outward / np.linalg.norm(outward)
    ref = np.array([1.0, 0.0, 0.0]) if abs(e3[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(e3, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    local = (cloud - cloud.mean(axis=0)) @ np.column_stack([e1, e2, e3])
    u, v, w = local[:, 0], local[:, 1], local[:, 2]
    a = np.column_stack([u * u, u * v, v * v, u, v, np.ones(len(u))])
    sol, *_ = np.linalg.lstsq(a, w, rcond=None)
    # sum of principal curvatures = trace of the graph Hessian = 2(a_uu + a_vv),
    # negated because w is measured along the outward normal
    return float(-2.0 * (sol[0] + sol[2]))


def velocity_curvature_report(
    prev: SetMask,
    next_mask: SetMask,
    lam: float,
    window: float | None = None,
) -> VelocityReport:
    """Interface velocities against an independent curvature estimate.

    The velocity at a face center of the new set is -lambda times the signed
    distance to the previous interface; the curvature comes from a local
    osculating-circle (2D) or quadric (3D) fit over the window.  The report
    carries the per-step squared-velocity surface sum for the dissipation
    ledger.
    """
    grid = prev.grid
    if next_mask.is_empty:
        raise ValueError("new set is empty")
    if window is None:
        window = 6.0 * grid.h
    faces = interface_faces(next_mask)
    pts = faces.centers
    normals = faces.outward_normals()
    dvals = _point_signed_distance(pts, prev)
    v = -lam * dvals
    samples = []
    devs = []
    n_flagged = 0
    for i in range(len(pts)):
        d2 = ((pts - pts[i]) ** 2).sum(axis=1)
        sel = d2 <= window * window
        cloud = pts[sel]
        flagged = len(cloud) < (3 if grid.d == 2 else 6)
        curv = float("nan")
        if not flagged:
            if grid.d == 2:
                curv = _osculating_curvature_2d(cloud, normals[i])
            else:
                curv = _osculating_curvature_3d(cloud, normals[i])
        else:
            n_flagged += 1
        samples.append(VelocitySample(tuple(pts[i]), float(v[i]), curv, flagged))
        if not flagged and abs(curv) > 1e-12:
            devs.append(abs(v[i] - curv) / abs(curv))
    med = float(np.median(devs)) if devs else float("nan")
    dissipation = float(np.sum(v * v)) * grid.face_area
    return VelocityReport(
        samples=tuple(samples),
        median_relative_deviation=med,
        dissipation_sum=dissipation,
        n_flagged=n_flagged,
    )


def dissipation_ledger(traj) -> dict:
    """Cumulative fidelity against the initial capillary energy."""
    c0 = traj.metrics[0].capillary_total
    total = traj.metrics[-1].dissipation_cum
    caps = [m.capillary_total for m in traj.metrics]
    return {
        "initial_capillary": c0,
        "total_fidelity": total,
        "fidelity_within_budget": bool(total <= c0),
        "capillary_nonincreasing": bool(
            all(caps[i + 1] <= caps[i] for i in range(len(caps) - 1))
        ),
    }


def run_report(
    traj,
    kappa: float,
    beta: BetaField | None = None,
    b_n: float | None = None,
    c_iso: float | None = None,
    contact_window: float | None = None,
) -> dict:
    """Full diagnostic record of a run, JSON-ready."""
    grid = traj.masks[0].grid
    n = grid.d - 1
    consts = constants(n, kappa, b_n, c_iso)
    rec = {
        "constants": consts.to_json_record(),
        "R0_confinement": domain_radius_report(traj, kappa),
        "holder_modulus": holder_modulus(traj) if len(traj.masks) > 1 else 0.0,
        "theta_times_P0": consts.theta
        * en.full_perimeter(traj.masks[0], en.Stencil.axis(grid)),
        "dissipation": dissipation_ledger(traj),
        "max_dist_per_step": max_dist_per_step(traj),
        "l1_flatness_ratio_per_step": _l1_flatness_ratios(traj, consts),
        "trace_perimeter_per_frame": [
            _trace_perimeter(m) for m in traj.masks
        ],
    }
    if beta is not None:
        angles = []
        for m in traj.masks:
            if m.is_empty or not m.cells[..., 0].any():
                angles.append(None)
                continue
            ss = contact_angle_profile(m, beta, contact_window)
            vals = [s.cosine for s in ss if not s.flagged]
            angles.append(
                {
                    "mean_cosine": float(np.mean(vals)) if vals else None,
                    "n_samples": len(vals),
                }
            )
        rec["contact_angles"] = angles
    return rec


def _l1_flatness_ratios(traj, consts: TheoryConstants) -> list[float | None]:
    """Per-step symmetric difference against the flatness-estimate budget.

    The budget is C_flat * P(prev) * l + (1/l) * integral of the distance
    over the flipped cells, at the scale l = gamma / sqrt(lambda).  Ratios
    above 1 would contradict the configured covering constants; reported,
    never asserted.
    """
    lam = float(traj.config.lam)
    ell = consts.gamma / math.sqrt(lam)
    ax = en.Stencil.axis(traj.masks[0].grid)
    out: list[float | None] = []
    for k in range(1, len(traj.masks)):
        prev = traj.masks[k - 1]
        m = traj.metrics[k]
        if prev.is_empty or m.sym_diff_prev == 0.0:
            out.append(None)
            continue
        budget = consts.C_flat * en.full_perimeter(prev, ax) * ell + (
            m.fidelity / lam
        ) / ell
        out.append(m.sym_diff_prev / budget if budget > 0 else None)
    return out


def _trace_perimeter(mask: SetMask) -> float:
    """Perimeter of the wetted footprint inside the supporting plane."""
    grid = mask.grid
    wet = mask.cells[..., 0]
    if grid.d == 2:
        runs = np.flatnonzero(np.diff(np.concatenate([[0], wet.view(np.int8), [0]])))
        return float(len(runs))  # endpoints count, 0-dimensional measure
    count = 0
    nx, ny = grid.extents[:2]
    for axis in range(2):
        sl_a = [slice(None)] * 2
        sl_b = [slice(None)] * 2
        sl_a[axis] = slice(None, -1)
        sl_b[axis] = slice(1, None)
        count += int(np.count_nonzero(wet[tuple(sl_a)] ^ wet[tuple(sl_b)]))
        edge_lo = [slice(None)] * 2
        edge_lo[axis] = 0
        edge_hi = [slice(None)] * 2
        edge_hi[axis] = -1
        count += int(np.count_nonzero(wet[tuple(edge_lo)]))
        count += int(np.count_nonzero(wet[tuple(edge_hi)]))
    return count * grid.h


def domain_radius_report(traj, kappa: float) -> dict:
    """Confinement radius of the theory next to the actual box half-width."""
    from .flow import domain_bound_R0

    grid = traj.masks[0].grid
    m0 = traj.masks[0]
    p0 = en.full_perimeter(m0, en.Stencil.axis(grid))
    occupied = np.argwhere(m0.cells)
    if occupied.size:
        span = (occupied.max(axis=0) - occupied.min(axis=0) + 1) * grid.h
        D = float(max(span[: grid.d - 1].max() / 2.0, grid.h))
    else:
        D = grid.h
    r0 = domain_bound_R0(p0, kappa, grid.d - 1, D)
    half_width = max(grid.extents[: grid.d - 1]) * grid.h / 2.0
    return {"R0": r0, "box_half_width": half_width, "box_covers_R0": bool(half_width >= r0)}
