"""Droplet mean curvature flow on a half-space with prescribed contact angle.

A grid-based simulator: each implicit time step minimizes the capillary
energy plus a movement-limiting fidelity term, exactly (via submodular
min-cut) or through its convex level-set relaxation.
"""

from .grid import (
    BetaField,
    HalfSpaceGrid,
    ScalarField,
    SetMask,
    box_mask,
    cap_mask,
    empty_mask,
    full_mask,
    make_grid,
    mask_from_array,
    sym_diff_volume,
)
from .distance import interface_faces, signed_distance, signed_distance_bruteforce
from .energy import (
    EnergyBreakdown,
    Stencil,
    atw,
    capillary,
    full_perimeter,
    level_set_energy,
    perimeter,
    trace_term,
    wetted_area,
)
from .mincut import build_graph, maximal_minimizer, minimal_minimizer, solve_min_cut
from .relax import RelaxSolution, minimize_levelset, threshold
from .flow import (
    FlowConfig,
    Trajectory,
    constrained_capillary_minimizer,
    domain_bound_R0,
    evolve,
    minimizing_movement_step,
)
from .oracle import OracleReport, enumerate_masks
from .analysis import (
    TheoryConstants,
    constants,
    contact_angle_profile,
    density_report,
    fit_power_law,
    holder_modulus,
    velocity_curvature_report,
)

__version__ = "0.1.0"
