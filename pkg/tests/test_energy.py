"""Capillary and one-step energies: exact identities and discrete inequalities."""

import numpy as np
import pytest

import dropflow as df
from dropflow.distance import signed_distance
from dropflow.energy import Stencil, fidelity_term


def single_cell(g, idx):
    cells = np.zeros(g.extents, bool)
    cells[idx] = True
    return df.mask_from_array(g, cells)


@pytest.fixture
def g54():
    return df.make_grid(2, (5, 4), 1.0)


def test_perimeter_axis_examples(g54):
    ax = Stencil.axis(g54)
    assert df.perimeter(single_cell(g54, (2, 2)), ax) == 4.0
    assert df.perimeter(single_cell(g54, (2, 0)), ax) == 3.0
    assert df.perimeter(df.empty_mask(g54), ax) == 0.0


def test_perimeter_cc_disk_calibration():
    g = df.make_grid(2, (80, 112), 1.0)
    centers = g.cell_centers()
    disk = df.mask_from_array(g, ((centers - [40.0, 60.0]) ** 2).sum(-1) < 32.0**2)
    for order in (1, 2):
        cc = Stencil.cauchy_crofton(g, order)
        p = df.perimeter(disk, cc)
        assert abs(p - 2 * np.pi * 32) <= 0.02 * 2 * np.pi * 32


def test_perimeter_cc_half_disk():
    g = df.make_grid(2, (96, 48), 1.0)
    hd = df.cap_mask(g, (48.0, 0.0), 32.0)
    cc = Stencil.cauchy_crofton(g)
    assert abs(df.perimeter(hd, cc) - np.pi * 32) <= 0.02 * np.pi * 32


def test_perimeter_cc_ball_3d():
    g = df.make_grid(3, (40, 40, 28), 1.0)
    cen = g.cell_centers()
    ball = df.mask_from_array(g, ((cen - [20.0, 20.0, 14.0]) ** 2).sum(-1) < 12.0**2)
    cc = Stencil.cauchy_crofton(g)
    area = df.perimeter(ball, cc)
    assert abs(area - 4 * np.pi * 144) <= 0.04 * 4 * np.pi * 144


def test_trace_term_examples(g54):
    beta = df.BetaField.constant(g54, 0.5, 0.25)
    assert df.trace_term(single_cell(g54, (2, 0)), beta) == pytest.approx(0.5)
    assert df.trace_term(single_cell(g54, (2, 2)), beta) == 0.0
    g = df.make_grid(2, (3, 2), 0.5)
    b = df.BetaField(g, np.array([0.2, -0.3, 0.1]), 0.25)
    bottom = np.zeros((3, 2), bool)
    bottom[:, 0] = True
    assert df.trace_term(df.mask_from_array(g, bottom), b) == pytest.approx(0.0)


def test_capillary_examples(g54):
    ax = Stencil.axis(g54)
    beta = df.BetaField.constant(g54, 0.5, 0.25)
    assert df.capillary(df.empty_mask(g54), beta, ax).capillary_total == 0.0
    eb = df.capillary(single_cell(g54, (2, 0)), beta, ax)
    assert eb.capillary_total == pytest.approx(2.5)
    assert eb.capillary_total == eb.perimeter_in_omega - eb.trace_term
    for bval in (-1.0, -0.25, 0.5):
        b = df.BetaField.constant(g54, bval, 0.25)
        assert df.capillary(single_cell(g54, (2, 2)), b, ax).capillary_total == 4.0


def test_empty_set_is_unique_capillary_minimizer():
    from dropflow.oracle import enumerate_masks

    g = df.make_grid(2, (2, 2), 1.0)
    beta = df.BetaField.constant(g, 0.0, 0.25)
    rep = enumerate_masks(df.empty_mask(g), beta, 0.0, Stencil.axis(g), "capillary")
    assert rep.min_energy == 0.0
    assert len(rep.minimizers) == 1
    assert rep.minimizers[0].is_empty


def test_atw_identity_and_empty_conventions(g54):
    ax = Stencil.axis(g54)
    beta = df.BetaField.constant(g54, 0.25, 0.25)
    m = df.cap_mask(g54, (2.5, 0.0), 1.8)
    eb = df.atw(m, m, beta, 4.0, ax)
    assert eb.fidelity_term == 0.0
    assert eb.atw_total == df.capillary(m, beta, ax).capillary_total
    # from the empty set, any nonempty competitor costs +inf
    assert df.atw(m, df.empty_mask(g54), beta, 4.0, ax).atw_total == np.inf
    assert df.atw(df.empty_mask(g54), df.empty_mask(g54), beta, 4.0, ax).atw_total == 0.0


def test_atw_single_cell_deletion(g54):
    ax = Stencil.axis(g54)
    beta = df.BetaField.constant(g54, 0.0, 0.25)
    prev = single_cell(g54, (2, 2))
    eb = df.atw(df.empty_mask(g54), prev, beta, 2.0, ax)
    assert eb.fidelity_term == pytest.approx(1.0)
    assert eb.atw_total == pytest.approx(1.0)


def test_atw_rejects_mismatched_distance_grid(g54):
    beta = df.BetaField.constant(g54, 0.0, 0.25)
    other = df.make_grid(2, (4, 4), 1.0)
    prev = df.cap_mask(g54, (2.5, 0.0), 1.2)
    dist = signed_distance(df.cap_mask(other, (2.0, 0.0), 1.2))
    with pytest.raises(ValueError):
        df.atw(prev, prev, beta, 2.0, Stencil.axis(g54), dist)


def test_level_set_energy_identities(g54):
    ax = Stencil.axis(g54)
    beta = df.BetaField.constant(g54, 0.3, 0.25)
    m = df.cap_mask(g54, (2.5, 0.0), 1.7)
    chi = df.ScalarField(g54, m.cells.astype(float))
    cap = df.capillary(m, beta, ax).capillary_total
    assert df.level_set_energy(chi, beta, ax) == pytest.approx(cap)
    half = df.ScalarField(g54, 0.5 * m.cells)
    assert df.level_set_energy(half, beta, ax) == pytest.approx(0.5 * cap)
    zero = df.ScalarField(g54, np.zeros(g54.extents))
    assert df.level_set_energy(zero, beta, ax) == 0.0
    # one-step form: relaxed energy of the indicator differs from the binary
    # one-step energy by the constant distance integral over the previous set
    prev = df.cap_mask(g54, (2.5, 0.0), 1.2)
    dist = signed_distance(prev)
    lam = 4.0
    b_val = df.level_set_energy(chi, beta, ax, lam, dist)
    offset = -lam * float(dist.values[prev.cells].sum()) * g54.cell_volume
    assert b_val + offset == pytest.approx(df.atw(m, prev, beta, lam, ax, dist).atw_total)


def test_level_set_rejects_out_of_range(g54):
    beta = df.BetaField.constant(g54, 0.0, 0.25)
    bad = df.ScalarField(g54, np.full(g54.extents, 1.5))
    with pytest.raises(ValueError):
        df.level_set_energy(bad, beta, Stencil.axis(g54))


def test_coercivity_sandwich_and_trace_bound():
    rng = np.random.default_rng(21)
    g = df.make_grid(2, (12, 9), 0.5)
    ax = Stencil.axis(g)
    for _ in range(80):
        kappa = float(rng.integers(1, 9)) / 16.0
        beta = df.BetaField(g, rng.uniform(-1.0, 1.0 - 2 * kappa, g.extents[0]), kappa)
        m = df.mask_from_array(g, rng.random(g.extents) < rng.uniform(0.1, 0.9))
        p_full = df.full_perimeter(m, ax)
        cap = df.capillary(m, beta, ax).capillary_total
        assert kappa * p_full <= cap <= p_full
        assert abs(df.trace_term(m, beta)) <= beta.sup_norm * df.perimeter(m, ax) + 1e-12


def test_wetted_column_has_interface_face_above():
    # the discrete column argument behind coercivity: bottom perimeter is
    # dominated by the in-halfspace perimeter
    rng = np.random.default_rng(8)
    g = df.make_grid(2, (10, 7), 1.0)
    ax = Stencil.axis(g)
    for _ in range(50):
        m = df.mask_from_array(g, rng.random(g.extents) < 0.5)
        assert df.perimeter(m, ax) >= df.wetted_area(m)


@pytest.mark.parametrize("order", [0, 1, 2])
def test_strong_subadditivity(order):
    rng = np.random.default_rng(31 + order)
    g = df.make_grid(2, (7, 6), 0.5)
    st = Stencil.axis(g) if order == 0 else Stencil.cauchy_crofton(g, order)
    for _ in range(60):
        a = df.mask_from_array(g, rng.random(g.extents) < 0.5)
        b = df.mask_from_array(g, rng.random(g.extents) < 0.5)
        lhs = df.perimeter(a.intersection(b), st) + df.perimeter(a.union(b), st)
        rhs = df.perimeter(a, st) + df.perimeter(b, st)
        assert lhs <= rhs + 1e-12


@pytest.mark.parametrize("order", [0, 1])
def test_discrete_coarea(order):
    rng = np.random.default_rng(41 + order)
    g = df.make_grid(2, (6, 5), 0.5)
    st = Stencil.axis(g) if order == 0 else Stencil.cauchy_crofton(g)
    beta = df.BetaField(g, rng.uniform(-1, 0.5, 6), 0.25)
    levels = np.array([0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 1.0])
    u_vals = rng.choice(levels, size=g.extents)
    u = df.ScalarField(g, u_vals)
    lhs = df.level_set_energy(u, beta, st)
    # integrate the set energies of the super-level sets exactly: the
    # integrand is piecewise constant between consecutive distinct levels
    thresholds = np.unique(u_vals)
    rhs = 0.0
    prev_t = 0.0
    for t in thresholds:
        if t == 0.0:
            continue
        mask = df.mask_from_array(g, u_vals >= t)
        rhs += (t - prev_t) * df.capillary(mask, beta, st).capillary_total
        prev_t = t
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_convex_box_comparison_bruteforce():
    # a digitized box resting on the plane has the smallest axis perimeter
    # among its supersets
    g = df.make_grid(2, (4, 3), 1.0)
    ax = Stencil.axis(g)
    box = df.box_mask(g, (1.0, 0.0), (3.0, 2.0))
    p_box = df.perimeter(box, ax)
    n = g.n_cells
    box_bits = box.cells.ravel()
    for code in range(1 << n):
        bits = (code >> np.arange(n)) % 2 == 1
        if not (bits | ~box_bits).all():
            continue  # not a superset
        sup = df.mask_from_array(g, bits.reshape(g.extents))
        assert df.perimeter(sup, ax) >= p_box - 1e-12


def test_stencil_invariants():
    g = df.make_grid(2, (4, 4), 0.25)
    for st in (Stencil.axis(g), Stencil.cauchy_crofton(g), Stencil.cauchy_crofton(g, 2)):
        assert all(w > 0 for w in st.weights)
        assert len(st.weights) == len(st.offsets)
    with pytest.raises(ValueError):
        Stencil("bad", ((1, 0),), (-1.0,))


def test_energy_breakdown_json_record(g54):
    beta = df.BetaField.constant(g54, 0.0, 0.25)
    eb = df.capillary(df.cap_mask(g54, (2.5, 0.0), 1.5), beta, Stencil.axis(g54))
    rec = eb.to_json_record()
    assert set(rec) == {
        "perimeter_in_omega",
        "trace_term",
        "fidelity_term",
        "capillary_total",
        "atw_total",
        "stencil",
        "lambda",
        "h",
    }
    assert rec["capillary_total"] == eb.perimeter_in_omega - eb.trace_term


def test_fidelity_term_empty_conventions(g54):
    m = df.cap_mask(g54, (2.5, 0.0), 1.2)
    assert fidelity_term(m, df.empty_mask(g54), 2.0) == np.inf
    assert fidelity_term(df.empty_mask(g54), df.empty_mask(g54), 2.0) == 0.0
