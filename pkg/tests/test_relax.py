"""Convex level-set route: certificates, thresholding, cross-solver agreement."""

import numpy as np
import pytest

import dropflow as df
from dropflow import mincut, relax
from dropflow.energy import Stencil
from dropflow.oracle import enumerate_masks


def test_zero_data_gives_zero_minimum():
    g = df.make_grid(2, (6, 5), 1.0)
    beta = df.BetaField.constant(g, 0.0, 0.25)
    prev = df.cap_mask(g, (3.0, 0.0), 2.2)
    sol = relax.minimize_levelset(prev, beta, 0.0, Stencil.axis(g), tol=1e-8)
    assert sol.converged
    assert sol.primal == pytest.approx(0.0, abs=1e-8)
    assert np.abs(sol.u.values).max() <= 1e-6


def test_vanishing_instance_drives_u_to_zero():
    # an interior speck at lambda*h <= 1 has the empty set as the unique
    # minimizer; the relaxation must agree
    g = df.make_grid(2, (4, 4), 1.0)
    cells = np.zeros((4, 4), bool)
    cells[2, 2] = True
    prev = df.mask_from_array(g, cells)
    beta = df.BetaField.constant(g, 0.0, 0.25)
    ax = Stencil.axis(g)
    rep = enumerate_masks(prev, beta, 1.0, ax, "atw")
    assert rep.min_energy == pytest.approx(0.5)  # drop cost lambda*h/2*h^2
    sol = relax.minimize_levelset(prev, beta, 1.0, ax, tol=1e-6)
    assert abs(sol.primal - rep.min_energy) <= max(sol.gap, 1e-9)
    assert float(sol.u.values.sum()) * g.cell_volume <= 1e-3


def test_threshold_examples():
    g = df.make_grid(2, (4, 3), 1.0)
    m = df.cap_mask(g, (2.0, 0.0), 1.4)
    chi = df.ScalarField(g, m.cells.astype(float))
    for t in (0.1, 0.5, 0.9):
        assert relax.threshold(chi, t) == m
    const = df.ScalarField(g, np.full((4, 3), 0.4))
    assert relax.threshold(const, 0.5).is_empty
    assert relax.threshold(const, 0.3) == df.full_mask(g)
    with pytest.raises(ValueError):
        relax.threshold(const, 0.0)
    with pytest.raises(ValueError):
        relax.threshold(const, 1.0)


def test_primal_within_gap_of_mincut_random():
    rng = np.random.default_rng(37)
    for trial in range(15):
        nx, ny = int(rng.integers(3, 8)), int(rng.integers(3, 6))
        g = df.make_grid(2, (nx, ny), 0.5)
        prev = df.mask_from_array(g, rng.random((nx, ny)) < 0.55)
        if prev.is_empty:
            continue
        beta = df.BetaField(g, rng.uniform(-1, 0.5, nx), 0.25)
        lam = float(rng.uniform(1, 25))
        st = Stencil.cauchy_crofton(g) if trial % 2 else Stencil.axis(g)
        graph = mincut.build_graph(prev, beta, lam, st)
        e_mc = df.atw(
            mincut.solve_min_cut(graph).mask, prev, beta, lam, st
        ).atw_total
        sol = relax.minimize_levelset(prev, beta, lam, st, tol=1e-9)
        assert sol.primal >= e_mc - 1e-9
        assert abs(sol.primal - e_mc) <= max(sol.gap, 1e-12)


def test_threshold_energy_flatness():
    rng = np.random.default_rng(41)
    g = df.make_grid(2, (16, 16), 1.0 / 16)
    prev = df.cap_mask(g, (0.5, 0.0), 0.3)
    beta = df.BetaField(g, rng.uniform(-1, 0.5, 16), 0.25)
    lam = 64.0
    st = Stencil.cauchy_crofton(g)
    sol = relax.minimize_levelset(prev, beta, lam, st, tol=1e-9)
    energies = [
        df.atw(relax.threshold(sol.u, t), prev, beta, lam, st).atw_total
        for t in (0.1, 0.3, 0.5, 0.7, 0.9)
    ]
    assert max(energies) - min(energies) <= max(sol.gap, 1e-9)


def test_strong_comparison_of_relaxed_minimizers():
    # strictly nested data with ordered contact fields order the relaxed
    # minimizers pointwise
    g = df.make_grid(2, (16, 16), 1.0 / 16)
    e0 = df.cap_mask(g, (0.5, 0.0), 0.2)
    f0 = df.cap_mask(g, (0.5, 0.0), 0.35)
    from dropflow.distance import signed_distance

    d_e = signed_distance(e0).values
    d_f = signed_distance(f0).values
    assert (d_e > d_f).all()  # strict ordering of the volume weights
    lam = 128.0
    st = Stencil.cauchy_crofton(g)
    b1 = df.BetaField.constant(g, -0.25, 0.25)
    b2 = df.BetaField.constant(g, 0.25, 0.25)
    u1 = relax.minimize_levelset(e0, b1, lam, st, tol=1e-8).u.values
    u2 = relax.minimize_levelset(f0, b2, lam, st, tol=1e-8).u.values
    assert (u1 <= u2 + 1e-4).all()


def test_max_iter_reported_not_raised():
    g = df.make_grid(2, (8, 8), 0.25)
    prev = df.cap_mask(g, (1.0, 0.0), 0.7)
    beta = df.BetaField.constant(g, 0.0, 0.25)
    sol = relax.minimize_levelset(
        prev, beta, 16.0, Stencil.cauchy_crofton(g), tol=1e-14, max_iter=7
    )
    assert sol.iterations == 7
    assert not sol.converged
    assert sol.gap >= 0.0


def test_convergence_trace_recorded():
    g = df.make_grid(2, (6, 6), 0.5)
    prev = df.cap_mask(g, (1.5, 0.0), 1.1)
    beta = df.BetaField.constant(g, 0.0, 0.25)
    sol = relax.minimize_levelset(
        prev, beta, 8.0, Stencil.axis(g), tol=1e-10, record_trace=True
    )
    assert len(sol.trace) >= 1
    iters, primals, gaps = zip(*sol.trace)
    assert all(gaps[i] >= -1e-12 for i in range(len(gaps)))
    assert list(iters) == sorted(iters)


def test_tol_must_be_positive():
    g = df.make_grid(2, (3, 3), 1.0)
    prev = df.full_mask(g)
    beta = df.BetaField.constant(g, 0.0, 0.25)
    with pytest.raises(ValueError):
        relax.minimize_levelset(prev, beta, 1.0, Stencil.axis(g), tol=0.0)
