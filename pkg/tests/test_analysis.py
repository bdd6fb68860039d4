import math

import numpy as np
import pytest

import corralwalk as cw
from corralwalk.analysis import (basis_overlaps, grid_average_distribution,
                                 grid_fidelities_from_overlaps, overlap)
from corralwalk.kspace import SPIN_L, SPIN_R


def _gauss(s=10.0, alpha=0.0, beta=0.0, half=200):
    lat = cw.Lattice(-half, half)
    return cw.gaussian_state(cw.GaussianSpec(s, 0), cw.BlochSpin(alpha, beta), lat)


def test_displacement_identity_and_inverse():
    # compact support makes the truncated-lattice round trip exact
    lat = cw.Lattice(-200, 200)
    raw = _gauss(alpha=0.4, beta=1.2).up.copy()
    raw[np.abs(lat.sites()) > 80] = 0.0
    up = raw / math.sqrt(np.sum(np.abs(raw) ** 2))
    st = cw.SpinorField(lat, up, np.zeros_like(up))
    assert cw.displacement(st, 0).up is not st.up
    back = cw.displacement(cw.displacement(st, 37), -37)
    assert np.array_equal(back.up, st.up)
    assert np.array_equal(back.down, st.down)


def test_displacement_moves_gaussian():
    st = _gauss(s=5.0)
    moved = cw.displacement(st, 120)
    assert cw.packet_center(moved) == pytest.approx(120.0, abs=1e-9)
    with pytest.raises(cw.SizingError):
        cw.displacement(st, 300)


def test_fidelity_trivial_cases():
    st = _gauss(alpha=0.3, beta=0.9)
    assert cw.fidelity(st, st, 0) == pytest.approx(1.0, abs=1e-13)
    flipped = _gauss(alpha=math.pi / 2, beta=0.0)
    up_only = _gauss(alpha=0.0)
    assert cw.fidelity(up_only, flipped, 0) == pytest.approx(0.0, abs=1e-13)


def test_fidelity_global_phase_invariant():
    st = _gauss(alpha=0.5, beta=0.4)
    moved = cw.displacement(st, 25)
    phased = cw.SpinorField(st.lattice, np.exp(1.23j) * moved.up,
                            np.exp(1.23j) * moved.down)
    assert cw.fidelity(st, phased, 25) == pytest.approx(1.0, abs=1e-12)


def test_fidelity_symmetry_under_swap():
    a = _gauss(alpha=0.2, beta=0.1)
    lat = a.lattice
    rng = np.random.default_rng(0)
    up = rng.normal(size=lat.size) + 1j * rng.normal(size=lat.size)
    down = rng.normal(size=lat.size) + 1j * rng.normal(size=lat.size)
    up[np.abs(lat.sites()) > 150] = 0.0  # keep both displacements on-lattice
    down[np.abs(lat.sites()) > 150] = 0.0
    nrm = math.sqrt(float(np.sum(np.abs(up) ** 2 + np.abs(down) ** 2)))
    b = cw.SpinorField(lat, up / nrm, down / nrm)
    assert cw.fidelity(a, b, 13) == pytest.approx(cw.fidelity(b, a, -13), abs=1e-13)


def test_fidelity_lattice_mismatch():
    a = _gauss()
    b = cw.gaussian_state(cw.GaussianSpec(10.0, 0), cw.BlochSpin(0.0),
                          cw.Lattice(-201, 201))
    with pytest.raises(cw.ShapeError):
        cw.fidelity(a, b, 0)


def test_probability_distribution_properties():
    st = _gauss(s=10.0, alpha=0.7, beta=0.3)
    p = cw.probability_distribution(st)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1.0) < 1e-10
    sites = st.lattice.sites().astype(float)
    mean = np.sum(sites * p)
    std = math.sqrt(np.sum((sites - mean) ** 2 * p))
    assert abs(std - 10.0) / 10.0 < 0.01


def test_probability_spin_basis_independent():
    st = _gauss(alpha=0.9, beta=2.5)
    p_updown = st.probability()
    cr = SPIN_R[0] * st.up + SPIN_R[1] * st.down
    cl = SPIN_L[0] * st.up + SPIN_L[1] * st.down
    p_rl = np.abs(cr) ** 2 + np.abs(cl) ** 2
    assert np.max(np.abs(p_updown - p_rl)) < 1e-14


def test_packet_center_trivial():
    lat = cw.Lattice(-20, 20)
    assert cw.packet_center(cw.delta_state(lat, 5)) == 5.0


def test_free_walk_sub_packet_centers():
    lat = cw.Lattice(-250, 250)
    st = cw.gaussian_state(cw.GaussianSpec(10.0, 0), cw.BlochSpin(0.4, 0.3), lat)
    final = cw.fft_evolve(st, 100)
    centers = cw.sub_packet_centers(final, 10.0)
    expected = 100.0 / math.sqrt(2.0)
    assert len(centers) == 2
    assert centers[0] == pytest.approx(-expected, abs=2.0)
    assert centers[1] == pytest.approx(+expected, abs=2.0)


def test_rl_phase_flip_is_unitary_involution():
    st = _gauss(alpha=0.8, beta=1.4)
    flipped = cw.rl_phase_flip(st)
    assert abs(flipped.norm() - 1.0) < 1e-12
    twice = cw.rl_phase_flip(flipped)
    assert np.max(np.abs(twice.up - st.up)) < 1e-12
    cl0 = SPIN_L[0] * st.up + SPIN_L[1] * st.down
    cl1 = SPIN_L[0] * flipped.up + SPIN_L[1] * flipped.down
    assert np.max(np.abs(cl0 + cl1)) < 1e-12


def test_bloch_grid_sizes():
    assert cw.BlochGrid().size == 451
    assert len(cw.BlochGrid().states()) == 451
    assert cw.BlochGrid(step=math.pi / 2).size == 10


def test_average_fidelity_matches_per_state_evolution(corral_ref):
    comp = corral_ref
    grid = cw.BlochGrid()
    ovl = basis_overlaps(comp.schedule, comp.plan.gaussian, comp.t_measure, comp.x)
    fgrid = grid_fidelities_from_overlaps(ovl, grid)
    alphas, betas = grid.alphas, grid.betas
    rng = np.random.default_rng(42)
    for _ in range(6):
        i = rng.integers(0, alphas.size)
        k = rng.integers(0, betas.size)
        spin = cw.BlochSpin(min(alphas[i], math.pi / 2), min(betas[k], 2 * math.pi))
        psi0 = cw.gaussian_state(comp.plan.gaussian, spin, comp.lattice)
        fin = cw.evolve(psi0, comp.schedule, comp.t_measure).final
        direct = cw.fidelity(psi0, fin, comp.x)
        assert abs(direct - fgrid[i, k]) < 1e-12


def test_coarse_grid_close_to_fine_grid(corral_ref):
    comp = corral_ref
    fine = cw.average_fidelity(comp.schedule, comp.plan.gaussian, cw.BlochGrid(),
                               comp.t_measure, comp.x)
    coarse = cw.average_fidelity(comp.schedule, comp.plan.gaussian,
                                 cw.BlochGrid(step=math.pi / 2),
                                 comp.t_measure, comp.x)
    assert coarse.count == 10
    assert abs(coarse.mean - fine.mean) < 0.005


def test_mid_revival_distribution_merged_but_orthogonal(corral_ref):
    comp = corral_ref
    psi0 = comp.initial_state()
    half = comp.t_measure // 2  # distribution revival with orthogonal spin
    traj = cw.evolve(psi0, comp.schedule, half)
    assert abs(cw.packet_center(traj.final)) < 2.0
    assert cw.fidelity(psi0, traj.final, 0) < 0.01


def test_grid_average_distribution_symmetric(corral_ref):
    comp = corral_ref
    times, rows = grid_average_distribution(comp.schedule, comp.plan.gaussian,
                                            cw.BlochGrid(), [0, 150, 287])
    for row in rows:
        assert abs(row.sum() - 1.0) < 1e-10
        assert np.max(np.abs(row - row[::-1])) < 1e-6
    # the plain mean double-counts the duplicated azimuth endpoint and is
    # only approximately symmetric
    _, raw = grid_average_distribution(comp.schedule, comp.plan.gaussian,
                                       cw.BlochGrid(), [287],
                                       periodic_beta=False)
    assert np.max(np.abs(raw[0] - raw[0][::-1])) < 2e-3


def test_overlap_displacement_consistency():
    st = _gauss(alpha=0.25, beta=0.75)
    moved = cw.displacement(st, 40)
    assert overlap(st, moved, 40) == pytest.approx(1.0, abs=1e-12)
