import math

import numpy as np
import pytest

import oracles
from quncert import (ConvergenceError, DomainError, GridSpec,
                     GridTooSmallError, Interval, MixedState, PhasePoint,
                     WaveFunction, ground_state, load_wavefunction_csv,
                     make_box, make_gaussian, make_hermite,
                     make_random_localized, momentum_distribution, parity,
                     position_distribution, random_ensemble,
                     save_wavefunction_csv, state_from_spec, std_deviation,
                     translate, weyl_translate)
from quncert import test_ensemble as builtin_ensemble

GRID = GridSpec.symmetric(16.0, 2048)


# -- grid and state types ------------------------------------------------------

def test_grid_validation():
    with pytest.raises(DomainError):
        GridSpec(0.0, 0.1, 100)  # not a power of two
    with pytest.raises(DomainError):
        GridSpec(0.0, -0.1, 128)
    with pytest.raises(DomainError):
        GridSpec(0.0, 0.1, 2)


def test_grid_momentum_lattice():
    g = GridSpec.symmetric(8.0, 256)
    assert g.span == pytest.approx(16.0)
    assert g.momentum_step(1.0) == pytest.approx(2.0 * math.pi / 16.0)
    assert g.momentum_step(2.0) == pytest.approx(2.0 * 2.0 * math.pi / 16.0)
    ps = g.momentum_points(1.0)
    assert ps.size == 256
    assert ps[128] == pytest.approx(0.0)
    assert g.is_symmetric()


def test_wavefunction_requires_normalization():
    g = GridSpec.symmetric(4.0, 64)
    with pytest.raises(DomainError):
        WaveFunction(g.x0, g.dx, np.ones(64, dtype=complex))


def test_mixed_state_weights():
    wf = make_gaussian(GRID, 0.0, 0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        MixedState(((0.5, wf), (0.6, wf)))
    s = MixedState(((0.25, wf), (0.75, wf)))
    assert len(s.components) == 2


def test_phase_point_finite():
    with pytest.raises(DomainError):
        PhasePoint(math.inf, 0.0)


# -- distributions --------------------------------------------------------------

def test_box_position_law_is_uniform():
    wf = make_box(GRID, 0.0, 1.0, 0.0, 1.0)
    law = position_distribution(wf)
    inside = law.weights[law.weights > 0.0]
    assert np.allclose(inside, inside[0])
    assert law.support_hi - law.support_lo == pytest.approx(1.0, abs=GRID.dx)


def test_gaussian_position_std():
    wf = make_gaussian(GRID, 0.0, 0.0, 1.0, 1.0)
    assert std_deviation(position_distribution(wf)) == pytest.approx(1.0,
                                                                     abs=1e-4)


def test_mixture_of_boxes_mean_zero():
    left = make_box(GRID, -2.0, 0.5, 0.0, 1.0)
    right = make_box(GRID, 2.0, 0.5, 0.0, 1.0)
    s = MixedState(((0.5, left), (0.5, right)))
    law = position_distribution(s)
    assert law.mean() == pytest.approx(0.0, abs=1e-9)


def test_momentum_law_gaussian():
    wf = make_gaussian(GRID, 0.0, 0.0, 0.5, 1.0)
    plaw = momentum_distribution(wf, 1.0)
    assert float(np.sum(plaw.weights)) == pytest.approx(1.0, abs=1e-9)
    assert std_deviation(plaw) == pytest.approx(1.0, abs=1e-4)  # hbar/(2 sigma)


def test_momentum_law_scales_with_hbar():
    wf = make_gaussian(GRID, 0.0, 0.0, 1.0, 2.0)
    plaw = momentum_distribution(wf, 2.0)
    assert std_deviation(plaw) == pytest.approx(1.0, abs=1e-4)


def test_parseval_for_every_ensemble_state():
    for s in builtin_ensemble(GRID, 1.0, 0):
        qlaw = position_distribution(s)
        plaw = momentum_distribution(s, 1.0)
        assert float(np.sum(qlaw.weights)) == pytest.approx(1.0, abs=1e-9)
        assert float(np.sum(plaw.weights)) == pytest.approx(1.0, abs=1e-9)


def test_preparation_ur_on_ensemble():
    for s in builtin_ensemble(GRID, 1.0, 0):
        dq = std_deviation(position_distribution(s))
        dp = std_deviation(momentum_distribution(s, 1.0))
        assert dq * dp >= 0.5 - 1e-6


# -- phase-space translations ----------------------------------------------------

def test_weyl_position_covariance():
    wf = make_gaussian(GRID, 0.0, 0.5, 0.8, 1.0)
    q = 1.25  # whole number of cells
    moved = weyl_translate(wf, PhasePoint(q, 0.0), 1.0)
    got = position_distribution(moved)
    want = translate(position_distribution(wf), q)
    assert got.mean() == pytest.approx(want.mean(), abs=GRID.dx)
    aligned = np.interp(want.atoms, got.atoms, got.weights)
    assert np.max(np.abs(aligned - want.weights)) < 1e-9


def test_weyl_momentum_covariance():
    wf = make_gaussian(GRID, 0.0, 0.0, 1.0, 1.0)
    dp = GRID.momentum_step(1.0)
    boost = 8.0 * dp
    moved = weyl_translate(wf, PhasePoint(0.0, boost), 1.0)
    got = momentum_distribution(moved, 1.0)
    want = translate(momentum_distribution(wf, 1.0), boost)
    aligned = np.interp(want.atoms, got.atoms, got.weights)
    assert np.max(np.abs(aligned - want.weights)) < 1e-9


def test_weyl_subcell_shift_moves_mean():
    wf = make_gaussian(GRID, 0.0, 0.0, 1.0, 1.0)
    q = 0.3 * GRID.dx
    moved = weyl_translate(wf, PhasePoint(q, 0.0), 1.0)
    assert position_distribution(moved).mean() == pytest.approx(q, abs=1e-6)


def test_weyl_shift_out_of_range():
    wf = make_gaussian(GRID, 0.0, 0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        weyl_translate(wf, PhasePoint(100.0, 0.0), 1.0)


def test_weyl_rejects_mass_falling_off_the_grid():
    wf = make_gaussian(GRID, 10.0, 0.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        weyl_translate(wf, PhasePoint(10.0, 0.0), 1.0)


def test_parity_reflects_position_law():
    wf = make_gaussian(GRID, 2.0, 0.0, 0.7, 1.0)
    law = position_distribution(parity(wf))
    assert law.mean() == pytest.approx(-2.0, abs=GRID.dx)


# -- constructors ---------------------------------------------------------------

def test_box_width_validation():
    with pytest.raises(DomainError):
        make_box(GRID, 0.0, 0.5 * GRID.dx, 0.0, 1.0)
    with pytest.raises(DomainError):
        make_box(GRID, 15.9, 1.0, 0.0, 1.0)  # touches the grid edge


def test_hermite_position_variance():
    for n in (0, 1, 2, 3):
        wf = make_hermite(GRID, n, 1.0)
        var = std_deviation(position_distribution(wf)) ** 2
        assert var == pytest.approx(n + 0.5, rel=1e-4)


def test_hermite_momentum_variance():
    wf = make_hermite(GRID, 2, 1.0)
    var = std_deviation(momentum_distribution(wf, 1.0)) ** 2
    assert var == pytest.approx(2.5, rel=1e-4)


def test_random_localized_supported_inside_interval():
    wf = make_random_localized(GRID, Interval(1.0, 2.0), seed=5)
    law = position_distribution(wf)
    assert law.support_lo >= 0.0 - 1e-12
    assert law.support_hi <= 2.0 + 1e-12
    again = make_random_localized(GRID, Interval(1.0, 2.0), seed=5)
    assert np.array_equal(wf.amplitudes, again.amplitudes)


# -- ground state ----------------------------------------------------------------

def test_ground_state_harmonic_energy_and_profile():
    grid = GridSpec.symmetric(12.0, 1024)
    energy, wf = ground_state(2.0, 2.0, grid)
    assert energy == pytest.approx(1.0, abs=1e-6)
    law = position_distribution(wf)
    assert std_deviation(law) == pytest.approx(math.sqrt(0.5), abs=1e-4)


def test_ground_state_matches_dense_oracle():
    grid = GridSpec.symmetric(16.0, 256)
    energy, _ = ground_state(1.0, 1.0, grid, boundary_tol=1e-2)
    ref = oracles.dense_ground_energy(1.0, 1.0, grid.x0, grid.dx, grid.n)
    assert energy == pytest.approx(ref, abs=1e-6)


def test_ground_state_fourier_symmetry():
    grid = GridSpec.symmetric(12.0, 1024)
    for alpha in (2.0, 4.0):
        _, wf = ground_state(alpha, alpha, grid)
        qlaw = position_distribution(wf)
        plaw = momentum_distribution(wf, 1.0)
        qs = std_deviation(qlaw)
        ps = std_deviation(plaw)
        assert qs == pytest.approx(ps, abs=1e-6)


def test_ground_state_grid_gate():
    with pytest.raises(GridTooSmallError):
        ground_state(2.0, 2.0, GridSpec.symmetric(4.0, 128))


def test_ground_state_convergence_gate():
    with pytest.raises(ConvergenceError):
        ground_state(2.0, 2.0, GridSpec.symmetric(12.0, 256), tol=1e-15,
                     max_steps=400_000)


def test_ground_state_rejects_bad_exponents():
    with pytest.raises(DomainError):
        ground_state(0.5, 2.0, GridSpec.symmetric(12.0, 256))


# -- ensembles and specs -----------------------------------------------------------

def test_random_ensemble_deterministic():
    grid = GridSpec.symmetric(16.0, 512)
    first = random_ensemble(grid, 12, seed=3, hbar=1.0)
    second = random_ensemble(grid, 12, seed=3, hbar=1.0)
    assert len(first) == 12
    for a, b in zip(first, second):
        for (wa, ca), (wb, cb) in zip(a.components, b.components):
            assert wa == wb
            assert np.array_equal(ca.amplitudes, cb.amplitudes)
    third = random_ensemble(grid, 12, seed=4, hbar=1.0)
    assert any(not np.array_equal(a.components[0][1].amplitudes,
                                  c.components[0][1].amplitudes)
               for a, c in zip(first, third))


def test_state_from_spec_families():
    s = state_from_spec({"family": "gaussian", "sigma": 0.5, "center": 1.0},
                        GRID, 1.0)
    assert position_distribution(s).mean() == pytest.approx(1.0, abs=1e-6)
    mix = state_from_spec(
        {"family": "mixture",
         "components": [
             {"family": "box", "center": -2.0, "width": 1.0, "weight": 0.5},
             {"family": "box", "center": 2.0, "width": 1.0, "weight": 0.5}]},
        GRID, 1.0)
    assert position_distribution(mix).mean() == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(DomainError):
        state_from_spec({"family": "nope"}, GRID, 1.0)
    with pytest.raises(DomainError, match="unrecognized keys.*'sgima'"):
        state_from_spec({"family": "gaussian", "sgima": 0.5}, GRID, 1.0)
    with pytest.raises(DomainError, match="unrecognized keys"):
        state_from_spec(
            {"family": "mixture", "seed": 1,
             "components": [{"family": "cell", "weight": 1.0}]}, GRID, 1.0)


def test_wavefunction_csv_round_trip(tmp_path):
    wf = make_gaussian(GRID, 0.3, 1.2, 0.9, 1.0)
    path = tmp_path / "wf.csv"
    save_wavefunction_csv(wf, str(path))
    back = load_wavefunction_csv(str(path))
    assert back.grid == wf.grid
    assert np.max(np.abs(back.amplitudes - wf.amplitudes)) < 1e-12


def test_wavefunction_csv_requires_uniform_grid(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,re,im\n0.0,1.0,0.0\n0.1,0.0,0.0\n0.3,0.0,0.0\n"
                    "0.4,0.0,0.0\n")
    with pytest.raises(DomainError):
        load_wavefunction_csv(str(path))
