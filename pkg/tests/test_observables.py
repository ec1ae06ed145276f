"""Observable models: output laws, covariance, moments, joint distributions."""

import math

import numpy as np
import pytest

from quncert.exceptions import AccuracyError, DomainError
from quncert.measures import (GridMeasure, gaussian_measure, point_mass,
                              std_deviation, translate, two_point)
from quncert.observables import (CovariantMarginal, PushforwardObservable,
                                 SharpMomentum, SharpPosition, SmearedMomentum,
                                 SmearedPosition, TrivialObservable,
                                 covariant_marginals, joint_covariant_distribution,
                                 map_from_spec, moment_stats,
                                 observable_from_spec, observable_to_spec)
from quncert.states import (DEFAULT_GRID, GridSpec, MixedState, PhasePoint,
                            make_box, make_gaussian, make_hermite,
                            position_distribution, weyl_translate)
from quncert.states import test_ensemble as builtin_ensemble

from oracles import tv_distance

GRID = DEFAULT_GRID


def _gauss(center=0.0, momentum=0.0, sigma=1.0, grid=GRID):
    return MixedState.pure(make_gaussian(grid, center, momentum, sigma))


# -- distribution: basic laws ------------------------------------------------

def test_trivial_is_state_independent():
    law = two_point(-1.0, 3.0, 0.25)
    obs = TrivialObservable(law)
    out_a = obs.distribution(_gauss(sigma=0.5))
    out_b = obs.distribution(_gauss(center=2.0, sigma=2.0))
    assert np.array_equal(out_a.atoms, out_b.atoms)
    assert np.array_equal(out_a.weights, out_b.weights)
    assert np.array_equal(out_a.atoms, law.atoms)


def test_point_mass_smearing_translates():
    state = _gauss(sigma=0.8)
    obs = SmearedPosition(point_mass(1.5))
    got = obs.distribution(state)
    want = translate(position_distribution(state), 1.5)
    assert abs(got.mean() - want.mean()) < 1e-9
    assert abs(std_deviation(got) - std_deviation(want)) < 1e-9


def test_gaussian_smearing_adds_variance():
    sigma_s, sigma_mu = 1.0, 0.7
    obs = SmearedPosition(gaussian_measure(0.0, sigma_mu))
    out = obs.distribution(_gauss(sigma=sigma_s))
    var = std_deviation(out) ** 2
    assert abs(var - (sigma_s ** 2 + sigma_mu ** 2)) < 1e-3


def test_smeared_momentum_adds_variance():
    # sigma=0.5 ground Gaussian has momentum std 1 at hbar=1
    obs = SmearedMomentum(gaussian_measure(0.0, 0.5))
    out = obs.distribution(_gauss(sigma=0.5))
    assert abs(std_deviation(out) ** 2 - (1.0 + 0.25)) < 1e-3


def test_sharp_laws_match_state_module():
    state = _gauss(center=1.0, momentum=-2.0, sigma=0.9)
    q_law = SharpPosition().distribution(state)
    assert abs(q_law.mean() - 1.0) < 1e-6
    p_law = SharpMomentum().distribution(state)
    assert abs(p_law.mean() - (-2.0)) < 1e-6


def test_pushforward_applies_map():
    state = _gauss(center=2.0, sigma=0.5)
    doubling = map_from_spec({"kind": "table", "xs": [-60.0, 60.0],
                              "ys": [-120.0, 120.0]})
    obs = PushforwardObservable(SharpPosition(), doubling)
    out = obs.distribution(state)
    assert abs(out.mean() - 4.0) < 1e-9
    assert abs(std_deviation(out) - 2.0 * std_deviation(
        position_distribution(state))) < 1e-9


# -- covariance properties -----------------------------------------------------

def test_smeared_position_is_translation_covariant():
    mu = gaussian_measure(0.3, 0.6)
    obs = SmearedPosition(mu)
    q = 1.7
    for state in (_gauss(sigma=0.7),
                  MixedState.pure(make_box(GRID, 0.0, 2.0, 0.0))):
        shifted = weyl_translate(state, PhasePoint(q, 0.0))
        got = obs.distribution(shifted)
        want = translate(obs.distribution(state), q)
        assert abs(got.mean() - want.mean()) <= GRID.dx


def test_cos_pushforward_breaks_covariance():
    # outcome map x + 0.5 cos x does not commute with translations; some
    # shift of some state must move the output law by a visible TV gap
    mu = gaussian_measure(0.0, 0.4)
    bent = PushforwardObservable(SmearedPosition(mu),
                                 map_from_spec({"kind": "cos_shift",
                                                "amplitude": 0.5}))
    witnessed = False
    for state in builtin_ensemble()[:6]:
        for q in (0.5 * math.pi, 1.0, 2.5):
            shifted = weyl_translate(state, PhasePoint(q, 0.0))
            got = bent.distribution(shifted)
            want = translate(bent.distribution(state), q)
            if tv_distance(got, want) > 0.01:
                witnessed = True
                break
        if witnessed:
            break
    assert witnessed


# -- covariant phase-space marginals ---------------------------------------------

def test_covariant_marginals_of_even_gaussian():
    tau = _gauss(sigma=1.3)
    mu_t, nu_t = covariant_marginals(tau)
    assert abs(mu_t.mean()) < 1e-9
    assert abs(std_deviation(mu_t) - 1.3) < 1e-4
    assert abs(nu_t.mean()) < 1e-9
    assert abs(std_deviation(nu_t) - 1.0 / (2.0 * 1.3)) < 1e-4


def test_covariant_marginals_reflect_center():
    tau = _gauss(center=2.0, sigma=0.8)
    mu_t, _ = covariant_marginals(tau)
    assert abs(mu_t.mean() - (-2.0)) <= GRID.dx


def test_covariant_marginals_obey_preparation_bound():
    for state in builtin_ensemble():
        mu_t, nu_t = covariant_marginals(state)
        assert std_deviation(mu_t) * std_deviation(nu_t) >= 0.5 - 1e-6


def test_covariant_marginal_observable_convolves():
    tau = _gauss(sigma=0.9)
    state = _gauss(center=1.0, sigma=0.6)
    obs = CovariantMarginal(tau, "position")
    out = obs.distribution(state)
    var_want = 0.6 ** 2 + 0.9 ** 2
    assert abs(out.mean() - 1.0) < 1e-4
    assert abs(std_deviation(out) ** 2 - var_want) < 1e-3


def test_covariant_marginal_smearing_cached():
    obs = CovariantMarginal(_gauss(sigma=1.0), "momentum")
    assert obs.smearing() is obs.smearing()


def test_covariant_marginal_axis_validated():
    with pytest.raises(DomainError):
        CovariantMarginal(_gauss(), "energy")


# -- joint covariant distribution -------------------------------------------------

def _husimi_lattice(grid, hbar=1.0, q_half=6.0, p_half=6.0, q_stride=8):
    dx = grid.dx
    dp = grid.momentum_step(hbar)
    q_step = q_stride * dx
    n_q = int(q_half / q_step)
    qs = q_step * np.arange(-n_q, n_q + 1)
    n_p = int(p_half / dp)
    ps = dp * np.arange(-n_p, n_p + 1)
    return qs, ps


def test_joint_vacuum_is_husimi():
    sigma = 1.0 / math.sqrt(2.0)
    tau = _gauss(sigma=sigma)
    state = _gauss(sigma=sigma)
    qs, ps = _husimi_lattice(GRID)
    joint = joint_covariant_distribution(tau, state, qs, ps)
    total = float(joint.mass.sum())
    assert abs(total - 1.0) < 1e-6
    q_mean = float((joint.mass.sum(axis=1) * qs).sum()) / total
    p_mean = float((joint.mass.sum(axis=0) * ps).sum()) / total
    q_var = float((joint.mass.sum(axis=1) * (qs - q_mean) ** 2).sum()) / total
    p_var = float((joint.mass.sum(axis=0) * (ps - p_mean) ** 2).sum()) / total
    # two independent vacuum variances add on each axis
    assert abs(q_var - 2.0 * sigma ** 2) < 1e-3
    assert abs(p_var - 2.0 * (1.0 / (4.0 * sigma ** 2))) < 1e-3


def test_joint_marginals_match_smeared_laws():
    tau = _gauss(sigma=1.0)
    for state in (_gauss(center=1.5, momentum=-1.0, sigma=0.8),
                  MixedState.pure(make_hermite(GRID, 1))):
        qs, ps = _husimi_lattice(GRID, q_half=8.0, p_half=8.0, q_stride=4)
        joint = joint_covariant_distribution(tau, state, qs, ps)
        assert joint.q_marginal_tv < 1e-3
        assert joint.p_marginal_tv < 1e-3


def test_joint_mass_nonnegative():
    tau = _gauss(sigma=1.0)
    qs, ps = _husimi_lattice(GRID)
    joint = joint_covariant_distribution(tau, _gauss(sigma=0.7), qs, ps)
    assert np.all(joint.mass >= 0.0)


def test_joint_narrow_window_raises_accuracy():
    tau = _gauss(sigma=1.0)
    state = _gauss(center=4.0, sigma=0.5)
    qs, ps = _husimi_lattice(GRID, q_half=1.0, p_half=1.0)
    with pytest.raises(AccuracyError):
        joint_covariant_distribution(tau, state, qs, ps)


def test_joint_off_lattice_values_rejected():
    tau = _gauss(sigma=1.0)
    qs = np.array([0.0, 0.3333])
    ps = np.array([0.0, GRID.momentum_step(1.0)])
    with pytest.raises(DomainError):
        joint_covariant_distribution(tau, _gauss(), qs, ps)


# -- moment statistics -------------------------------------------------------------

def test_sharp_moments_of_gaussian():
    stats = moment_stats(SharpPosition(), _gauss(center=1.0, sigma=1.0))
    assert abs(stats.first_moment_mean - 1.0) < 1e-3
    assert abs(stats.second_moment_mean - 2.0) < 1e-3
    assert stats.first_moment_sq_mean == stats.second_moment_mean


def test_point_smearing_has_zero_intrinsic_noise():
    obs = SmearedPosition(point_mass(0.7))
    stats = moment_stats(obs, _gauss(center=0.5, sigma=1.2))
    assert abs(stats.second_moment_mean - stats.first_moment_sq_mean) < 1e-12


def test_gaussian_smearing_noise_is_state_independent():
    s = 0.45
    obs = SmearedPosition(gaussian_measure(0.0, s))
    gaps = []
    for state in (_gauss(sigma=0.5), _gauss(center=2.0, sigma=1.5),
                  MixedState.pure(make_box(GRID, -1.0, 1.0, 2.0)),
                  MixedState.pure(make_hermite(GRID, 2)),
                  builtin_ensemble()[10]):
        st = moment_stats(obs, state)
        gaps.append(st.second_moment_mean - st.first_moment_sq_mean)
    for gap in gaps:
        assert abs(gap - s ** 2) < 1e-6


def test_smeared_momentum_moments():
    obs = SmearedMomentum(gaussian_measure(0.0, 0.3))
    st = moment_stats(obs, _gauss(momentum=2.0, sigma=1.0))
    assert abs(st.first_moment_mean - 2.0) < 1e-3
    assert abs((st.second_moment_mean - st.first_moment_sq_mean) - 0.09) < 1e-6


def test_covariant_marginal_moments_supported():
    obs = CovariantMarginal(_gauss(sigma=1.0), "position")
    st = moment_stats(obs, _gauss(center=1.0, sigma=1.0))
    assert abs(st.first_moment_mean - 1.0) < 1e-3
    assert abs((st.second_moment_mean - st.first_moment_sq_mean) - 1.0) < 1e-3


def test_trivial_moments_rejected():
    with pytest.raises(DomainError):
        moment_stats(TrivialObservable(point_mass(0.0)), _gauss())


def test_pushforward_moments_rejected():
    obs = PushforwardObservable(SharpPosition(), map_from_spec({"kind": "identity"}))
    with pytest.raises(DomainError):
        moment_stats(obs, _gauss())


# -- specs ------------------------------------------------------------------------

def test_observable_spec_round_trip():
    specs = [
        {"kind": "sharp_position"},
        {"kind": "sharp_momentum"},
        {"kind": "smeared_position",
         "measure": {"family": "two_point", "x1": -1.0, "x2": 1.0, "w1": 0.5}},
        {"kind": "trivial",
         "measure": {"family": "point", "at": 2.0}, "axis": "position"},
    ]
    state = _gauss(sigma=0.8)
    for spec in specs:
        obs = observable_from_spec(spec, GRID)
        again = observable_from_spec(observable_to_spec(obs), GRID)
        a = obs.distribution(state)
        b = again.distribution(state)
        assert np.allclose(a.atoms, b.atoms)
        assert np.allclose(a.weights, b.weights)


def test_pushforward_spec_builds():
    spec = {"kind": "pushforward", "inner": {"kind": "sharp_position"},
            "map": {"kind": "cos_shift", "amplitude": 0.5}}
    obs = observable_from_spec(spec, GRID)
    out = obs.distribution(_gauss())
    assert abs(sum(out.weights) - 1.0) < 1e-9


def test_covariant_marginal_spec_builds():
    spec = {"kind": "covariant_marginal", "axis": "momentum",
            "tau": {"family": "gaussian", "center": 0.0, "momentum": 0.0,
                    "sigma": 1.0}}
    obs = observable_from_spec(spec, GRID)
    out = obs.distribution(_gauss(sigma=1.0))
    # sharp momentum variance 0.25 plus nu_tau variance 0.25
    assert abs(std_deviation(out) ** 2 - 0.5) < 1e-3


def test_unknown_specs_rejected():
    with pytest.raises(DomainError):
        observable_from_spec({"kind": "sharp_energy"}, GRID)
    with pytest.raises(DomainError):
        map_from_spec({"kind": "spline"})
    with pytest.raises(DomainError):
        observable_from_spec({"kind": "smeared_position"}, GRID)


def test_stray_spec_keys_rejected():
    with pytest.raises(DomainError, match="unrecognized keys.*'mu'"):
        observable_from_spec(
            {"kind": "smeared_position",
             "measure": {"family": "point", "at": 0.0},
             "mu": {"family": "point", "at": 1.0}}, GRID)
    with pytest.raises(DomainError, match="unrecognized keys"):
        map_from_spec({"kind": "cos_shift", "amplitude": 0.5, "phase": 1.0})


def test_nonserializable_observable_rejected():
    obs = CovariantMarginal(_gauss(), "position")
    with pytest.raises(DomainError):
        observable_to_spec(obs)
