"""Observables: maps from states to outcome laws on the real line.

Sharp position/momentum return the Born laws; smeared variants convolve the
sharp law with a fixed noise measure; pushforwards transform the value space;
covariant phase-space marginals are the position/momentum margins of the
translation-covariant observable generated by a normalized reference state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import AccuracyError, DomainError
from .measures import (BoundedRangeMap, BoundedShiftMap, GridMeasure,
                       MeasurableMap, PiecewiseLinearMap, _check_spec_keys,
                       convolve, identity_map, measure_from_spec, pushforward)
from .states import (MixedState, State, _as_mixed, momentum_distribution,
                     parity, position_distribution, state_from_spec)


class Observable:
    """Base type; subclasses implement distribution(state, hbar)."""

    axis: str = "none"

    def distribution(self, state: State, hbar: float = 1.0) -> GridMeasure:
        raise NotImplementedError


@dataclass(frozen=True)
class SharpPosition(Observable):
    """Ideal position measurement."""

    axis = "position"

    def distribution(self, state: State, hbar: float = 1.0) -> GridMeasure:
        return position_distribution(state)


@dataclass(frozen=True)
class SharpMomentum(Observable):
    """Ideal momentum measurement."""

    axis = "momentum"

    def distribution(self, state: State, hbar: float = 1.0) -> GridMeasure:
        return momentum_distribution(state, hbar)


@dataclass(frozen=True, eq=False)
class SmearedPosition(Observable):
    """Position measurement whose outcome is offset by independent noise mu."""

    mu: GridMeasure
    axis = "position"

    def distribution(self, state: State, hbar: float = 1.0) -> GridMeasure:
        return convolve(position_distribution(state), self.mu)


@dataclass(frozen=True, eq=False)
class SmearedMomentum(Observable):
    """Momentum measurement whose outcome is offset by independent noise nu."""

    nu: GridMeasure
    axis = "momentum"

    def distribution(self, state: State, hbar: float = 1.0) -> GridMeasure:
        return convolve(momentum_distribution(state, hbar), self.nu)


@dataclass(frozen=True, eq=False)
class TrivialObservable(Observable):
    """State-independent device: every state yields the same outcome law."""

    law: GridMeasure
    axis: str = "position"

    def distribution(self, state: State, hbar: float = 1.0) -> GridMeasure:
        return self.law


@dataclass(frozen=True, eq=False)
class PushforwardObservable(Observable):
    """Post-processing of another observable by a map on the value space."""

    inner: Observable
    map: MeasurableMap

    @property
    def axis(self) -> str:  # type: ignore[override]
        return self.inner.axis

    def distribution(self, state: State, hbar: float = 1.0) -> GridMeasure:
        return pushforward(self.inner.distribution(state, hbar), self.map)


def covariant_marginals(tau: State, hbar: float = 1.0
                        ) -> tuple[GridMeasure, GridMeasure]:
    """Smearing measures (position, momentum) of the covariant observable
    generated by tau: the Born laws of the parity-reflected generator."""
    reflected = parity(tau)
    return (position_distribution(reflected),
            momentum_distribution(reflected, hbar))


class CovariantMarginal(Observable):
    """One margin of the covariant phase-space observable generated by tau.

    The margin acts as a smeared sharp observable: the outcome law is the
    sharp law convolved with the matching smearing measure of tau.  Smearing
    measures are cached per hbar (the momentum one depends on it).
    """

    def __init__(self, tau: State, axis: str) -> None:
        if axis not in ("position", "momentum"):
            raise DomainError("axis must be 'position' or 'momentum'")
        self.tau = _as_mixed(tau)
        self.axis = axis
        self._cache: dict[float, tuple[GridMeasure, GridMeasure]] = {}

    def smearing(self, hbar: float = 1.0) -> GridMeasure:
        if hbar not in self._cache:
            self._cache[hbar] = covariant_marginals(self.tau, hbar)
        pair = self._cache[hbar]
        return pair[0] if self.axis == "position" else pair[1]

    def distribution(self, state: State, hbar: float = 1.0) -> GridMeasure:
        if self.axis == "position":
            return convolve(position_distribution(state), self.smearing(hbar))
        return convolve(momentum_distribution(state, hbar), self.smearing(hbar))


# -- outcome moments ---------------------------------------------------------

@dataclass(frozen=True)
class MomentStats:
    """Moments of the outcome law, split to expose intrinsic device noise.

    For a smearing by mu the mean-outcome operator is A + mu_1 and the mean
    squared-outcome operator is A^2 + 2 mu_1 A + mu_2, while the square of
    the mean-outcome operator is A^2 + 2 mu_1 A + mu_1^2; their gap is the
    state-independent variance of mu.
    """

    first_moment_mean: float
    first_moment_sq_mean: float
    second_moment_mean: float


def _base_and_smearing(obs: Observable, state: State, hbar: float
                       ) -> tuple[GridMeasure, GridMeasure | None]:
    if isinstance(obs, SharpPosition):
        return position_distribution(state), None
    if isinstance(obs, SharpMomentum):
        return momentum_distribution(state, hbar), None
    if isinstance(obs, SmearedPosition):
        return position_distribution(state), obs.mu
    if isinstance(obs, SmearedMomentum):
        return momentum_distribution(state, hbar), obs.nu
    if isinstance(obs, CovariantMarginal):
        base = (position_distribution(state) if obs.axis == "position"
                else momentum_distribution(state, hbar))
        return base, obs.smearing(hbar)
    raise DomainError("moment statistics need a sharp or smeared observable")


def moment_stats(obs: Observable, state: State, hbar: float = 1.0) -> MomentStats:
    """Outcome-moment statistics for sharp and smeared observables."""
    base, mu = _base_and_smearing(obs, state, hbar)
    a1 = base.mean()
    a2 = base.moment(2)
    if mu is None:
        return MomentStats(a1, a2, a2)
    m1 = mu.mean()
    m2 = mu.moment(2)
    sq = a2 + 2.0 * m1 * a1
    return MomentStats(a1 + m1, sq + m1 * m1, sq + m2)


# -- joint covariant distribution ---------------------------------------------

@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Phase-space outcome masses on a rectangular lattice with the total
    variation gaps between its margins and the predicted smeared laws."""

    q_values: np.ndarray
    p_values: np.ndarray
    mass: np.ndarray
    q_marginal_tv: float
    p_marginal_tv: float


def _zero_shift(amp: np.ndarray, cells: int) -> np.ndarray:
    if cells == 0:
        return amp
    out = np.zeros_like(amp)
    if cells > 0:
        out[cells:] = amp[:amp.size - cells]
    else:
        out[:amp.size + cells] = amp[-cells:]
    return out


def _lattice_indices(values: np.ndarray, step: float, offset: float,
                     label: str) -> np.ndarray:
    idx = np.round((values - offset) / step)
    if np.max(np.abs(values - (offset + idx * step))) > 1e-9 * max(1.0, step):
        raise DomainError(f"{label} values must sit on the lattice")
    return idx.astype(int)


def _smoothed_cdf(ref: GridMeasure):
    """CDF of ref with each atom spread over a mini-cell of the minimum
    spacing.  Atoms of a discretized density routinely land exactly on
    window edges; a jump CDF then assigns them wholly to one side, biasing
    every window the same way, while the spread splits them in proportion."""
    atoms = ref.atoms
    weights = ref.weights
    if atoms.size < 2:
        return ref.cdf
    h = ref.min_spacing()
    cum = np.concatenate([[0.0], np.cumsum(weights)])

    def cdf(e: float) -> float:
        j = int(np.searchsorted(atoms, e - 0.5 * h, side="right"))
        val = cum[j]
        if j < atoms.size:
            lo = atoms[j] - 0.5 * h
            if e > lo:  # at most one straddler: cells are disjoint
                val += weights[j] * min(1.0, (e - lo) / h)
        return float(val)

    return cdf


def _binned_tv(masses: np.ndarray, centers: np.ndarray, step: float,
               ref: GridMeasure) -> float:
    # compare window-binned reference masses against the lattice masses;
    # reference mass outside the window counts as disagreement
    edges = np.concatenate([centers - 0.5 * step, [centers[-1] + 0.5 * step]])
    cdf = _smoothed_cdf(ref)
    cdf_vals = np.array([cdf(e) for e in edges])
    ref_bins = np.diff(cdf_vals)
    leftover = 1.0 - float(cdf_vals[-1] - cdf_vals[0])
    missing = max(0.0, 1.0 - float(np.sum(masses)))
    return 0.5 * (float(np.abs(ref_bins - masses).sum()) + leftover + missing)


def joint_covariant_distribution(tau: State, state: State,
                                 q_values: np.ndarray, p_values: np.ndarray,
                                 hbar: float = 1.0,
                                 tv_tol: float = 1e-2) -> JointDistribution:
    """Joint phase-space law of the covariant observable generated by tau.

    The mass assigned to lattice point (q, p) is the outcome density there
    times the lattice cell area.  q_values must be cell-aligned multiples of
    the grid step and uniformly spaced; p_values must sit on the momentum
    lattice.  Margins are checked in total variation against the convolved
    sharp laws; a gap beyond tv_tol raises AccuracyError (the lattice window
    is clipping real mass or is too coarse).
    """
    if not hbar > 0.0:
        raise DomainError("hbar must be positive")
    t = _as_mixed(tau)
    s = _as_mixed(state)
    grid = s.grid
    if t.grid != grid:
        raise DomainError("tau and state must share one grid")
    q_values = np.asarray(q_values, dtype=float).reshape(-1)
    p_values = np.asarray(p_values, dtype=float).reshape(-1)
    if q_values.size < 2 or p_values.size < 2:
        raise DomainError("need at least two lattice points per axis")
    if np.any(np.diff(q_values) <= 0.0) or np.any(np.diff(p_values) <= 0.0):
        raise DomainError("lattice values must be strictly increasing")
    dx, n = grid.dx, grid.n
    dp = grid.momentum_step(hbar)
    q_cells = _lattice_indices(q_values, dx, 0.0, "q")
    p_idx = _lattice_indices(p_values, dp, -dp * (n // 2), "p")
    if p_idx[0] < 0 or p_idx[-1] >= n:
        raise DomainError("p values fall outside the momentum band")
    dq_step = float(q_values[1] - q_values[0])
    dp_step = float(p_values[1] - p_values[0])
    if (np.max(np.abs(np.diff(q_values) - dq_step)) > 1e-9
            or np.max(np.abs(np.diff(p_values) - dp_step)) > 1e-9):
        raise DomainError("lattice spacing must be uniform")

    scale = dx * dx / (2.0 * math.pi * hbar) * dq_step * dp_step
    mass = np.zeros((q_values.size, p_values.size))
    for w_t, phi in t.components:
        for w_s, psi in s.components:
            w = w_t * w_s
            for iq, cells in enumerate(q_cells):
                overlap = np.conj(_zero_shift(phi.amplitudes, int(cells))) \
                    * psi.amplitudes
                spectrum = np.fft.fftshift(np.fft.fft(overlap))
                mass[iq] += w * scale * np.abs(spectrum[p_idx]) ** 2

    mu_tau, nu_tau = covariant_marginals(t, hbar)
    ref_q = convolve(position_distribution(s), mu_tau)
    ref_p = convolve(momentum_distribution(s, hbar), nu_tau)
    tv_q = _binned_tv(mass.sum(axis=1), q_values, dq_step, ref_q)
    tv_p = _binned_tv(mass.sum(axis=0), p_values, dp_step, ref_p)
    if max(tv_q, tv_p) > tv_tol:
        raise AccuracyError(
            f"joint margins drift from the smeared laws by TV "
            f"{max(tv_q, tv_p):.3e} > {tv_tol:.1e}")
    return JointDistribution(q_values, p_values, mass, tv_q, tv_p)


# -- JSON-friendly specs --------------------------------------------------------

_MAP_SPEC_KEYS = {
    "identity": frozenset({"kind"}),
    "table": frozenset({"kind", "xs", "ys"}),
    "cos_shift": frozenset({"kind", "amplitude"}),
    "bounded_range": frozenset({"kind", "half_range"}),
}

_OBSERVABLE_SPEC_KEYS = {
    "sharp_position": frozenset({"kind"}),
    "sharp_momentum": frozenset({"kind"}),
    "smeared_position": frozenset({"kind", "measure"}),
    "smeared_momentum": frozenset({"kind", "measure"}),
    "trivial": frozenset({"kind", "measure", "axis"}),
    "pushforward": frozenset({"kind", "inner", "map"}),
    "covariant_marginal": frozenset({"kind", "tau", "axis"}),
}


def map_from_spec(spec: dict) -> MeasurableMap:
    """Build a value-space map from a dict: identity, table(xs, ys),
    cos_shift(amplitude), or bounded_range(half_range)."""
    if not isinstance(spec, dict):
        raise DomainError("map spec must be a dict")
    kind = spec.get("kind")
    if kind in _MAP_SPEC_KEYS:
        _check_spec_keys(spec, _MAP_SPEC_KEYS[kind], f"map kind {kind!r}")
    try:
        if kind == "identity":
            return identity_map()
        if kind == "table":
            return PiecewiseLinearMap(np.asarray(spec["xs"], dtype=float),
                                      np.asarray(spec["ys"], dtype=float))
        if kind == "cos_shift":
            a = float(spec["amplitude"])
            return BoundedShiftMap(lambda x: a * np.cos(x), abs(a))
        if kind == "bounded_range":
            r = float(spec["half_range"])
            if r <= 0.0:
                raise DomainError("half_range must be positive")
            return BoundedRangeMap(lambda x: r * np.tanh(x / r), -r, r)
    except KeyError as exc:
        raise DomainError(f"map spec missing key {exc}") from None
    raise DomainError(f"unknown map kind {kind!r}")


def observable_from_spec(spec: dict, grid=None, hbar: float = 1.0) -> Observable:
    """Build an observable from a JSON-friendly dict (CLI input format)."""
    if not isinstance(spec, dict):
        raise DomainError("observable spec must be a dict")
    kind = spec.get("kind")
    if kind in _OBSERVABLE_SPEC_KEYS:
        _check_spec_keys(spec, _OBSERVABLE_SPEC_KEYS[kind],
                         f"observable kind {kind!r}")
    try:
        if kind == "sharp_position":
            return SharpPosition()
        if kind == "sharp_momentum":
            return SharpMomentum()
        if kind == "smeared_position":
            return SmearedPosition(measure_from_spec(spec["measure"]))
        if kind == "smeared_momentum":
            return SmearedMomentum(measure_from_spec(spec["measure"]))
        if kind == "trivial":
            return TrivialObservable(measure_from_spec(spec["measure"]),
                                     spec.get("axis", "position"))
        if kind == "pushforward":
            inner = observable_from_spec(spec["inner"], grid, hbar)
            return PushforwardObservable(inner, map_from_spec(spec["map"]))
        if kind == "covariant_marginal":
            tau = state_from_spec(spec["tau"], grid, hbar)
            return CovariantMarginal(tau, spec.get("axis", "position"))
    except KeyError as exc:
        raise DomainError(f"observable spec missing key {exc}") from None
    raise DomainError(f"unknown observable kind {kind!r}")


def observable_to_spec(obs: Observable) -> dict:
    """Dict form of an observable where one exists (not every map or
    generator is serializable; those raise DomainError)."""
    if isinstance(obs, SharpPosition):
        return {"kind": "sharp_position"}
    if isinstance(obs, SharpMomentum):
        return {"kind": "sharp_momentum"}
    if isinstance(obs, SmearedPosition):
        return {"kind": "smeared_position", "measure": _measure_spec(obs.mu)}
    if isinstance(obs, SmearedMomentum):
        return {"kind": "smeared_momentum", "measure": _measure_spec(obs.nu)}
    if isinstance(obs, TrivialObservable):
        return {"kind": "trivial", "measure": _measure_spec(obs.law),
                "axis": obs.axis}
    raise DomainError("observable has no serializable spec")


def _measure_spec(m: GridMeasure) -> dict:
    return {"atoms": [float(a) for a in m.atoms],
            "weights": [float(w) for w in m.weights]}
