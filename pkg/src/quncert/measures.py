"""Finitely supported probability measures on the real line.

A :class:`GridMeasure` is an atomic measure with strictly increasing support
points and nonnegative weights summing to one.  All distribution-level
quantities in the library (spread functionals, overall widths, convolutions,
pushforwards) operate on this representation.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import DomainError, InternalError, ResourceError

log = logging.getLogger(__name__)

# Weight-sum tolerance for a valid measure, and the slack used when a mass
# threshold such as 1 - eps must be met despite cumulative-sum rounding.
MASS_TOL = 1e-12
_MASS_SLACK = 1e-12

# Default cap on the number of output atoms a convolution may produce.
DEFAULT_CONVOLVE_CAP = 4_000_000


@dataclass(frozen=True)
class Interval:
    """Closed interval given by center and width."""

    center: float
    width: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.center) and math.isfinite(self.width)):
            raise DomainError("interval parameters must be finite")
        if self.width < 0.0:
            raise DomainError("interval width must be nonnegative")

    @property
    def lo(self) -> float:
        return self.center - 0.5 * self.width

    @property
    def hi(self) -> float:
        return self.center + 0.5 * self.width

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Atomic probability measure: strictly increasing atoms, weights sum to 1."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        atoms = np.asarray(self.atoms, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.size == 0 or atoms.size != weights.size:
            raise DomainError("atoms and weights must be nonempty and equal length")
        if not np.all(np.isfinite(atoms)) or not np.all(np.isfinite(weights)):
            raise DomainError("atoms and weights must be finite")
        if atoms.size > 1 and not np.all(np.diff(atoms) > 0.0):
            raise DomainError("atoms must be strictly increasing")
        if np.any(weights < 0.0):
            raise DomainError("weights must be nonnegative")
        cum = np.cumsum(weights)
        total = float(cum[-1])
        if abs(total - 1.0) > MASS_TOL:
            raise DomainError(f"weights must sum to 1 within {MASS_TOL}, got {total!r}")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        cum.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_cum", cum)

    def __len__(self) -> int:
        return int(self.atoms.size)

    # -- point statistics ---------------------------------------------------

    def cdf(self, x: float) -> float:
        """Right-continuous distribution function: mass of (-inf, x]."""
        i = int(np.searchsorted(self.atoms, x, side="right"))
        return 0.0 if i == 0 else float(self._cum[i - 1])

    def quantile(self, t: float) -> float:
        """Left-continuous generalized inverse of the cdf, defined on (0, 1]."""
        if not (0.0 < t <= 1.0):
            raise DomainError("quantile level must lie in (0, 1]")
        cum = self._cum / self._cum[-1]
        i = int(np.searchsorted(cum, t - _MASS_SLACK, side="left"))
        return float(self.atoms[min(i, len(self) - 1)])

    def moment(self, k: int) -> float:
        """k-th raw moment, k a positive integer."""
        if not isinstance(k, (int, np.integer)) or k < 1:
            raise DomainError("moment order must be a positive integer")
        return float(np.sum(self.weights * self.atoms ** int(k)))

    def mean(self) -> float:
        return self.moment(1)

    def interval_mass(self, interval: Interval) -> float:
        """Mass of the closed interval (endpoint atoms count)."""
        scale = 1e-12 * max(1.0, abs(interval.lo), abs(interval.hi))
        i0 = int(np.searchsorted(self.atoms, interval.lo - scale, side="left"))
        i1 = int(np.searchsorted(self.atoms, interval.hi + scale, side="right"))
        if i1 <= i0:
            return 0.0
        lo_cum = 0.0 if i0 == 0 else float(self._cum[i0 - 1])
        return float(self._cum[i1 - 1]) - lo_cum

    def min_spacing(self) -> float:
        if len(self) < 2:
            raise DomainError("spacing undefined for a single atom")
        return float(np.min(np.diff(self.atoms)))

    @property
    def support_lo(self) -> float:
        idx = np.nonzero(self.weights > 0.0)[0]
        return float(self.atoms[idx[0]]) if idx.size else float(self.atoms[0])

    @property
    def support_hi(self) -> float:
        idx = np.nonzero(self.weights > 0.0)[0]
        return float(self.atoms[idx[-1]]) if idx.size else float(self.atoms[-1])


def _make(atoms: np.ndarray, weights: np.ndarray, normalize: bool = True) -> GridMeasure:
    # internal constructor: optional exact renormalization of positive weights
    weights = np.asarray(weights, dtype=float)
    if normalize:
        total = float(np.sum(weights))
        if total <= 0.0:
            raise DomainError("total mass must be positive")
        weights = weights / total
    return GridMeasure(np.asarray(atoms, dtype=float), weights)


def sorted_measure(atoms: Sequence[float], weights: Sequence[float],
                   normalize: bool = True) -> GridMeasure:
    """Build a measure from unordered atoms, merging exact duplicates."""
    a = np.asarray(atoms, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if a.size != w.size:
        raise DomainError("atoms and weights must have equal length")
    uniq, inverse = np.unique(a, return_inverse=True)
    merged = np.bincount(inverse, weights=w, minlength=uniq.size)
    return _make(uniq, merged, normalize=normalize)


# -- simple constructors ----------------------------------------------------

def point_mass(a: float) -> GridMeasure:
    return GridMeasure(np.array([float(a)]), np.array([1.0]))


def two_point(a: float, b: float, weight_a: float = 0.5) -> GridMeasure:
    if not (0.0 < weight_a < 1.0):
        raise DomainError("weight_a must lie in (0, 1)")
    return sorted_measure([a, b], [weight_a, 1.0 - weight_a], normalize=False)


def uniform_measure(lo: float, hi: float, n_atoms: int) -> GridMeasure:
    """Equal weights on n_atoms equally spaced points of [lo, hi]."""
    if n_atoms < 1:
        raise DomainError("n_atoms must be positive")
    if n_atoms == 1:
        return point_mass(0.5 * (lo + hi))
    if not hi > lo:
        raise DomainError("need hi > lo")
    atoms = np.linspace(lo, hi, n_atoms)
    return _make(atoms, np.full(n_atoms, 1.0 / n_atoms), normalize=True)


def gaussian_measure(mean: float, sigma: float, n_atoms: int = 801,
                     half_width: float = 8.0) -> GridMeasure:
    """Gaussian density sampled on a regular grid of +-half_width*sigma."""
    if sigma <= 0.0:
        raise DomainError("sigma must be positive")
    xs = mean + sigma * np.linspace(-half_width, half_width, n_atoms)
    w = np.exp(-0.5 * ((xs - mean) / sigma) ** 2)
    return _make(xs, w, normalize=True)


# -- spread functionals -----------------------------------------------------

def _golden_min(fun: Callable[[float], float], lo: float, hi: float,
                xtol: float = 1e-10) -> float:
    """Golden-section minimizer of a convex function on [lo, hi]."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def alpha_deviation(m: GridMeasure, alpha: float) -> float:
    """Minimal alpha-th root of the alpha-th absolute moment about a point.

    Minimizes sum_i w_i |x_i - y|^alpha over y in [min atom, max atom] (the
    objective is convex for alpha >= 1) and returns the alpha-th root of the
    minimum.  For alpha = 2 this equals the standard deviation.
    """
    if not (alpha >= 1.0) or not math.isfinite(alpha):
        raise DomainError("alpha must be a finite real >= 1")
    if len(m) == 1:
        return 0.0
    atoms, w = m.atoms, m.weights

    def objective(y: float) -> float:
        return float(np.sum(w * np.abs(atoms - y) ** alpha))

    y_star = _golden_min(objective, float(atoms[0]), float(atoms[-1]), xtol=1e-10)
    return objective(y_star) ** (1.0 / alpha)


def std_deviation(m: GridMeasure) -> float:
    """Standard deviation via raw moments, clamping tiny negative variance."""
    variance = m.moment(2) - m.mean() ** 2
    if variance < 0.0:
        if variance < -1e-12:
            raise InternalError(f"negative variance {variance!r} beyond tolerance")
        variance = 0.0
    return math.sqrt(variance)


def overall_width(m: GridMeasure, eps: float) -> float:
    """Smallest width of a closed interval carrying mass at least 1 - eps."""
    if not (0.0 <= eps < 1.0):
        raise DomainError("eps must lie in [0, 1)")
    need = 1.0 - eps - _MASS_SLACK
    if need <= 0.0:
        return 0.0
    cum = np.concatenate(([0.0], np.asarray(m._cum)))
    # smallest j with mass(i..j) >= need, vectorized over left endpoints i
    targets = cum[:-1] + need
    jp = np.searchsorted(cum, targets, side="left")
    ok = jp <= len(m)
    if not np.any(ok):
        return float(m.atoms[-1] - m.atoms[0])
    lefts = np.nonzero(ok)[0]
    widths = m.atoms[jp[ok] - 1] - m.atoms[lefts]
    return float(np.min(widths))


def overall_width_interval(m: GridMeasure, eps: float) -> Interval:
    """A minimizing interval for :func:`overall_width` (atom-bracketed)."""
    if not (0.0 <= eps < 1.0):
        raise DomainError("eps must lie in [0, 1)")
    need = 1.0 - eps - _MASS_SLACK
    if need <= 0.0:
        return Interval(float(m.quantile(0.5)), 0.0)
    cum = np.concatenate(([0.0], np.asarray(m._cum)))
    targets = cum[:-1] + need
    jp = np.searchsorted(cum, targets, side="left")
    ok = jp <= len(m)
    if not np.any(ok):
        return Interval(0.5 * float(m.atoms[-1] + m.atoms[0]),
                        float(m.atoms[-1] - m.atoms[0]))
    lefts = np.nonzero(ok)[0]
    widths = m.atoms[jp[ok] - 1] - m.atoms[lefts]
    k = int(np.argmin(widths))
    i = int(lefts[k])
    j = int(jp[ok][k] - 1)
    return Interval(0.5 * float(m.atoms[i] + m.atoms[j]),
                    float(m.atoms[j] - m.atoms[i]))


# -- measure arithmetic -----------------------------------------------------

def translate(m: GridMeasure, a: float) -> GridMeasure:
    """Shift every atom by a; weights are untouched."""
    if not math.isfinite(a):
        raise DomainError("shift must be finite")
    return GridMeasure(m.atoms + a, m.weights)


def convolve(a: GridMeasure, b: GridMeasure,
             max_atoms: int = DEFAULT_CONVOLVE_CAP) -> GridMeasure:
    """Distribution of the sum of independent draws from a and b.

    Pairwise atom sums are re-binned onto a uniform grid at the finer of the
    two input spacings.  Each sum splits its mass linearly between the two
    bracketing bins, which preserves total mass and the first moment exactly
    (up to rounding); the binning displaces mass by at most one bin width.
    """
    if len(a) == 1:
        return translate(b, float(a.atoms[0]))
    if len(b) == 1:
        return translate(a, float(b.atoms[0]))
    h = min(a.min_spacing(), b.min_spacing())
    lo = float(a.atoms[0] + b.atoms[0])
    hi = float(a.atoms[-1] + b.atoms[-1])
    n_bins = int(math.floor((hi - lo) / h + 1e-9)) + 2
    if n_bins > max_atoms:
        raise ResourceError(
            f"convolution would produce {n_bins} atoms, cap is {max_atoms}")
    small, big = (a, b) if len(a) <= len(b) else (b, a)
    acc = np.zeros(n_bins + 1)
    for x, w in zip(small.atoms, small.weights):
        if w == 0.0:
            continue
        # rounding in lo can push the first position epsilon below zero
        pos = np.clip((big.atoms + (x - lo)) / h, 0.0, n_bins - 1e-9)
        k = np.floor(pos).astype(np.int64)
        frac = pos - k
        acc += np.bincount(k, weights=big.weights * (w * (1.0 - frac)),
                           minlength=n_bins + 1)
        acc += np.bincount(k + 1, weights=big.weights * (w * frac),
                           minlength=n_bins + 1)
    atoms = lo + h * np.arange(n_bins + 1)
    nz = np.nonzero(acc > 0.0)[0]
    if nz.size == 0:
        raise InternalError("convolution produced no mass")
    s = slice(int(nz[0]), int(nz[-1]) + 1)
    return GridMeasure(atoms[s], acc[s])


# -- maps and pushforward ---------------------------------------------------

@dataclass(frozen=True)
class PiecewiseLinearMap:
    """Strictly monotone piecewise-linear map given by a breakpoint table.

    Extrapolates linearly beyond the table using the end segment slopes, so
    the map is defined (and strictly monotone) on the whole line.
    """

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=float).reshape(-1)
        ys = np.asarray(self.ys, dtype=float).reshape(-1)
        if xs.size < 2 or xs.size != ys.size:
            raise DomainError("breakpoint table needs >= 2 rows of equal length")
        if not np.all(np.diff(xs) > 0.0):
            raise DomainError("breakpoint abscissae must be strictly increasing")
        dy = np.diff(ys)
        if not (np.all(dy > 0.0) or np.all(dy < 0.0)):
            raise DomainError("breakpoint table is not strictly monotone")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def increasing(self) -> bool:
        return bool(self.ys[1] > self.ys[0])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = np.interp(x, self.xs, self.ys)
        slope_lo = (self.ys[1] - self.ys[0]) / (self.xs[1] - self.xs[0])
        slope_hi = (self.ys[-1] - self.ys[-2]) / (self.xs[-1] - self.xs[-2])
        left = x < self.xs[0]
        right = x > self.xs[-1]
        y = np.where(left, self.ys[0] + slope_lo * (x - self.xs[0]), y)
        y = np.where(right, self.ys[-1] + slope_hi * (x - self.xs[-1]), y)
        return y


def identity_map() -> PiecewiseLinearMap:
    return PiecewiseLinearMap(np.array([0.0, 1.0]), np.array([0.0, 1.0]))


@dataclass(frozen=True)
class BoundedShiftMap:
    """Map f(x) = x + g(x) with a declared sup-norm bound on g.

    The bound is part of the contract (closed-form distance results use it);
    it is spot-checked on every batch of evaluated points.
    """

    g: Callable[[np.ndarray], np.ndarray]
    bound: float

    def __post_init__(self) -> None:
        if not (self.bound >= 0.0 and math.isfinite(self.bound)):
            raise DomainError("declared bound must be a finite nonnegative real")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        gx = np.asarray(self.g(x), dtype=float)
        if np.any(np.abs(gx) > self.bound + 1e-9):
            raise DomainError("perturbation exceeds its declared bound")
        return x + gx


@dataclass(frozen=True)
class BoundedRangeMap:
    """General bounded measurable map with a declared range interval."""

    f: Callable[[np.ndarray], np.ndarray]
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.hi >= self.lo):
            raise DomainError("range bounds must be finite with hi >= lo")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = np.asarray(self.f(x), dtype=float)
        if np.any(y < self.lo - 1e-9) or np.any(y > self.hi + 1e-9):
            raise DomainError("map output left its declared range")
        return y


MeasurableMap = PiecewiseLinearMap | BoundedShiftMap | BoundedRangeMap


def pushforward(m: GridMeasure, f: MeasurableMap) -> GridMeasure:
    """Image measure of m under f.

    Monotone table maps keep atom multiplicity; closure-form maps may collide
    atoms, whose weights are then merged.
    """
    if isinstance(f, PiecewiseLinearMap):
        ys = np.asarray(f(m.atoms), dtype=float)
        if f.increasing:
            return GridMeasure(ys, m.weights)
        return GridMeasure(ys[::-1], m.weights[::-1])
    if isinstance(f, (BoundedShiftMap, BoundedRangeMap)):
        ys = np.asarray(f(m.atoms), dtype=float)
        return sorted_measure(ys, m.weights, normalize=False)
    raise DomainError(
        "pushforward requires a PiecewiseLinearMap, BoundedShiftMap, or BoundedRangeMap")


# -- file format ------------------------------------------------------------

def _check_spec_keys(spec: dict, allowed: frozenset, what: str) -> None:
    """Reject unknown spec keys so a typo cannot silently change defaults."""
    unknown = sorted(set(spec) - set(allowed))
    if unknown:
        raise DomainError(
            f"{what} spec has unrecognized keys {unknown}; "
            f"allowed keys are {sorted(allowed)}")


_MEASURE_SPEC_KEYS = {
    "point": frozenset({"family", "at"}),
    "two_point": frozenset({"family", "x1", "x2", "w1"}),
    "uniform": frozenset({"family", "lo", "hi", "n_atoms"}),
    "gaussian": frozenset({"family", "mean", "sigma", "n_atoms", "half_width"}),
    "file": frozenset({"family", "path"}),
}


def measure_from_spec(spec: dict) -> GridMeasure:
    """Build a measure from a JSON-friendly dict.

    Either explicit {"atoms": [...], "weights": [...]} or a named family:
    point/two_point/uniform/gaussian/file with that family's parameters.
    Keys outside the chosen form are rejected.
    """
    if not isinstance(spec, dict):
        raise DomainError("measure spec must be a dict")
    if "atoms" in spec:
        if "weights" not in spec:
            raise DomainError("explicit measure spec needs 'weights'")
        _check_spec_keys(spec, frozenset({"atoms", "weights"}), "measure")
        return sorted_measure(spec["atoms"], spec["weights"])
    family = spec.get("family")
    if family in _MEASURE_SPEC_KEYS:
        _check_spec_keys(spec, _MEASURE_SPEC_KEYS[family],
                         f"measure family {family!r}")
    try:
        if family == "point":
            return point_mass(float(spec.get("at", 0.0)))
        if family == "two_point":
            return two_point(float(spec["x1"]), float(spec["x2"]),
                             float(spec.get("w1", 0.5)))
        if family == "uniform":
            return uniform_measure(float(spec["lo"]), float(spec["hi"]),
                                   int(spec.get("n_atoms", 201)))
        if family == "gaussian":
            return gaussian_measure(float(spec.get("mean", 0.0)),
                                    float(spec["sigma"]),
                                    n_atoms=int(spec.get("n_atoms", 801)),
                                    half_width=float(spec.get("half_width", 8.0)))
        if family == "file":
            return load_measure_csv(str(spec["path"]))
    except KeyError as exc:
        raise DomainError(f"measure spec missing key {exc}") from None
    raise DomainError(f"unknown measure family {family!r}")


def save_measure_csv(m: GridMeasure, path: str) -> None:
    """Write the measure as CSV with header 'x,w', atoms ascending."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "w"])
        for x, w in zip(m.atoms, m.weights):
            writer.writerow([repr(float(x)), repr(float(w))])


def load_measure_csv(path: str) -> GridMeasure:
    """Read a 'x,w' CSV measure; renormalizes, logging drifts beyond 1e-9."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DomainError(f"{path}: empty measure file") from None
        if [c.strip().lower() for c in header[:2]] != ["x", "w"]:
            raise DomainError(f"{path}: expected header 'x,w'")
        xs: list[float] = []
        ws: list[float] = []
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise DomainError(f"{path}: malformed row {row!r}")
            xs.append(float(row[0]))
            ws.append(float(row[1]))
    if not xs:
        raise DomainError(f"{path}: no atoms")
    atoms = np.asarray(xs, dtype=float)
    weights = np.asarray(ws, dtype=float)
    if atoms.size > 1 and not np.all(np.diff(atoms) > 0.0):
        raise DomainError(f"{path}: rows must be sorted by strictly increasing x")
    total = float(np.sum(weights))
    if abs(total - 1.0) > 1e-9:
        log.info("normalizing measure from %s: total mass deviated by %.3e",
                 path, total - 1.0)
    return _make(atoms, weights, normalize=True)
