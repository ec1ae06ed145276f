"""Wasserstein distances, exact transportation LP, and Kantorovich duality.

The production distance path uses the monotone (quantile) coupling, which is
optimal on the line for every order alpha >= 1 and for the sup-displacement
distance.  An exact primal transportation-simplex solver provides the
independent cross-check and the dual prices used to warm start coordinate
ascent on the Kantorovich dual.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InternalError, ResourceError
from .measures import GridMeasure

# Cell masses below this are treated as cumulative-sum rounding noise.
_CELL_TOL = 1e-14

LP_SIZE_CAP = 10_000


# -- quantile-coupling distances ---------------------------------------------

def _quantile_cells(m1: GridMeasure, m2: GridMeasure):
    """Common refinement of both quantile partitions of (0, 1].

    Returns (masses, q1, q2): cell masses and the constant quantile values of
    each measure on each cell.
    """
    c1 = np.asarray(m1._cum) / float(m1._cum[-1])
    c2 = np.asarray(m2._cum) / float(m2._cum[-1])
    ts = np.union1d(c1, c2)
    masses = np.diff(np.concatenate(([0.0], ts)))
    idx1 = np.minimum(np.searchsorted(c1, ts - 1e-15, side="left"), len(m1) - 1)
    idx2 = np.minimum(np.searchsorted(c2, ts - 1e-15, side="left"), len(m2) - 1)
    return masses, m1.atoms[idx1], m2.atoms[idx2]


def wasserstein(m1: GridMeasure, m2: GridMeasure, alpha: float) -> float:
    """Order-alpha Wasserstein distance via the monotone coupling."""
    if alpha == math.inf:
        return wasserstein_inf(m1, m2)
    if not (alpha >= 1.0 and math.isfinite(alpha)):
        raise DomainError("alpha must be a real >= 1 (or inf)")
    masses, q1, q2 = _quantile_cells(m1, m2)
    cost = float(np.sum(masses * np.abs(q1 - q2) ** alpha))
    return cost ** (1.0 / alpha)


def wasserstein_inf(m1: GridMeasure, m2: GridMeasure) -> float:
    """Essential sup of |x - y| under the monotone coupling."""
    masses, q1, q2 = _quantile_cells(m1, m2)
    live = masses > _CELL_TOL
    if not np.any(live):
        return 0.0
    return float(np.max(np.abs(q1[live] - q2[live])))


# -- exact transportation LP --------------------------------------------------

@dataclass(frozen=True, eq=False)
class Coupling:
    """Joint distribution on atoms(m1) x atoms(m2) with given marginals."""

    row_atoms: np.ndarray
    col_atoms: np.ndarray
    joint: np.ndarray

    def __post_init__(self) -> None:
        row_atoms = np.asarray(self.row_atoms, dtype=float).reshape(-1)
        col_atoms = np.asarray(self.col_atoms, dtype=float).reshape(-1)
        joint = np.asarray(self.joint, dtype=float)
        if joint.shape != (row_atoms.size, col_atoms.size):
            raise DomainError("joint shape must match atom counts")
        if np.any(joint < -1e-15):
            raise DomainError("coupling weights must be nonnegative")
        joint = np.maximum(joint, 0.0)
        for arr in (row_atoms, col_atoms, joint):
            arr.setflags(write=False)
        object.__setattr__(self, "row_atoms", row_atoms)
        object.__setattr__(self, "col_atoms", col_atoms)
        object.__setattr__(self, "joint", joint)

    def row_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    def col_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    def cost(self, alpha: float) -> float:
        diff = np.abs(self.row_atoms[:, None] - self.col_atoms[None, :])
        return float(np.sum(self.joint * diff ** alpha))

    def max_displacement(self) -> float:
        diff = np.abs(self.row_atoms[:, None] - self.col_atoms[None, :])
        live = self.joint > _CELL_TOL
        return float(np.max(diff[live])) if np.any(live) else 0.0


def _northwest_corner(a: np.ndarray, b: np.ndarray):
    """Initial basic feasible plan; returns (plan, basis cell list)."""
    n, m = a.size, b.size
    plan = np.zeros((n, m))
    basis: list[tuple[int, int]] = []
    ra = a.copy()
    rb = b.copy()
    i = j = 0
    while True:
        t = min(ra[i], rb[j])
        plan[i, j] = t
        basis.append((i, j))
        ra[i] -= t
        rb[j] -= t
        if i == n - 1 and j == m - 1:
            break
        # advance along the exhausted line; ties prefer the row so the path
        # stays a spanning tree with exactly n + m - 1 basic cells
        if ra[i] <= rb[j] and i < n - 1:
            i += 1
        elif j < m - 1:
            j += 1
        else:
            i += 1
    return plan, basis


def _solve_duals(n: int, m: int, basis: list[tuple[int, int]], cost: np.ndarray):
    """Dual prices from the basis tree, rooted at row 0 with u[0] = 0."""
    row_adj: list[list[int]] = [[] for _ in range(n)]
    col_adj: list[list[int]] = [[] for _ in range(m)]
    for (i, j) in basis:
        row_adj[i].append(j)
        col_adj[j].append(i)
    u = np.full(n, np.nan)
    v = np.full(m, np.nan)
    u[0] = 0.0
    stack = [(True, 0)]  # (is_row, index)
    while stack:
        is_row, k = stack.pop()
        if is_row:
            for j in row_adj[k]:
                if math.isnan(v[j]):
                    v[j] = cost[k, j] - u[k]
                    stack.append((False, j))
        else:
            for i in col_adj[k]:
                if math.isnan(u[i]):
                    u[i] = cost[i, k] - v[k]
                    stack.append((True, i))
    if np.any(np.isnan(u)) or np.any(np.isnan(v)):
        raise InternalError("basis graph is not spanning; degenerate pivot bug")
    return u, v


def _find_cycle(n: int, m: int, basis: list[tuple[int, int]],
                enter: tuple[int, int]) -> list[tuple[int, int]]:
    """Unique alternating cycle closed by the entering cell.

    Returned cells start with `enter` and alternate +/- along the cycle.
    """
    i0, j0 = enter
    row_adj: list[list[int]] = [[] for _ in range(n)]
    col_adj: list[list[int]] = [[] for _ in range(m)]
    for (i, j) in basis:
        row_adj[i].append(j)
        col_adj[j].append(i)
    # BFS from row i0 to col j0 over basis edges; nodes: rows 0..n-1, cols n..n+m-1
    parent = {("r", i0): None}
    queue = [("r", i0)]
    found = False
    while queue and not found:
        kind, k = queue.pop(0)
        if kind == "r":
            for j in row_adj[k]:
                node = ("c", j)
                if node not in parent:
                    parent[node] = ("r", k)
                    if j == j0:
                        found = True
                        break
                    queue.append(node)
        else:
            for i in col_adj[k]:
                node = ("r", i)
                if node not in parent:
                    parent[node] = ("c", k)
                    queue.append(node)
    if not found:
        raise InternalError("entering cell closes no cycle; basis not spanning")
    # walk back from col j0 to row i0 collecting basic cells along the path
    path_cells: list[tuple[int, int]] = []
    node = ("c", j0)
    while parent[node] is not None:
        prev = parent[node]
        cell = (prev[1], node[1]) if prev[0] == "r" else (node[1], prev[1])
        path_cells.append(cell)
        node = prev
    return [enter] + path_cells


def _transportation_simplex(a: np.ndarray, b: np.ndarray, cost: np.ndarray):
    """Exact optimal plan by primal simplex with Bland-style anti-cycling.

    Returns (plan, u, v, total_cost).
    """
    n, m = cost.shape
    a = np.asarray(a, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    b *= a.sum() / b.sum()  # rebalance rounding drift; both sides sum to ~1
    plan, basis = _northwest_corner(a, b)
    tol = 1e-12 * (1.0 + float(np.max(cost)))
    max_pivots = 2000 + 40 * n * m
    for _ in range(max_pivots):
        u, v = _solve_duals(n, m, basis, cost)
        reduced = cost - u[:, None] - v[None, :]
        for (i, j) in basis:
            reduced[i, j] = 0.0
        flat = np.flatnonzero(reduced.ravel() < -tol)
        if flat.size == 0:
            total = float(np.sum(plan * cost))
            return plan, u, v, total
        enter = (int(flat[0]) // m, int(flat[0]) % m)  # Bland: smallest index
        cycle = _find_cycle(n, m, basis, enter)
        minus = cycle[1::2]
        theta = min(plan[c] for c in minus)
        # leaving cell: smallest index among the minus cells achieving theta
        leaving = min(c for c in minus if plan[c] <= theta + 1e-15)
        for k, c in enumerate(cycle):
            if k % 2 == 0:
                plan[c] += theta
            else:
                plan[c] = max(plan[c] - theta, 0.0)
        plan[leaving] = 0.0
        basis.remove(leaving)
        basis.append(enter)
    raise InternalError("transportation simplex exceeded its pivot budget")


def optimal_coupling_lp(m1: GridMeasure, m2: GridMeasure, alpha: float,
                        size_cap: int = LP_SIZE_CAP):
    """Exact optimal coupling and transportation cost for |x-y|^alpha.

    Returns (Coupling, cost) with cost the raw objective value, so that
    cost ** (1/alpha) agrees with :func:`wasserstein`.
    """
    if not (alpha >= 1.0 and math.isfinite(alpha)):
        raise DomainError("alpha must be a finite real >= 1")
    n, m = len(m1), len(m2)
    if n * m > size_cap:
        raise ResourceError(f"LP instance {n}x{m} exceeds cell cap {size_cap}")
    cost = np.abs(m1.atoms[:, None] - m2.atoms[None, :]) ** alpha
    plan, u, v, total = _transportation_simplex(m1.weights, m2.weights, cost)
    coupling = Coupling(m1.atoms, m2.atoms, plan)
    if (np.max(np.abs(coupling.row_marginal() - m1.weights)) > 1e-10 or
            np.max(np.abs(coupling.col_marginal() - m2.weights)) > 1e-10):
        raise InternalError("LP plan marginals drifted beyond 1e-10")
    return coupling, total


def _lp_dual_prices(m1: GridMeasure, m2: GridMeasure, alpha: float,
                    size_cap: int = LP_SIZE_CAP):
    if len(m1) * len(m2) > size_cap:
        raise ResourceError(f"LP instance exceeds cell cap {size_cap}")
    cost = np.abs(m1.atoms[:, None] - m2.atoms[None, :]) ** alpha
    _, u, v, total = _transportation_simplex(m1.weights, m2.weights, cost)
    return u, v, total


# -- Kantorovich duality ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DualPair:
    """Dual potentials (psi on atoms(m1), phi on atoms(m2)) for order alpha.

    Feasibility phi(y) - psi(x) <= |x - y|^alpha is checked against the
    measures in :func:`dual_value`.
    """

    psi_values: np.ndarray
    phi_values: np.ndarray
    alpha: float

    def __post_init__(self) -> None:
        psi = np.asarray(self.psi_values, dtype=float).reshape(-1)
        phi = np.asarray(self.phi_values, dtype=float).reshape(-1)
        if not (self.alpha >= 1.0 and math.isfinite(self.alpha)):
            raise DomainError("alpha must be a finite real >= 1")
        psi.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "psi_values", psi)
        object.__setattr__(self, "phi_values", phi)


def c_transform(psi_values: np.ndarray, m1: GridMeasure, m2: GridMeasure,
                alpha: float) -> np.ndarray:
    """Largest phi feasible against psi: phi(y) = min_x psi(x) + |x-y|^alpha."""
    psi = np.asarray(psi_values, dtype=float).reshape(-1)
    if psi.size != len(m1):
        raise DomainError("psi must have one value per atom of m1")
    cost = np.abs(m1.atoms[:, None] - m2.atoms[None, :]) ** alpha
    return np.min(psi[:, None] + cost, axis=0)


def c_transform_upper(phi_values: np.ndarray, m2: GridMeasure, m1: GridMeasure,
                      alpha: float) -> np.ndarray:
    """Smallest psi feasible against phi: psi(x) = max_y phi(y) - |x-y|^alpha."""
    phi = np.asarray(phi_values, dtype=float).reshape(-1)
    if phi.size != len(m2):
        raise DomainError("phi must have one value per atom of m2")
    cost = np.abs(m1.atoms[:, None] - m2.atoms[None, :]) ** alpha
    return np.max(phi[None, :] - cost, axis=1)


def feasibility_violation(m1: GridMeasure, m2: GridMeasure, pair: DualPair) -> float:
    """Largest excess of phi(y) - psi(x) over |x - y|^alpha (<= 0 if feasible)."""
    cost = np.abs(m1.atoms[:, None] - m2.atoms[None, :]) ** pair.alpha
    gap = pair.phi_values[None, :] - pair.psi_values[:, None] - cost
    return float(np.max(gap))


def dual_value(m1: GridMeasure, m2: GridMeasure, pair: DualPair) -> float:
    """Dual objective int phi dm2 - int psi dm1 for a feasible pair."""
    if pair.psi_values.size != len(m1) or pair.phi_values.size != len(m2):
        raise DomainError("potential lengths must match the measures")
    if feasibility_violation(m1, m2, pair) > 1e-9:
        raise DomainError("dual pair violates the transport constraint")
    return float(np.sum(pair.phi_values * m2.weights)
                 - np.sum(pair.psi_values * m1.weights))


def dual_ascent(m1: GridMeasure, m2: GridMeasure, alpha: float,
                max_rounds: int = 1000, tol: float = 1e-10,
                warm_start: bool = True) -> DualPair:
    """Coordinate ascent by alternating c-transforms.

    Warm started from the exact LP dual prices by default, in which case the
    first round already attains the optimum and later rounds keep it.
    """
    if warm_start:
        u, v, _ = _lp_dual_prices(m1, m2, alpha)
        psi = -u
    else:
        psi = np.zeros(len(m1))
    phi = c_transform(psi, m1, m2, alpha)
    best = float(np.sum(phi * m2.weights) - np.sum(psi * m1.weights))
    for _ in range(max_rounds):
        psi = c_transform_upper(phi, m2, m1, alpha)
        phi = c_transform(psi, m1, m2, alpha)
        value = float(np.sum(phi * m2.weights) - np.sum(psi * m1.weights))
        if value - best < tol:
            best = max(best, value)
            break
        best = value
    return DualPair(psi, phi, alpha)


def lipschitz_witness_values(psi_values: np.ndarray, m1: GridMeasure,
                             points: np.ndarray) -> np.ndarray:
    """Evaluate the 1-Lipschitz lower envelope h(t) = min_i psi_i + |x_i - t|.

    For alpha = 1 this turns any psi into a valid Lipschitz test function;
    applied to LP-optimal potentials it witnesses the distance itself.
    """
    psi = np.asarray(psi_values, dtype=float).reshape(-1)
    pts = np.asarray(points, dtype=float).reshape(-1)
    return np.min(psi[:, None] + np.abs(m1.atoms[:, None] - pts[None, :]), axis=0)


def tent_function(points: np.ndarray, peak: float, height: float) -> np.ndarray:
    """Tent witness max(0, height - |t - peak|); 1-Lipschitz and bounded."""
    pts = np.asarray(points, dtype=float)
    return np.maximum(0.0, height - np.abs(pts - peak))


# -- file format --------------------------------------------------------------

def save_coupling_csv(coupling: Coupling, path: str) -> None:
    """Write positive coupling cells as CSV rows 'i,j,xi,yj,w'."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "xi", "yj", "w"])
        rows, cols = np.nonzero(coupling.joint > 0.0)
        for i, j in zip(rows.tolist(), cols.tolist()):
            writer.writerow([i, j,
                             repr(float(coupling.row_atoms[i])),
                             repr(float(coupling.col_atoms[j])),
                             repr(float(coupling.joint[i, j]))])
