"""Receiver trajectories: in-cell natural cubic splines traversed at
constant speed.

A trajectory with n support points starts on the left edge (x = 0),
ends on the right edge (x = domain_size), and stays strictly inside the
cell in between.  The spline parameter t in [0, 1] is reparametrized to
normalized arc length tau so that equal tau steps cover equal path
lengths; queries take tau.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .beam import InfeasibleError

DEFAULT_RESOLUTION = 1024
# Interior grid used for the strict inside-the-cell check.
BOUNDS_GRID = 2000
# Candidate splines drawn before sample_trajectory gives up.
TRAJECTORY_BUDGET = 10**5


def _natural_spline(points: np.ndarray) -> CubicSpline:
    knots = np.linspace(0.0, 1.0, len(points))
    return CubicSpline(knots, points, axis=0, bc_type="natural")


def arc_length_table(spline: CubicSpline, resolution: int = DEFAULT_RESOLUTION) -> tuple[np.ndarray, float]:
    """Normalized cumulative arc length tau(t_i) on a uniform t grid.

    Each subinterval integral uses Simpson's rule on (t_i, midpoint,
    t_{i+1}).  Returns (table of length resolution+1 with table[0] = 0 and
    table[-1] = 1, total path length).
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    t = np.linspace(0.0, 1.0, resolution + 1)
    deriv = spline.derivative()
    mids = (t[:-1] + t[1:]) / 2.0

    def speed(u):
        v = deriv(u)
        return np.hypot(v[:, 0], v[:, 1])

    h = t[1] - t[0]
    segments = h / 6.0 * (speed(t[:-1]) + 4.0 * speed(mids) + speed(t[1:]))
    table = np.concatenate([[0.0], np.cumsum(segments)])
    total = float(table[-1])
    if total <= 0.0:
        raise ValueError("degenerate spline with zero path length")
    table = table / total
    table[-1] = 1.0
    return table, total


@dataclass(frozen=True)
class Trajectory:
    """A sampled constant-speed path through the cell."""

    support_points: np.ndarray  # (n, 2)
    spline: CubicSpline
    tau_table: np.ndarray  # (resolution + 1,)
    t_grid: np.ndarray  # (resolution + 1,)
    node_speeds: np.ndarray  # |s'(t)| at the t grid nodes
    path_length: float
    seed: Optional[int] = None

    def __post_init__(self):
        pts = np.asarray(self.support_points, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "support_points", pts)
        if not np.all(np.diff(self.tau_table) > 0.0):
            raise ValueError("tau table must be strictly increasing")

    @property
    def degree(self) -> int:
        return len(self.support_points)

    def to_json(self) -> str:
        return json.dumps(
            {
                "support_points": self.support_points.tolist(),
                "degree": self.degree,
                "seed": self.seed,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str, resolution: int = DEFAULT_RESOLUTION) -> "Trajectory":
        doc = json.loads(text)
        return from_support_points(
            np.asarray(doc["support_points"], dtype=float),
            resolution=resolution,
            seed=doc.get("seed"),
        )


def from_support_points(
    points: np.ndarray,
    resolution: int = DEFAULT_RESOLUTION,
    seed: Optional[int] = None,
) -> Trajectory:
    """Build the constant-speed trajectory through given support points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError(f"support points must have shape (n >= 2, 2), got {pts.shape}")
    spline = _natural_spline(pts)
    table, total = arc_length_table(spline, resolution)
    return _assemble(pts, spline, table, total, resolution, seed)


def _assemble(pts, spline, table, total, resolution, seed) -> Trajectory:
    t_grid = np.linspace(0.0, 1.0, resolution + 1)
    deriv = spline.derivative()(t_grid)
    return Trajectory(
        support_points=pts,
        spline=spline,
        tau_table=table,
        t_grid=t_grid,
        node_speeds=np.hypot(deriv[:, 0], deriv[:, 1]),
        path_length=total,
        seed=seed,
    )


def sample_trajectory(
    degree: int,
    rng: np.random.Generator,
    domain_size: float,
    resolution: int = DEFAULT_RESOLUTION,
) -> Trajectory:
    """Sample a trajectory with ``degree`` support points.

    The first point sits on the left edge, the last on the right edge, the
    rest are uniform in the cell.  Candidates whose spline leaves the open
    cell anywhere on a dense interior grid are rejected (the two edge
    endpoints themselves are exempt).
    """
    if degree < 2:
        raise ValueError("need at least 2 support points")
    if domain_size <= 0:
        raise ValueError("domain_size must be positive")
    # Endpoints touch the boundary by construction, so check strictly
    # interior parameters only.
    grid = np.linspace(0.0, 1.0, BOUNDS_GRID + 2)[1:-1]
    for _ in range(TRAJECTORY_BUDGET):
        ys = rng.uniform(0.0, domain_size, size=degree)
        xs = np.empty(degree)
        xs[0] = 0.0
        xs[-1] = domain_size
        if degree > 2:
            xs[1:-1] = rng.uniform(0.0, domain_size, size=degree - 2)
        pts = np.column_stack([xs, ys])
        spline = _natural_spline(pts)
        vals = spline(grid)
        if vals.min() <= 0.0 or vals.max() >= domain_size:
            continue
        table, total = arc_length_table(spline, resolution)
        return _assemble(pts, spline, table, total, resolution, None)
    raise InfeasibleError(
        f"trajectory budget of {TRAJECTORY_BUDGET} candidates exhausted "
        f"(degree {degree}, domain {domain_size})"
    )


def invert_tau(traj: Trajectory, tau: np.ndarray) -> np.ndarray:
    """Spline parameter t with tau(t) = tau, per-cell on the stored table.

    A quadratic model (linearly varying speed between the stored node
    speeds, exact at both cell ends) provides the warm start; safeguarded
    Newton iterations against a per-cell Simpson arc integral then refine
    it.  The table segments were built with the same Simpson rule, so the
    refined t is continuous across cell boundaries, and the refinement
    rescues cells whose interior speed profile is far from linear (near
    hairpins the plain quadratic misses the 1% speed tolerance).
    """
    table = traj.tau_table
    idx = np.clip(np.searchsorted(table, tau, side="right") - 1, 0, len(table) - 2)
    dtau = table[idx + 1] - table[idx]
    v0 = traj.node_speeds[idx]
    dv = traj.node_speeds[idx + 1] - v0
    # Solve (dv/2) s^2 + v0 s = r for s in [0, 1], r scaled so s(cell end) = 1.
    r = (v0 + 0.5 * dv) * (tau - table[idx]) / dtau
    disc = np.sqrt(np.maximum(v0**2 + 2.0 * dv * r, 0.0))
    denom = v0 + disc
    linear = (tau - table[idx]) / dtau  # degenerate cells (zero speed ends)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 0.0, 2.0 * r / np.where(denom > 0.0, denom, 1.0), linear)
    s = np.clip(s, 0.0, 1.0)

    t_lo = traj.t_grid[idx]
    t_hi = traj.t_grid[idx + 1]
    t = t_lo + s * (t_hi - t_lo)
    # Unnormalized arc length to cover within the cell; dtau * path_length
    # is exactly the cell's Simpson segment, so residuals vanish at both
    # cell ends by construction.
    goal = (tau - table[idx]) * traj.path_length

    def speed(u):
        d = traj.spline(u, 1)
        return np.hypot(d[:, 0], d[:, 1])

    lo, hi = t_lo.copy(), t_hi.copy()
    for _ in range(5):
        v_t = speed(t)
        covered = (t - t_lo) / 6.0 * (v0 + 4.0 * speed((t_lo + t) / 2.0) + v_t)
        residual = covered - goal
        lo = np.where(residual < 0.0, t, lo)
        hi = np.where(residual > 0.0, t, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = residual / np.maximum(v_t, 1e-300)
        candidate = t - step
        # Inclusive bounds keep exact roots (zero residual) in place.
        inside = (candidate >= lo) & (candidate <= hi)
        t = np.where(inside, candidate, (lo + hi) / 2.0)
    return t


def position(traj: Trajectory, tau):
    """Position(s) at normalized arc length tau in [0, 1].

    Scalar tau returns shape (2,); an array of shape (T,) returns (T, 2).
    """
    tau_arr = np.asarray(tau, dtype=float)
    scalar = tau_arr.ndim == 0
    flat = np.atleast_1d(tau_arr)
    if flat.min() < 0.0 or flat.max() > 1.0:
        raise ValueError("tau must lie in [0, 1]")
    out = traj.spline(invert_tau(traj, flat))
    return out[0] if scalar else out
