"""Phased-array beam physics on a 2D square cell.

Each antenna is a uniform linear array of point senders spaced half a
wavelength apart along the antenna's orientation axis.  Steering is done
with a discrete codebook of per-sender phase increments.  Received
intensity has the classical closed form

    I(R, xi) ~ (1 / R^2) * sin^2(N*xi/2) / sin^2(xi/2)

with xi = pi * cos(angle between boresight offset and look direction)
minus the codebook phase.  All production queries go through the closed
form; ``intensity_oracle`` integrates the physical sender sum over one
carrier period and exists for cross-validation only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_N_SENDERS = 17
DEFAULT_N_ELEMENTS = 9
DEFAULT_DOMAIN_SIZE = 6.0
DEFAULT_MIN_DISTANCE = 1.5
DEFAULT_CUTOFF_RADIUS = 1e-3

# Total uniform position draws before sample_configuration gives up.
PLACEMENT_BUDGET = 10**6
# |sin(xi/2)| below this switches the array factor to its N^2 limit.
_SINGULAR_EPS = 1e-9


class InfeasibleError(RuntimeError):
    """Raised when rejection sampling exhausts its draw budget."""


def _as_point(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (2,):
        raise ValueError(f"{name} must be a 2-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class Antenna:
    """A linear phased array: position, unit orientation, odd sender count."""

    position: np.ndarray
    orientation: np.ndarray
    n_senders: int = DEFAULT_N_SENDERS

    def __post_init__(self):
        pos = _as_point(self.position, "position")
        ori = _as_point(self.orientation, "orientation")
        norm = float(np.hypot(ori[0], ori[1]))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"orientation must be a unit vector, |o| = {norm}")
        if self.n_senders < 1 or self.n_senders % 2 == 0:
            raise ValueError(f"n_senders must be odd and positive, got {self.n_senders}")
        pos.setflags(write=False)
        ori.setflags(write=False)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", ori)


@dataclass(frozen=True)
class Codebook:
    """Discrete steering codebook with uniformly spaced steering angles."""

    n_elements: int = DEFAULT_N_ELEMENTS

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("codebook needs at least one element")

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_elements) / self.n_elements

    @property
    def phases(self) -> np.ndarray:
        return np.pi * np.cos(self.angles)


def codebook_phase(index: int, n_elements: int) -> float:
    """Per-sender phase increment of codebook element ``index``."""
    if not 0 <= index < n_elements:
        raise ValueError(f"codebook index {index} out of range [0, {n_elements})")
    return float(np.pi * np.cos(2.0 * np.pi * index / n_elements))


@dataclass(frozen=True)
class AntennaConfig:
    """Immutable scene description: antennas, cell geometry, codebook."""

    antennas: tuple[Antenna, ...]
    domain_size: float = DEFAULT_DOMAIN_SIZE
    min_distance: float = DEFAULT_MIN_DISTANCE
    codebook: Codebook = field(default_factory=Codebook)
    cutoff_radius: float = DEFAULT_CUTOFF_RADIUS

    def __post_init__(self):
        if not self.antennas:
            raise ValueError("configuration needs at least one antenna")
        if self.domain_size <= 0:
            raise ValueError("domain_size must be positive")
        if self.cutoff_radius <= 0:
            raise ValueError("cutoff_radius must be positive")
        if self.min_distance < 0:
            raise ValueError("min_distance must be non-negative")
        object.__setattr__(self, "antennas", tuple(self.antennas))
        positions = np.array([a.position for a in self.antennas])
        if positions.min() < 0 or positions.max() > self.domain_size:
            raise ValueError("antenna positions must lie inside the cell")
        for i in range(len(self.antennas)):
            for j in range(i + 1, len(self.antennas)):
                d = float(np.linalg.norm(positions[i] - positions[j]))
                if d <= self.min_distance:
                    raise ValueError(
                        f"antennas {i} and {j} are {d:.4f} apart, "
                        f"need > {self.min_distance}"
                    )

    @property
    def n_antennas(self) -> int:
        return len(self.antennas)

    def to_json(self) -> str:
        doc = {
            "domain_size": self.domain_size,
            "min_distance": self.min_distance,
            "cutoff_radius": self.cutoff_radius,
            "codebook": {"n_elements": self.codebook.n_elements},
            "antennas": [
                {
                    "position": list(map(float, a.position)),
                    "orientation": list(map(float, a.orientation)),
                    "n_senders": a.n_senders,
                }
                for a in self.antennas
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "AntennaConfig":
        doc = json.loads(text)
        antennas = tuple(
            Antenna(
                position=np.asarray(a["position"], dtype=float),
                orientation=np.asarray(a["orientation"], dtype=float),
                n_senders=int(a.get("n_senders", DEFAULT_N_SENDERS)),
            )
            for a in doc["antennas"]
        )
        return cls(
            antennas=antennas,
            domain_size=float(doc.get("domain_size", DEFAULT_DOMAIN_SIZE)),
            min_distance=float(doc.get("min_distance", DEFAULT_MIN_DISTANCE)),
            codebook=Codebook(int(doc.get("codebook", {}).get("n_elements", DEFAULT_N_ELEMENTS))),
            cutoff_radius=float(doc.get("cutoff_radius", DEFAULT_CUTOFF_RADIUS)),
        )


def array_factor(xi, n_senders: int):
    """sin^2(N xi/2) / sin^2(xi/2), continued to N^2 at the singularities."""
    xi = np.asarray(xi, dtype=float)
    half = np.sin(xi / 2.0)
    singular = np.abs(half) < _SINGULAR_EPS
    denom = np.where(singular, 1.0, half)
    ratio = np.sin(n_senders * xi / 2.0) ** 2 / denom**2
    out = np.where(singular, float(n_senders) ** 2, ratio)
    return out if out.ndim else float(out)


def _intensity_many(
    position: np.ndarray,
    orientation: np.ndarray,
    n_senders: int,
    phases: np.ndarray,
    points: np.ndarray,
    cutoff_radius: float,
) -> np.ndarray:
    """Normalized intensities for points (P, 2) x phases (C,) -> (P, C)."""
    offsets = points - position  # (P, 2)
    dist = np.hypot(offsets[:, 0], offsets[:, 1])  # (P,)
    # Direction is undefined at the antenna itself; fall back to boresight.
    safe = np.where(dist > 0.0, dist, 1.0)
    cos_angle = (offsets @ orientation) / safe
    cos_angle = np.where(dist > 0.0, cos_angle, 1.0)
    xi = np.pi * cos_angle[:, None] - phases[None, :]  # (P, C)
    radius = np.maximum(dist, cutoff_radius)
    raw = array_factor(xi, n_senders) / (n_senders**2 * radius[:, None] ** 2)
    return np.clip(raw, 0.0, 1.0)


def intensity(antenna: Antenna, phase: float, point, cutoff_radius: float = DEFAULT_CUTOFF_RADIUS) -> float:
    """Normalized received intensity in [0, 1] at a single point."""
    pt = _as_point(point, "point")
    out = _intensity_many(
        antenna.position,
        antenna.orientation,
        antenna.n_senders,
        np.array([phase], dtype=float),
        pt[None, :],
        cutoff_radius,
    )
    return float(out[0, 0])


def intensity_grid(config: AntennaConfig, points) -> np.ndarray:
    """Intensity table (P, n_antennas, n_elements) for points (P, 2)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must have shape (P, 2), got {pts.shape}")
    phases = config.codebook.phases
    out = np.empty((pts.shape[0], config.n_antennas, phases.size))
    for i, ant in enumerate(config.antennas):
        out[:, i, :] = _intensity_many(
            ant.position, ant.orientation, ant.n_senders, phases, pts, config.cutoff_radius
        )
    return out


def best_codebook(antenna: Antenna, point, codebook: Codebook, cutoff_radius: float = DEFAULT_CUTOFF_RADIUS) -> tuple[int, float]:
    """Best codebook element for one antenna; ties resolve to the lowest index."""
    pt = _as_point(point, "point")
    vals = _intensity_many(
        antenna.position, antenna.orientation, antenna.n_senders,
        codebook.phases, pt[None, :], cutoff_radius,
    )[0]
    idx = int(np.argmax(vals))  # argmax returns the first maximizer
    return idx, float(vals[idx])


def ground_truth(config: AntennaConfig, point) -> tuple[int, int, float]:
    """Globally optimal (antenna, codebook element, intensity) at a point.

    Ties resolve to the lexicographically smallest (antenna, element) pair.
    """
    pt = _as_point(point, "point")
    table = intensity_grid(config, pt[None, :])[0]  # (A, C)
    flat = int(np.argmax(table))  # row-major argmax = lexicographic tie-break
    a_idx, c_idx = divmod(flat, table.shape[1])
    return a_idx, c_idx, float(table[a_idx, c_idx])


def ground_truth_grid(config: AntennaConfig, resolution: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense cell maps: x/y grid, best antenna index, best intensity.

    Returns (points (R*R, 2), antenna (R*R,), intensity (R*R,)) with points
    in row-major order over a uniform resolution x resolution grid.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    axis = np.linspace(0.0, config.domain_size, resolution)
    xs, ys = np.meshgrid(axis, axis, indexing="ij")
    points = np.column_stack([xs.ravel(), ys.ravel()])
    table = intensity_grid(config, points)  # (P, A, C)
    per_antenna = table.max(axis=2)  # (P, A)
    antenna = per_antenna.argmax(axis=1)
    best = per_antenna.max(axis=1)
    return points, antenna, best


def sample_configuration(
    n_antennas: int,
    rng: np.random.Generator,
    domain_size: float = DEFAULT_DOMAIN_SIZE,
    min_distance: float = DEFAULT_MIN_DISTANCE,
    n_senders: int = DEFAULT_N_SENDERS,
    n_elements: int = DEFAULT_N_ELEMENTS,
    cutoff_radius: float = DEFAULT_CUTOFF_RADIUS,
) -> AntennaConfig:
    """Sample a scene with positions uniform in the cell conditioned on
    pairwise separation > min_distance (whole-configuration rejection).

    Raises InfeasibleError once the total position-draw budget is spent,
    which also covers geometrically impossible packings.
    """
    if n_antennas < 1:
        raise ValueError("n_antennas must be positive")
    # Square-grid packing bound: more antennas than grid sites cannot fit.
    sites = int(np.floor(domain_size / min_distance)) + 1 if min_distance > 0 else None
    if sites is not None and n_antennas > sites * sites:
        raise InfeasibleError(
            f"{n_antennas} antennas cannot satisfy min_distance {min_distance} "
            f"in a {domain_size} x {domain_size} cell"
        )
    draws = 0
    while draws < PLACEMENT_BUDGET:
        positions = rng.uniform(0.0, domain_size, size=(n_antennas, 2))
        draws += n_antennas
        if n_antennas > 1:
            deltas = positions[:, None, :] - positions[None, :, :]
            dist = np.hypot(deltas[..., 0], deltas[..., 1])
            iu = np.triu_indices(n_antennas, k=1)
            if not np.all(dist[iu] > min_distance):
                continue
        angles = rng.uniform(0.0, 2.0 * np.pi, size=n_antennas)
        antennas = tuple(
            Antenna(
                position=positions[i],
                orientation=np.array([np.cos(angles[i]), np.sin(angles[i])]),
                n_senders=n_senders,
            )
            for i in range(n_antennas)
        )
        return AntennaConfig(
            antennas=antennas,
            domain_size=domain_size,
            min_distance=min_distance,
            codebook=Codebook(n_elements),
            cutoff_radius=cutoff_radius,
        )
    raise InfeasibleError(
        f"placement budget of {PLACEMENT_BUDGET} draws exhausted for "
        f"{n_antennas} antennas (domain {domain_size}, min_distance {min_distance})"
    )


def intensity_oracle(
    antenna: Antenna,
    phase: float,
    point,
    n_time_samples: int = 10**4,
    wavelength: float = 1.0,
    amplitude: float = 1.0,
) -> float:
    """Unnormalized time-averaged intensity from the explicit sender sum.

    Sums the spherical waves of all senders (spacing wavelength/2 along the
    orientation, per-sender phase j*phase for centered index j) and averages
    the squared field over one carrier period with a midpoint rule.  A single
    sender at distance R gives amplitude^2 / (2 R^2).  Reference only - the
    closed form above is what production code evaluates.
    """
    if n_time_samples < 10**4:
        raise ValueError("need at least 1e4 time samples for a stable average")
    pt = _as_point(point, "point")
    k = 2.0 * np.pi / wavelength
    spacing = wavelength / 2.0  # pi / k
    half = (antenna.n_senders - 1) // 2
    js = np.arange(-half, half + 1)
    senders = antenna.position[None, :] + js[:, None] * spacing * antenna.orientation[None, :]
    dists = np.linalg.norm(pt[None, :] - senders, axis=1)
    if np.any(dists == 0.0):
        raise ValueError("oracle point coincides with a sender")
    omega = k  # unit wave speed
    period = 2.0 * np.pi / omega
    t = (np.arange(n_time_samples) + 0.5) * (period / n_time_samples)
    # field (T, senders): A / r_j * sin(k r_j - w t + j * phase)
    arg = k * dists[None, :] - omega * t[:, None] + (js * phase)[None, :]
    field_sum = (amplitude / dists[None, :] * np.sin(arg)).sum(axis=1)
    return float(np.mean(field_sum**2))
