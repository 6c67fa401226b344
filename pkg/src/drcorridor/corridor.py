"""Safe corridors: ordered overlapping box regions plus an initial path."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OVERLAP_TOL = 1e-9


class DimensionMismatchError(ValueError):
    """Corridor and path disagree structurally (dimension or waypoint count)."""


@dataclass(frozen=True)
class BoxRegion:
    """Axis-aligned box with nonempty interior."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise ValueError(f"bound shapes differ: {lower.shape} vs {upper.shape}")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ValueError("region bounds must be finite")
        bad = np.where(lower >= upper)[0]
        if bad.size:
            raise ValueError(
                f"region needs lower < upper in every dimension; violated at {bad.tolist()}"
            )
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dimension(self) -> int:
        return self.lower.shape[0]

    def contains(self, point: np.ndarray, tol: float = OVERLAP_TOL) -> bool:
        p = np.asarray(point, dtype=float).reshape(-1)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))


@dataclass(frozen=True)
class SafeCorridor:
    """Ordered box regions; adjacent regions must overlap (checked by validate)."""

    regions: tuple[BoxRegion, ...]

    def __post_init__(self):
        regions = tuple(self.regions)
        if not regions:
            raise ValueError("corridor needs at least one region")
        m = regions[0].dimension
        if m not in (2, 3):
            raise ValueError(f"corridor dimension must be 2 or 3, got {m}")
        for k, region in enumerate(regions):
            if region.dimension != m:
                raise ValueError(f"region {k} has dimension {region.dimension}, expected {m}")
        object.__setattr__(self, "regions", regions)

    @property
    def dimension(self) -> int:
        return self.regions[0].dimension

    @property
    def num_regions(self) -> int:
        return len(self.regions)

    @property
    def lowers(self) -> np.ndarray:
        """Stacked lower bounds, shape (N, m)."""
        return np.array([r.lower for r in self.regions])

    @property
    def uppers(self) -> np.ndarray:
        return np.array([r.upper for r in self.regions])


@dataclass(frozen=True)
class InitialPath:
    """N+1 waypoints with strictly increasing arrival times."""

    waypoints: np.ndarray
    arrival_times: np.ndarray

    def __post_init__(self):
        wps = np.atleast_2d(np.asarray(self.waypoints, dtype=float))
        times = np.asarray(self.arrival_times, dtype=float).reshape(-1)
        if wps.shape[0] < 2:
            raise ValueError("path needs at least two waypoints")
        if times.shape[0] != wps.shape[0]:
            raise ValueError(
                f"got {times.shape[0]} arrival times for {wps.shape[0]} waypoints"
            )
        if not np.all(np.diff(times) > 0.0):
            raise ValueError("arrival times must be strictly increasing")
        wps.setflags(write=False)
        times.setflags(write=False)
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "arrival_times", times)

    @property
    def dimension(self) -> int:
        return self.waypoints.shape[1]

    @property
    def num_segments(self) -> int:
        return self.waypoints.shape[0] - 1

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.arrival_times)


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    indices: tuple[int, ...]
    message: str

    def __str__(self) -> str:
        return self.message


def validate(corridor: SafeCorridor, path: InitialPath) -> list[ValidationIssue]:
    """Check corridor/path invariants; returns one issue per violation.

    Structural problems (dimension mismatch, wrong waypoint count) raise
    :class:`DimensionMismatchError` instead of being reported, since the
    remaining checks would be meaningless. Overlap and containment use
    closed boxes with tolerance 1e-9 so waypoints sitting exactly on a
    shared face are accepted.
    """
    if path.dimension != corridor.dimension:
        raise DimensionMismatchError(
            f"path dimension {path.dimension} != corridor dimension {corridor.dimension}"
        )
    n = corridor.num_regions
    if path.waypoints.shape[0] != n + 1:
        raise DimensionMismatchError(
            f"path has {path.waypoints.shape[0]} waypoints, corridor with {n} regions needs {n + 1}"
        )

    issues: list[ValidationIssue] = []
    regions = corridor.regions
    for i in range(n - 1):
        lo = np.maximum(regions[i].lower, regions[i + 1].lower)
        hi = np.minimum(regions[i].upper, regions[i + 1].upper)
        if np.any(lo > hi + OVERLAP_TOL):
            issues.append(
                ValidationIssue(
                    "regions_disjoint",
                    (i, i + 1),
                    f"regions {i + 1},{i + 2} disjoint (no overlap)",
                )
            )

    wps = path.waypoints
    if not regions[0].contains(wps[0]):
        issues.append(
            ValidationIssue("start_outside_region", (0,), "start waypoint outside region 1")
        )
    if not regions[-1].contains(wps[-1]):
        issues.append(
            ValidationIssue(
                "end_outside_region", (n,), f"end waypoint outside region {n}"
            )
        )
    for i in range(1, n):
        lo = np.maximum(regions[i - 1].lower, regions[i].lower)
        hi = np.minimum(regions[i - 1].upper, regions[i].upper)
        inside = np.all(wps[i] >= lo - OVERLAP_TOL) and np.all(wps[i] <= hi + OVERLAP_TOL)
        if not inside:
            issues.append(
                ValidationIssue(
                    "waypoint_outside_overlap",
                    (i,),
                    f"waypoint {i} outside overlap of regions {i},{i + 1}",
                )
            )
    return issues


def allocate_times(
    waypoints,
    v_max: float,
    mode: str = "proportional",
    tau_min: float = 0.1,
    start_time: float = 0.0,
) -> np.ndarray:
    """Arrival times from segment lengths: ``tau_i = |p_i - p_{i-1}| / v_max``.

    Durations are clamped below by ``tau_min``; with a zero clamp a pair of
    coincident consecutive waypoints is an error (degenerate segment).
    """
    if mode != "proportional":
        raise ValueError(f"unknown time allocation mode {mode!r}")
    if not v_max > 0.0:
        raise ValueError(f"v_max must be positive, got {v_max}")
    if tau_min < 0.0:
        raise ValueError(f"tau_min must be nonnegative, got {tau_min}")
    wps = np.atleast_2d(np.asarray(waypoints, dtype=float))
    if wps.shape[0] < 2:
        raise ValueError("need at least two waypoints")
    lengths = np.linalg.norm(np.diff(wps, axis=0), axis=1)
    durations = np.maximum(lengths / v_max, tau_min)
    zero = np.where(durations <= 0.0)[0]
    if zero.size:
        raise ValueError(
            f"coincident consecutive waypoints at segments {zero.tolist()} with zero tau_min"
        )
    return start_time + np.concatenate(([0.0], np.cumsum(durations)))
