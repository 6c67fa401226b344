"""Reference corridor cases shipped with the repo.

The benchmark protocol needs concrete corridor geometry; these three 2-D
cases are repo-defined (elbow, zigzag, slalom). They are sized so that
the whole robust parameter grid (radius up to 0.1, risk down to 0.1, the
three stock families) stays feasible: the largest per-side tightening
shift is about 4.1 world units, overlaps are 12+ units wide and the
endpoints sit well inside their end regions. Each geometry forces the
minimum-snap trajectory around at least one inner corner so the nominal
plan actually touches corridor faces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corridor import BoxRegion, InitialPath, SafeCorridor, allocate_times


@dataclass(frozen=True)
class ReferenceCase:
    name: str
    corridor: SafeCorridor
    path: InitialPath
    v_max: float


def _build(name, boxes, waypoints, v_max):
    corridor = SafeCorridor(tuple(BoxRegion(lo, up) for lo, up in boxes))
    waypoints = np.asarray(waypoints, dtype=float)
    times = allocate_times(waypoints, v_max=v_max)
    return ReferenceCase(name, corridor, InitialPath(waypoints, times), v_max)


def case_elbow() -> ReferenceCase:
    """Two regions forming an L; the straight start-goal line is blocked."""
    return _build(
        "elbow",
        [
            ([0.0, 0.0], [24.0, 12.0]),
            ([12.0, 0.0], [24.0, 28.0]),
        ],
        [[5.0, 6.0], [18.0, 6.0], [18.0, 23.0]],
        v_max=5.0,
    )


def case_zigzag() -> ReferenceCase:
    """Three regions: east, north, east again; two inner corners to cut."""
    return _build(
        "zigzag",
        [
            ([0.0, 0.0], [24.0, 12.0]),
            ([12.0, 0.0], [24.0, 32.0]),
            ([12.0, 20.0], [36.0, 32.0]),
        ],
        [[5.0, 6.0], [18.0, 6.0], [18.0, 26.0], [31.0, 26.0]],
        v_max=5.0,
    )


def case_slalom() -> ReferenceCase:
    """Four regions wrapping over a central block; three turns."""
    return _build(
        "slalom",
        [
            ([0.0, 0.0], [13.0, 34.0]),
            ([0.0, 22.0], [34.0, 34.0]),
            ([22.0, 0.0], [34.0, 34.0]),
            ([22.0, 0.0], [56.0, 12.0]),
        ],
        [[6.0, 5.0], [6.5, 28.0], [28.0, 28.0], [28.0, 6.0], [50.0, 6.0]],
        v_max=6.0,
    )


_CASES = {
    "elbow": case_elbow,
    "zigzag": case_zigzag,
    "slalom": case_slalom,
}


def reference_case(name: str) -> ReferenceCase:
    try:
        return _CASES[name]()
    except KeyError:
        raise ValueError(f"unknown reference case {name!r}; options: {sorted(_CASES)}") from None


def reference_cases() -> list[ReferenceCase]:
    return [build() for build in _CASES.values()]


def case_names() -> list[str]:
    return list(_CASES)
