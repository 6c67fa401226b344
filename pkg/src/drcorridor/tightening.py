"""Wasserstein-robust bound tightening for safe corridors.

Each corridor bound (one per region and side) carries a reference
elliptical distribution, a Wasserstein radius and a risk threshold in
(0, 0.5). The worst-case chance constraint over the ball reduces to a
single chance constraint at the ball center with a stricter risk level
``lower_risk = 1 - cdf(eta_star)``, which in turn is a deterministic
inward shift of the bound by ``scale * quantile(1 - lower_risk)`` along
each coordinate direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corridor import SafeCorridor
from .elliptical import EllipticalRef, GeneratorFamily, kappa, marginal, std_cdf, std_quantile

LOWER = "lower"
UPPER = "upper"
SIDES = (LOWER, UPPER)

ETA_MAX = 1e6
BRACKET_TOL = 1e-10


class TighteningInfeasibleError(RuntimeError):
    """Tightened bounds crossed; planning must abort before the QP."""

    def __init__(self, crossings: list[tuple[int, int]]):
        self.crossings = list(crossings)
        detail = ", ".join(f"(region {i + 1}, dim {mu})" for i, mu in self.crossings)
        super().__init__(f"tightened corridor infeasible at {detail}")


@dataclass(frozen=True)
class AmbiguitySpec:
    """Per-(region, side) ambiguity: reference distribution, radius, risk."""

    ref: EllipticalRef
    radius: float
    risk: float

    def __post_init__(self):
        if not self.radius >= 0.0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")
        if not 0.0 < self.risk < 0.5:
            raise ValueError(f"risk must lie in the open interval (0, 0.5), got {self.risk}")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "risk", float(self.risk))


def eta_residual(family: GeneratorFamily, risk: float, radius: float, eta: float) -> float:
    """Residual whose first nonnegative root (for eta >= quantile(1-risk)) is eta_star.

    ``psi(eta) = eta * (cdf(eta) - (1 - risk)) - kappa(a, eta) - radius`` with
    ``a = quantile(1 - risk)``; psi is nondecreasing on [a, inf) with slope
    ``cdf(eta) - (1 - risk)``.
    """
    a = std_quantile(family, 1.0 - risk)
    if eta < a:
        raise ValueError(f"eta must be >= quantile(1-risk) = {a}, got {eta}")
    return float(eta * (std_cdf(family, eta) - (1.0 - risk)) - kappa(family, a, eta) - radius)


def solve_eta_star(family: GeneratorFamily, risk: float, radius: float) -> float:
    """Minimal eta >= quantile(1-risk) with nonnegative residual, by bisection.

    The upper bracket grows geometrically from a+1; growth past 1e6 means
    the required mass shift cannot be reached within the family's tails.
    """
    if not 0.0 < risk < 0.5:
        raise ValueError(f"risk must lie in the open interval (0, 0.5), got {risk}")
    if not radius >= 0.0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    a = float(std_quantile(family, 1.0 - risk))
    if radius == 0.0:
        return a

    def residual(eta: float) -> float:
        return eta * (std_cdf(family, eta) - (1.0 - risk)) - kappa(family, a, eta) - radius

    hi = a + 1.0
    while residual(hi) < 0.0:
        hi = a + 2.0 * (hi - a)
        if hi > ETA_MAX:
            raise ValueError(
                f"radius {radius} too large for family tails ({family.label}): "
                f"no eta below {ETA_MAX:g} satisfies the mass-shift constraint"
            )
    lo = a
    while hi - lo > BRACKET_TOL:
        mid = 0.5 * (lo + hi)
        if residual(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def lower_risk(family: GeneratorFamily, risk: float, radius: float) -> float:
    """Effective stricter risk level ``1 - cdf(eta_star)``; equals risk at radius 0."""
    eta = solve_eta_star(family, risk, radius)
    return float(1.0 - std_cdf(family, eta))


@dataclass(frozen=True)
class TightenedCorridor:
    """Effective per-region bounds after robust tightening.

    ``crossings`` lists (region, dim) pairs where the effective lower bound
    exceeds the effective upper bound; a nonempty list marks the instance
    infeasible and the planner refuses to build a QP from it.
    """

    corridor: SafeCorridor
    effective_lower: np.ndarray
    effective_upper: np.ndarray
    lower_risks: dict
    crossings: tuple[tuple[int, int], ...]

    @property
    def feasible(self) -> bool:
        return not self.crossings

    @property
    def lowers(self) -> np.ndarray:
        return self.effective_lower

    @property
    def uppers(self) -> np.ndarray:
        return self.effective_upper

    @property
    def dimension(self) -> int:
        return self.corridor.dimension

    @property
    def num_regions(self) -> int:
        return self.corridor.num_regions


def make_corner_refs(
    corridor: SafeCorridor, family: GeneratorFamily, scatter
) -> dict[tuple[int, str], EllipticalRef]:
    """Reference distributions centered at every region corner.

    ``scatter`` is a scalar sigma (meaning sigma * I) or a full (m, m)
    matrix, shared across corners.
    """
    m = corridor.dimension
    scatter = np.asarray(scatter, dtype=float)
    if scatter.ndim == 0:
        scatter = float(scatter) * np.eye(m)
    refs = {}
    for i, region in enumerate(corridor.regions):
        refs[(i, LOWER)] = EllipticalRef(region.lower, scatter, family)
        refs[(i, UPPER)] = EllipticalRef(region.upper, scatter, family)
    return refs


def make_uniform_specs(
    corridor: SafeCorridor,
    family: GeneratorFamily,
    scatter,
    radius: float,
    risk: float,
) -> dict[tuple[int, str], AmbiguitySpec]:
    """One identical ambiguity entry per (region, side), centered at the corners."""
    refs = make_corner_refs(corridor, family, scatter)
    return {key: AmbiguitySpec(ref, radius, risk) for key, ref in refs.items()}


def tighten(
    corridor: SafeCorridor, specs: dict[tuple[int, str], AmbiguitySpec]
) -> TightenedCorridor:
    """Deterministic tightened bounds for every region.

    Per region i and dimension mu, with the directional marginal
    (loc, scale) of the side's reference along the coordinate axis:

        effective_lower = loc + scale * quantile(1 - lower_risk_of_side)
        effective_upper = loc - scale * quantile(1 - lower_risk_of_side)

    Crossed bounds are reported, not silently relaxed: relaxing would void
    the probabilistic guarantee.
    """
    n, m = corridor.num_regions, corridor.dimension
    for i in range(n):
        for side in SIDES:
            if (i, side) not in specs:
                raise ValueError(f"missing ambiguity entry for (region {i}, {side!r})")
            ref = specs[(i, side)].ref
            if ref.dimension != m:
                raise ValueError(
                    f"reference for (region {i}, {side!r}) has dimension "
                    f"{ref.dimension}, corridor has {m}"
                )

    risk_cache: dict[tuple, float] = {}

    def eps_lower(spec: AmbiguitySpec) -> float:
        key = (spec.ref.family, spec.risk, spec.radius)
        if key not in risk_cache:
            risk_cache[key] = lower_risk(spec.ref.family, spec.risk, spec.radius)
        return risk_cache[key]

    eff_lower = np.empty((n, m))
    eff_upper = np.empty((n, m))
    realized: dict[tuple[int, str], float] = {}
    crossings: list[tuple[int, int]] = []
    eye = np.eye(m)
    for i in range(n):
        lo_spec = specs[(i, LOWER)]
        up_spec = specs[(i, UPPER)]
        eps_lo = eps_lower(lo_spec)
        eps_up = eps_lower(up_spec)
        realized[(i, LOWER)] = eps_lo
        realized[(i, UPPER)] = eps_up
        q_lo = std_quantile(lo_spec.ref.family, 1.0 - eps_lo)
        q_up = std_quantile(up_spec.ref.family, 1.0 - eps_up)
        for mu in range(m):
            mlo = marginal(lo_spec.ref, eye[mu])
            mup = marginal(up_spec.ref, eye[mu])
            eff_lower[i, mu] = mlo.location + mlo.scale * q_lo
            eff_upper[i, mu] = mup.location - mup.scale * q_up
            if eff_lower[i, mu] > eff_upper[i, mu]:
                crossings.append((i, mu))

    eff_lower.setflags(write=False)
    eff_upper.setflags(write=False)
    return TightenedCorridor(corridor, eff_lower, eff_upper, realized, tuple(crossings))
