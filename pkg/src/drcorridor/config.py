"""YAML run configuration with parse-time validation.

Errors name the offending field path and the valid range so a bad config
fails fast with an actionable message (CLI exit code 1). Domain objects
are constructed during parsing, which reuses the module invariants
(nonempty boxes, PD scatter, risk in (0, 0.5), degree >= 2k-1, ...).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .cases import case_names, reference_case
from .corridor import InitialPath, SafeCorridor, BoxRegion, allocate_times
from .elliptical import GeneratorFamily
from .planner import family_from_name
from .qp import SnapSpec
from .robustness import PerturbationSpec
from .tightening import LOWER, SIDES, AmbiguitySpec, make_uniform_specs
from .elliptical import EllipticalRef


class ConfigError(ValueError):
    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


def _get(section: dict, key: str, path: str, default=None, required: bool = False):
    if key not in section or section[key] is None:
        if required:
            raise ConfigError(f"{path}.{key}", "required field is missing")
        return default
    return section[key]


@dataclass
class AmbiguityConfig:
    family: GeneratorFamily
    scatter: np.ndarray | float
    radius: float
    risk: float
    overrides: list = field(default_factory=list)


@dataclass
class BenchmarkConfig:
    spec: PerturbationSpec
    cases: list[str] | None
    families: list[tuple[GeneratorFamily, float]]
    radii: tuple
    risks: tuple


@dataclass
class OutputConfig:
    resolution: int = 100
    directory: str | None = None
    dump_instances: bool = False


@dataclass
class RunConfig:
    corridor: SafeCorridor | None
    path: InitialPath | None
    snap: SnapSpec
    ambiguity: AmbiguityConfig | None
    benchmark: BenchmarkConfig | None
    output: OutputConfig


def _parse_family(section: dict, path: str) -> GeneratorFamily:
    name = _get(section, "family", path, required=True)
    dof = _get(section, "dof", path)
    try:
        return family_from_name(name, dof)
    except ValueError as exc:
        raise ConfigError(f"{path}.family", str(exc)) from exc


def _parse_corridor(section: dict, path: str = "corridor") -> SafeCorridor:
    regions_raw = _get(section, "regions", path, required=True)
    regions = []
    for idx, reg in enumerate(regions_raw):
        rpath = f"{path}.regions[{idx}]"
        lower = _get(reg, "lower", rpath, required=True)
        upper = _get(reg, "upper", rpath, required=True)
        try:
            regions.append(BoxRegion(lower, upper))
        except ValueError as exc:
            raise ConfigError(rpath, str(exc)) from exc
    try:
        return SafeCorridor(tuple(regions))
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_path(section: dict, path: str = "path") -> InitialPath:
    waypoints = np.asarray(_get(section, "waypoints", path, required=True), dtype=float)
    times = _get(section, "arrival_times", path)
    if times is None:
        v_max = float(_get(section, "v_max", path, default=2.0))
        tau_min = float(_get(section, "tau_min", path, default=0.1))
        try:
            times = allocate_times(waypoints, v_max=v_max, tau_min=tau_min)
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from exc
    try:
        return InitialPath(waypoints, np.asarray(times, dtype=float))
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_snap(section: dict | None, path: str = "trajectory") -> SnapSpec:
    section = section or {}
    limits_raw = _get(section, "derivative_limits", path)
    limits = None
    if limits_raw:
        limits = {}
        for key, pair in limits_raw.items():
            lpath = f"{path}.derivative_limits[{key}]"
            try:
                order = int(key)
            except (TypeError, ValueError):
                raise ConfigError(lpath, f"derivative order must be an integer, got {key!r}") from None
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ConfigError(lpath, "expected a [min, max] pair")
            limits[order] = (float(pair[0]), float(pair[1]))
    kwargs = dict(
        degree=int(_get(section, "degree", path, default=7)),
        objective_order=int(_get(section, "objective_order", path, default=4)),
        derivative_limits=limits,
    )
    for name in ("start_derivatives", "end_derivatives"):
        val = _get(section, name, path)
        if val is not None:
            kwargs[name] = np.asarray(val, dtype=float)
    try:
        return SnapSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_scatter(section: dict, path: str):
    scatter = _get(section, "scatter", path)
    if scatter is not None:
        return np.asarray(scatter, dtype=float)
    sigma = _get(section, "sigma", path)
    if sigma is None:
        raise ConfigError(path, "needs either 'sigma' (scalar, meaning sigma*I) or 'scatter' (matrix)")
    sigma = float(sigma)
    if sigma <= 0.0:
        raise ConfigError(f"{path}.sigma", f"must be > 0, got {sigma}")
    return sigma


def _parse_ambiguity(section: dict, path: str = "ambiguity") -> AmbiguityConfig:
    family = _parse_family(section, path)
    scatter = _parse_scatter(section, path)
    radius = float(_get(section, "radius", path, required=True))
    risk = float(_get(section, "risk", path, required=True))
    if radius < 0.0:
        raise ConfigError(f"{path}.radius", f"must be >= 0, got {radius}")
    if not 0.0 < risk < 0.5:
        raise ConfigError(
            f"{path}.risk", f"must lie in the open interval (0, 0.5), got {risk}"
        )
    overrides = _get(section, "overrides", path, default=[]) or []
    for idx, ov in enumerate(overrides):
        opath = f"{path}.overrides[{idx}]"
        region = _get(ov, "region", opath, required=True)
        if not isinstance(region, int) or region < 1:
            raise ConfigError(f"{opath}.region", f"must be a 1-based region index, got {region!r}")
        side = _get(ov, "side", opath, required=True)
        if side not in SIDES:
            raise ConfigError(f"{opath}.side", f"must be one of {SIDES}, got {side!r}")
        ov_risk = _get(ov, "risk", opath)
        if ov_risk is not None and not 0.0 < float(ov_risk) < 0.5:
            raise ConfigError(
                f"{opath}.risk", f"must lie in the open interval (0, 0.5), got {ov_risk}"
            )
        ov_radius = _get(ov, "radius", opath)
        if ov_radius is not None and float(ov_radius) < 0.0:
            raise ConfigError(f"{opath}.radius", f"must be >= 0, got {ov_radius}")
    return AmbiguityConfig(family, scatter, radius, risk, list(overrides))


def _parse_benchmark(section: dict, path: str = "benchmark") -> BenchmarkConfig:
    cases = _get(section, "cases", path)
    if cases is not None:
        known = set(case_names())
        for name in cases:
            if name not in known:
                raise ConfigError(f"{path}.cases", f"unknown case {name!r}; options: {sorted(known)}")
    fam_raw = _get(section, "families", path)
    families = []
    if fam_raw:
        for idx, entry in enumerate(fam_raw):
            fpath = f"{path}.families[{idx}]"
            family = _parse_family(entry, fpath)
            sigma = float(_get(entry, "sigma", fpath, required=True))
            if sigma <= 0.0:
                raise ConfigError(f"{fpath}.sigma", f"must be > 0, got {sigma}")
            families.append((family, sigma))
    else:
        from .robustness import default_families

        families = default_families()
    radii = tuple(float(r) for r in _get(section, "radii", path, default=[0.05, 0.1]))
    risks = tuple(float(r) for r in _get(section, "risks", path, default=[0.1, 0.15, 0.25]))
    for r in radii:
        if r < 0.0:
            raise ConfigError(f"{path}.radii", f"must be >= 0, got {r}")
    for r in risks:
        if not 0.0 < r < 0.5:
            raise ConfigError(
                f"{path}.risks", f"must lie in the open interval (0, 0.5), got {r}"
            )
    try:
        spec = PerturbationSpec(
            alphas=tuple(float(a) for a in _get(section, "alphas", path, default=[0.0, 0.25, 0.5, 0.75, 1.0])),
            instances_per_alpha=int(_get(section, "instances_per_alpha", path, default=2000)),
            uniform_halfwidth=float(_get(section, "uniform_halfwidth", path, default=1.0)),
            seed=int(_get(section, "seed", path, default=0)),
            resolution=int(_get(section, "resolution", path, default=100)),
            mode=str(_get(section, "mode", path, default="samples")),
        )
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc
    return BenchmarkConfig(spec, cases, families, radii, risks)


def load_config(config_path: str) -> RunConfig:
    """Parse and validate a YAML run configuration file."""
    try:
        with open(config_path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {config_path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("<file>", "top level must be a mapping of sections")

    corridor = _parse_corridor(raw["corridor"]) if raw.get("corridor") else None
    path = _parse_path(raw["path"]) if raw.get("path") else None
    if (corridor is None) != (path is None):
        raise ConfigError("<file>", "corridor and path sections must be given together")
    snap = _parse_snap(raw.get("trajectory"))
    ambiguity = _parse_ambiguity(raw["ambiguity"]) if raw.get("ambiguity") else None
    benchmark = _parse_benchmark(raw["benchmark"]) if raw.get("benchmark") else None

    out_raw = raw.get("output") or {}
    output = OutputConfig(
        resolution=int(_get(out_raw, "resolution", "output", default=100)),
        directory=_get(out_raw, "directory", "output"),
        dump_instances=bool(_get(out_raw, "dump_instances", "output", default=False)),
    )
    if output.resolution < 1:
        raise ConfigError("output.resolution", f"must be >= 1, got {output.resolution}")

    if corridor is not None and path is not None:
        if path.dimension != corridor.dimension:
            raise ConfigError(
                "path.waypoints",
                f"dimension {path.dimension} does not match corridor dimension {corridor.dimension}",
            )
        if path.num_segments != corridor.num_regions:
            raise ConfigError(
                "path.waypoints",
                f"{path.waypoints.shape[0]} waypoints for {corridor.num_regions} regions "
                f"(need {corridor.num_regions + 1})",
            )
    return RunConfig(corridor, path, snap, ambiguity, benchmark, output)


def ambiguity_specs_for(config: AmbiguityConfig, corridor: SafeCorridor):
    """Broadcast the global ambiguity over all (region, side) pairs, then
    apply per-region overrides."""
    specs = make_uniform_specs(
        corridor, config.family, config.scatter, config.radius, config.risk
    )
    m = corridor.dimension
    for ov in config.overrides:
        i = int(ov["region"]) - 1
        side = ov["side"]
        if not 0 <= i < corridor.num_regions:
            raise ConfigError(
                "ambiguity.overrides",
                f"region {i + 1} outside 1..{corridor.num_regions}",
            )
        base = specs[(i, side)]
        family = base.ref.family
        if "family" in ov:
            family = family_from_name(ov["family"], ov.get("dof"))
        scatter = base.ref.scatter
        if "scatter" in ov:
            scatter = np.asarray(ov["scatter"], dtype=float)
        elif "sigma" in ov:
            scatter = float(ov["sigma"]) * np.eye(m)
        corner = corridor.regions[i].lower if side == LOWER else corridor.regions[i].upper
        try:
            ref = EllipticalRef(corner, scatter, family)
            specs[(i, side)] = AmbiguitySpec(
                ref,
                float(ov.get("radius", base.radius)),
                float(ov.get("risk", base.risk)),
            )
        except ValueError as exc:
            raise ConfigError(f"ambiguity.overrides(region {i + 1})", str(exc)) from exc
    return specs


def benchmark_cases(config: RunConfig):
    """Resolve the geometries a benchmark run iterates over."""
    bench = config.benchmark
    if bench is None:
        raise ConfigError("benchmark", "config has no benchmark section")
    if bench.cases:
        return [reference_case(name) for name in bench.cases]
    if config.corridor is None:
        raise ConfigError(
            "benchmark.cases",
            "either name reference cases or provide corridor/path sections",
        )

    @dataclass
    class _InlineCase:
        name: str
        corridor: SafeCorridor
        path: InitialPath

    return [_InlineCase("config", config.corridor, config.path)]
