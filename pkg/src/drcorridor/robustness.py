"""Corridor perturbation experiment: violation counting under mixed noise.

Every instance perturbs each region corner independently as
``(1 - alpha) * psi1 + alpha * psi2`` where psi1 is a draw from the
corner's reference distribution (mean at the nominal corner) and psi2 is
uniform on a box of configurable half-width around the corner. Fixed
trajectories are then tested for membership in the perturbed regions, and
results are aggregated into a per-(case, family, method) report.

Instances are generated from per-instance seeds, so the produced report
is identical across runs and across worker counts.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bezier import PiecewiseBezier, basis_matrix
from .corridor import BoxRegion, InitialPath, SafeCorridor
from .elliptical import EllipticalRef, GeneratorFamily, sample as ref_sample
from .qp import PlanningError, SnapSpec, plan
from .tightening import LOWER, UPPER, TighteningInfeasibleError, make_corner_refs, make_uniform_specs

VIOLATION_TOL = 1e-9
_CHUNK = 512

DEFAULT_RADII = (0.05, 0.1)
DEFAULT_RISKS = (0.1, 0.15, 0.25)


def default_families() -> list[tuple[GeneratorFamily, float]]:
    """(family, sigma) pairs of the standard benchmark grid."""
    return [
        (GeneratorFamily.normal(), 2.0),
        (GeneratorFamily.student_t(4.0), 1.0),
        (GeneratorFamily.logistic(), 1.0),
    ]


@dataclass(frozen=True)
class PerturbationSpec:
    """Mixture weights, instance counts, uniform support and seeding."""

    alphas: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    instances_per_alpha: int = 2000
    uniform_halfwidth: float = 1.0
    seed: int = 0
    resolution: int = 100
    mode: str = "samples"
    max_resamples: int = 100

    def __post_init__(self):
        if not self.alphas:
            raise ValueError("need at least one mixture weight")
        if any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise ValueError("mixture weights must lie in [0, 1]")
        if self.instances_per_alpha < 1:
            raise ValueError("instances_per_alpha must be >= 1")
        if self.uniform_halfwidth < 0.0:
            raise ValueError("uniform_halfwidth must be >= 0")
        if self.mode not in ("samples", "control-points"):
            raise ValueError(f"unknown violation mode {self.mode!r}")
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))

    @property
    def total_instances(self) -> int:
        return len(self.alphas) * self.instances_per_alpha


def _instance_corners(corridor, refs, spec: PerturbationSpec, index: int):
    """Perturbed (lowers, uppers, resamples) for one instance index.

    Deterministic in (spec.seed, index). Degenerate draws (crossed bounds
    in some dimension) are redrawn from the same stream and counted; they
    represent an ill-posed corridor, not a trajectory failure.
    """
    if not 0 <= index < spec.total_instances:
        raise ValueError(f"instance index {index} outside 0..{spec.total_instances - 1}")
    alpha = spec.alphas[index // spec.instances_per_alpha]
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, index]))
    n, m = corridor.num_regions, corridor.dimension
    h = spec.uniform_halfwidth
    for attempt in range(spec.max_resamples + 1):
        lowers = np.empty((n, m))
        uppers = np.empty((n, m))
        for i, region in enumerate(corridor.regions):
            for side, corner, out in (
                (LOWER, region.lower, lowers),
                (UPPER, region.upper, uppers),
            ):
                psi1 = ref_sample(refs[(i, side)], 1, rng)[0]
                psi2 = corner + rng.uniform(-h, h, m)
                out[i] = (1.0 - alpha) * psi1 + alpha * psi2
        if np.all(lowers < uppers):
            return lowers, uppers, attempt
    raise RuntimeError(
        f"instance {index} stayed degenerate after {spec.max_resamples} resamples"
    )


def perturb(corridor: SafeCorridor, refs, spec: PerturbationSpec, index: int) -> SafeCorridor:
    """One perturbed corridor; deterministic given (spec.seed, index)."""
    lowers, uppers, _ = _instance_corners(corridor, refs, spec, index)
    return SafeCorridor(tuple(BoxRegion(lowers[i], uppers[i]) for i in range(corridor.num_regions)))


def trajectory_envelope(traj: PiecewiseBezier, resolution: int = 100, mode: str = "samples"):
    """Per-(segment, dim) min/max of the curve samples (or control points)."""
    mins, maxs = [], []
    ss = np.linspace(0.0, 1.0, resolution)
    for seg in traj.segments:
        pts = seg.control_points if mode == "control-points" else basis_matrix(seg.degree, ss) @ seg.control_points
        mins.append(pts.min(axis=0))
        maxs.append(pts.max(axis=0))
    return np.array(mins), np.array(maxs)


def count_violations(
    traj: PiecewiseBezier,
    perturbed: SafeCorridor,
    resolution: int = 100,
    mode: str = "samples",
) -> bool:
    """True when any sample of segment i exits perturbed region i by > 1e-9."""
    if traj.num_segments != perturbed.num_regions:
        raise ValueError(
            f"trajectory has {traj.num_segments} segments, corridor has {perturbed.num_regions} regions"
        )
    mins, maxs = trajectory_envelope(traj, resolution, mode)
    below = mins < perturbed.lowers - VIOLATION_TOL
    above = maxs > perturbed.uppers + VIOLATION_TOL
    return bool(below.any() or above.any())


def _generate_instances(corridor, refs, spec: PerturbationSpec, workers: int = 1):
    """All perturbed corners, chunked so worker count cannot change results."""
    total = spec.total_instances
    chunks = [range(s, min(s + _CHUNK, total)) for s in range(0, total, _CHUNK)]

    def gen(chunk):
        n, m = corridor.num_regions, corridor.dimension
        lo = np.empty((len(chunk), n, m))
        up = np.empty((len(chunk), n, m))
        resamples = 0
        for pos, idx in enumerate(chunk):
            lo[pos], up[pos], extra = _instance_corners(corridor, refs, spec, idx)
            resamples += extra
        return lo, up, resamples

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(gen, chunks))
    else:
        parts = [gen(c) for c in chunks]
    lowers = np.concatenate([p[0] for p in parts])
    uppers = np.concatenate([p[1] for p in parts])
    resamples = sum(p[2] for p in parts)
    return lowers, uppers, resamples


@dataclass
class MethodCell:
    method: str
    radius: float | None
    risk: float | None
    status: str
    objective: float | None = None
    objective_ratio: float | None = None
    violations: int | None = None
    per_alpha: tuple | None = None
    plan_time: float = 0.0
    note: str = ""

    @property
    def label(self) -> str:
        if self.method == "nominal":
            return "nominal"
        return f"drscc(theta={self.radius:g}, eps={self.risk:g})"


@dataclass
class FamilyBlock:
    family_label: str
    sigma: float
    resamples: int
    eval_time: float
    cells: list[MethodCell] = field(default_factory=list)


@dataclass
class CaseReport:
    case_name: str
    blocks: list[FamilyBlock] = field(default_factory=list)


@dataclass
class BenchmarkReport:
    cases: list[CaseReport]
    spec: PerturbationSpec
    radii: tuple
    risks: tuple

    CSV_SCHEMA = "drcorridor/benchmark v1"

    def to_csv(self) -> str:
        """Deterministic summary (wall times deliberately excluded)."""
        alpha_cols = ",".join(f"violations_alpha_{a:g}" for a in self.spec.alphas)
        lines = [
            f"# schema: {self.CSV_SCHEMA}",
            f"# violation_mode: {self.spec.mode}; uniform_halfwidth: {self.spec.uniform_halfwidth!r}; "
            f"instances_per_alpha: {self.spec.instances_per_alpha}; seed: {self.spec.seed}",
            "case,family,sigma,method,radius,risk,status,objective,objective_ratio,"
            f"violations,violation_rate,resamples,{alpha_cols}",
        ]
        total = self.spec.total_instances
        for case in self.cases:
            for block in case.blocks:
                for cell in block.cells:
                    if cell.status == "ok":
                        per_alpha = ",".join(str(v) for v in cell.per_alpha)
                        row = (
                            f"{case.case_name},{block.family_label},{block.sigma!r},{cell.method},"
                            f"{'' if cell.radius is None else repr(cell.radius)},"
                            f"{'' if cell.risk is None else repr(cell.risk)},ok,"
                            f"{cell.objective!r},{cell.objective_ratio!r},"
                            f"{cell.violations},{cell.violations / total!r},{block.resamples},{per_alpha}"
                        )
                    else:
                        empty = ",".join("" for _ in self.spec.alphas)
                        row = (
                            f"{case.case_name},{block.family_label},{block.sigma!r},{cell.method},"
                            f"{'' if cell.radius is None else repr(cell.radius)},"
                            f"{'' if cell.risk is None else repr(cell.risk)},{cell.status},"
                            f",,,,{block.resamples},{empty}"
                        )
                    lines.append(row)
        return "\n".join(lines) + "\n"

    def timings_csv(self) -> str:
        lines = ["# schema: drcorridor/benchmark-timings v1",
                 "case,family,method,plan_time_s,eval_time_s"]
        for case in self.cases:
            for block in case.blocks:
                for cell in block.cells:
                    lines.append(
                        f"{case.case_name},{block.family_label},{cell.label},"
                        f"{cell.plan_time:.6f},{block.eval_time:.6f}"
                    )
        return "\n".join(lines) + "\n"

    def text_table(self) -> str:
        """Aligned-column comparison table, one block per (case, family)."""
        out = []
        total = self.spec.total_instances
        for case in self.cases:
            for block in case.blocks:
                head = f"{case.case_name} / {block.family_label} (sigma={block.sigma:g})"
                out.append(head)
                out.append("-" * len(head))
                cols = [c.label for c in block.cells]
                widths = [max(len(c), 12) for c in cols]
                out.append("  ".join(f"{'':<22}") + "  ".join(f"{c:>{w}}" for c, w in zip(cols, widths)))

                def fmt_row(title, values):
                    return f"{title:<22}  " + "  ".join(f"{v:>{w}}" for v, w in zip(values, widths))

                ratios = [
                    "n/a" if c.status != "ok" else f"{c.objective_ratio:.3f}" for c in block.cells
                ]
                objs = ["n/a" if c.status != "ok" else f"{c.objective:.6g}" for c in block.cells]
                viols = ["n/a" if c.status != "ok" else str(c.violations) for c in block.cells]
                rates = [
                    "n/a" if c.status != "ok" else f"{c.violations / total:.4f}" for c in block.cells
                ]
                out.append(fmt_row("objective ratio", ratios))
                out.append(fmt_row("objective (raw)", objs))
                out.append(fmt_row("violations", viols))
                out.append(fmt_row("violation rate", rates))
                out.append(f"resamples: {block.resamples}   violation mode: {self.spec.mode}")
                out.append("")
        return "\n".join(out)

    def cell(self, case_name: str, family_label: str, method_label: str) -> MethodCell:
        for case in self.cases:
            if case.case_name != case_name:
                continue
            for block in case.blocks:
                if block.family_label != family_label:
                    continue
                for c in block.cells:
                    if c.label == method_label:
                        return c
        raise KeyError((case_name, family_label, method_label))


def run_benchmark(
    cases,
    spec: PerturbationSpec | None = None,
    families=None,
    radii=DEFAULT_RADII,
    risks=DEFAULT_RISKS,
    snap: SnapSpec | None = None,
    workers: int = 1,
) -> BenchmarkReport:
    """Plan once per (case, method), evaluate all perturbed instances per cell.

    ``cases`` is a sequence of objects with .name, .corridor and .path
    attributes. Planner failures mark the cell and the run continues.
    """
    spec = spec or PerturbationSpec()
    snap = snap or SnapSpec()
    families = families if families is not None else default_families()

    case_reports = []
    for case in cases:
        corridor, path = case.corridor, case.path
        t0 = time.perf_counter()
        nominal = plan(corridor, path, snap, mode="nominal")
        nominal_time = time.perf_counter() - t0
        nom_env = trajectory_envelope(nominal.trajectory, spec.resolution, spec.mode)
        nom_obj = nominal.solution.objective

        blocks = []
        for family, sigma in families:
            refs = make_corner_refs(corridor, family, sigma)
            t0 = time.perf_counter()
            lowers, uppers, resamples = _generate_instances(corridor, refs, spec, workers)
            eval_time = time.perf_counter() - t0

            def count(env) -> tuple[int, tuple]:
                mins, maxs = env
                hit = (mins[None] < lowers - VIOLATION_TOL) | (maxs[None] > uppers + VIOLATION_TOL)
                per_instance = hit.any(axis=(1, 2))
                per_alpha = per_instance.reshape(len(spec.alphas), spec.instances_per_alpha)
                return int(per_instance.sum()), tuple(int(v) for v in per_alpha.sum(axis=1))

            total_v, per_alpha = count(nom_env)
            cells = [
                MethodCell(
                    "nominal", None, None, "ok",
                    objective=nom_obj, objective_ratio=1.0,
                    violations=total_v, per_alpha=per_alpha, plan_time=nominal_time,
                )
            ]
            for radius in radii:
                for risk in risks:
                    ambiguity = make_uniform_specs(corridor, family, sigma, radius, risk)
                    t0 = time.perf_counter()
                    try:
                        result = plan(corridor, path, snap, mode="drscc", ambiguity=ambiguity)
                    except (TighteningInfeasibleError, PlanningError) as exc:
                        cells.append(
                            MethodCell("drscc", radius, risk, "infeasible", note=str(exc))
                        )
                        continue
                    plan_time = time.perf_counter() - t0
                    env = trajectory_envelope(result.trajectory, spec.resolution, spec.mode)
                    total_v, per_alpha = count(env)
                    ratio = result.solution.objective / nom_obj if nom_obj > 1e-12 else float("inf")
                    cells.append(
                        MethodCell(
                            "drscc", radius, risk, "ok",
                            objective=result.solution.objective, objective_ratio=ratio,
                            violations=total_v, per_alpha=per_alpha, plan_time=plan_time,
                        )
                    )
            blocks.append(FamilyBlock(family.label, sigma, resamples, eval_time, cells))
        case_reports.append(CaseReport(case.name, blocks))
    return BenchmarkReport(case_reports, spec, tuple(radii), tuple(risks))
