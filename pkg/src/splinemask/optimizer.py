"""Steepest descent on control points with golden-section step sizing.

Each trial step rebuilds the full geometry chain (samples, mesh, provenance)
at the displaced controls; trial boundaries that self-intersect or fail to
mesh score +inf so the line search backs away from them. After an accepted
step everything is regenerated from scratch, so the analytic gradient at the
next iterate again sees a consistent frozen topology.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import SelfIntersectionError, polygon_perimeter_points, polygon_signed_area
from .mesh import MeshError
from .pipeline import ImagingProblem, MaskEvaluation, evaluate, gradient_of
from .spline import PeriodicSplineRegion

logger = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimizerConfig:
    """Loop controls: iteration cap, stopping thresholds, line-search knobs."""

    max_iters: int = 100
    eps: float = 1e-4          # stop when the objective drops below this
    eps_alpha: float = 1e-4    # stop when the accepted step size drops below this
    alpha_max: float | None = None  # line-search bracket; None caps displacement instead
    gs_tol: float = 1e-5
    max_displacement: float = 2.0   # largest control move per step when alpha_max is None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.eps <= 0 or self.eps_alpha <= 0 or self.gs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.alpha_max is not None and self.alpha_max <= 0:
            raise ValueError("alpha_max must be positive")


@dataclass
class TraceEntry:
    iteration: int
    objective: float
    alpha: float


@dataclass
class OptimizationState:
    """Mutable loop state: current evaluation, gradient, and the accepted-step trace."""

    evaluation: MaskEvaluation
    gradient: list[np.ndarray] | None = None
    iteration: int = 0
    trace: list[TraceEntry] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.evaluation.objective

    @property
    def controls(self) -> list[np.ndarray]:
        return [s.region.controls for s in self.evaluation.systems]


def golden_section(phi, alpha_max: float, tol: float) -> tuple[float, float]:
    """Minimize phi on [0, alpha_max] by golden-section search.

    Returns (alpha, phi(alpha)) for the best interior evaluation once the
    bracket width drops below tol. phi may return +inf for infeasible trials.
    """
    a, b = 0.0, float(alpha_max)
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = phi(x1), phi(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = phi(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = phi(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def _try_evaluate(problem: ImagingProblem, regions: list[PeriodicSplineRegion]):
    try:
        return evaluate(problem, regions)
    except (SelfIntersectionError, MeshError):
        return None


def step(state: OptimizationState, problem: ImagingProblem,
         opt: OptimizerConfig) -> tuple[OptimizationState, float, bool]:
    """One steepest-descent step with golden-section sizing and full regeneration.

    Returns (state, alpha, accepted). The step is accepted only if the line
    search found a strict objective decrease; mesh failures at the chosen
    alpha are retried at halved steps before giving up.
    """
    if state.gradient is None:
        state.gradient = gradient_of(problem, state.evaluation)
    grads = state.gradient
    gmax = max((float(np.max(np.hypot(g[:, 0], g[:, 1]))) for g in grads), default=0.0)
    if gmax < 1e-12:
        return state, 0.0, False
    alpha_max = opt.alpha_max if opt.alpha_max is not None else opt.max_displacement / gmax
    regions = [s.region for s in state.evaluation.systems]

    def controls_at(alpha: float):
        return [r.with_controls(r.controls - alpha * g) for r, g in zip(regions, grads)]

    def phi(alpha: float) -> float:
        trial = _try_evaluate(problem, controls_at(alpha))
        return trial.objective if trial is not None else math.inf

    alpha, j_alpha = golden_section(phi, alpha_max, opt.gs_tol)
    if not (j_alpha < state.objective):
        return state, 0.0, False

    trial = _try_evaluate(problem, controls_at(alpha))
    for _ in range(20):
        if trial is not None:
            break
        alpha *= 0.5
        trial = _try_evaluate(problem, controls_at(alpha))
    if trial is None or not (trial.objective < state.objective):
        return state, 0.0, False

    new_state = OptimizationState(
        evaluation=trial,
        gradient=None,
        iteration=state.iteration + 1,
        trace=state.trace,
    )
    return new_state, alpha, True


@dataclass(frozen=True)
class OptimizationResult:
    state: OptimizationState
    initial: MaskEvaluation

    @property
    def trace(self) -> list[TraceEntry]:
        return self.state.trace

    @property
    def final(self) -> MaskEvaluation:
        return self.state.evaluation


def optimize(regions: list[PeriodicSplineRegion], problem: ImagingProblem,
             opt: OptimizerConfig) -> OptimizationResult:
    """Run the descent loop until the objective or step size drops below tolerance.

    Raises if the initial boundary is self-intersecting. The trace records the
    initial state and every accepted step; objective values along it are
    non-increasing.
    """
    regions = [_ccw_region(r) for r in regions]
    evaluation = evaluate(problem, regions)
    state = OptimizationState(evaluation=evaluation)
    state.trace.append(TraceEntry(0, evaluation.objective, 0.0))
    initial = evaluation

    while state.objective > opt.eps and state.iteration < opt.max_iters:
        candidate, alpha, accepted = step(state, problem, opt)
        if not accepted or alpha < opt.eps_alpha:
            logger.info("stopping: step size %.3g below tolerance", alpha)
            break
        state = candidate
        state.trace.append(TraceEntry(state.iteration, state.objective, alpha))
        logger.info("iter %d  J=%.6g  alpha=%.4g", state.iteration, state.objective, alpha)
    return OptimizationResult(state=state, initial=initial)


def _ccw_region(region: PeriodicSplineRegion) -> PeriodicSplineRegion:
    """Reverse the control loop if it runs clockwise; the curve itself is unchanged."""
    if polygon_signed_area(region.controls) < 0:
        return region.with_controls(region.controls[::-1].copy())
    return region


def init_controls_from_target(polygons, counts, num_samples, degree: int = 3,
                              magnification: float = -1.0) -> list[PeriodicSplineRegion]:
    """Initial regions with controls equally spaced along each target polygon.

    `counts` and `num_samples` may be single ints or per-polygon sequences.
    Target polygons live on the image plane; the returned controls are
    mask-plane coordinates (scaled by -1/M so the ideal image lands on the
    target).
    """
    polys = [np.asarray(p, dtype=float) for p in polygons]
    if isinstance(counts, int):
        counts = [counts] * len(polys)
    if isinstance(num_samples, int):
        num_samples = [num_samples] * len(polys)
    regions = []
    for poly, n, m in zip(polys, counts, num_samples):
        if n < degree + 2:
            raise ValueError(f"need at least degree + 2 = {degree + 2} control points")
        controls = polygon_perimeter_points(poly, n) * (-1.0 / magnification)
        regions.append(_ccw_region(PeriodicSplineRegion(controls, m, degree)))
    return regions
