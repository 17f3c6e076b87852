"""
Inverse problem: tune surface parameters until surface observables hit targets.

Nelder-Mead runs on parameters scaled to [0, 1] by their bounds; points are
clipped to the bounds before every evaluation. A Sobol sample of the scaled
box picks the starting vertex, so a start on a flat stretch of the objective
still reaches the basin of the targets.
"""
import time
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.optimize import minimize
from scipy.stats import qmc

from app.core.events import event_emitter
from app.core.logging_config import get_logger, log_operation_failed, log_operation_start, log_operation_success
from app.schemas.fit import FitProblem, FitResult
from app.schemas.reaction import LepsSurface
from app.services.analysis import estimate_saddle_on_grid, find_saddle
from app.services.potentials import channel_floor
from app.services.simulation_service import SimulationService
from app.utils.errors import DomainError, NumericalError, SaddleClassificationError, SaddleSearchError

logger = get_logger(__name__)

# objective value returned when an observable cannot be computed
PENALTY = 1e6
OBJECTIVE_TOLERANCE = 1e-12
# simplex diameter in scaled units, i.e. relative to each parameter's bound span
SIMPLEX_TOLERANCE = 1e-8
# Sobol screening points per free parameter, before rounding to a power of two
SCREEN_POINTS = 16
MAX_SIMPLEX_STEP = 0.5
SADDLE_OBSERVABLES = ("barrier_height", "saddle_q1", "saddle_q2")


def saddle_observables(surface: LepsSurface) -> Dict[str, float]:
    """
    Barrier height and saddle location.

    A surface where Newton finds no first-order saddle (the barrier has
    dissolved into the product slope) reports its raster mountain pass
    instead, so the barrier stays finite and keeps tracking the parameters.
    """
    try:
        saddle = find_saddle(surface)
    except (SaddleSearchError, SaddleClassificationError) as e:
        estimate = estimate_saddle_on_grid(surface)
        barrier = estimate.energy - channel_floor(surface, 2)
        logger.debug(f"No saddle ({e.message}); using the mountain pass",
                     extra={"barrier": barrier, "q1": estimate.q1, "q2": estimate.q2})
        return dict(barrier_height=barrier, saddle_q1=estimate.q1, saddle_q2=estimate.q2)
    return dict(barrier_height=saddle.barrier, saddle_q1=saddle.q1, saddle_q2=saddle.q2)


def observables(problem: FitProblem, surface: LepsSurface) -> Dict[str, float]:
    """Values of every observable the objective needs, computed once each."""
    needed = {term.observable for term in problem.objectives}
    values: Dict[str, float] = {}
    if needed & set(SADDLE_OBSERVABLES):
        values.update(saddle_observables(surface))
    if "exoergicity" in needed:
        values["exoergicity"] = channel_floor(surface, 2) - channel_floor(surface, 1)
    if "product_branching" in needed:
        values["product_branching"] = SimulationService.product_branching(problem.run_config, surface,
                                                                           problem.preset)
    return values


def _check_bounds(problem: FitProblem, params: Dict[str, float]) -> None:
    for parameter in problem.parameters:
        if parameter.name not in params:
            raise DomainError(f"Missing value for fit parameter '{parameter.name}'")
        value = params[parameter.name]
        if not parameter.lower <= value <= parameter.upper:
            raise DomainError(f"{parameter.name} = {value} lies outside [{parameter.lower}, {parameter.upper}]",
                              details={"parameter": parameter.name, "value": value})


def _evaluate(problem: FitProblem, params: Dict[str, float]) -> Tuple[float, bool]:
    """Objective value and whether the penalty stood in for it."""
    try:
        surface = problem.surface.with_parameters(**params)
        values = observables(problem, surface)
    except (NumericalError, ValidationError, ValueError) as e:
        message = getattr(e, "message", str(e))
        event_emitter.emit("fit.penalty", params=dict(params), error=message)
        return PENALTY, True

    total = 0.0
    for term in problem.objectives:
        residual = (values[term.observable] - term.target) / term.target
        total += term.weight * residual ** 2
    return total, False


def evaluate_objective(problem: FitProblem, params: Dict[str, float]) -> float:
    """
    Weighted sum of squared relative residuals.

    Observables that fail to evaluate (no saddle, broken run) give PENALTY.

    Raises:
        DomainError: a parameter is missing or outside its bounds
    """
    _check_bounds(problem, params)
    value, _ = _evaluate(problem, params)
    return value


class _ScaledObjective:
    """Objective over [0, 1]^n with evaluation bookkeeping and early stop."""

    def __init__(self, problem: FitProblem):
        self.problem = problem
        self.lower = problem.lower
        self.span = problem.upper - problem.lower
        self.evaluations = 0
        self.penalized = 0
        self.best_value = np.inf
        self.best_params: Optional[Dict[str, float]] = None
        self.best_penalized = False

    def params(self, z: np.ndarray) -> Dict[str, float]:
        x = self.lower + np.clip(z, 0.0, 1.0) * self.span
        return {name: float(value) for name, value in zip(self.problem.names, x)}

    def scale(self, params: Dict[str, float]) -> np.ndarray:
        x = np.array([params[name] for name in self.problem.names])
        return (x - self.lower) / self.span

    def __call__(self, z: np.ndarray) -> float:
        params = self.params(z)
        value, penalized = _evaluate(self.problem, params)
        self.evaluations += 1
        self.penalized += int(penalized)
        if value < self.best_value:
            self.best_value, self.best_params, self.best_penalized = value, params, penalized
        event_emitter.emit("fit.evaluation", evaluation=self.evaluations, params=params, objective=value)
        return value

    def callback(self, _xk: np.ndarray) -> None:
        if self.best_value < OBJECTIVE_TOLERANCE:
            raise StopIteration

    def initial_simplex(self, start: np.ndarray) -> np.ndarray:
        """
        Simplex around the best of `start` and a Sobol sample of the box.

        The sample uses at most half of max_evaluations. Edges are as long as
        the sample spacing and point into the box.
        """
        dimension = len(start)
        points, values = [start], [self(start)]
        budget = self.problem.max_evaluations // 2 - 1
        step = MAX_SIMPLEX_STEP
        if budget >= 1:
            m = min(int(np.ceil(np.log2(SCREEN_POINTS * dimension))), int(np.log2(budget)))
            for z in qmc.Sobol(dimension, scramble=False).random_base2(m):
                points.append(z)
                values.append(self(z))
            step = min(2.0 ** (-m / dimension), MAX_SIMPLEX_STEP)

        best = np.clip(points[int(np.argmin(values))], 0.0, 1.0)
        simplex = np.tile(best, (dimension + 1, 1))
        for axis in range(dimension):
            simplex[axis + 1, axis] += step if best[axis] + step <= 1.0 else -step
        return simplex


def fit(problem: FitProblem, initial: Optional[Dict[str, float]] = None) -> FitResult:
    """
    Minimise the objective from `initial` (or each parameter's start value).

    Converged means the objective fell below OBJECTIVE_TOLERANCE, or the
    simplex shrank below SIMPLEX_TOLERANCE (in units of each parameter's bound
    span) within max_evaluations, with a best point that was not penalized.
    Otherwise the best point comes back with converged = False.
    """
    start = problem.initial_values(initial)
    _check_bounds(problem, start)
    objective = _ScaledObjective(problem)
    preset = problem.preset if any(t.observable == "product_branching" for t in problem.objectives) else None

    operation = f"fit of {', '.join(problem.names) or 'no parameters'}"
    log_operation_start(logger, operation, initial=start, max_evaluations=problem.max_evaluations)
    start_time = time.time()

    if not problem.names:
        value = objective(np.zeros(0))
        converged = not objective.best_penalized
        result = FitResult(parameters={}, objective=value, evaluations=1, converged=converged,
                           penalized_evaluations=objective.penalized,
                           message="no free parameters" if converged else "objective was penalized",
                           preset=preset)
        event_emitter.emit("fit.completed", converged=converged, evaluations=1, objective=value)
        return result

    try:
        simplex = objective.initial_simplex(objective.scale(start))
        optimum = minimize(
            objective,
            simplex[0],
            method="Nelder-Mead",
            bounds=[(0.0, 1.0)] * len(problem.names),
            callback=objective.callback,
            options={
                "initial_simplex": simplex,
                "maxfev": max(problem.max_evaluations - objective.evaluations, 1),
                "maxiter": problem.max_evaluations,
                "xatol": SIMPLEX_TOLERANCE,
                "fatol": OBJECTIVE_TOLERANCE,
            },
        )
    except Exception as e:
        duration_ms = round((time.time() - start_time) * 1000, 2)
        log_operation_failed(logger, operation, e, duration_ms)
        raise

    best_value, best_params = objective.best_value, objective.best_params
    message = str(optimum.message)
    if best_value >= PENALTY or objective.best_penalized:
        converged = False
        message = (f"every point reached was penalized ({objective.penalized} of "
                   f"{objective.evaluations} evaluations returned the penalty {PENALTY:g})")
    else:
        converged = bool(best_value < OBJECTIVE_TOLERANCE or
                         (optimum.success and objective.evaluations < problem.max_evaluations))

    duration_ms = round((time.time() - start_time) * 1000, 2)
    log_operation_success(logger, operation, duration_ms, evaluations=objective.evaluations,
                          objective=best_value, converged=converged)
    event_emitter.emit("fit.completed", converged=converged, evaluations=objective.evaluations,
                       objective=best_value)
    return FitResult(parameters=best_params, objective=best_value, evaluations=objective.evaluations,
                     converged=converged, penalized_evaluations=objective.penalized,
                     message=message, preset=preset)
