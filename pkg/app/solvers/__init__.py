# Solvers package
from app.solvers.base_solver import BaseSolver, Evolution, StateRecorder, sample_schedule
from app.solvers.relaxing import (
    DampedEulerOperator,
    FastTimeOperator,
    FastTimeSolver,
    RelaxingOperator,
    RelaxingSolver,
    choose_step_control,
    evolve_relaxing,
    relaxing_rhs,
    relaxing_tangent,
    step_relaxing,
)
from app.solvers.relaxed import (
    RelaxedSolver,
    evolve_relaxed,
    limit_velocity,
    limit_velocity_rate,
    relaxed_rhs,
    step_relaxed,
)
