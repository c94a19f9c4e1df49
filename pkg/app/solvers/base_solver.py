"""Base solver class shared by the relaxing, fast-time and relaxed integrators."""

import logging
import math
from abc import ABC, abstractmethod
from datetime import datetime
from typing import Any, Callable, Generic, Optional, Sequence, TypeVar

from app.errors import PositivityError, SolverError, StepSizeError

logger = logging.getLogger(__name__)

StateT = TypeVar("StateT")
Observer = Callable[[Any], None]

# Remainder steps shorter than this fraction of dt are dropped.
REMAINDER_TOLERANCE = 1e-12


def sample_schedule(t0: float, t_end: float, sample_dt: Optional[float]) -> list[float]:
    """Observation times: t0, every t0 + j*sample_dt < t_end, then t_end.

    Empty when t_end == t0. Identical inputs give identical lists, so runs
    that share (t0, t_end, sample_dt) observe at bit-identical times.
    """
    if t_end < t0:
        raise ValueError(f"t_end={t_end} precedes t0={t0}")
    if t_end == t0:
        return []
    times = [t0]
    if sample_dt is not None:
        if sample_dt <= 0.0:
            raise ValueError(f"sample_dt must be positive, got {sample_dt}")
        j = 1
        while True:
            t = t0 + j * sample_dt
            if t >= t_end - 1e-12 * sample_dt:
                break
            times.append(t)
            j += 1
    times.append(t_end)
    return times


class Evolution(Generic[StateT]):
    """Final state of an evolution plus the times at which observers fired."""

    def __init__(self, final: StateT, sample_times: list[float], steps: int):
        self.final = final
        self.sample_times = sample_times
        self.steps = steps


class BaseSolver(ABC, Generic[StateT]):
    """Fixed-step time integrator with exact landing on sample times.

    Subclasses provide ``step``; evolution, sampling and error annotation
    live here.
    """

    def __init__(self, dt: float):
        if dt <= 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.dt = dt
        self.steps_taken = 0
        self.created_at = datetime.now()

    @property
    @abstractmethod
    def name(self) -> str:
        """Return the solver's display name."""
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        """Return the solver's description."""
        pass

    @abstractmethod
    def step(self, state: StateT, dt: Optional[float] = None) -> StateT:
        """Advance one step of size dt (default: the solver's dt)."""
        pass

    def _advance(self, state: StateT, t_target: float, step_observers: Sequence[Observer] = ()) -> StateT:
        span = t_target - state.t
        n_full = int(math.floor(span / self.dt + 1e-9))
        remainder = span - n_full * self.dt
        steps = [self.dt] * n_full
        if remainder > REMAINDER_TOLERANCE * self.dt:
            steps.append(remainder)
        if not steps:
            return state.at_time(t_target)
        for i, h in enumerate(steps):
            state = self._checked_step(state, h)
            if i == len(steps) - 1:
                state = state.at_time(t_target)
            for observer in step_observers:
                observer(state)
        return state

    def _checked_step(self, state: StateT, dt: float) -> StateT:
        try:
            new_state = self.step(state, dt)
        except (PositivityError, StepSizeError, FloatingPointError) as e:
            logger.error(f"{self.name} failed at t={state.t:.6g}: {e}")
            raise SolverError(str(e), t=state.t, cause=e) from e
        self.steps_taken += 1
        return new_state

    def evolve(
        self,
        state0: StateT,
        t_end: float,
        observers: Sequence[Observer] = (),
        sample_dt: Optional[float] = None,
        step_observers: Sequence[Observer] = (),
    ) -> Evolution[StateT]:
        """Step from state0.t to t_end, calling every observer at each sample time.

        step_observers see the state after every accepted step.

        Raises:
            ValueError: if t_end precedes the initial time
            SolverError: if a step fails; carries the failing slow time
        """
        return self.evolve_through(state0, sample_schedule(state0.t, t_end, sample_dt), observers, step_observers)

    def evolve_through(
        self,
        state0: StateT,
        times: Sequence[float],
        observers: Sequence[Observer] = (),
        step_observers: Sequence[Observer] = (),
        observe_start: bool = True,
    ) -> Evolution[StateT]:
        """Land on each of the given increasing times, observing at every one of them.

        times[0] must be the initial time; observe_start=False skips the
        observers there, for a run continuing a previous segment.
        """
        times = list(times)
        if not times:
            return Evolution(state0, [], 0)
        if times[0] != state0.t:
            raise ValueError(f"schedule starts at {times[0]} but the state is at t={state0.t}")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("sample times must be strictly increasing")

        start_steps = self.steps_taken
        state = state0
        for i, t_sample in enumerate(times):
            if i > 0:
                state = self._advance(state, t_sample, step_observers)
            elif not observe_start:
                continue
            for observer in observers:
                observer(state)

        logger.debug(f"{self.name} reached t={times[-1]:.6g} in {self.steps_taken - start_steps} steps")
        return Evolution(state, times, self.steps_taken - start_steps)

    def get_status(self) -> dict[str, Any]:
        """Get solver status information."""
        return {
            "name": self.name,
            "description": self.description,
            "dt": self.dt,
            "steps_taken": self.steps_taken,
            "created_at": self.created_at.isoformat(),
        }


class StateRecorder:
    """Observer that keeps every state it is shown."""

    def __init__(self):
        self.states: list = []

    def __call__(self, state) -> None:
        self.states.append(state)

    @property
    def times(self) -> list[float]:
        return [s.t for s in self.states]
