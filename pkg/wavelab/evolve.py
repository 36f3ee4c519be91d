"""
Time stepping for the radial nonlinear wave equation.

Two schemes are available. ``strang_spectral`` splits each step into exact free flow in
frequency space around a kick by the nonlinearity, so the free equation is solved without
any time stepping error. ``leapfrog_fd`` is velocity Verlet on a staggered uniform grid in
conservative form, kept as an independent cross-check of the spectral scheme.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, Callable, Iterator

import numpy as np
from scipy.interpolate import CubicSpline

from . import telemetry
from ._errors import WavelabError
from .models import BlowupError, ModelSpec, nonlinearity
from .spectral import (
    RadialField,
    SpectralField,
    State,
    forward_transform,
    free_flow,
    inverse_transform,
    lebesgue_norm,
    sobolev_norm,
)

logger = logging.getLogger(__name__)

CFL_LIMIT = 0.5


class Scheme(StrEnum):
    """Time integrators.

    - STRANG_SPECTRAL: Exact free half flows around a nonlinear kick, second order
    - LEAPFROG_FD: Velocity Verlet on a staggered finite difference grid, second order
    """

    STRANG_SPECTRAL = "strang_spectral"
    LEAPFROG_FD = "leapfrog_fd"


class Termination(StrEnum):
    """Why a run stopped.

    - COMPLETED: Reached the requested end time
    - BLOWUP: The sup norm or the critical norm crossed its threshold
    - OVERFLOW: The state stopped being representable in floating point
    """

    COMPLETED = "completed"
    BLOWUP = "blowup"
    OVERFLOW = "overflow"


class EvolveError(WavelabError, ValueError):
    """Raised for run settings that can't produce a meaningful trajectory.

    This covers:
    - Non-positive time steps and negative end times
    - Finite difference steps violating the CFL bound
    - Amplitude brackets that don't straddle the blow-up threshold
    """

    pass


class CausalityError(WavelabError):
    """Raised when the data would reach the outer edge of the grid before ``t_end``."""

    pass


@dataclass(frozen=True, slots=True)
class EvolveConfig:
    """Settings for :func:`evolve`.

    Example:
        >>> EvolveConfig(dt=1e-3, t_end=1.0, snapshot_stride=50)
        >>> EvolveConfig(dt=5e-3, t_end=1.0, scheme=Scheme.LEAPFROG_FD)
    """

    dt: float
    t_end: float
    scheme: Scheme = Scheme.STRANG_SPECTRAL
    snapshot_stride: int = 1
    blowup_linf: float = 1e6
    blowup_norm: float = 1e4
    check_support: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))

        if not self.dt > 0:
            raise EvolveError("dt must be positive")

        if self.t_end < 0:
            raise EvolveError("t_end must not be negative")

        if self.snapshot_stride < 1:
            raise EvolveError("snapshot_stride must be at least 1")

    @property
    def steps(self) -> int:
        return max(0, math.ceil(self.t_end / self.dt - 1e-9))


@dataclass(slots=True)
class Trajectory:
    """Snapshots of a run, the first being the initial data."""

    model: ModelSpec
    snapshots: list[State] = field(default_factory=list)
    reason: Termination = Termination.COMPLETED
    steps: int = 0
    detail: str | None = None

    def __len__(self) -> int:
        return len(self.snapshots)

    def __iter__(self) -> Iterator[State]:
        return iter(self.snapshots)

    @property
    def times(self) -> np.ndarray:
        return np.array([snap.t for snap in self.snapshots])

    @property
    def final(self) -> State:
        return self.snapshots[-1]


def critical_norm(state: State, *, strict: bool = False) -> float:
    return math.hypot(
        sobolev_norm(state.u, 1.5, strict=strict),
        sobolev_norm(state.ut, 0.5, strict=strict),
    )


class _Stepper:
    # advance() rebinds every array, so a shallow copy of the attributes is a full checkpoint
    def checkpoint(self) -> dict[str, Any]:
        return dict(vars(self))

    def restore(self, saved: dict[str, Any]) -> None:
        vars(self).update(saved)


class _SpectralStepper(_Stepper):
    def __init__(self, model: ModelSpec, state: State):
        self.model = model
        self.grid = state.grid
        self.t = state.t
        self.u_hat = forward_transform(state.u).values
        self.ut_hat = forward_transform(state.ut).values
        self.u = state.u.values.copy()

    def advance(self, dt: float) -> None:
        rho = self.grid.freq_nodes
        u_hat, ut_hat = free_flow(self.u_hat, self.ut_hat, rho, 0.5 * dt)

        u_mid = self.grid.inverse_matrix @ u_hat
        force = nonlinearity(self.model, self.grid.nodes, u_mid)
        ut_hat = ut_hat + dt * (self.grid.forward_matrix @ force)

        self.u_hat, self.ut_hat = free_flow(u_hat, ut_hat, rho, 0.5 * dt)
        self.u = self.grid.inverse_matrix @ self.u_hat
        self.t += dt

    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.ut_hat)))

    def linf(self) -> float:
        return float(np.max(np.abs(self.u)))

    def state(self) -> State:
        return State(
            self.t,
            RadialField(self.grid, self.u),
            inverse_transform(SpectralField(self.grid, self.ut_hat)),
        )


class _StaggeredStepper(_Stepper):
    """Velocity Verlet for u_tt = r⁻⁴(r⁴u_r)_r + F on cell centres r_j = (j + ½)h.

    Cell averages use the exact volumes (r_{j+½}⁵ − r_{j−½}⁵)/5, with zero flux through
    the origin and the outer edge.
    """

    def __init__(self, model: ModelSpec, state: State):
        self.model = model
        self.grid = state.grid
        self.t = state.t

        n = self.grid.n
        h = self.grid.spacing
        faces = h * np.arange(n + 1)

        self.h = h
        self.centres = h * (np.arange(n) + 0.5)
        self.volumes = (faces[1:] ** 5 - faces[:-1] ** 5) / 5.0
        self.flux = faces[1:-1] ** 4 / h

        self.u = state.u.at(self.centres)
        self.v = state.ut.at(self.centres)
        self.accel = self._acceleration(self.u)

    def _acceleration(self, u: np.ndarray) -> np.ndarray:
        flux = self.flux * np.diff(u)
        divergence = np.zeros_like(u)
        divergence[:-1] += flux
        divergence[1:] -= flux

        return divergence / self.volumes + nonlinearity(self.model, self.centres, u)

    def advance(self, dt: float) -> None:
        self.v = self.v + 0.5 * dt * self.accel
        self.u = self.u + dt * self.v
        self.accel = self._acceleration(self.u)
        self.v = self.v + 0.5 * dt * self.accel
        self.t += dt

    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))

    def linf(self) -> float:
        return float(np.max(np.abs(self.u)))

    def _to_nodes(self, values: np.ndarray) -> RadialField:
        x = np.concatenate([-self.centres[::-1], self.centres])
        y = np.concatenate([values[::-1], values])

        return RadialField(self.grid, CubicSpline(x, y)(self.grid.nodes))

    def state(self) -> State:
        return State(self.t, self._to_nodes(self.u), self._to_nodes(self.v))


def _stepper(model: ModelSpec, state: State, scheme: Scheme, dt: float):
    match scheme:
        case Scheme.STRANG_SPECTRAL:
            return _SpectralStepper(model, state)
        case Scheme.LEAPFROG_FD:
            limit = CFL_LIMIT * state.grid.spacing

            if dt > limit * (1.0 + 1e-12):
                raise EvolveError(f"dt = {dt} violates the CFL bound {limit:.3g}")

            return _StaggeredStepper(model, state)


def step(model: ModelSpec, state: State, dt: float, scheme: Scheme = Scheme.STRANG_SPECTRAL) -> State:
    """Advance ``state`` by a single step of size ``dt``.

    Raises:
        BlowupError: When the step overflows
    """
    stepper = _stepper(model, state, Scheme(scheme), dt)

    with np.errstate(over="raise"):
        try:
            stepper.advance(dt)
        except FloatingPointError as error:
            raise BlowupError(f"overflow at t = {state.t + dt}") from error

    if not stepper.finite():
        raise BlowupError(f"non-finite state at t = {state.t + dt}")

    return stepper.state()


def check_causality(state: State, t_end: float) -> None:
    """Ensure the data stay inside the grid until ``t_end`` by finite speed of propagation.

    Raises:
        CausalityError: When support radius plus ``t_end`` exceeds r_max
    """
    radius = state.support_radius()

    if radius + t_end > state.grid.r_max:
        raise CausalityError(
            f"support radius {radius:.3g} plus t_end {t_end} exceeds r_max {state.grid.r_max}"
        )


def evolve(model: ModelSpec, state: State, config: EvolveConfig) -> Trajectory:
    """Integrate from ``state`` until ``config.t_end`` or until the solution blows up.

    Blow-up is a result, not an error: the trajectory keeps the last finite snapshot and
    records the reason.

    Raises:
        CausalityError: When ``config.check_support`` and the data would hit the boundary
        EvolveError: For an invalid step on the finite difference scheme
    """
    state.u.check_finite()
    state.ut.check_finite()

    if config.check_support:
        check_causality(state, config.t_end)

    steps = config.steps
    dt = config.t_end / steps if steps else config.dt
    stepper = _stepper(model, state, config.scheme, dt)
    trajectory = Trajectory(model, [state])

    meta = {
        "model": str(model.kind),
        "scheme": str(config.scheme),
        "dt": dt,
        "t_end": config.t_end,
        "n": state.grid.n,
    }

    with telemetry.span("wavelab.evolve.run", meta) as collector:
        recorded = 0

        for index in range(1, steps + 1):
            saved = stepper.checkpoint()

            with np.errstate(over="raise"):
                try:
                    stepper.advance(dt)
                except (FloatingPointError, BlowupError) as error:
                    trajectory.reason = Termination.OVERFLOW
                    trajectory.detail = str(error) or type(error).__name__

            if trajectory.reason == Termination.COMPLETED and not stepper.finite():
                trajectory.reason = Termination.OVERFLOW
                trajectory.detail = "non-finite values"

            if trajectory.reason == Termination.OVERFLOW:
                # fall back to the last finite step, which the stride may have skipped
                stepper.restore(saved)

                if recorded < index - 1:
                    trajectory.snapshots.append(stepper.state())

                break

            trajectory.steps = index
            linf = stepper.linf()

            if linf > config.blowup_linf:
                trajectory.snapshots.append(stepper.state())
                trajectory.reason = Termination.BLOWUP
                trajectory.detail = f"sup norm {linf:.3g}"
                break

            if index % config.snapshot_stride == 0 or index == steps:
                snapshot = stepper.state()
                norm = critical_norm(snapshot)
                trajectory.snapshots.append(snapshot)
                recorded = index

                if norm > config.blowup_norm:
                    trajectory.reason = Termination.BLOWUP
                    trajectory.detail = f"critical norm {norm:.3g}"
                    break

        collector.add(
            {
                "reason": str(trajectory.reason),
                "steps": trajectory.steps,
                "t_final": trajectory.final.t,
            }
        )

    if trajectory.reason != Termination.COMPLETED:
        logger.debug("run stopped at t=%s: %s", trajectory.final.t, trajectory.detail)
        telemetry.execute(
            "wavelab.evolve.blowup",
            {**meta, "reason": str(trajectory.reason), "t": trajectory.final.t, "detail": trajectory.detail},
        )

    return trajectory


def convergence_order(
    model: ModelSpec,
    state: State,
    dt_list: list[float],
    t_end: float,
    scheme: Scheme = Scheme.STRANG_SPECTRAL,
) -> float:
    """Observed temporal order from runs at several step sizes.

    The reference solution uses an eighth of the smallest step. When every error is at
    rounding level (the free equation under the spectral scheme is exact) the order is
    reported as infinite. A run that stops early leaves a collapsed order rather than an
    exception.
    """
    if len(dt_list) < 2:
        raise EvolveError("need at least two step sizes")

    def final(dt: float) -> State:
        config = EvolveConfig(dt=dt, t_end=t_end, scheme=scheme, snapshot_stride=10**9)
        return evolve(model, state, config).final

    reference = final(min(dt_list) / 8.0)
    scale = lebesgue_norm(reference.u, 2.0)

    errors = np.array([lebesgue_norm(final(dt).u - reference.u, 2.0) for dt in dt_list])

    if not np.all(np.isfinite(errors)):
        return math.nan

    if np.all(errors <= 1e-12 * max(scale, 1.0)):
        return math.inf

    slope, _ = np.polyfit(np.log(dt_list), np.log(np.maximum(errors, 1e-300)), 1)

    return float(slope)


@dataclass(frozen=True, slots=True)
class ThresholdReport:
    """Bracket [lower, upper] around the smallest blow-up amplitude."""

    lower: float
    upper: float
    iterations: int

    @property
    def estimate(self) -> float:
        return 0.5 * (self.lower + self.upper)


def amplitude_threshold(
    model: ModelSpec,
    state: State,
    config: EvolveConfig,
    *,
    lower: float,
    upper: float,
    tol: float = 1e-3,
    blows_up: Callable[[Trajectory], bool] | None = None,
) -> ThresholdReport:
    """Bisect on the amplitude A of ``A·state`` for the onset of blow-up.

    Raises:
        EvolveError: When ``A = lower`` already blows up or ``A = upper`` doesn't
    """
    verdict = blows_up or (lambda trajectory: trajectory.reason != Termination.COMPLETED)

    def check(amplitude: float) -> bool:
        return verdict(evolve(model, state.scaled(amplitude), config))

    if check(lower) or not check(upper):
        raise EvolveError(f"[{lower}, {upper}] does not bracket the blow-up threshold")

    iterations = 0
    while upper - lower > tol * upper:
        middle = 0.5 * (lower + upper)

        if check(middle):
            upper = middle
        else:
            lower = middle

        iterations += 1

    return ThresholdReport(lower, upper, iterations)


__all__ = [
    "CausalityError",
    "EvolveConfig",
    "EvolveError",
    "Scheme",
    "Termination",
    "ThresholdReport",
    "Trajectory",
    "amplitude_threshold",
    "check_causality",
    "convergence_order",
    "critical_norm",
    "evolve",
    "step",
]
