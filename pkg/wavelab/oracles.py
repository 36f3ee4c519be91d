"""
Independent reference computations used to validate the production numerics.

Each oracle deliberately shares as little as possible with the code it checks: the
transform oracle uses adaptive Gauss–Kronrod quadrature instead of the fixed
Gauss–Legendre matrices, the ODE oracle a fixed step Runge–Kutta scheme instead of the
adaptive DOP853 integrator, and the closed form residuals use hand-derived derivatives.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.integrate import quad_vec

from . import telemetry
from ._errors import WavelabError
from .spectral import FOURIER_SCALE, RadialField, RadialGrid, SpectralField, bessel_kernel
from .stationary import AutonomousModel, rhs

logger = logging.getLogger(__name__)

CLOSED_FORMS = ("phi_T", "turok_spergel", "plane_r3", "plane_tr3")


class OracleError(WavelabError, ValueError):
    """Raised for oracle requests outside their domain.

    This covers:
    - Refinement factors below 4
    - Closed form solutions evaluated off their domain of definition
    - Fixed step integrations that overflow
    """

    pass


@dataclass(frozen=True, slots=True)
class OracleConfig:
    """Accuracy knobs for oracle computations.

    Example:
        >>> OracleConfig(refinement=8)
    """

    refinement: int = 8
    rtol: float = 1e-13
    ode_step: float = 1e-3

    def __post_init__(self):
        if self.refinement < 4:
            raise OracleError("refinement must be at least 4")

        if not self.ode_step > 0:
            raise OracleError("ode_step must be positive")


def oracle_transform(
    f: RadialField | Callable[[np.ndarray], np.ndarray],
    grid: RadialGrid | None = None,
    config: OracleConfig = OracleConfig(),
) -> SpectralField:
    """Radial Fourier transform at the frequency nodes by adaptive vector quadrature.

    A :class:`RadialField` is integrated through its Legendre interpolant; a callable is
    integrated exactly as given.
    """
    if isinstance(f, RadialField):
        grid = f.grid
        function = f.at
    elif grid is None:
        raise OracleError("a grid is required for callable input")
    else:
        function = f

    rho = grid.freq_nodes
    breaks = np.linspace(0.0, grid.r_max, 16 * config.refinement + 1)[1:-1]

    def integrand(r: float) -> np.ndarray:
        return float(function(np.array([r]))[0]) * bessel_kernel(rho * r) * r**4

    values, _ = quad_vec(
        integrand, 0.0, grid.r_max, epsabs=0.0, epsrel=config.rtol, points=breaks, limit=10_000
    )

    return SpectralField(grid, FOURIER_SCALE * values)


def oracle_ode(
    model: AutonomousModel | Callable[[float, np.ndarray], np.ndarray],
    seed_state: np.ndarray,
    s_range: tuple[float, float],
    config: OracleConfig = OracleConfig(),
) -> tuple[np.ndarray, np.ndarray]:
    """Classical fourth order Runge–Kutta with a fixed step across ``s_range``.

    Returns the sample points and the states, shape (len(s), dim).
    """
    if isinstance(model, AutonomousModel):
        field_fn = lambda s, y: rhs(model, s, y)  # noqa: E731
    else:
        field_fn = model

    start, stop = s_range
    count = max(1, math.ceil(abs(stop - start) / config.ode_step))
    h = (stop - start) / count
    s = start + h * np.arange(count + 1)
    states = np.empty((count + 1, len(seed_state)))
    states[0] = seed_state

    with np.errstate(over="raise", invalid="raise"):
        try:
            for index in range(count):
                y, t = states[index], s[index]
                k1 = field_fn(t, y)
                k2 = field_fn(t + 0.5 * h, y + 0.5 * h * k1)
                k3 = field_fn(t + 0.5 * h, y + 0.5 * h * k2)
                k4 = field_fn(t + h, y + h * k3)
                states[index + 1] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except FloatingPointError as error:
            raise OracleError(f"fixed step integration overflowed near s = {t:.4g}") from error

    return s, states


def closed_form_residual(which: str, point: tuple[float, float]) -> float:
    """Residual of a closed form solution, evaluated from exact derivatives.

    - ``phi_T`` at (t, T): u = √2/(T − t) against u_tt − u³
    - ``turok_spergel`` at (t, r): ψ = 2 arctan(r/t) against the S³ wave map equation
    - ``plane_r3`` at (t, r): r⁻³ against the free radial wave equation on ℝ⁵
    - ``plane_tr3`` at (t, r): t·r⁻³ against the same equation
    """
    t, x = point

    match which:
        case "phi_T":
            T = x
            if t >= T:
                raise OracleError("phi_T needs t < T")
            gap = T - t
            u = math.sqrt(2.0) / gap
            utt = 2.0 * math.sqrt(2.0) / gap**3
            return utt - u**3

        case "turok_spergel":
            r = x
            if t <= 0 or r <= 0:
                raise OracleError("turok_spergel needs t > 0 and r > 0")
            d = t**2 + r**2
            psi = 2.0 * math.atan2(r, t)
            psi_tt = 4.0 * r * t / d**2
            psi_r = 2.0 * t / d
            psi_rr = -4.0 * r * t / d**2
            return psi_tt - psi_rr - 2.0 * psi_r / r + math.sin(2.0 * psi) / r**2

        case "plane_r3" | "plane_tr3":
            r = x
            if r <= 0:
                raise OracleError("plane solutions need r > 0")
            amplitude = 1.0 if which == "plane_r3" else t
            u_rr = 12.0 * amplitude / r**5
            u_r = -3.0 * amplitude / r**4
            return -(u_rr + 4.0 * u_r / r)

        case _:
            raise OracleError(f"unknown closed form {which!r}, expected one of {CLOSED_FORMS}")


def richardson(values: list[float], ratio: float, order: float) -> float:
    """Extrapolate the last two entries of a refinement sequence with known order."""
    if len(values) < 2:
        raise OracleError("richardson needs at least two values")

    factor = ratio**order
    coarse, fine = values[-2], values[-1]

    return (factor * fine - coarse) / (factor - 1.0)


def observed_order(errors: list[float], ratio: float) -> np.ndarray:
    """Orders log(e_i / e_{i+1}) / log(ratio) between successive refinements."""
    errors = np.asarray(errors, dtype=float)

    return np.log(errors[:-1] / errors[1:]) / math.log(ratio)


@dataclass(slots=True)
class OracleReport:
    """Row by row comparison of production values with their oracles."""

    rows: list[dict[str, Any]] = field(default_factory=list)

    def add(self, name: str, production: float, oracle: float) -> None:
        scale = max(abs(oracle), 1e-300)
        self.rows.append(
            {
                "name": name,
                "production": production,
                "oracle": oracle,
                "relative": abs(production - oracle) / scale,
            }
        )

    @property
    def worst(self) -> float:
        return max((row["relative"] for row in self.rows), default=0.0)


def compare(
    name: str,
    production: np.ndarray,
    oracle: np.ndarray,
) -> OracleReport:
    """Compare arrays entrywise; the norm relative difference is recorded as one row."""
    with telemetry.span("wavelab.oracles.compare", {"name": name}) as collector:
        production = np.asarray(production)
        oracle = np.asarray(oracle)
        report = OracleReport()
        report.add(name, float(np.linalg.norm(production)), float(np.linalg.norm(oracle)))
        scale = max(float(np.linalg.norm(oracle)), 1e-300)
        report.rows[-1]["relative"] = float(np.linalg.norm(production - oracle)) / scale
        collector.add({"relative": report.worst})

    return report
