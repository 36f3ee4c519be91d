"""
Stationary radial solutions through the logarithmic reduction.

Writing φ(r) = Φ(log r)/r turns the radial elliptic equation −Δφ = F(r, φ) on ℝ⁵ into the
autonomous damped oscillator

    Φ'' + Φ' = g(Φ)

with g(x) = 2x − x³ for the focusing cubic, sin 2x for maps into S³ and sinh 2x for maps
into H³. Solutions decaying like r⁻³ at infinity are the stable manifold of the saddle at
the origin, followed backward in s = log r.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Any, Callable

import numpy as np
from scipy.integrate import OdeSolution, quad, solve_ivp
from scipy.linalg import eigvals

from . import telemetry
from ._errors import WavelabError
from .models import ModelKind, ModelSpec, nonlinearity
from .spectral import RadialField, RadialGrid

logger = logging.getLogger(__name__)

SEED_LEVEL = 1e-6
RTOL = 1e-12
ATOL = 1e-30
ESCAPE_BOUND = 50.0


class ManifoldError(WavelabError, ValueError):
    """Raised for stable manifold requests without a profile to follow.

    This covers:
    - Empty or reversed integration ranges
    - Grids reaching outside the integrated range
    """

    pass


class EscapeError(WavelabError):
    """Raised when a trajectory leaves |Φ| ≤ bound before reaching ``s_min``."""

    def __init__(self, message: str, s: float):
        super().__init__(message)
        self.s = s


class AutonomousModel(StrEnum):
    """Reduced oscillators Φ'' + Φ' = g(Φ).

    - CUBIC: g = 2x − x³
    - PENDULUM_SIN: g = sin 2x
    - PENDULUM_SINH: g = sinh 2x
    """

    CUBIC = "cubic"
    PENDULUM_SIN = "pendulum_sin"
    PENDULUM_SINH = "pendulum_sinh"

    @property
    def wave_model(self) -> ModelSpec:
        match self:
            case AutonomousModel.CUBIC:
                return ModelSpec(ModelKind.CUBIC_FOCUSING)
            case AutonomousModel.PENDULUM_SIN:
                return ModelSpec(ModelKind.WM_S3)
            case AutonomousModel.PENDULUM_SINH:
                return ModelSpec(ModelKind.WM_H3)

    @property
    def cubic_coefficient(self) -> float:
        """Coefficient of x³ in the Taylor expansion of g."""
        match self:
            case AutonomousModel.CUBIC:
                return -1.0
            case AutonomousModel.PENDULUM_SIN:
                return -4.0 / 3.0
            case AutonomousModel.PENDULUM_SINH:
                return 4.0 / 3.0


def force(model: AutonomousModel, x: np.ndarray | float) -> np.ndarray:
    x = np.asarray(x, dtype=float)

    match model:
        case AutonomousModel.CUBIC:
            return 2.0 * x - x**3
        case AutonomousModel.PENDULUM_SIN:
            return np.sin(2.0 * x)
        case AutonomousModel.PENDULUM_SINH:
            return np.sinh(2.0 * x)


def force_prime(model: AutonomousModel, x: float) -> float:
    match model:
        case AutonomousModel.CUBIC:
            return 2.0 - 3.0 * x**2
        case AutonomousModel.PENDULUM_SIN:
            return 2.0 * math.cos(2.0 * x)
        case AutonomousModel.PENDULUM_SINH:
            return 2.0 * math.cosh(2.0 * x)


def potential(model: AutonomousModel, x: np.ndarray | float) -> np.ndarray:
    """G with G' = g and G(0) = 0."""
    x = np.asarray(x, dtype=float)

    match model:
        case AutonomousModel.CUBIC:
            return x**2 - 0.25 * x**4
        case AutonomousModel.PENDULUM_SIN:
            return np.sin(x) ** 2
        case AutonomousModel.PENDULUM_SINH:
            return np.sinh(x) ** 2


def rhs(model: AutonomousModel, s: float, state: np.ndarray) -> np.ndarray:
    """Vector field (Φ, Φ') ↦ (Φ', −Φ' + g(Φ))."""
    x, y = state[0], state[1]

    return np.array([y, -y + force(model, x)])


def equilibria(model: AutonomousModel, bound: float = 20.0) -> list[tuple[float, float]]:
    """Equilibria (x, 0) with |x| ≤ bound."""
    match model:
        case AutonomousModel.CUBIC:
            roots = [0.0, math.sqrt(2.0), -math.sqrt(2.0)]
        case AutonomousModel.PENDULUM_SIN:
            count = int(bound // (math.pi / 2.0))
            roots = [k * math.pi / 2.0 for k in range(-count, count + 1)]
        case AutonomousModel.PENDULUM_SINH:
            roots = [0.0]

    return sorted((x, 0.0) for x in roots if abs(x) <= bound)


def jacobian_eigenvalues(model: AutonomousModel, point: tuple[float, float]) -> np.ndarray:
    """Eigenvalues of [[0, 1], [g'(x), −1]], ordered by decreasing real part."""
    jacobian = np.array([[0.0, 1.0], [force_prime(model, point[0]), -1.0]])
    values = eigvals(jacobian)

    return values[np.argsort(-values.real, kind="stable")]


def phase_portrait(
    model: AutonomousModel,
    box: tuple[float, float, float, float] = (-3.0, 3.0, -3.0, 3.0),
    n: int = 21,
) -> dict[str, np.ndarray]:
    """Vector field sampled on an n × n grid over ``box`` = (x_min, x_max, y_min, y_max)."""
    x, y = np.meshgrid(np.linspace(box[0], box[1], n), np.linspace(box[2], box[3], n))

    return {"x": x, "y": y, "dx": y, "dy": -y + force(model, x)}


def seed(model: AutonomousModel, ell: float, s0: float) -> np.ndarray:
    """Point (Φ, Φ', ∫_s^∞ Φ'²) on the stable manifold at s0 from Φ ≈ ℓe^{−2s} + a e^{−6s}."""
    a = model.cubic_coefficient * ell**3 / 28.0
    e2, e6 = math.exp(-2.0 * s0), math.exp(-6.0 * s0)
    tail = ell**2 * e2**2 + 3.0 * ell * a * e2**4

    return np.array([ell * e2 + a * e6, -2.0 * ell * e2 - 6.0 * a * e6, tail])


def seed_time(ell: float) -> float:
    return 0.5 * math.log(abs(ell) / SEED_LEVEL) + 1.0


@dataclass(frozen=True, eq=False)
class ManifoldProfile:
    """Stable manifold trajectory with Φ ~ ℓe^{−2s} as s → ∞.

    ``dissipation`` holds ∫_s^∞ Φ'(σ)² dσ, integrated along with the trajectory.
    """

    model: AutonomousModel
    ell: float
    s: np.ndarray
    phi: np.ndarray
    phidot: np.ndarray
    dissipation: np.ndarray
    solution: OdeSolution | Callable[[np.ndarray], np.ndarray]

    @property
    def s_min(self) -> float:
        return float(self.s[0])

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    def __call__(self, s: np.ndarray | float) -> np.ndarray:
        """(Φ, Φ', ∫_s^∞ Φ'²) at ``s`` from the dense output."""
        s = np.asarray(s, dtype=float)

        if np.any(s < self.s_min - 1e-12) or np.any(s > self.s_max + 1e-12):
            raise ManifoldError(f"s outside [{self.s_min:.3g}, {self.s_max:.3g}]")

        return self.solution(s)

    @property
    def first_sign_change(self) -> float | None:
        """Largest s where Φ changes sign, following the trajectory backward."""
        flips = np.nonzero(np.sign(self.phi[1:]) != np.sign(self.phi[:-1]))[0]

        return float(self.s[flips[-1]]) if len(flips) else None


def _zero_profile(model: AutonomousModel, s_min: float, s_max: float) -> ManifoldProfile:
    s = np.linspace(s_min, s_max, 201)
    zero = np.zeros_like(s)

    def solution(at: np.ndarray) -> np.ndarray:
        return np.zeros((3, *np.shape(at)))

    return ManifoldProfile(model, 0.0, s, zero, zero, zero, solution)


def stable_manifold(
    model: AutonomousModel,
    ell: float,
    s_min: float,
    s_max: float | None = None,
    *,
    bound: float = ESCAPE_BOUND,
) -> ManifoldProfile:
    """Follow the stable manifold with r³φ → ℓ backward from large s down to ``s_min``.

    ``ell = 0`` is the equilibrium itself and gives the zero profile on [s_min, s_max],
    with s_max defaulting to the seed point of ℓ = 1.

    Args:
        model: Reduced oscillator
        ell: Asymptotic coefficient; its sign selects the branch
        s_min: Smallest s to reach
        s_max: Seed point, defaults to where |ℓ|e^{−2s} is well below 10⁻⁶
        bound: Escape threshold for |Φ|

    Raises:
        ManifoldError: For an empty range
        EscapeError: When |Φ| exceeds ``bound`` before ``s_min``
    """
    model = AutonomousModel(model)
    s0 = seed_time(ell or 1.0) if s_max is None else s_max

    if s_min >= s0:
        raise ManifoldError(f"s_min = {s_min} must be below the seed point {s0:.3g}")

    if ell == 0:
        return _zero_profile(model, s_min, s0)

    def augmented(s: float, state: np.ndarray) -> np.ndarray:
        x, y = state[0], state[1]
        return np.array([y, -y + float(force(model, x)), -(y**2)])

    def escape(s: float, state: np.ndarray) -> float:
        return bound - abs(state[0])

    escape.terminal = True

    with telemetry.span(
        "wavelab.stationary.manifold", {"model": str(model), "ell": ell, "s_min": s_min}
    ) as collector:
        result = solve_ivp(
            augmented,
            (s0, s_min),
            seed(model, ell, s0),
            method="DOP853",
            rtol=RTOL,
            atol=ATOL,
            dense_output=True,
            events=escape,
        )

        if result.status == 1:
            s_escape = float(result.t_events[0][0])
            raise EscapeError(f"|phi| exceeded {bound} at s = {s_escape:.4g}", s_escape)

        if not result.success:
            raise ManifoldError(result.message)

        collector.add({"steps": len(result.t)})

    order = np.argsort(result.t)

    return ManifoldProfile(
        model=model,
        ell=ell,
        s=result.t[order],
        phi=result.y[0][order],
        phidot=result.y[1][order],
        dissipation=result.y[2][order],
        solution=result.sol,
    )


def translate(profile: ManifoldProfile, sigma: float) -> ManifoldProfile:
    """Profile for ℓ·e^{2σ}, which is Φ(s − σ) by autonomy."""
    return stable_manifold(
        profile.model,
        profile.ell * math.exp(2.0 * sigma),
        profile.s_min + sigma,
        profile.s_max + sigma,
    )


def physical_profile(
    profile: ManifoldProfile, grid: RadialGrid, *, outside: float | None = None
) -> RadialField:
    """Sample φ(r) = Φ(log r)/r at the grid nodes.

    Args:
        outside: Value used at nodes outside the integrated range; without it such nodes
            raise :class:`ManifoldError`
    """
    r = grid.nodes
    s = np.log(r)
    inside = (s >= profile.s_min) & (s <= profile.s_max)

    if not np.all(inside) and outside is None:
        raise ManifoldError(
            f"grid spans s in [{s[0]:.3g}, {s[-1]:.3g}], profile covers "
            f"[{profile.s_min:.3g}, {profile.s_max:.3g}]"
        )

    values = np.full(grid.n, 0.0 if outside is None else outside)
    values[inside] = profile(s[inside])[0] / r[inside]

    return RadialField(grid, values)


def elliptic_residual(profile: ManifoldProfile, r: np.ndarray) -> np.ndarray:
    """Scale invariant residual r³(−φ'' − 4φ'/r − F(r, φ)) through the chain rule."""
    r = np.asarray(r, dtype=float)
    phi, phidot, _ = profile(np.log(r))
    phiddot = -phidot + force(profile.model, phi)

    laplacian = (phiddot + phidot - 2.0 * phi) / r**3
    wave_force = nonlinearity(profile.model.wave_model, r, phi / r)

    return r**3 * (-laplacian - wave_force)


def ode_energy_identity(profile: ManifoldProfile) -> np.ndarray:
    """Residual of ½Φ'² − G(Φ) = ∫_s^∞ Φ'² along the stored trajectory."""
    lhs = 0.5 * profile.phidot**2 - potential(profile.model, profile.phi)

    return lhs - profile.dissipation


def asymptotic_slope(profile: ManifoldProfile, *, level: float = 1e-8) -> float:
    """Log-log slope of |r³φ − ℓ| over the decade ending where it drops to ``level``·|ℓ|.

    The stable manifold expansion predicts −4.
    """
    if profile.ell == 0:
        raise ManifoldError("the zero profile has no decay rate")

    s = profile.s
    deviation = np.abs(np.exp(2.0 * s) * profile.phi - profile.ell)
    below = np.nonzero(deviation <= level * abs(profile.ell))[0]

    if not len(below):
        raise ManifoldError("deviation never falls to the requested level")

    s_end = float(s[below[0]])
    sample = np.linspace(s_end - math.log(10.0), s_end, 41)

    if sample[0] < profile.s_min:
        raise ManifoldError("profile too short for a full decade")

    phi = profile(sample)[0]
    values = np.abs(np.exp(2.0 * sample) * phi - profile.ell)
    slope, _ = np.polyfit(sample, np.log(values), 1)

    return float(slope)


def l5_divergence(profile: ManifoldProfile, eps_list: list[float]) -> dict[str, Any]:
    """I(ε) = ∫_ε^1 |φ|⁵ r⁴ dr = ∫_{log ε}^0 |Φ|⁵ ds for each ε.

    Returns the values together with the slope and coefficient of determination of a
    linear fit in log(1/ε).
    """
    if profile.s_max < 0:
        raise ManifoldError("profile must cover s = 0")

    values = []
    for eps in eps_list:
        s_low = math.log(eps)

        if s_low < profile.s_min:
            raise ManifoldError(f"eps = {eps} is outside the integrated range")

        value, _ = quad(lambda s: abs(float(profile(s)[0])) ** 5, s_low, 0.0, limit=500)
        values.append(value)

    x = np.log(1.0 / np.asarray(eps_list, dtype=float))
    y = np.asarray(values)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    spread = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum((y - fitted) ** 2) / spread if spread > 0 else 1.0

    return {"eps": list(eps_list), "values": values, "slope": float(slope), "r2": float(r2)}
