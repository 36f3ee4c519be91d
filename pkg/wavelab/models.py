"""
Radial nonlinear wave models on ℝ⁵.

Every model is written as ``u_tt − Δu = F(r, u)`` for a radial function u. The
corotational wave maps into S³ and H³ fit the same form through ψ = r·u, which is why
their nonlinearities depend on r as well as u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np

from ._errors import WavelabError
from .spectral import (
    RadialField,
    RadialGrid,
    State,
    fractional_derivative,
    sobolev_norm,
    spectral_gradient,
)

__all__ = [
    "BlowupError",
    "ModelError",
    "ModelKind",
    "ModelSpec",
    "State",
    "energy",
    "energy_density",
    "exact_ode_blowup",
    "nonlinearity",
    "potential",
    "residual",
    "scale",
    "turok_spergel",
    "turok_spergel_state",
    "z_h3",
    "z_s3",
]

CRITICAL_POWER = 7.0 / 3.0
SERIES_CUTOFF = 0.5
HYPERBOLIC_LIMIT = 350.0


class ModelError(WavelabError, ValueError):
    """Raised for invalid model parameters or closed forms evaluated off their domain.

    This covers:
    - Power nonlinearities at or below the Ḣ^{3/2} critical exponent 7/3 without override
    - Non-positive cutoff radii
    - The ODE blow-up profile at or after its blow-up time
    - The explicit wave map solution at non-positive times
    """

    pass


class BlowupError(WavelabError, ArithmeticError):
    """Raised when a nonlinearity can't be evaluated in floating point.

    The hyperbolic wave map nonlinearity grows like e^{2ru}, so it overflows long before
    any other model does.
    """

    pass


class ModelKind(StrEnum):
    """Nonlinearities understood by :func:`nonlinearity`.

    - FREE: F = 0
    - CUBIC_FOCUSING: F = u³
    - CUBIC_DEFOCUSING: F = −u³
    - POWER: F = sign·|u|^{p−1}u
    - WM_S3: F = (2ru − sin 2ru)/r³, corotational maps into the sphere
    - WM_H3: F = (2ru − sinh 2ru)/r³, corotational maps into hyperbolic space
    """

    FREE = "free"
    CUBIC_FOCUSING = "cubic_focusing"
    CUBIC_DEFOCUSING = "cubic_defocusing"
    POWER = "power"
    WM_S3 = "wm_s3"
    WM_H3 = "wm_h3"


@dataclass(frozen=True, slots=True)
class ModelSpec:
    """A nonlinear wave model, optionally localised by a smooth cutoff.

    With ``cutoff=R`` the nonlinearity is multiplied by a smooth step equal to 0 for
    r ≤ R/2 and 1 for r ≥ R.

    Example:
        >>> ModelSpec(ModelKind.CUBIC_FOCUSING)
        >>> ModelSpec(ModelKind.POWER, p=5.0, sign=-1)
        >>> ModelSpec(ModelKind.CUBIC_FOCUSING, cutoff=8.0)
    """

    kind: ModelKind
    p: float = 3.0
    sign: int = 1
    cutoff: float | None = None
    allow_subcritical: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))

        if self.kind == ModelKind.POWER:
            if self.p <= CRITICAL_POWER and not self.allow_subcritical:
                raise ModelError(
                    f"p = {self.p} is not supercritical, the power must exceed 7/3"
                )

            if self.sign not in (-1, 1):
                raise ModelError("sign must be +1 or -1")

        if self.cutoff is not None and not self.cutoff > 0:
            raise ModelError("cutoff must be positive")

    @property
    def is_wave_map(self) -> bool:
        return self.kind in (ModelKind.WM_S3, ModelKind.WM_H3)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": str(self.kind),
            "p": self.p,
            "sign": self.sign,
            "cutoff": self.cutoff,
            "allow_subcritical": self.allow_subcritical,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ModelSpec:
        return cls(
            kind=ModelKind(data["kind"]),
            p=float(data.get("p", 3.0)),
            sign=int(data.get("sign", 1)),
            cutoff=data.get("cutoff"),
            allow_subcritical=bool(data.get("allow_subcritical", False)),
        )


def _series(coefficients: list[float], z: np.ndarray) -> np.ndarray:
    return np.polynomial.polynomial.polyval(z**2, coefficients)


# (z − sin z)/z³ and (z − sinh z)/z³ as power series in z²
_S3_SERIES = [(-1) ** (m + 1) / math.factorial(2 * m + 1) for m in range(1, 9)]
_H3_SERIES = [-1.0 / math.factorial(2 * m + 1) for m in range(1, 9)]

# (sin² z − z²)/z⁴ and (sinh² z − z²)/z⁴ as power series in z²
_S3_POTENTIAL = [(-1) ** (m + 1) * 2 ** (2 * m - 1) / math.factorial(2 * m) for m in range(2, 10)]
_H3_POTENTIAL = [2 ** (2 * m - 1) / math.factorial(2 * m) for m in range(2, 10)]


def cutoff(R: float, r: np.ndarray) -> np.ndarray:
    """Smooth step, 0 on [0, R/2] and 1 on [R, ∞), built from e^{−1/x}."""
    x = (np.asarray(r, dtype=float) - 0.5 * R) / (0.5 * R)
    rising = _smooth(x)
    falling = _smooth(1.0 - x)

    return rising / (rising + falling)


def _smooth(x: np.ndarray) -> np.ndarray:
    x = np.atleast_1d(x)
    out = np.zeros_like(x)
    positive = x > 0
    out[positive] = np.exp(-1.0 / x[positive])

    return out


def _check_hyperbolic(r: np.ndarray, u: np.ndarray) -> None:
    peak = float(np.max(np.abs(r * u), initial=0.0))

    if not peak <= HYPERBOLIC_LIMIT:
        raise BlowupError(f"|r·u| = {peak:.3g} overflows the hyperbolic nonlinearity")


def _wave_map_force(kind: ModelKind, r: np.ndarray, u: np.ndarray) -> np.ndarray:
    z = 2.0 * r * u
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_CUTOFF

    series = _S3_SERIES if kind == ModelKind.WM_S3 else _H3_SERIES
    out[small] = 8.0 * u[small] ** 3 * _series(series, z[small])

    zl = z[~small]
    rl = r[~small]
    trig = np.sin(zl) if kind == ModelKind.WM_S3 else np.sinh(zl)
    out[~small] = (zl - trig) / rl**3

    return out


def _z(kind: ModelKind, rho: np.ndarray | float) -> np.ndarray:
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    out = np.empty_like(rho)
    small = np.abs(2.0 * rho) < SERIES_CUTOFF

    series = _S3_SERIES if kind == ModelKind.WM_S3 else _H3_SERIES
    out[small] = 8.0 * _series(series, 2.0 * rho[small])

    big = rho[~small]
    trig = np.sin(2.0 * big) if kind == ModelKind.WM_S3 else np.sinh(2.0 * big)
    out[~small] = (2.0 * big - trig) / big**3

    return out


def z_s3(rho: np.ndarray | float) -> np.ndarray:
    """Z(ρ) = (2ρ − sin 2ρ)/ρ³, so that the sphere nonlinearity is u³·Z(ru)."""
    return _z(ModelKind.WM_S3, rho)


def z_h3(rho: np.ndarray | float) -> np.ndarray:
    """Z(ρ) = (2ρ − sinh 2ρ)/ρ³, non-positive."""
    return _z(ModelKind.WM_H3, rho)


def nonlinearity(model: ModelSpec, r: np.ndarray | float, u: np.ndarray | float) -> np.ndarray:
    """Evaluate F(r, u) pointwise.

    Wave map nonlinearities switch to their Taylor series for |2ru| < 1/2, which keeps
    r = 0 finite.

    Raises:
        BlowupError: For ``wm_h3`` when |r·u| is too large to evaluate
    """
    r, u = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(u, dtype=float))

    match model.kind:
        case ModelKind.FREE:
            force = np.zeros_like(u)
        case ModelKind.CUBIC_FOCUSING:
            force = u**3
        case ModelKind.CUBIC_DEFOCUSING:
            force = -(u**3)
        case ModelKind.POWER:
            force = model.sign * np.abs(u) ** (model.p - 1.0) * u
        case ModelKind.WM_S3:
            force = _wave_map_force(model.kind, r, u)
        case ModelKind.WM_H3:
            _check_hyperbolic(r, u)
            force = _wave_map_force(model.kind, r, u)

    if model.cutoff is not None:
        force = force * cutoff(model.cutoff, r)

    return force


def potential(model: ModelSpec, r: np.ndarray | float, u: np.ndarray | float) -> np.ndarray:
    """Potential energy density V(r, u) with ∂V/∂u = −F(r, u)."""
    r, u = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(u, dtype=float))

    match model.kind:
        case ModelKind.FREE:
            value = np.zeros_like(u)
        case ModelKind.CUBIC_FOCUSING:
            value = -0.25 * u**4
        case ModelKind.CUBIC_DEFOCUSING:
            value = 0.25 * u**4
        case ModelKind.POWER:
            value = -model.sign * np.abs(u) ** (model.p + 1.0) / (model.p + 1.0)
        case ModelKind.WM_S3 | ModelKind.WM_H3:
            if model.kind == ModelKind.WM_H3:
                _check_hyperbolic(r, u)
            value = _wave_map_potential(model.kind, r, u)

    if model.cutoff is not None:
        value = value * cutoff(model.cutoff, r)

    return value


def _wave_map_potential(kind: ModelKind, r: np.ndarray, u: np.ndarray) -> np.ndarray:
    z = r * u
    out = np.empty_like(z)
    small = np.abs(2.0 * z) < SERIES_CUTOFF

    series = _S3_POTENTIAL if kind == ModelKind.WM_S3 else _H3_POTENTIAL
    out[small] = u[small] ** 4 * _series(series, z[small])

    zl = z[~small]
    rl = r[~small]
    trig = np.sin(zl) if kind == ModelKind.WM_S3 else np.sinh(zl)
    out[~small] = (trig**2 - zl**2) / rl**4

    return out


def energy_density(model: ModelSpec, state: State, *, strict: bool = True) -> RadialField:
    """Energy density ½u_t² + ½u_r² + V(r, u), to be integrated against r⁴ dr."""
    if strict:
        sobolev_norm(state.u, 1.0)

    ur = spectral_gradient(state.u)
    r = state.grid.nodes
    values = (
        0.5 * state.ut.values**2
        + 0.5 * ur.values**2
        + potential(model, r, state.u.values)
    )

    return RadialField(state.grid, values)


def energy(model: ModelSpec, state: State, *, form: str = "u", strict: bool = True) -> float:
    """Conserved energy of ``state`` under ``model``, up to the angular constant.

    Args:
        form: ``"u"`` integrates the density against r⁴ dr. ``"psi"`` is available for
            the wave maps and uses ψ = r·u with the weight r²,
            ½∫(ψ_t² + ψ_r² + 2G(ψ)/r²) r² dr with G = sin²ψ or sinh²ψ. Both forms agree
            after integration by parts.

    Raises:
        ResolutionError: When ``strict`` and u isn't resolved in Ḣ¹
    """
    match form:
        case "u":
            density = energy_density(model, state, strict=strict)
            return density.integrate()
        case "psi":
            if not model.is_wave_map:
                raise ModelError("the psi form is only defined for wave maps")
            return _psi_energy(model, state, strict=strict)
        case _:
            raise ValueError(f"unknown energy form {form!r}")


def _psi_energy(model: ModelSpec, state: State, *, strict: bool) -> float:
    if strict:
        sobolev_norm(state.u, 1.0)

    grid = state.grid
    r = grid.nodes
    psi = r * state.u.values
    psi_t = r * state.ut.values
    psi_r = state.u.values + r * spectral_gradient(state.u).values

    if model.kind == ModelKind.WM_S3:
        G = np.sin(psi) ** 2
    else:
        _check_hyperbolic(r, state.u.values)
        G = np.sinh(psi) ** 2

    density = psi_t**2 + psi_r**2 + 2.0 * G / r**2

    return float(0.5 * np.sum(density * grid.weights / r**2))


def exact_ode_blowup(T: float, t: float) -> tuple[float, float]:
    """Spatially constant blow-up solution √2/(T − t) of u_tt = u³.

    Returns the pair (φ, φ_t) so it can seed a state directly; φ alone is the first entry.
    """
    if t >= T:
        raise ModelError("t must be before the blow-up time T")

    gap = T - t

    return math.sqrt(2.0) / gap, math.sqrt(2.0) / gap**2


def turok_spergel(t: float, r: np.ndarray | float) -> tuple[np.ndarray, np.ndarray]:
    """Explicit self-similar wave map ψ = 2 arctan(r/t) and its velocity −2r/(t² + r²)."""
    if t <= 0:
        raise ModelError("t must be positive")

    r = np.asarray(r, dtype=float)

    return 2.0 * np.arctan(r / t), -2.0 * r / (t**2 + r**2)


def turok_spergel_state(t: float, grid: RadialGrid) -> State:
    """The explicit wave map at time ``t`` as a state in u = ψ/r.

    At r = 0 the limits u = 2/t and u_t = −2/t² apply.
    """
    psi, psi_t = turok_spergel(t, grid.nodes)
    r = grid.nodes

    return State(t, RadialField(grid, psi / r), RadialField(grid, psi_t / r))


def scale(state: State, lam: float) -> State:
    """Critical rescaling u ↦ λ⁻¹u(·/λ), u_t ↦ λ⁻²u_t(·/λ), which preserves Ḣ^{3/2} × Ḣ^{1/2}.

    The rescaled fields are resampled through the Legendre interpolant, so the support
    of ``state`` scaled by λ must stay inside the grid.
    """
    if not lam > 0:
        raise ModelError("lam must be positive")

    grid = state.grid
    r = grid.nodes / lam
    u = np.where(r <= grid.r_max, state.u.at(np.minimum(r, grid.r_max)), 0.0)
    ut = np.where(r <= grid.r_max, state.ut.at(np.minimum(r, grid.r_max)), 0.0)

    return State(state.t * lam, RadialField(grid, u / lam), RadialField(grid, ut / lam**2))


def residual(model: ModelSpec, state: State, utt: RadialField) -> RadialField:
    """Pointwise residual u_tt − Δu − F(r, u) with the Laplacian taken spectrally."""
    laplacian = -fractional_derivative(state.u, 2.0)
    force = nonlinearity(model, state.grid.nodes, state.u.values)

    return RadialField(state.grid, utt.values - laplacian.values - force)
