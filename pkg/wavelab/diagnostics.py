"""
Quantitative diagnostics for trajectories: critical norms, Strichartz accumulation,
compactness scales, frequency envelopes, localized kernels and exterior profiles.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from . import telemetry
from ._errors import WavelabError
from .evolve import Trajectory, critical_norm
from .models import ModelSpec, energy
from .spectral import (
    OMEGA4,
    FOURIER_SCALE,
    RadialField,
    State,
    band_l2,
    band_range,
    bessel_kernel,
    forward_transform,
    fractional_derivative,
    lebesgue_norm,
    lp_multiplier,
)

logger = logging.getLogger(__name__)

KERNEL_CONSTANT = 1.0 / (16.0 * math.pi**3)
DEFAULT_SIGMA = 1.25
DEFAULT_ETA = 0.01


class DiagnosticError(WavelabError, ValueError):
    """Raised when a diagnostic is undefined for its input.

    This covers:
    - Strichartz windows too coarsely sampled by the trajectory
    - Compactness scales of the zero state
    - Pair lists violating r ≤ r' ≤ 2r
    """

    pass


class QuadratureError(WavelabError):
    """Raised when an oscillatory kernel integral fails to converge."""

    pass


__all__ = [
    "DiagnosticError",
    "Envelope",
    "Profiles",
    "QuadratureError",
    "TailScales",
    "compactness_tails",
    "critical_norm",
    "critical_norm_series",
    "difference_report",
    "energy_series",
    "frequency_envelope",
    "frequency_scale",
    "growth_report",
    "kernel_Kk",
    "kernel_bound",
    "kernel_sweep",
    "local_strichartz",
    "schur_constant",
    "strichartz_accumulate",
    "strichartz_density",
    "v0v1_profiles",
    "weighted_envelope_norm",
]


def critical_norm_series(trajectory: Trajectory) -> np.ndarray:
    return np.array([critical_norm(snap) for snap in trajectory])


def energy_series(model: ModelSpec, trajectory: Trajectory) -> np.ndarray:
    return np.array([energy(model, snap, strict=False) for snap in trajectory])


def strichartz_density(state: State) -> float:
    """‖u(t)‖²_{L¹⁰}, the time integrand of the S norm."""
    return lebesgue_norm(state.u, 10.0) ** 2


def strichartz_accumulate(trajectory: Trajectory, t0: float, t1: float) -> float:
    """S norm (∫_{t0}^{t1} ‖u(t)‖²_{L¹⁰} dt)^{1/2} by the trapezoid rule on the snapshots.

    Window endpoints between snapshots are handled by linear interpolation of the
    density.

    Raises:
        DiagnosticError: When snapshots are spaced wider than a fiftieth of the window
    """
    if t1 < t0:
        raise DiagnosticError("t1 must not precede t0")

    if t1 == t0:
        return 0.0

    times = trajectory.times

    if t0 < times[0] - 1e-12 or t1 > times[-1] + 1e-12:
        raise DiagnosticError(f"window [{t0}, {t1}] leaves the trajectory")

    inside = (times > t0) & (times < t1)
    spacing = np.diff(np.concatenate([[t0], times[inside], [t1]]))

    if spacing.max() > (t1 - t0) / 50.0 * (1.0 + 1e-9):
        raise DiagnosticError("trajectory sampled too coarsely for this window")

    density = np.array([strichartz_density(snap) for snap in trajectory])
    grid = np.concatenate([[t0], times[inside], [t1]])
    values = np.interp(grid, times, density)

    return math.sqrt(float(np.trapezoid(values, grid)))


def local_strichartz(trajectory: Trajectory, t0: float, delta: float) -> float:
    """S norm over [t0 − δ/N(t0), t0 + δ/N(t0)] clipped to the trajectory."""
    index = int(np.argmin(np.abs(trajectory.times - t0)))
    snapshot = trajectory.snapshots[index]

    if not (np.any(snapshot.u.values) or np.any(snapshot.ut.values)):
        return 0.0

    scale = frequency_scale(snapshot)
    half = delta / scale
    times = trajectory.times

    return strichartz_accumulate(trajectory, max(t0 - half, times[0]), min(t0 + half, times[-1]))


def _critical_spectra(state: State) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    F = forward_transform(state.u)
    G = forward_transform(state.ut)
    rho = F.rho
    weights = F.grid.freq_weights
    scale = OMEGA4 / FOURIER_SCALE**2

    return rho, scale * rho**3 * F.values**2 * weights, scale * rho * G.values**2 * weights


def frequency_scale(state: State) -> float:
    """Median frequency of the Ḣ^{3/2} × Ḣ^{1/2} energy distribution."""
    rho, u_mass, ut_mass = _critical_spectra(state)
    mass = u_mass + ut_mass
    total = mass.sum()

    if total == 0.0:
        raise DiagnosticError("frequency scale is undefined for the zero state")

    cumulative = np.cumsum(mass) / total

    return float(np.interp(0.5, cumulative, rho))


@dataclass(frozen=True, slots=True)
class TailScales:
    """Compactness scales at one time.

    ``N`` is the frequency scale, ``C`` the smallest and ``c`` the largest constant for
    which all four tail bounds stay below ``eta`` times the critical norm squared.
    """

    N: float
    C: float
    c: float
    eta: float


def _physical_mass(field: RadialField) -> np.ndarray:
    return OMEGA4 * field.values**2 * field.grid.weights


def compactness_tails(
    state: State, eta: float = DEFAULT_ETA, *, search: int = 40
) -> TailScales:
    """Scales localizing the critical norm around the frequency scale N(t).

    The four bounds are, each at most η·‖(u, u_t)‖²:

    - mass of |∇|^{3/2}u at |x| ≥ C/N plus mass of |ξ|³|û|² at |ξ| ≥ CN
    - mass of |∇|^{3/2}u at |x| ≤ c/N plus mass of |ξ|³|û|² at |ξ| ≤ cN
    - the same two bounds for |∇|^{1/2}u_t and |ξ||û_t|²

    C is searched over 2, 4, 8, ... and c over 1, 1/2, 1/4, ..., so c < C holds even
    when the budget admits every scale.

    Raises:
        DiagnosticError: For the zero state
    """
    rho, u_spec, ut_spec = _critical_spectra(state)
    total = float(u_spec.sum() + ut_spec.sum())

    if total == 0.0:
        raise DiagnosticError("compactness scales are undefined for the zero state")

    N = frequency_scale(state)
    r = state.grid.nodes
    u_phys = _physical_mass(fractional_derivative(state.u, 1.5))
    ut_phys = _physical_mass(fractional_derivative(state.ut, 0.5))
    budget = eta * total

    def outer(C: float) -> bool:
        u_tail = u_phys[r >= C / N].sum() + u_spec[rho >= C * N].sum()
        ut_tail = ut_phys[r >= C / N].sum() + ut_spec[rho >= C * N].sum()
        return u_tail <= budget and ut_tail <= budget

    def inner(c: float) -> bool:
        u_tail = u_phys[r <= c / N].sum() + u_spec[rho <= c * N].sum()
        ut_tail = ut_phys[r <= c / N].sum() + ut_spec[rho <= c * N].sum()
        return u_tail <= budget and ut_tail <= budget

    C = next((2.0**j for j in range(1, search) if outer(2.0**j)), math.inf)
    c = next((2.0**-j for j in range(search) if inner(2.0**-j)), 0.0)

    return TailScales(N, C, c, eta)


def schur_constant(sigma: float) -> float:
    """Σ_j 2^{−σ|j|}, the ℓ² bound of envelope smoothing."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")

    q = 2.0**-sigma

    return (1.0 + q) / (1.0 - q)


@dataclass(frozen=True, slots=True)
class Envelope:
    """Band amplitudes ``a`` and their smoothed envelope ``alpha`` over ``bands``."""

    bands: np.ndarray
    a: np.ndarray
    alpha: np.ndarray
    sigma: float


def frequency_envelope(
    state: State, sigma: float = DEFAULT_SIGMA, bands: range | None = None
) -> Envelope:
    """Littlewood–Paley amplitudes a_k = 2^{3k/2}‖P_k u‖ + 2^{k/2}‖P_k u_t‖ and
    α_k = Σ_j 2^{−σ|j−k|} a_j.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")

    bands = band_range(state.grid) if bands is None else bands
    ks = np.array(list(bands))
    F = forward_transform(state.u)
    G = forward_transform(state.ut)

    a = np.array(
        [2.0 ** (1.5 * k) * band_l2(F, k) + 2.0 ** (0.5 * k) * band_l2(G, k) for k in ks]
    )
    kernel = 2.0 ** (-sigma * np.abs(np.subtract.outer(ks, ks)))

    return Envelope(ks, a, kernel @ a, sigma)


def weighted_envelope_norm(envelope: Envelope, weight: float = 1.0) -> float:
    """‖{2^{weight·k} α_k}‖_{ℓ²}."""
    return float(np.linalg.norm(2.0 ** (weight * envelope.bands) * envelope.alpha))


def _angular(z: np.ndarray | float) -> np.ndarray:
    # ∫_0^π e^{iz cos θ} sin³θ dθ = 4 (sin z − z cos z)/z³
    return 4.0 * bessel_kernel(z) / math.sqrt(2.0 / math.pi)


def kernel_Kk(
    k: int, lag: float, distance: float, *, amplitude: float = 1.0, tol: float = 1e-10
) -> complex:
    """Kernel of P_k e^{i·lag·|∇|}|∇| between points at ``distance`` apart in ℝ⁵.

    The integral runs over the band support 2^{k−1} < ρ < 2^{k+1}, so
    K_k(lag, d) = 2^{6k} K_0(2^k lag, 2^k d) holds exactly.

    Only the value is returned. Its envelope comes from :func:`kernel_bound`, with the
    constant fitted by :func:`kernel_sweep`.

    Raises:
        QuadratureError: When the oscillatory quadrature reports non-convergence
    """
    low, high = 2.0 ** (k - 1), 2.0 ** (k + 1)

    def integrand(rho: float) -> float:
        return float(_angular(distance * rho)) * float(lp_multiplier(np.array([rho]), k)[0]) * rho**5

    options = {"epsabs": 0.0, "epsrel": tol, "limit": 400}

    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)

        try:
            if lag == 0.0:
                real, _ = quad(integrand, low, high, **options)
                imag = 0.0
            else:
                real, _ = quad(integrand, low, high, weight="cos", wvar=lag, **options)
                imag, _ = quad(integrand, low, high, weight="sin", wvar=lag, **options)
        except IntegrationWarning as error:
            raise QuadratureError(f"kernel quadrature failed for k={k}, lag={lag}") from error

    return amplitude * KERNEL_CONSTANT * complex(real, imag)


def kernel_bound(
    k: int, lag: np.ndarray | float, distance: float, L: float = 2.0, constant: float = 1.0
) -> np.ndarray:
    """Envelope C·2^{6k}⟨2^k|lag − d|⟩^{−L} of the kernel magnitude."""
    bracket = np.sqrt(1.0 + (2.0**k * np.abs(np.asarray(lag, dtype=float) - distance)) ** 2)

    return constant * 2.0 ** (6 * k) * bracket**-L


def kernel_sweep(k: int, lags: np.ndarray, distance: float = 0.0, *, L: float = 2.0) -> dict:
    """Evaluate K_k over ``lags`` and fit the constant of |K_k| ≤ C 2^{6k}⟨2^k|lag − d|⟩^{−L}.

    Returns a dictionary with the values, the fitted constant, the maximum bound
    violation (zero by construction of the fit) and the log-log decay slope.
    """
    with telemetry.span("wavelab.diagnostics.kernel", {"k": k, "L": L}) as collector:
        lags = np.asarray(lags, dtype=float)
        values = np.array([kernel_Kk(k, lag, distance) for lag in lags])
        envelope = kernel_bound(k, lags, distance, L)
        constant = float((np.abs(values) / envelope).max())
        violation = float(np.max(np.abs(values) - constant * envelope))
        bracket = np.sqrt(1.0 + (2.0**k * np.abs(lags - distance)) ** 2)

        positive = np.abs(values) > 0
        slope = float(
            np.polyfit(np.log(bracket[positive]), np.log(np.abs(values[positive])), 1)[0]
        )

        collector.add({"constant": constant, "slope": slope})

    return {
        "k": k,
        "L": L,
        "lags": lags,
        "values": values,
        "constant": constant,
        "violation": max(violation, 0.0),
        "slope": slope,
    }


@dataclass(frozen=True, slots=True)
class Profiles:
    """Exterior profiles v₀ = r³u and v₁ = r∫_r^∞ u_t(ρ)ρ dρ with their fitted limits.

    ``converged`` is false when a fit residual exceeds the tolerance, which signals that
    the profile has no limit as r → ∞ on this grid. The tolerance is relative to the
    larger limit, and absolute once both limits are below one.
    """

    r: np.ndarray
    v0: np.ndarray
    v1: np.ndarray
    ell0: float
    ell1: float
    residual0: float
    residual1: float
    converged: bool


def _tail_integral(field: RadialField):
    """Callable r ↦ ∫_r^{r_max} f(ρ) ρ dρ through the Legendre antiderivative."""
    weighted = RadialField(field.grid, field.values * field.grid.nodes)
    antiderivative = weighted.interpolant.integ()
    end = antiderivative(field.grid.r_max)

    return lambda r: end - antiderivative(np.asarray(r, dtype=float))


def _v_profiles(state: State):
    tail = _tail_integral(state.ut)

    def v0(r):
        r = np.asarray(r, dtype=float)
        return r**3 * state.u.at(r)

    def v1(r):
        r = np.asarray(r, dtype=float)
        return r * tail(r)

    return v0, v1


def v0v1_profiles(state: State, *, tol: float = 1e-6) -> Profiles:
    """Compute v₀, v₁ on the grid and fit ℓ + C r^{−4} (v₀) and ℓ + C r^{−2} (v₁)
    over the outer third of the grid, leaving out the last twentieth.
    """
    _, v1_fn = _v_profiles(state)
    r = state.grid.nodes
    v0 = r**3 * state.u.values
    v1 = v1_fn(r)

    r_max = state.grid.r_max
    window = (r >= 2.0 * r_max / 3.0) & (r <= 0.95 * r_max)

    ell0, residual0 = _fit_limit(r[window], v0[window], 4)
    ell1, residual1 = _fit_limit(r[window], v1[window], 2)
    # absolute floor: decaying data have both limits at zero
    scale = max(abs(ell0), abs(ell1), 1.0)

    return Profiles(
        r=r,
        v0=v0,
        v1=v1,
        ell0=ell0,
        ell1=ell1,
        residual0=residual0,
        residual1=residual1,
        converged=max(residual0, residual1) <= tol * scale,
    )


def _fit_limit(r: np.ndarray, values: np.ndarray, power: int) -> tuple[float, float]:
    design = np.column_stack([np.ones_like(r), r**-power])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    residual = float(np.max(np.abs(design @ coef - values)))

    return float(coef[0]), residual


def difference_report(state: State, pairs: list[tuple[float, float]]) -> list[dict]:
    """Compare |v(r) − v(r')| with the cubic right hand sides for pairs r ≤ r' ≤ 2r.

    Each row holds both sides for v₀ and v₁ and their ratio; the ratio is ``nan`` and
    ``degenerate`` is set when a right hand side vanishes.
    """
    v0, v1 = _v_profiles(state)
    rows = []

    for r, rp in pairs:
        if not 0 < r <= rp <= 2.0 * r:
            raise DiagnosticError(f"pair ({r}, {rp}) violates r <= r' <= 2r")

        a0, a1 = float(v0(r)), float(v1(r))
        lhs0 = abs(a0 - float(v0(rp)))
        lhs1 = abs(a1 - float(v1(rp)))
        rhs0 = r**-4 * abs(a0) ** 3 + r**-1 * abs(a1) ** 3
        rhs1 = r**-5 * abs(a0) ** 3 + r**-2 * abs(a1) ** 3

        rows.append(
            {
                "r": r,
                "r_prime": rp,
                "lhs0": lhs0,
                "rhs0": rhs0,
                "ratio0": lhs0 / rhs0 if rhs0 > 0 else math.nan,
                "lhs1": lhs1,
                "rhs1": rhs1,
                "ratio1": lhs1 / rhs1 if rhs1 > 0 else math.nan,
                "degenerate": rhs0 == 0 or rhs1 == 0,
            }
        )

    return rows


def growth_report(state: State, *, exponent: float = 1.0 / 6.0) -> float:
    """sup over the outer half of the grid of r^{−exponent}(|v₀| + |v₁|)."""
    v0, v1 = _v_profiles(state)
    r = state.grid.nodes
    outer = r >= 0.5 * state.grid.r_max

    return float(np.max(r[outer] ** -exponent * (np.abs(v0(r[outer])) + np.abs(v1(r[outer])))))

