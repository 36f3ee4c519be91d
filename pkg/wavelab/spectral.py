"""
Radial Fourier analysis on ℝ⁵.

A radial function f(|x|) on ℝ⁵ is sampled at Gauss–Legendre nodes on (0, r_max]. Its
Fourier transform is again radial and is computed by a dense quadrature matrix built from
the kernel

    k(z) = sqrt(2/π) · (sin z − z cos z) / z³

so that ``f̂(ρ) = (2π)^{5/2} Σ_j k(ρ r_j) f(r_j) w_j`` with weights that already include
the r⁴ radial measure. Every Fourier multiplier in the package (fractional derivatives,
Littlewood–Paley bands, free propagation) is a diagonal scaling between the two matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cache, cached_property
from pathlib import Path
from typing import Any, Callable

import numpy as np
import orjson
from numpy.polynomial import Legendre, legendre
from scipy.special import roots_legendre, spherical_jn

from . import _persist
from ._errors import WavelabError

OMEGA4 = 8.0 * math.pi**2 / 3.0
FOURIER_SCALE = (2.0 * math.pi) ** 2.5
SERIES_CUTOFF = 0.1
RESOLUTION_TAIL = 1e-6
ILL_POSED_TAIL = 1e-6

_SQRT_2_PI = math.sqrt(2.0 / math.pi)

# k(z)/sqrt(2/π) = Σ_{n≥1} (−1)^{n+1} 2n z^{2n−2} / (2n+1)!
_KERNEL_SERIES = np.array(
    [(-1) ** (n + 1) * 2 * n / math.factorial(2 * n + 1) for n in range(1, 9)]
)


class GridMismatchError(WavelabError, ValueError):
    """Raised when fields on different grids are combined.

    This covers:
    - Arithmetic between fields sampled on different grids
    - Transforms requested on a grid other than the field's own
    - Values whose length doesn't match the grid size
    """

    pass


class NonFiniteError(WavelabError, ValueError):
    """Raised when an input field contains NaN or infinite samples."""

    pass


class ResolutionError(WavelabError):
    """Raised when a norm can't be trusted on the current grid.

    The top tenth of the frequency range carries more than a millionth of the weighted
    spectral mass, so the field isn't resolved.
    """

    pass


class IllPosedError(WavelabError):
    """Raised for negative order derivatives of fields with too much low frequency mass.

    Negative powers of |∇| are only meaningful when the field has little content at
    wavelengths longer than the grid itself.
    """

    pass


class BandError(WavelabError, ValueError):
    """Raised when a Littlewood–Paley band isn't represented on the frequency grid."""

    pass


def bessel_kernel(z: np.ndarray | float) -> np.ndarray:
    """Evaluate the ℝ⁵ radial Fourier kernel k(z).

    Small arguments use the Taylor series to avoid cancellation in ``sin z − z cos z``.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_CUTOFF

    out[small] = np.polynomial.polynomial.polyval(z[small] ** 2, _KERNEL_SERIES)

    large = z[~small]
    out[~small] = spherical_jn(1, large) / large

    return _SQRT_2_PI * out


def bessel_kernel_prime(z: np.ndarray | float) -> np.ndarray:
    """Derivative k'(z) of :func:`bessel_kernel`."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_CUTOFF

    powers = np.arange(len(_KERNEL_SERIES))
    derivative = (_KERNEL_SERIES * 2 * powers)[1:]
    zs = z[small]
    out[small] = zs * np.polynomial.polynomial.polyval(zs**2, derivative)

    large = z[~small]
    out[~small] = (np.sin(large) - 3.0 * spherical_jn(1, large)) / large**2

    return _SQRT_2_PI * out


@cache
def _gauss(count: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_legendre(count)
    return nodes, weights


@dataclass(frozen=True)
class RadialGrid:
    """Gauss–Legendre sampling of (0, r_max] with a matching frequency grid.

    The frequency nodes span (0, ρ_max] with ``ρ_max = bandwidth · n / r_max``. Transform
    matrices are built lazily and cached on the instance.

    Example:
        >>> grid = RadialGrid(256, 16.0)
        >>> grid.rho_max
        16.0
    """

    n: int
    r_max: float
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("n must be at least 8")

        if not self.r_max > 0:
            raise ValueError("r_max must be positive")

        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    @property
    def rho_max(self) -> float:
        return self.bandwidth * self.n / self.r_max

    @property
    def spacing(self) -> float:
        return self.r_max / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        unit, _ = _gauss(self.n)
        return 0.5 * self.r_max * (unit + 1.0)

    @cached_property
    def weights(self) -> np.ndarray:
        _, unit = _gauss(self.n)
        return 0.5 * self.r_max * unit * self.nodes**4

    @cached_property
    def freq_nodes(self) -> np.ndarray:
        unit, _ = _gauss(self.n)
        return 0.5 * self.rho_max * (unit + 1.0)

    @cached_property
    def freq_weights(self) -> np.ndarray:
        _, unit = _gauss(self.n)
        return 0.5 * self.rho_max * unit * self.freq_nodes**4

    @property
    def rho_min(self) -> float:
        return float(self.freq_nodes[0])

    @cached_property
    def forward_matrix(self) -> np.ndarray:
        kernel = bessel_kernel(np.multiply.outer(self.freq_nodes, self.nodes))
        return FOURIER_SCALE * kernel * self.weights[None, :]

    @cached_property
    def inverse_matrix(self) -> np.ndarray:
        kernel = bessel_kernel(np.multiply.outer(self.nodes, self.freq_nodes))
        return kernel * self.freq_weights[None, :] / FOURIER_SCALE

    @cached_property
    def gradient_matrix(self) -> np.ndarray:
        kernel = bessel_kernel_prime(np.multiply.outer(self.nodes, self.freq_nodes))
        return kernel * (self.freq_nodes * self.freq_weights)[None, :] / FOURIER_SCALE

    @cached_property
    def legendre_analysis(self) -> np.ndarray:
        """Matrix taking node values to Legendre coefficients of the interpolant."""
        unit, weights = _gauss(self.n)
        vander = legendre.legvander(unit, self.n - 1)
        scale = (2.0 * np.arange(self.n) + 1.0) / 2.0

        return scale[:, None] * vander.T * weights[None, :]

    def warm(self) -> RadialGrid:
        """Build every cached transform matrix now, e.g. before threads share the grid."""
        for name in ("forward_matrix", "inverse_matrix", "gradient_matrix", "legendre_analysis"):
            getattr(self, name)

        return self

    def to_dict(self) -> dict[str, float]:
        return {"n": self.n, "r_max": self.r_max, "bandwidth": self.bandwidth}

    @classmethod
    def from_dict(cls, data: dict) -> RadialGrid:
        return cls(int(data["n"]), float(data["r_max"]), float(data.get("bandwidth", 1.0)))


def _same_grid(a: RadialGrid, b: RadialGrid) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class RadialField:
    """Samples of a radial function at the nodes of a :class:`RadialGrid`.

    Arithmetic with scalars and fields on the same grid is supported. Pointwise evaluation
    away from the nodes goes through the Legendre interpolant of the samples, which is
    spectrally accurate for smooth data.
    """

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)

        if values.shape != (self.grid.n,):
            raise GridMismatchError(
                f"expected {self.grid.n} samples, got shape {values.shape}"
            )

        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: RadialGrid, fn: Callable[[np.ndarray], np.ndarray]) -> RadialField:
        return cls(grid, np.broadcast_to(fn(grid.nodes), (grid.n,)).copy())

    @classmethod
    def zeros(cls, grid: RadialGrid) -> RadialField:
        return cls(grid, np.zeros(grid.n))

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def _other(self, other: RadialField | float) -> np.ndarray | float:
        if isinstance(other, RadialField):
            _same_grid(self.grid, other.grid)
            return other.values

        return other

    def __add__(self, other: RadialField | float) -> RadialField:
        return RadialField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other: RadialField | float) -> RadialField:
        return RadialField(self.grid, self.values - self._other(other))

    def __mul__(self, other: RadialField | float) -> RadialField:
        return RadialField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other: float) -> RadialField:
        return RadialField(self.grid, self.values / other)

    def __neg__(self) -> RadialField:
        return RadialField(self.grid, -self.values)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def check_finite(self) -> RadialField:
        if not self.is_finite():
            raise NonFiniteError("field contains non-finite samples")

        return self

    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))

    @cached_property
    def interpolant(self) -> Legendre:
        coef = self.grid.legendre_analysis @ self.values
        return Legendre(coef, domain=[0.0, self.grid.r_max])

    def at(self, r: np.ndarray | float) -> np.ndarray:
        return self.interpolant(np.asarray(r, dtype=float))

    def derivative_at(self, r: np.ndarray | float) -> np.ndarray:
        return self.interpolant.deriv()(np.asarray(r, dtype=float))

    def at_origin(self) -> float:
        """Value at r = 0 from an even cubic fit in r² through the four innermost nodes."""
        r2 = self.grid.nodes[:4] ** 2
        coef = np.polynomial.polynomial.polyfit(r2, self.values[:4], 3)

        return float(coef[0])

    def integrate(self, a: float = 0.0, b: float | None = None, *, power: int = 4) -> float:
        """Integrate ``f(r) r^power`` over ``[a, b]`` with a fresh Gauss–Legendre rule."""
        b = self.grid.r_max if b is None else b

        if b <= a:
            return 0.0

        unit, weights = _gauss(self.grid.n)
        nodes = a + 0.5 * (b - a) * (unit + 1.0)

        return float(0.5 * (b - a) * np.sum(weights * self.at(nodes) * nodes**power))

    def support_radius(self, rel: float = 1e-12) -> float:
        """Largest node where ``|f|`` exceeds ``rel`` times its maximum, 0 for a zero field."""
        magnitude = np.abs(self.values)
        peak = magnitude.max()

        if peak == 0.0:
            return 0.0

        return float(self.grid.nodes[np.nonzero(magnitude > rel * peak)[0][-1]])

    def to_csv(self, path: str | Path) -> Path:
        return _persist.write_csv(
            path,
            ["r", "value"],
            zip(self.grid.nodes, self.values),
            meta={"grid": self.grid.to_dict()},
        )

    @classmethod
    def from_csv(cls, path: str | Path) -> RadialField:
        meta, _header, data = _persist.read_csv(path)
        grid = RadialGrid.from_dict(meta["grid"])

        return cls(grid, data[:, 1])

    def to_json(self) -> bytes:
        return _persist.dumps({"grid": self.grid.to_dict(), "values": self.values})

    @classmethod
    def from_json(cls, data: bytes | str) -> RadialField:
        document = orjson.loads(data)
        return cls(RadialGrid.from_dict(document["grid"]), np.asarray(document["values"]))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Samples of a radial Fourier transform at the frequency nodes.

    Values are real for real data and complex for half-wave profiles.
    """

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)

        if values.shape != (self.grid.n,):
            raise GridMismatchError(
                f"expected {self.grid.n} samples, got shape {values.shape}"
            )

        object.__setattr__(self, "values", values)

    @property
    def rho(self) -> np.ndarray:
        return self.grid.freq_nodes

    def scale(self, multiplier: np.ndarray | complex) -> SpectralField:
        return SpectralField(self.grid, self.values * multiplier)

    def __add__(self, other: SpectralField) -> SpectralField:
        _same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.values + other.values)

    def __sub__(self, other: SpectralField) -> SpectralField:
        _same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.values - other.values)


def forward_transform(f: RadialField, grid: RadialGrid | None = None) -> SpectralField:
    if grid is not None:
        _same_grid(f.grid, grid)

    f.check_finite()

    return SpectralField(f.grid, f.grid.forward_matrix @ f.values)


def inverse_transform(F: SpectralField) -> RadialField:
    if np.iscomplexobj(F.values):
        raise TypeError("inverse_transform expects a real spectrum; split complex data first")

    if not np.all(np.isfinite(F.values)):
        raise NonFiniteError("spectrum contains non-finite samples")

    return RadialField(F.grid, F.grid.inverse_matrix @ F.values)


def spectral_gradient(f: RadialField) -> RadialField:
    """Radial derivative ∂_r f computed through the transform."""
    F = forward_transform(f)
    return RadialField(f.grid, f.grid.gradient_matrix @ F.values)


def _low_frequency_fraction(F: SpectralField, cut: float) -> float:
    mass = F.values**2 * F.grid.freq_weights
    total = mass.sum()

    if total == 0.0:
        return 0.0

    return float(mass[F.rho < cut].sum() / total)


def fractional_derivative(f: RadialField, s: float, *, low_cut: float | None = None) -> RadialField:
    """Apply the Fourier multiplier |ξ|^s.

    Args:
        f: Field to differentiate
        s: Order in [−2, 4]; 0 is the identity and 2 is −Δ
        low_cut: Frequency below which mass counts as unresolved for s < 0, defaults to
            the longest wavelength that fits on the grid, 2π / r_max

    Raises:
        IllPosedError: For s < 0 when more than a millionth of the spectral mass sits
            below ``low_cut``
    """
    if not -2.0 <= s <= 4.0:
        raise ValueError("s must lie in [-2, 4]")

    f.check_finite()

    if s == 0:
        return RadialField(f.grid, f.values.copy())

    F = forward_transform(f)

    if s < 0:
        cut = 2.0 * math.pi / f.grid.r_max if low_cut is None else low_cut

        if _low_frequency_fraction(F, cut) > ILL_POSED_TAIL:
            raise IllPosedError(f"too much spectral mass below ρ = {cut:.3g} for s = {s}")

    return inverse_transform(F.scale(F.rho**s))


def _spectral_mass(F: SpectralField, s: float) -> np.ndarray:
    return F.rho ** (2.0 * s) * np.abs(F.values) ** 2 * F.grid.freq_weights


def sobolev_norm(f: RadialField | SpectralField, s: float, *, strict: bool = True) -> float:
    """Homogeneous Sobolev norm ‖|∇|^s f‖_{L²(ℝ⁵)}.

    Raises:
        ResolutionError: When ``strict`` and the top tenth of frequencies holds more
            than a millionth of the integral
    """
    F = f if isinstance(f, SpectralField) else forward_transform(f)
    mass = _spectral_mass(F, s)
    total = float(mass.sum())

    if strict and total > 0.0:
        tail = float(mass[F.rho > 0.9 * F.grid.rho_max].sum())

        if tail > RESOLUTION_TAIL * total:
            raise ResolutionError(
                f"unresolved field: {tail / total:.2e} of the Ḣ^{s} mass is in the top band"
            )

    return math.sqrt(OMEGA4 * total) / FOURIER_SCALE if total > 0 else 0.0


def inhomogeneous_norm(f: RadialField, s: float, *, strict: bool = True) -> float:
    """Inhomogeneous norm with ‖f‖²_{H^s} = ‖f‖²_{L²} + ‖f‖²_{Ḣ^s}."""
    return math.hypot(sobolev_norm(f, 0.0, strict=strict), sobolev_norm(f, s, strict=strict))


def lebesgue_norm(f: RadialField, p: float) -> float:
    """‖f‖_{L^p(ℝ⁵)} for p ≥ 1, including p = inf."""
    if p < 1:
        raise ValueError("p must be at least 1")

    f.check_finite()

    if math.isinf(p):
        return f.linf()

    total = OMEGA4 * float(np.sum(np.abs(f.values) ** p * f.grid.weights))

    return total ** (1.0 / p)


def radial_sobolev_bound(f: RadialField, gamma: float) -> float:
    """Ratio sup r^{5/2−γ}|f(r)| / ‖f‖_{Ḣ^γ} for γ in (1/2, 5/2).

    The radial Sobolev inequality keeps this bounded by a constant depending on γ only.
    """
    if not 0.5 < gamma < 2.5:
        raise ValueError("gamma must lie in (1/2, 5/2)")

    norm = sobolev_norm(f, gamma)

    if norm == 0.0:
        return 0.0

    return float(np.max(f.grid.nodes ** (2.5 - gamma) * np.abs(f.values)) / norm)


def strichartz_admissible(p: float, q: float, gamma: float, *, tol: float = 1e-12) -> bool:
    """Whether (p, q) is a wave-admissible pair at regularity γ in five dimensions."""
    if p < 2 or q < 2:
        return False

    wave = 1.0 / p + 2.0 / q <= 1.0 + tol
    scaling = abs(1.0 / p + 5.0 / q - (2.5 - gamma)) <= tol

    return wave and scaling


def lp_multiplier(rho: np.ndarray, k: int) -> np.ndarray:
    """Littlewood–Paley multiplier φ(ρ / 2^k).

    Built from the bump ``β(t) = exp(−1/(1 − t²))`` in the variable ``t = log₂ρ − k`` and
    normalised so that the multipliers over all k sum to one for every ρ > 0.
    """
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    positive = rho > 0

    log2 = np.log2(rho[positive])
    t = log2 - k
    frac = log2 - np.floor(log2)

    out[positive] = _bump(t) / (_bump(frac) + _bump(frac - 1.0))

    return out


def _bump(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))

    return out


@dataclass(frozen=True, slots=True)
class LPBand:
    """Littlewood–Paley band k, supported on 2^{k−1} < ρ < 2^{k+1}."""

    k: int

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return lp_multiplier(rho, self.k)

    def check(self, grid: RadialGrid) -> None:
        centre = 2.0**self.k

        if not grid.rho_min <= centre <= grid.rho_max:
            raise BandError(
                f"band {self.k} centred at {centre} is outside [{grid.rho_min:.3g}, {grid.rho_max:.3g}]"
            )


def band_range(grid: RadialGrid) -> range:
    """Bands whose centre lies on the frequency grid."""
    low = math.ceil(math.log2(grid.rho_min))
    high = math.floor(math.log2(grid.rho_max))

    return range(low, high + 1)


def project_band(f: RadialField, k: int) -> RadialField:
    band = LPBand(k)
    band.check(f.grid)

    F = forward_transform(f)

    return inverse_transform(F.scale(band(F.rho)))


def band_l2(F: SpectralField, k: int) -> float:
    """‖P_k f‖_{L²} computed directly from the spectrum."""
    weights = lp_multiplier(F.rho, k) ** 2 * np.abs(F.values) ** 2 * F.grid.freq_weights

    return math.sqrt(OMEGA4 * float(weights.sum())) / FOURIER_SCALE


@dataclass(frozen=True, slots=True)
class State:
    """Cauchy data (u, u_t) at time t on a shared grid.

    Example:
        >>> grid = RadialGrid(256, 16.0)
        >>> state = State.zeros(grid)
        >>> state.replace(t=1.0).t
        1.0
    """

    t: float
    u: RadialField
    ut: RadialField

    def __post_init__(self):
        _same_grid(self.u.grid, self.ut.grid)

    @classmethod
    def zeros(cls, grid: RadialGrid, t: float = 0.0) -> State:
        return cls(t, RadialField.zeros(grid), RadialField.zeros(grid))

    @property
    def grid(self) -> RadialGrid:
        return self.u.grid

    def psi(self) -> RadialField:
        """Corotational angle ψ = r·u for wave map models."""
        return self.u * self.grid.nodes

    def replace(self, **changes: Any) -> State:
        return replace(self, **changes)

    def scaled(self, amplitude: float) -> State:
        return State(self.t, self.u * amplitude, self.ut * amplitude)

    def is_finite(self) -> bool:
        return self.u.is_finite() and self.ut.is_finite()

    def support_radius(self, rel: float = 1e-12) -> float:
        return max(self.u.support_radius(rel), self.ut.support_radius(rel))

    def to_csv(self, path: str | Path) -> Path:
        return _persist.write_csv(
            path,
            ["r", "u", "ut"],
            zip(self.grid.nodes, self.u.values, self.ut.values),
            meta={"grid": self.grid.to_dict(), "t": self.t},
        )

    @classmethod
    def from_csv(cls, path: str | Path) -> State:
        meta, _header, data = _persist.read_csv(path)
        grid = RadialGrid.from_dict(meta["grid"])

        return cls(float(meta.get("t", 0.0)), RadialField(grid, data[:, 1]), RadialField(grid, data[:, 2]))

    def to_json(self) -> bytes:
        return _persist.dumps(
            {"grid": self.grid.to_dict(), "t": self.t, "u": self.u.values, "ut": self.ut.values}
        )

    @classmethod
    def from_json(cls, data: bytes | str) -> State:
        document = orjson.loads(data)
        grid = RadialGrid.from_dict(document["grid"])

        return cls(
            float(document.get("t", 0.0)),
            RadialField(grid, np.asarray(document["u"])),
            RadialField(grid, np.asarray(document["ut"])),
        )


def free_flow(
    u_hat: np.ndarray, ut_hat: np.ndarray, rho: np.ndarray, t: float
) -> tuple[np.ndarray, np.ndarray]:
    """Exact free wave flow of a transformed pair for time t."""
    cos = np.cos(t * rho)
    sin = np.sin(t * rho)

    return cos * u_hat + sin * ut_hat / rho, -rho * sin * u_hat + cos * ut_hat


def free_propagate(state: State, t: float) -> State:
    """Solve the free wave equation exactly from ``state`` for time ``t``.

    Negative times run backward. Returns a new :class:`State`.
    """
    F = forward_transform(state.u)
    G = forward_transform(state.ut)
    u_hat, ut_hat = free_flow(F.values, G.values, F.rho, t)

    return State(
        state.t + t,
        inverse_transform(SpectralField(state.grid, u_hat)),
        inverse_transform(SpectralField(state.grid, ut_hat)),
    )


def half_wave_data(state: State) -> SpectralField:
    """Complex half-wave profile v̂ = û + i ût / ρ."""
    F = forward_transform(state.u)
    G = forward_transform(state.ut)

    return SpectralField(state.grid, F.values + 1j * G.values / F.rho)


def half_wave_propagate(v: SpectralField, t: float) -> SpectralField:
    return v.scale(np.exp(-1j * t * v.rho))


def half_wave_state(v: SpectralField, t: float = 0.0) -> State:
    """Recover (u, u_t) from a half-wave profile; u is the real part and u_t is ρ·Im."""
    return State(
        t,
        inverse_transform(SpectralField(v.grid, v.values.real)),
        inverse_transform(SpectralField(v.grid, v.rho * v.values.imag)),
    )
