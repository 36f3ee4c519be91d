"""
Self-similar variables inside the backward light cone of a blow-up point.

For a blow-up time T₊ the change of variables

    s = −log(T₊ − t),   y = r/(T₊ − t),   w(s, y) = e^{−s} u(T₊ − e^{−s}, e^{−s} y)

maps the cone r < T₊ − t onto the strip 0 ≤ y < 1 and turns the ODE blow-up √2/(T₊ − t)
into the constant equilibrium w = √2. The focusing cubic equation becomes

    w_ss − (1 − y²)(w_yy + 4w_y/y) + 2y w_ys + 3w_s + 2w − w³ = 0

which carries the Lyapunov functional of :func:`lyapunov_energy`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import OdeSolution, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.special import roots_legendre

from . import telemetry
from ._errors import WavelabError
from .models import ModelKind, ModelSpec, nonlinearity, potential
from .spectral import RadialField, RadialGrid, State, spectral_gradient

logger = logging.getLogger(__name__)

DEFAULT_POINTS = 200
DEFAULT_EPS = 1e-3
COURANT = 0.2

_WAVE_MAP = ModelSpec(ModelKind.WM_S3)
_CUBIC = ModelSpec(ModelKind.CUBIC_FOCUSING)


class FrameError(WavelabError, ValueError):
    """Raised for states or parameters outside the self-similar frame.

    This covers:
    - States at or after the blow-up time
    - Data supported outside the backward light cone
    - Boundary cutoffs outside (0, 1)
    """

    pass


@dataclass(frozen=True, eq=False)
class SelfSimilarFrame:
    """Samples of w and w_s at time s on the uniform grid y_j = j/M, j = 0..M."""

    T_plus: float
    s: float
    y: np.ndarray
    w: np.ndarray
    ws: np.ndarray

    @property
    def t(self) -> float:
        return self.T_plus - math.exp(-self.s)

    @property
    def spacing(self) -> float:
        return float(self.y[1] - self.y[0])

    def _spline(self, values: np.ndarray) -> CubicSpline:
        x = np.concatenate([-self.y[:0:-1], self.y])
        v = np.concatenate([values[:0:-1], values])

        return CubicSpline(x, v)

    def w_spline(self) -> CubicSpline:
        return self._spline(self.w)

    def ws_spline(self) -> CubicSpline:
        return self._spline(self.ws)


def y_grid(points: int = DEFAULT_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.0, points + 1)


def to_selfsimilar(
    state: State,
    T_plus: float,
    *,
    points: int = DEFAULT_POINTS,
    check_support: bool = True,
) -> SelfSimilarFrame:
    """Express ``state`` in self-similar variables centred at (T₊, 0).

    Raises:
        FrameError: When t ≥ T₊, or when ``check_support`` and the data reach beyond the
            cone radius T₊ − t
    """
    gap = T_plus - state.t

    if not gap > 0:
        raise FrameError("state must precede the blow-up time")

    if check_support and state.support_radius() > gap:
        raise FrameError(f"data extend beyond the cone radius {gap:.3g}")

    s = -math.log(gap)
    y = y_grid(points)
    r = gap * y
    ur = spectral_gradient(state.u)

    w = gap * state.u.at(r)
    ws = -w + gap**2 * (state.ut.at(r) - y * ur.at(r))

    return SelfSimilarFrame(T_plus, s, y, w, ws)


def from_selfsimilar(frame: SelfSimilarFrame, grid: RadialGrid) -> State:
    """Inverse map onto ``grid``; points outside the cone are set to zero.

    Uses u = e^{s} w and u_t = e^{2s}(w_s + w + y w_y).
    """
    scale = math.exp(frame.s)
    r = grid.nodes
    y = r * scale
    inside = y <= 1.0

    w = frame.w_spline()
    ws = frame.ws_spline()

    u = np.zeros(grid.n)
    ut = np.zeros(grid.n)
    yi = y[inside]
    u[inside] = scale * w(yi)
    ut[inside] = scale**2 * (ws(yi) + w(yi) + yi * w(yi, 1))

    return State(frame.t, RadialField(grid, u), RadialField(grid, ut))


def _nonlinear(y: np.ndarray, w: np.ndarray, wave_map: bool) -> np.ndarray:
    if wave_map:
        return nonlinearity(_WAVE_MAP, y, w)

    return w**3


def _w_acceleration(y: np.ndarray, w: np.ndarray, v: np.ndarray, wave_map: bool) -> np.ndarray:
    h = y[1] - y[0]
    wyy = np.empty_like(w)
    wy_over_y = np.empty_like(w)

    wyy[1:-1] = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / h**2
    wy_over_y[1:-1] = (w[2:] - w[:-2]) / (2.0 * h * y[1:-1])

    # even symmetry at the origin: w_yy + 4w_y/y → 5w_yy
    wyy[0] = 2.0 * (w[1] - w[0]) / h**2
    wy_over_y[0] = wyy[0]

    # the spatial operator carries the factor 1 − y², which vanishes at y = 1
    wyy[-1] = 0.0
    wy_over_y[-1] = 0.0

    vy = np.empty_like(v)
    vy[2:] = (3.0 * v[2:] - 4.0 * v[1:-1] + v[:-2]) / (2.0 * h)
    vy[1] = (v[2] - v[0]) / (2.0 * h)
    vy[0] = 0.0

    return (
        (1.0 - y**2) * (wyy + 4.0 * wy_over_y)
        - 2.0 * y * vy
        - 3.0 * v
        - 2.0 * w
        + _nonlinear(y, w, wave_map)
    )


@dataclass(slots=True)
class FrameHistory:
    frames: list[SelfSimilarFrame] = field(default_factory=list)

    @property
    def s(self) -> np.ndarray:
        return np.array([frame.s for frame in self.frames])

    def __len__(self) -> int:
        return len(self.frames)


def evolve_w(
    frame: SelfSimilarFrame,
    s_end: float,
    *,
    ds: float | None = None,
    stride: int = 1,
    wave_map: bool = False,
) -> FrameHistory:
    """Integrate the self-similar equation by the method of lines with classical RK4.

    The cross term 2y w_ys is upwinded with a second order one-sided difference; no
    boundary condition is needed at y = 1 because every characteristic leaves there.
    """
    y = frame.y
    step = COURANT * frame.spacing if ds is None else ds
    count = max(1, math.ceil((s_end - frame.s) / step - 1e-9))
    step = (s_end - frame.s) / count

    def derivative(w: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return v, _w_acceleration(y, w, v, wave_map)

    w, v, s = frame.w.copy(), frame.ws.copy(), frame.s
    history = FrameHistory([frame])

    with telemetry.span("wavelab.selfsimilar.evolve", {"steps": count, "wave_map": wave_map}):
        for index in range(1, count + 1):
            k1w, k1v = derivative(w, v)
            k2w, k2v = derivative(w + 0.5 * step * k1w, v + 0.5 * step * k1v)
            k3w, k3v = derivative(w + 0.5 * step * k2w, v + 0.5 * step * k2v)
            k4w, k4v = derivative(w + step * k3w, v + step * k3v)

            w = w + step / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
            v = v + step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            s = frame.s + index * step

            if index % stride == 0 or index == count:
                history.frames.append(SelfSimilarFrame(frame.T_plus, s, y, w.copy(), v.copy()))

    return history


def _quadrature(eps: float, count: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1 − eps] after the substitution y = 1 − e^{−x}."""
    x, weights = roots_legendre(count)
    top = -math.log(eps)
    x = 0.5 * top * (x + 1.0)
    weights = 0.5 * top * weights
    y = 1.0 - np.exp(-x)

    return y, weights * np.exp(-x)


def _check_eps(eps: float) -> None:
    if not 0 < eps < 1:
        raise FrameError("eps must lie in (0, 1)")


def _potential(y: np.ndarray, w: np.ndarray, wave_map: bool) -> np.ndarray:
    # antiderivative in w of the nonlinear term
    return -potential(_WAVE_MAP if wave_map else _CUBIC, y, w)


def lyapunov_energy(frame: SelfSimilarFrame, eps: float = DEFAULT_EPS, *, wave_map: bool = False) -> float:
    """E(s) = ∫_0^{1−ε} [½w_s²/(1−y²) + ½w_y² + w²/(1−y²) − ¼w⁴/(1−y²)] y⁴ dy."""
    _check_eps(eps)
    y, weights = _quadrature(eps)
    w_spline = frame.w_spline()
    w = w_spline(y)
    wy = w_spline(y, 1)
    ws = frame.ws_spline()(y)
    damp = 1.0 / (1.0 - y**2)

    density = 0.5 * ws**2 * damp + 0.5 * wy**2 + (w**2 - _potential(y, w, wave_map)) * damp

    return float(np.sum(density * y**4 * weights))


def dissipation(frame: SelfSimilarFrame, eps: float = DEFAULT_EPS) -> float:
    """2∫_0^{1−ε} w_s² y⁴ (1 − y²)⁻² dy."""
    _check_eps(eps)
    y, weights = _quadrature(eps)
    ws = frame.ws_spline()(y)

    return float(2.0 * np.sum(ws**2 * y**4 / (1.0 - y**2) ** 2 * weights))


def boundary_flux(frame: SelfSimilarFrame, eps: float = DEFAULT_EPS) -> float:
    """Boundary terms b⁴w_y w_s − b⁵w_s²/(1 − b²) at b = 1 − ε."""
    _check_eps(eps)
    b = 1.0 - eps
    wy = float(frame.w_spline()(b, 1))
    ws = float(frame.ws_spline()(b))

    return b**4 * wy * ws - b**5 * ws**2 / (1.0 - b**2)


@dataclass(frozen=True, slots=True)
class LyapunovCheck:
    """Discrete dE/ds against the dissipation identity along a frame sequence."""

    s: np.ndarray
    energy: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    mismatch: float
    nondecreasing: bool


def lyapunov_terms(
    frames: list[SelfSimilarFrame], eps: float = DEFAULT_EPS, *, wave_map: bool = False
) -> LyapunovCheck:
    """Compare finite differences of E with the averaged dissipation plus boundary flux.

    ``mismatch`` is max|lhs − rhs| / max|rhs|, zero when both sides vanish.
    """
    s = np.array([frame.s for frame in frames])
    energy = np.array([lyapunov_energy(frame, eps, wave_map=wave_map) for frame in frames])
    rate = np.array([dissipation(frame, eps) + boundary_flux(frame, eps) for frame in frames])

    lhs = np.diff(energy) / np.diff(s)
    rhs = 0.5 * (rate[1:] + rate[:-1])
    scale = float(np.max(np.abs(rhs), initial=0.0))
    error = float(np.max(np.abs(lhs - rhs), initial=0.0))
    mismatch = error / scale if scale > 0 else error
    tolerance = 1e-12 * max(1.0, float(np.max(np.abs(energy))))

    return LyapunovCheck(
        s=s,
        energy=energy,
        lhs=lhs,
        rhs=rhs,
        mismatch=mismatch,
        nondecreasing=bool(np.all(np.diff(energy) >= -tolerance)),
    )


def monotonicity_check(
    frames: list[SelfSimilarFrame], eps: float = DEFAULT_EPS, *, wave_map: bool = False
) -> list[dict[str, float]]:
    """Step by step table of dE/ds against the dissipation identity.

    Each row holds the midpoint ``s``, the finite difference ``dE_ds``, the averaged
    ``rate`` (dissipation plus boundary flux), their relative ``mismatch`` and the sign
    of ``dE_ds``.

    Raises:
        FrameError: With fewer than two frames, or when the energy is not finite on
            [0, 1 − eps]
    """
    if len(frames) < 2:
        raise FrameError("need at least two frames")

    check = lyapunov_terms(frames, eps, wave_map=wave_map)

    if not np.all(np.isfinite(check.energy)):
        raise FrameError(f"energy is not resolved near y = 1 with eps = {eps}")

    middle = 0.5 * (check.s[1:] + check.s[:-1])
    scale = max(float(np.max(np.abs(check.rhs))), 1e-300)

    return [
        {
            "s": float(s),
            "dE_ds": float(lhs),
            "rate": float(rhs),
            "mismatch": abs(float(lhs - rhs)) / scale,
            "sign": float(np.sign(lhs)),
        }
        for s, lhs, rhs in zip(middle, check.lhs, check.rhs)
    ]


@dataclass(frozen=True, eq=False)
class ShootResult:
    """Outcome of integrating the stationary self-similar ODE from w(0) = a."""

    a: float
    eps: float
    w_end: float
    wprime_end: float
    solution: OdeSolution

    @property
    def defect(self) -> float:
        return abs(self.w_end) + abs(self.wprime_end)


def elliptic_shoot(
    a: float, eps: float = DEFAULT_EPS, *, wave_map: bool = False, y0: float = 1e-4
) -> ShootResult:
    """Integrate (1 − y²)(w'' + 4w'/y) + 2w − N(y, w) = 0 from w(0) = a to y = 1 − ε.

    The start uses w ≈ a + c y² with 10c = −(2a − N(0, a)).
    """
    _check_eps(eps)

    def source(y: float, w: float) -> float:
        return 2.0 * w - float(_nonlinear(np.array([y]), np.array([w]), wave_map)[0])

    c = -source(0.0, a) / 10.0
    start = np.array([a + c * y0**2, 2.0 * c * y0])

    def rhs(y: float, state: np.ndarray) -> np.ndarray:
        w, wp = state
        return np.array([wp, -4.0 * wp / y - source(y, w) / (1.0 - y**2)])

    result = solve_ivp(
        rhs, (y0, 1.0 - eps), start, method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True
    )

    if not result.success:
        raise FrameError(result.message)

    return ShootResult(a, eps, float(result.y[0, -1]), float(result.y[1, -1]), result.sol)


def elliptic_scan(a_values: list[float], eps_list: list[float], *, wave_map: bool = False) -> list[dict]:
    """Defects of :func:`elliptic_shoot` over a grid of initial values and cutoffs."""
    rows = []

    for a in a_values:
        for eps in eps_list:
            shot = elliptic_shoot(a, eps, wave_map=wave_map)
            rows.append(
                {"a": a, "eps": eps, "w_end": shot.w_end, "wprime_end": shot.wprime_end, "defect": shot.defect}
            )

    return rows
