"""
Exterior energy channels for the free radial wave equation on ℝ⁵.

Outside a ball of radius R, radial Ḣ¹ × L² data split orthogonally into the plane
P(R) = span{(r⁻³, 0), (0, r⁻³)} and its complement. Data orthogonal to the plane keep a
fixed fraction of their exterior energy as t → +∞ or t → −∞; the experiments here
measure that fraction.

Exterior data are represented by :class:`ChannelDatum`, a compact part sampled on a grid
plus exact coefficients along the plane. The plane part is propagated in closed form:
(a r⁻³, b r⁻³) evolves into ((a + bt) r⁻³, b r⁻³) outside the cone r = R + |t|.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import telemetry
from ._errors import WavelabError
from .spectral import RadialField, RadialGrid, State, free_propagate, spectral_gradient
from .testing import random_bumps

logger = logging.getLogger(__name__)

DEFAULT_PROBES = 4


class ChannelError(WavelabError, ValueError):
    """Raised when an exterior region doesn't fit on the grid.

    This covers:
    - Exterior radii R + |t| at or beyond r_max
    - Sample times that would carry the compact part off the grid
    - Empty ensembles
    """

    pass


@dataclass(frozen=True, eq=False)
class ChannelDatum:
    """Exterior data (f + a r⁻³, g + b r⁻³) on r ≥ R.

    ``f`` and ``g`` are fields decaying well inside the grid; ``a`` and ``b`` are the
    exact plane coefficients.

    Example:
        >>> ChannelDatum.plane(grid, R=1.0, a=1.0)
        >>> ChannelDatum(f, g, R=1.0)
    """

    f: RadialField
    g: RadialField
    R: float
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if not self.R > 0:
            raise ChannelError("R must be positive")

        if self.R >= self.f.grid.r_max:
            raise ChannelError(f"R = {self.R} is outside the grid")

    @classmethod
    def plane(cls, grid: RadialGrid, R: float, a: float = 0.0, b: float = 0.0) -> ChannelDatum:
        zero = RadialField.zeros(grid)
        return cls(zero, zero, R, a, b)

    @property
    def grid(self) -> RadialGrid:
        return self.f.grid

    def compact(self) -> State:
        return State(0.0, self.f, self.g)

    def __add__(self, other: ChannelDatum) -> ChannelDatum:
        return ChannelDatum(self.f + other.f, self.g + other.g, self.R, self.a + other.a, self.b + other.b)


def _gradient(field: RadialField) -> RadialField:
    if not np.any(field.values):
        return field

    return spectral_gradient(field)


def _cross(compact: ChannelDatum, plane: ChannelDatum) -> float:
    """Inner product of the compact part of one datum with the plane part of another."""
    R = compact.R
    term = 0.0

    if plane.a:
        end = float(compact.f.at(compact.grid.r_max))
        term += -3.0 * plane.a * (end - float(compact.f.at(R)))

    if plane.b:
        term += plane.b * compact.g.integrate(R, power=1)

    return term


def inner(first: ChannelDatum, second: ChannelDatum) -> float:
    """Exterior Ḣ¹ × L² inner product ∫_R^∞ (f_r f'_r + g g') r⁴ dr."""
    if first.R != second.R:
        raise ChannelError("inner product of data on different exterior regions")

    R = first.R
    fr, fr2 = _gradient(first.f), _gradient(second.f)
    compact = (fr * fr2 + first.g * second.g).integrate(R)
    plane = 3.0 * first.a * second.a / R**3 + first.b * second.b / R

    return compact + plane + _cross(first, second) + _cross(second, first)


def norm2(datum: ChannelDatum) -> float:
    return inner(datum, datum)


def exterior_norm2(data: State | ChannelDatum, R: float, t_shift: float = 0.0) -> float:
    """Exterior energy ∫_{R+|t|}^∞ (u_t² + u_r²) r⁴ dr of data at time ``t_shift``.

    Raises:
        ChannelError: When R + |t| reaches r_max
    """
    radius = R + abs(t_shift)

    if isinstance(data, State):
        return norm2(ChannelDatum(data.u, data.ut, radius))

    return norm2(ChannelDatum(data.f, data.g, radius, data.a, data.b))


def propagate(datum: ChannelDatum, t: float) -> ChannelDatum:
    """Free evolution of a datum for time ``t``, valid on r ≥ R + |t|."""
    evolved = free_propagate(datum.compact(), t)

    return ChannelDatum(evolved.u, evolved.ut, datum.R + abs(t), datum.a + datum.b * t, datum.b)


def project_plane(datum: ChannelDatum) -> tuple[ChannelDatum, ChannelDatum]:
    """Orthogonal split of exterior data into P(R) and its complement.

    The plane component has coefficients a = R³f(R) and b = R∫_R^∞ g(r) r dr, where the
    plane coefficients of the input are added on top.
    """
    R = datum.R
    f_at_R = float(datum.f.at(R))
    moment = datum.g.integrate(R, power=1)
    a = R**3 * f_at_R
    b = R * moment

    pi = ChannelDatum.plane(datum.grid, R, datum.a + a, datum.b + b)
    perp = ChannelDatum(datum.f, datum.g, R, -a, -b)

    return pi, perp


def perp_norm2_closed(datum: ChannelDatum) -> float:
    """‖π⊥(f, g)‖² = ∫f_r²r⁴ − 3R³f(R)² + ∫g²r⁴ − R(∫rg)² for a datum without plane part."""
    if datum.a or datum.b:
        raise ChannelError("closed form needs a datum without plane coefficients")

    R = datum.R
    f_at_R = float(datum.f.at(R))
    moment = datum.g.integrate(R, power=1)

    return norm2(datum) - 3.0 * R**3 * f_at_R**2 - R * moment**2


def extrapolate(h: np.ndarray, values: np.ndarray) -> float:
    """Value at h = 0 of the polynomial through (h_i, values_i), by Neville's scheme."""
    h = np.asarray(h, dtype=float)
    table = np.array(values, dtype=float)
    count = len(table)

    for level in range(1, count):
        for i in range(count - level):
            j = i + level
            table[i] = (h[j] * table[i] - h[i] * table[i + 1]) / (h[j] - h[i])

    return float(table[0])


@dataclass(frozen=True, slots=True)
class ChannelReport:
    """Outcome of one exterior energy experiment.

    ``c0_lower`` is max(ext_plus, ext_minus) / perp_norm2, ``nan`` when the datum has
    no component orthogonal to the plane.
    """

    R: float
    proj_norm2: float
    perp_norm2: float
    ext_plus: float
    ext_minus: float
    times: tuple[float, ...] = field(default=())
    plus: tuple[float, ...] = field(default=())
    minus: tuple[float, ...] = field(default=())

    @property
    def c0_lower(self) -> float:
        if self.perp_norm2 <= 1e-14 * max(self.proj_norm2, 1.0):
            return math.nan

        return max(self.ext_plus, self.ext_minus) / self.perp_norm2

    def to_row(self) -> dict[str, float]:
        return {
            "R": self.R,
            "proj_norm2": self.proj_norm2,
            "perp_norm2": self.perp_norm2,
            "ext_plus": self.ext_plus,
            "ext_minus": self.ext_minus,
            "c0_lower": self.c0_lower,
        }


def channel_experiment(
    datum: ChannelDatum, T_probe: float | None = None, *, probes: int = DEFAULT_PROBES
) -> ChannelReport:
    """Measure the exterior energy left as t → ±∞.

    The exterior energy is sampled at t = T·2^m for m < ``probes`` in both directions and
    extrapolated to infinite time as a polynomial in 1/(R + |t|), which is exact for the
    plane part.

    Raises:
        ChannelError: When the last probe carries the data off the grid
    """
    R = datum.R
    T = 4.0 * R if T_probe is None else T_probe
    times = T * 2.0 ** np.arange(probes)
    reach = max(datum.compact().support_radius(), R) + times[-1]

    if reach > datum.grid.r_max:
        raise ChannelError(
            f"probes up to t = {times[-1]:g} need r_max >= {reach:.3g}, grid has {datum.grid.r_max}"
        )

    with telemetry.span("wavelab.channels.experiment", {"R": R, "T_probe": T}) as collector:
        h = 1.0 / (R + times)
        plus = [norm2(propagate(datum, t)) for t in times]
        minus = [norm2(propagate(datum, -t)) for t in times]

        pi, perp = project_plane(datum)
        report = ChannelReport(
            R=R,
            proj_norm2=norm2(pi),
            perp_norm2=norm2(perp),
            ext_plus=extrapolate(h, plus),
            ext_minus=extrapolate(h, minus),
            times=tuple(times),
            plus=tuple(plus),
            minus=tuple(minus),
        )

        collector.add({"c0_lower": report.c0_lower})

    return report


def random_perp_datum(
    grid: RadialGrid,
    R: float,
    rng: np.random.Generator,
    *,
    bumps: int = 3,
    width: float | None = None,
) -> ChannelDatum:
    """Random smooth data in R < r < 3R projected onto the complement of P(R)."""
    width = 0.3 * R if width is None else width
    centres = (1.5 * R, 2.5 * R)
    f = random_bumps(grid, rng, count=bumps, centres=centres, width=width)
    g = random_bumps(grid, rng, count=bumps, centres=centres, width=width)
    datum = ChannelDatum(f, g, R)

    return project_plane(datum)[1]


def smallest_bound(reports: Sequence[ChannelReport]) -> float:
    """Smallest finite c0_lower over ``reports``, NaN when none is finite."""
    bounds = [report.c0_lower for report in reports if math.isfinite(report.c0_lower)]

    return min(bounds, default=math.nan)


def channel_ensemble(
    grid: RadialGrid,
    R: float,
    size: int,
    *,
    seed: int = 0,
    T_probe: float | None = None,
    threads: int = 1,
) -> list[ChannelReport]:
    """Run :func:`channel_experiment` on ``size`` random data orthogonal to the plane.

    Members are seeded independently from ``seed``, so results don't depend on
    ``threads``.
    """
    if size < 1:
        raise ChannelError("ensemble size must be positive")

    children = np.random.SeedSequence(seed).spawn(size)

    grid.warm()

    def member(child: np.random.SeedSequence) -> ChannelReport:
        datum = random_perp_datum(grid, R, np.random.default_rng(child))
        return channel_experiment(datum, T_probe)

    with telemetry.span("wavelab.channels.ensemble", {"R": R, "size": size}) as collector:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                reports = list(pool.map(member, children))
        else:
            reports = [member(child) for child in children]

        lowest = smallest_bound(reports)
        collector.add({"c0_min": lowest})

    logger.debug("ensemble of %d finished, smallest c0 %.4g", size, lowest)

    return reports
