"""Delta-hedged P&L of a European profile and its swap decomposition.

A delta-hedged product accrues, per hedging interval, its dollar gamma
times the gap between realized and hedge variance:

    pnl = sum_i gamma_dollar(S_i, K) * (sigma_i**2 - K**2) * dt_i

with the half convention gamma_dollar = S**2 * V_SS / 2 used throughout.
Fitting the profile with a cubic and evaluating the gamma under driftless
normal dynamics at zero hedge vol reduces the accumulator to a spot-weighted
realized-variance leg minus a plain realized-variance leg (a long-gamma-swap,
short-variance-swap position).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .densities import Grid, normal_pdf
from .errors import CoverageError
from .indices import PathSample

COVERAGE_STDS = 5.0  # kernel mass must fit the grid out to this many sigmas
DEFAULT_QUAD_POINTS = 4001


@dataclass(frozen=True, eq=False)
class ProfileFn:
    """Payoff level sampled on a grid, evaluated by cubic interpolation.

    Not-a-knot boundary conditions reproduce any cubic polynomial exactly,
    which the swap decomposition leans on.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.points.shape:
            raise ValueError("values must have one entry per grid point")
        if not np.all(np.isfinite(values)):
            raise ValueError("profile values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(self.grid.points, self.values)

    def value(self, s):
        return self._spline(np.asarray(s, dtype=float))

    def second_derivative(self, s):
        return self._spline(np.asarray(s, dtype=float), nu=2)

    @classmethod
    def from_csv(cls, path) -> "ProfileFn":
        import csv

        from .densities import grid_from_points

        xs: list[float] = []
        vs: list[float] = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip() for c in header[:2]] != ["x", "value"]:
                raise ValueError(f"{path}: expected header 'x,value'")
            for row in reader:
                if not row:
                    continue
                xs.append(float(row[0]))
                vs.append(float(row[1]))
        return cls(grid_from_points(np.array(xs)), np.array(vs))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("x,value\n")
            for x, v in zip(self.grid.points, self.values):
                fh.write(f"{x:.17g},{v:.17g}\n")


def _lognormal_kernel(u: np.ndarray, spot: float, vol: float, tau: float):
    """Driftless lognormal transition density of the level after ``tau``."""
    sd = vol * np.sqrt(tau)
    z = (np.log(u / spot) + 0.5 * sd * sd) / sd
    return normal_pdf(z) / (u * sd)


def _check_coverage(grid: Grid, lo_needed: float, hi_needed: float, spot: float):
    if lo_needed < grid.points[0] or hi_needed > grid.points[-1]:
        raise CoverageError(
            f"profile grid [{grid.points[0]:g}, {grid.points[-1]:g}] does not "
            f"cover {COVERAGE_STDS:g} standard deviations around spot {spot:g} "
            f"(needs [{lo_needed:g}, {hi_needed:g}])"
        )


def dollar_gamma(
    profile: ProfileFn,
    spot: float,
    hedge_vol: float,
    t_remaining: float,
    *,
    n_quad: int = DEFAULT_QUAD_POINTS,
) -> float:
    """Half dollar gamma S**2 V_SS / 2 of the profile's model value.

    V(S) is the profile integrated against the driftless lognormal kernel
    with the hedge vol over the remaining time; the second derivative is
    taken by central differences of V.  The profile grid must cover the
    kernel out to ``COVERAGE_STDS`` standard deviations.
    """
    if spot <= 0 or hedge_vol <= 0 or t_remaining <= 0:
        raise ValueError("spot, hedge_vol and t_remaining must be positive")
    sd = hedge_vol * np.sqrt(t_remaining)
    centre = np.log(spot) - 0.5 * sd * sd
    _check_coverage(
        profile.grid,
        np.exp(centre - COVERAGE_STDS * sd),
        np.exp(centre + COVERAGE_STDS * sd),
        spot,
    )
    u = np.linspace(profile.grid.points[0], profile.grid.points[-1], n_quad)
    pv = profile.value(u)

    def model_value(s: float) -> float:
        return float(simpson(pv * _lognormal_kernel(u, s, hedge_vol, t_remaining), x=u))

    h = 1e-3 * spot
    gamma = (model_value(spot + h) - 2.0 * model_value(spot) + model_value(spot - h)) / h**2
    return 0.5 * spot * spot * gamma


def bachelier_half_gamma(
    profile: ProfileFn,
    spot: float,
    hedge_vol: float,
    t_remaining: float,
    *,
    n_quad: int = DEFAULT_QUAD_POINTS,
) -> float:
    """Half ordinary gamma V_SS / 2 under driftless normal (absolute) dynamics.

    At zero hedge vol the kernel is a point mass and the value is half the
    profile's own second derivative at the spot.
    """
    if t_remaining <= 0:
        raise ValueError("t_remaining must be positive")
    if hedge_vol < 0:
        raise ValueError("hedge_vol must be >= 0")
    sd = hedge_vol * np.sqrt(t_remaining)
    if sd == 0.0:
        return 0.5 * float(profile.second_derivative(spot))
    _check_coverage(
        profile.grid, spot - COVERAGE_STDS * sd, spot + COVERAGE_STDS * sd, spot
    )
    u = np.linspace(profile.grid.points[0], profile.grid.points[-1], n_quad)
    pv = profile.value(u)

    def model_value(s: float) -> float:
        return float(simpson(pv * normal_pdf((u - s) / sd) / sd, x=u))

    h = 1e-3 * max(abs(spot), sd)
    gamma = (model_value(spot + h) - 2.0 * model_value(spot) + model_value(spot - h)) / h**2
    return 0.5 * gamma


@dataclass(frozen=True, eq=False)
class HedgedPnlSpec:
    """Fixings, realized vols and hedge vol for the P&L accumulator.

    ``realized_vols`` and ``dts`` have one entry per hedging interval;
    ``fixings`` holds one more level than there are intervals.  Zero hedge
    vol is legal only for the Bachelier kernel.
    """

    hedge_vol: float
    maturity: float
    fixings: PathSample
    realized_vols: np.ndarray
    dts: np.ndarray

    def __post_init__(self):
        vols = np.asarray(self.realized_vols, dtype=float)
        dts = np.asarray(self.dts, dtype=float)
        if self.hedge_vol < 0:
            raise ValueError("hedge_vol must be >= 0")
        if self.maturity <= 0:
            raise ValueError("maturity must be positive")
        if np.any(vols < 0):
            raise ValueError("realized vols must be >= 0")
        if np.any(dts <= 0):
            raise ValueError("dts must be positive")
        if vols.shape != dts.shape:
            raise ValueError("realized_vols and dts must have equal length")
        if self.fixings.levels.size != vols.size + 1:
            raise ValueError("fixings must hold one more level than intervals")
        starts = np.concatenate(([0.0], np.cumsum(dts)[:-1]))
        if starts[-1] >= self.maturity:
            raise ValueError("hedging intervals extend beyond maturity")
        vols.setflags(write=False)
        dts.setflags(write=False)
        object.__setattr__(self, "realized_vols", vols)
        object.__setattr__(self, "dts", dts)
        object.__setattr__(self, "_interval_starts", starts)

    @classmethod
    def from_json(cls, path) -> "HedgedPnlSpec":
        with open(path) as fh:
            obj = json.load(fh)
        return cls(
            hedge_vol=float(obj["hedge_vol"]),
            maturity=float(obj["maturity"]),
            fixings=PathSample.from_levels(np.asarray(obj["fixings"], dtype=float)),
            realized_vols=np.asarray(obj["realized_vols"], dtype=float),
            dts=np.asarray(obj["dts"], dtype=float),
        )


def hedged_pnl(profile: ProfileFn, spec: HedgedPnlSpec, *, kernel: str = "lognormal") -> float:
    """The accumulator sum_i gamma(S, K) * (sigma_i**2 - K**2) * dt_i.

    Gamma is evaluated at the level opening each interval, with the time
    remaining from that point to maturity.
    """
    if kernel == "lognormal":
        gamma_fn = dollar_gamma
    elif kernel == "bachelier":
        gamma_fn = bachelier_half_gamma
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    k2 = spec.hedge_vol**2
    total = 0.0
    starts = spec._interval_starts
    for i in range(spec.dts.size):
        variance_gap = spec.realized_vols[i] ** 2 - k2
        if variance_gap == 0.0:
            continue
        gamma = gamma_fn(
            profile, float(spec.fixings.levels[i]), spec.hedge_vol,
            spec.maturity - float(starts[i]),
        )
        total += gamma * variance_gap * float(spec.dts[i])
    return total


def log_realized_variances(path: PathSample) -> np.ndarray:
    """Per-interval squared log returns, a plug-in estimate of sigma_i**2 dt_i."""
    return np.log(path.levels[1:] / path.levels[:-1]) ** 2


@dataclass(frozen=True)
class GammaVarDecomposition:
    """Weights of the spot-weighted and plain realized-variance legs."""

    alpha: float
    beta: float
    fit_residual: float


def cubic_decomposition(profile: ProfileFn) -> GammaVarDecomposition:
    """Cubic fit of the profile and the implied two-swap weights.

    With profile ~ c3 x**3 + c2 x**2 + ..., half gamma is 3 c3 x + c2, so
    the accumulator becomes alpha * sum(S_i sigma_i**2 dt_i) with
    alpha = 3 c3, minus beta * sum(sigma_i**2 dt_i) with beta = -c2.
    The fit is width-weighted least squares; the residual is the
    width-weighted RMS misfit.
    """
    x = profile.grid.points
    if x.size < 4:
        raise ValueError("need at least 4 grid points for a cubic fit")
    w = np.sqrt(profile.grid.widths)
    with warnings.catch_warnings():
        warnings.simplefilter("error", np.exceptions.RankWarning)
        try:
            coef = np.polyfit(x, profile.values, deg=3, w=w)
        except np.exceptions.RankWarning as exc:
            raise ValueError("degenerate cubic fit on this grid") from exc
    c3, c2 = float(coef[0]), float(coef[1])
    fitted = np.polyval(coef, x)
    residual = float(
        np.sqrt(np.sum(profile.grid.widths * (fitted - profile.values) ** 2)
                / np.sum(profile.grid.widths))
    )
    return GammaVarDecomposition(alpha=3.0 * c3, beta=-c2, fit_residual=residual)


def swap_legs(path_levels, realized_vols, dts) -> tuple[float, float]:
    """The two accumulators: sum(S sigma**2 dt) and sum(sigma**2 dt).

    Levels are taken at interval starts, matching ``hedged_pnl``.
    """
    levels = np.asarray(path_levels, dtype=float)
    vols = np.asarray(realized_vols, dtype=float)
    dts = np.asarray(dts, dtype=float)
    var = vols**2 * dts
    return float(np.dot(levels[:-1], var)), float(var.sum())
