"""Grids, discrete densities, parametric families and relative entropy.

Everything downstream (implied densities, payoffs, model-risk scores) is a
sum over the buckets defined here.  A density assigns one probability mass
per bucket; pdfs are discretized by the midpoint rule (pdf times bucket
width, renormalized).

``normal_cdf`` below is the single source of the standard normal CDF for
the whole package: it backs the skew-normal family, Black-Scholes pricing
and every test that needs Phi.  It is accurate to a few ulp (complementary
error function from scipy), far inside the 1e-12 budget the toolkit
assumes everywhere.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, NonEquivalenceError

_SQRT2 = math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)

MASS_TOL = 1e-12  # max |sum(mass) - 1| accepted by Density


def normal_pdf(x):
    """Standard normal density phi(x)."""
    x = np.asarray(x, dtype=float)
    return _INV_SQRT2PI * np.exp(-0.5 * x * x)


def normal_cdf(x):
    """Standard normal CDF Phi(x), accurate to a few ulp."""
    x = np.asarray(x, dtype=float)
    return 0.5 * special.erfc(-x / _SQRT2)


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing abscissa points with positive bucket widths.

    A single-point grid is legal (it arises when a whole distribution is
    collapsed into one bucket); ``make_grid`` always builds two or more.
    """

    points: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        widths = np.asarray(self.widths, dtype=float)
        if points.ndim != 1 or points.size < 1:
            raise ValueError("grid needs a 1-d array of at least one point")
        if widths.shape != points.shape:
            raise ValueError("widths must match points in shape")
        if not np.all(np.isfinite(points)) or not np.all(np.isfinite(widths)):
            raise ValueError("grid points and widths must be finite")
        if points.size > 1 and not np.all(np.diff(points) > 0):
            raise ValueError("grid points must be strictly increasing")
        if not np.all(widths > 0):
            raise ValueError("grid widths must be positive")
        points.setflags(write=False)
        widths.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "widths", widths)

    @property
    def size(self) -> int:
        return self.points.size

    def same_as(self, other: "Grid") -> bool:
        """Bucketwise identity of points and widths."""
        return np.array_equal(self.points, other.points) and np.array_equal(
            self.widths, other.widths
        )


def make_grid(lo: float, hi: float, count: int) -> Grid:
    """Uniform grid of ``count`` points on [lo, hi].

    Interior buckets get the full spacing as width; the two boundary
    buckets get half of it, so the widths sum to ``hi - lo``.
    """
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if count < 2:
        raise ValueError(f"need at least 2 points, got {count}")
    points = np.linspace(lo, hi, count)
    step = (hi - lo) / (count - 1)
    widths = np.full(count, step)
    widths[0] = widths[-1] = step / 2.0
    return Grid(points, widths)


def grid_from_points(points) -> Grid:
    """Grid over arbitrary strictly increasing points, midpoint-rule widths.

    For uniformly spaced points this reproduces ``make_grid`` exactly.
    """
    points = np.asarray(points, dtype=float)
    if points.size < 2:
        raise ValueError("need at least 2 points to infer widths")
    widths = np.empty_like(points)
    widths[1:-1] = (points[2:] - points[:-2]) / 2.0
    widths[0] = (points[1] - points[0]) / 2.0
    widths[-1] = (points[-1] - points[-2]) / 2.0
    return Grid(points, widths)


@dataclass(frozen=True, eq=False)
class Density:
    """Probability mass per grid bucket; non-negative and summing to one."""

    grid: Grid
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.shape != self.grid.points.shape:
            raise ValueError("mass must have one entry per grid point")
        if not np.all(np.isfinite(mass)):
            raise ValueError("mass must be finite")
        if np.any(mass < 0):
            raise ValueError("mass must be non-negative")
        total = float(mass.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"mass sums to {total!r}, expected 1 within {MASS_TOL}")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def from_weights(cls, grid: Grid, weights) -> "Density":
        """Renormalize non-negative weights into a density on ``grid``."""
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if not np.isfinite(total) or total <= 0:
            raise DomainError("weights carry no positive mass on this grid")
        return cls(grid, weights / total)


@dataclass(frozen=True)
class Normal:
    """Normal family N(mean, sd**2)."""

    mean: float
    sd: float

    def __post_init__(self):
        if self.sd <= 0:
            raise ValueError("sd must be positive")

    def pdf(self, x):
        return normal_pdf((np.asarray(x, dtype=float) - self.mean) / self.sd) / self.sd


@dataclass(frozen=True)
class Lognormal:
    """Lognormal family: ln X ~ N(mu, sigma**2)."""

    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        z = (np.log(x[pos]) - self.mu) / self.sigma
        out[pos] = normal_pdf(z) / (x[pos] * self.sigma)
        return out

    def mean(self) -> float:
        return math.exp(self.mu + 0.5 * self.sigma**2)


@dataclass(frozen=True)
class SkewNormalParams:
    """Skew-normal family: shape ``xi`` plus affine location/scale."""

    xi: float
    location: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def pdf(self, x):
        return skew_normal_pdf(x, self)


def skew_normal_pdf(x, params: SkewNormalParams):
    """Density 2*phi(z)*Phi(xi*z)/scale with z = (x - location)/scale.

    At ``xi = 0`` this is exactly the normal density (Phi(0) = 1/2); as
    ``xi`` grows the mass folds onto one side of the location.
    """
    z = (np.asarray(x, dtype=float) - params.location) / params.scale
    return 2.0 * normal_pdf(z) * normal_cdf(params.xi * z) / params.scale


def discretize(family, grid: Grid) -> Density:
    """Midpoint-rule mass: pdf at each point times bucket width, renormalized.

    Raises ``DomainError`` when the grid misses the family's support
    entirely (all-zero mass).
    """
    weights = np.asarray(family.pdf(grid.points), dtype=float) * grid.widths
    return Density.from_weights(grid, weights)


def moments(d: Density) -> tuple[float, float, float]:
    """Mean, variance and standardized skewness by discrete summation.

    Skewness needs positive variance; a degenerate density raises
    ``DomainError``.
    """
    x = d.grid.points
    mean = float(np.dot(d.mass, x))
    centred = x - mean
    variance = float(np.dot(d.mass, centred**2))
    if variance <= 0.0:
        raise DomainError("zero variance: skewness undefined")
    third = float(np.dot(d.mass, centred**3))
    return mean, variance, third / variance**1.5


def kl_divergence(p: Density, q: Density) -> float:
    """Relative entropy sum(p_i * ln(p_i / q_i)) in nats.

    Buckets with p_i = 0 contribute nothing regardless of q_i.  A bucket
    with p_i > 0 and q_i = 0 is a hard ``NonEquivalenceError``: the
    divergence is not a large number, it is undefined, and silently
    returning infinity hides a support mismatch the caller must confront.
    """
    if not p.grid.same_as(q.grid):
        raise ValueError("densities live on different grids")
    support = p.mass > 0
    if np.any(q.mass[support] == 0):
        bad = int(np.argmax(support & (q.mass == 0)))
        raise NonEquivalenceError(
            f"p has mass but q has none in bucket {bad} (x={p.grid.points[bad]:g})"
        )
    ps = p.mass[support]
    total = float(np.sum(ps * np.log(ps / q.mass[support])))
    # Gibbs' inequality guarantees >= 0; rounding can leave ~ -1e-17.
    return max(total, 0.0)


def density_to_csv(d: Density, path) -> None:
    """Write ``x,mass`` rows at full double precision."""
    with open(path, "w", newline="") as fh:
        fh.write("x,mass\n")
        for x, m in zip(d.grid.points, d.mass):
            fh.write(f"{x:.17g},{m:.17g}\n")


def density_from_csv(path) -> Density:
    """Read a density written by ``density_to_csv``.

    Bucket widths are reconstructed from the points by the midpoint rule,
    which matches what ``make_grid`` produces for uniform grids.
    """
    xs: list[float] = []
    ms: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:2]] != ["x", "mass"]:
            raise ValueError(f"{path}: expected header 'x,mass'")
        for row in reader:
            if not row:
                continue
            xs.append(float(row[0]))
            ms.append(float(row[1]))
    grid = grid_from_points(np.array(xs))
    return Density(grid, np.array(ms))
