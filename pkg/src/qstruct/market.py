"""Vol curves, Black pricing and extraction of the market-implied density.

The market-implied density is read off quoted vanillas: the second strike
derivative of the call price is proportional to the risk-neutral density,
so we interpolate the smile, price calls on the target grid and take
central second differences.  State prices then attach the discount factor
to each bucket.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator

from .densities import Density, Grid, normal_cdf
from .errors import ArbitrageError

VOL_BAND = (0.0, 5.0)  # sanity band for quoted implied vols


@dataclass(frozen=True)
class PricingTerms:
    """Discounting, commission and budget for one product.

    ``rfr`` and ``cr`` are the continuously-compounded returns the
    discount factor and commission correspond to over the product's life;
    the payoff normalization and the model-risk verdict both use them.
    """

    discount_factor: float = 1.0
    commission_rate: float = 0.0
    budget: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.discount_factor <= 1.0:
            raise ValueError("discount_factor must be in (0, 1]")
        if self.commission_rate < 0.0:
            raise ValueError("commission_rate must be >= 0")
        if self.budget <= 0.0:
            raise ValueError("budget must be positive")

    @property
    def rfr(self) -> float:
        return -math.log(self.discount_factor)

    @property
    def cr(self) -> float:
        return math.log1p(self.commission_rate)

    @classmethod
    def from_json(cls, path) -> "PricingTerms":
        with open(path) as fh:
            obj = json.load(fh)
        return cls(
            discount_factor=float(obj.get("discount_factor", 1.0)),
            commission_rate=float(obj.get("commission_rate", 0.0)),
            budget=float(obj.get("budget", 1.0)),
        )


@dataclass(frozen=True, eq=False)
class VolCurve:
    """Implied-vol quotes for one maturity: (strike, vol) with a forward."""

    maturity: float
    forward: float
    strikes: np.ndarray
    vols: np.ndarray

    def __post_init__(self):
        strikes = np.asarray(self.strikes, dtype=float)
        vols = np.asarray(self.vols, dtype=float)
        if self.maturity <= 0:
            raise ValueError("maturity must be positive")
        if self.forward <= 0:
            raise ValueError("forward must be positive")
        if strikes.ndim != 1 or strikes.size < 3:
            raise ValueError("need at least 3 quotes for a second derivative")
        if vols.shape != strikes.shape:
            raise ValueError("vols must match strikes")
        if not np.all(np.diff(strikes) > 0):
            raise ValueError("strikes must be strictly increasing")
        if np.any(strikes <= 0):
            raise ValueError("strikes must be positive")
        lo, hi = VOL_BAND
        if np.any(vols <= lo) or np.any(vols >= hi):
            raise ValueError(f"vols must lie in ({lo}, {hi})")
        strikes.setflags(write=False)
        vols.setflags(write=False)
        object.__setattr__(self, "strikes", strikes)
        object.__setattr__(self, "vols", vols)

    @cached_property
    def _interp(self) -> PchipInterpolator:
        # Monotone cubic: no overshoot beyond adjacent quotes.
        return PchipInterpolator(self.strikes, self.vols)

    @classmethod
    def from_quotes(cls, maturity: float, forward: float, quotes) -> "VolCurve":
        ks, vs = zip(*quotes)
        return cls(maturity, forward, np.array(ks, float), np.array(vs, float))

    @classmethod
    def from_csv(cls, path, maturity: float, forward: float) -> "VolCurve":
        ks: list[float] = []
        vs: list[float] = []
        with open(path, newline="") as fh:
            import csv

            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip() for c in header[:2]] != ["strike", "vol"]:
                raise ValueError(f"{path}: expected header 'strike,vol'")
            for row in reader:
                if not row:
                    continue
                ks.append(float(row[0]))
                vs.append(float(row[1]))
        return cls(maturity, forward, np.array(ks), np.array(vs))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("strike,vol\n")
            for k, v in zip(self.strikes, self.vols):
                fh.write(f"{k:.17g},{v:.17g}\n")


def interpolate_vol(curve: VolCurve, strike) -> np.ndarray | float:
    """Monotone cubic inside the quoted range, flat beyond it.

    Flat wings deliberately add no information where nothing is quoted.
    """
    strike = np.asarray(strike, dtype=float)
    if np.any(strike <= 0):
        raise ValueError("strike must be positive")
    clipped = np.clip(strike, curve.strikes[0], curve.strikes[-1])
    out = curve._interp(clipped)
    return float(out) if out.ndim == 0 else out


def bs_call_price(forward, strike, vol, maturity, df=1.0):
    """Black formula for a call on the forward, discounted by ``df``.

    Vectorized over ``strike``/``vol``.  Tiny vols resolve to discounted
    intrinsic value through the Phi limits, so no special casing.
    """
    forward = float(forward)
    maturity = float(maturity)
    df = float(df)
    strike = np.asarray(strike, dtype=float)
    vol = np.asarray(vol, dtype=float)
    if forward <= 0 or maturity <= 0 or df <= 0:
        raise ValueError("forward, maturity and df must be positive")
    if np.any(strike <= 0) or np.any(vol <= 0):
        raise ValueError("strikes and vols must be positive")
    st = vol * math.sqrt(maturity)
    if np.any(st >= 100.0):
        raise ValueError("vol * sqrt(maturity) out of range")
    with np.errstate(divide="ignore"):
        d1 = np.log(forward / strike) / st + 0.5 * st
    price = df * (forward * normal_cdf(d1) - strike * normal_cdf(d1 - st))
    return float(price) if price.ndim == 0 else price


def implied_density(
    curve: VolCurve, grid: Grid, *, max_negative_mass: float = 0.01
) -> Density:
    """Risk-neutral density on ``grid`` by second differences of call prices.

    Small negative lobes (a finite-difference artifact) are clipped; if
    the negative mass exceeds ``max_negative_mass`` of the positive mass
    before clipping, the quotes themselves imply butterfly arbitrage and
    an ``ArbitrageError`` is raised instead of a doctored density.
    """
    x = grid.points
    if x[0] > curve.strikes[0] or x[-1] < curve.strikes[-1]:
        raise ValueError("grid must span the quoted strike range")
    if grid.size < 3:
        raise ValueError("grid too coarse for second differences")
    steps = np.diff(x)
    h = np.empty_like(x)
    h[0] = steps[0]
    h[-1] = steps[-1]
    h[1:-1] = np.minimum(steps[:-1], steps[1:])
    # Keep the down-shifted strike positive on grids that start near zero.
    h = np.minimum(h, 0.5 * x)

    def call(strikes):
        return bs_call_price(
            curve.forward, strikes, interpolate_vol(curve, strikes), curve.maturity
        )

    second = (call(x - h) - 2.0 * call(x) + call(x + h)) / h**2
    raw = second * grid.widths
    negative = -float(raw[raw < 0].sum())
    positive = float(raw[raw > 0].sum())
    if positive <= 0:
        raise ArbitrageError("call prices carry no positive convexity on this grid")
    if negative > max_negative_mass * positive:
        raise ArbitrageError(
            f"quotes imply butterfly arbitrage: negative density mass "
            f"{negative / positive:.2%} of positive (limit {max_negative_mass:.0%})"
        )
    return Density.from_weights(grid, np.clip(raw, 0.0, None))


@dataclass(frozen=True, eq=False)
class StatePrices:
    """Price today of one unit paid in each bucket: discounted implied mass."""

    grid: Grid
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.shape != self.grid.points.shape:
            raise ValueError("q must have one entry per grid point")
        if np.any(q < 0) or not np.all(np.isfinite(q)):
            raise ValueError("state prices must be finite and non-negative")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def total(self) -> float:
        """Price of the sure payoff; equals the discount factor."""
        return float(self.q.sum())


def state_prices(d: Density, terms: PricingTerms) -> StatePrices:
    return StatePrices(d.grid, terms.discount_factor * d.mass)
