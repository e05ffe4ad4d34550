"""Growth-optimal payoff construction, pricing and vanilla replication.

The payoff that maximizes expected log return under the believed density,
subject to spending the whole budget at market state prices, is the
believed/market mass ratio scaled by a normalization constant.  The
normalization N = W / ((1 + c) * DF) makes the cost identity
(1 + c) * price = W exact and splits the expected rate of return into
relative entropy plus the risk-free return minus the commission return.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .densities import Density, Grid
from .errors import NonEquivalenceError, RankDeficientBasisError
from .market import PricingTerms, StatePrices

COST_TOL = 1e-10  # |(1+c) * price - W| accepted after construction


@dataclass(frozen=True, eq=False)
class Payoff:
    """Payout per bucket (per unit budget) with its pricing terms."""

    grid: Grid
    values: np.ndarray
    terms: PricingTerms

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.points.shape:
            raise ValueError("values must have one entry per grid point")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("payoff values must be finite and non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def normalization(terms: PricingTerms) -> float:
    """The constant N in f = N * b / m."""
    return terms.budget / ((1.0 + terms.commission_rate) * terms.discount_factor)


def growth_optimal_payoff(m: Density, b: Density, terms: PricingTerms) -> Payoff:
    """f_i = N * b_i / m_i, with f_i = 0 wherever the investor sees no mass.

    Requires bucketwise equivalence in the direction that matters: the
    market must price every state the investor believes in.
    """
    if not m.grid.same_as(b.grid):
        raise ValueError("market and believed densities live on different grids")
    orphaned = (b.mass > 0) & (m.mass == 0)
    if np.any(orphaned):
        bad = int(np.argmax(orphaned))
        raise NonEquivalenceError(
            f"believed mass in bucket {bad} (x={m.grid.points[bad]:g}) "
            "has no market mass: the ratio payoff is undefined there"
        )
    n = normalization(terms)
    values = np.zeros_like(m.mass)
    active = b.mass > 0
    values[active] = n * b.mass[active] / m.mass[active]
    payoff = Payoff(m.grid, values, terms)
    cost = (1.0 + terms.commission_rate) * float(
        np.dot(terms.discount_factor * m.mass, values)
    )
    if abs(cost - terms.budget) > COST_TOL * max(1.0, terms.budget):
        raise AssertionError(f"cost invariant violated: {cost!r} != {terms.budget!r}")
    return payoff


def price(p: Payoff, sp: StatePrices) -> float:
    """Pre-commission cost of the payoff under the given state prices."""
    if not p.grid.same_as(sp.grid):
        raise ValueError("payoff and state prices live on different grids")
    return float(np.dot(sp.q, p.values))


class RateOfReturn(NamedTuple):
    er: float
    mrr: float
    rfr: float
    cr: float


def expected_rate_of_return(p: Payoff, b: Density) -> RateOfReturn:
    """Expected log return per unit of invested budget, decomposed.

    er = sum b_i ln(f_i / W); the decomposition er = mrr + rfr - cr holds
    exactly, with mrr equal to the relative entropy between believed and
    market densities whenever ``p`` is the growth-optimal payoff.
    """
    if not p.grid.same_as(b.grid):
        raise ValueError("payoff and density live on different grids")
    active = b.mass > 0
    if np.any(p.values[active] == 0):
        bad = int(np.argmax(active & (p.values == 0)))
        raise NonEquivalenceError(
            f"believed mass in bucket {bad} where the payoff pays nothing: "
            "expected log return is -inf"
        )
    er = float(
        np.dot(b.mass[active], np.log(p.values[active]))
    ) - math.log(p.terms.budget)
    rfr = p.terms.rfr
    cr = p.terms.cr
    return RateOfReturn(er=er, mrr=er - rfr + cr, rfr=rfr, cr=cr)


@dataclass(frozen=True)
class ReplicationPortfolio:
    """Weighted bond/call/put/digital approximation of a payoff."""

    bond_notional: float
    call_weights: tuple[tuple[float, float], ...]
    put_weights: tuple[tuple[float, float], ...]
    digital_weights: tuple[tuple[float, float], ...]
    residual_sup_error: float

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, self.bond_notional)
        for k, w in self.call_weights:
            out += w * np.maximum(x - k, 0.0)
        for k, w in self.put_weights:
            out += w * np.maximum(k - x, 0.0)
        for k, w in self.digital_weights:
            out += w * (x > k)
        return out


def replicate_vanilla(
    p: Payoff,
    strikes,
    *,
    digital_strikes=(),
    weight: Density | None = None,
    pivot: float | None = None,
) -> ReplicationPortfolio:
    """Least-squares fit of bond + vanillas (+ digitals) to the payoff.

    Strikes below ``pivot`` contribute puts, the rest calls (out-of-the-money
    instruments; including both sides at several strikes would make the
    basis collinear with the bond).  ``pivot`` defaults to the midpoint of
    the strike range.  The fit is weighted by ``weight`` mass when given,
    so the approximation is tightest where the market puts probability.
    """
    strikes = [float(k) for k in strikes]
    digital_strikes = [float(k) for k in digital_strikes]
    x = p.grid.points
    lo, hi = x[0], x[-1]
    inside = [k for k in strikes + digital_strikes if lo <= k <= hi]
    if not inside:
        raise ValueError("need at least one strike inside the grid range")
    if pivot is None:
        pivot = (min(strikes) + max(strikes)) / 2.0 if strikes else 0.0

    columns = [np.ones_like(x)]
    names = ["bond"]
    put_ks = sorted(k for k in strikes if k < pivot)
    call_ks = sorted(k for k in strikes if k >= pivot)
    for k in put_ks:
        columns.append(np.maximum(k - x, 0.0))
        names.append(f"put@{k:g}")
    for k in call_ks:
        columns.append(np.maximum(x - k, 0.0))
        names.append(f"call@{k:g}")
    for k in sorted(digital_strikes):
        columns.append((x > k).astype(float))
        names.append(f"digital@{k:g}")

    basis = np.column_stack(columns)
    w = np.sqrt(weight.mass) if weight is not None else np.ones_like(x)
    a = basis * w[:, None]
    rank = np.linalg.matrix_rank(a)
    if rank < basis.shape[1]:
        from scipy.linalg import qr

        _, r, perm = qr(a, mode="economic", pivoting=True)
        dependent = tuple(names[j] for j in perm[rank:])
        raise RankDeficientBasisError(
            f"replication basis is rank deficient; collinear: {', '.join(dependent)}",
            instruments=dependent,
        )
    coef, *_ = np.linalg.lstsq(a, p.values * w, rcond=None)
    residual = float(np.max(np.abs(basis @ coef - p.values)))

    i = 1
    puts = tuple((k, float(coef[i + j])) for j, k in enumerate(put_ks))
    i += len(put_ks)
    calls = tuple((k, float(coef[i + j])) for j, k in enumerate(call_ks))
    i += len(call_ks)
    digitals = tuple(
        (k, float(coef[i + j])) for j, k in enumerate(sorted(digital_strikes))
    )
    return ReplicationPortfolio(
        bond_notional=float(coef[0]),
        call_weights=calls,
        put_weights=puts,
        digital_weights=digitals,
        residual_sup_error=residual,
    )


def payoff_table_csv(path, grid: Grid, m: Density, b: Density, p: Payoff) -> None:
    """Write the plot-ready ``x,m,b,f`` table, rows ordered by x."""
    with open(path, "w", newline="") as fh:
        fh.write("x,m,b,f\n")
        for x, mm, bb, ff in zip(grid.points, m.mass, b.mass, p.values):
            fh.write(f"{x:.17g},{mm:.17g},{bb:.17g},{ff:.17g}\n")
