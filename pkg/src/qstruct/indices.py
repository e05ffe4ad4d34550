"""Drift-view index engine: exact likelihood ratio and its tradable form.

Under locally lognormal dynamics where the investor disagrees with the
market only about the drift, the growth-optimal payoff on the whole path
factorizes step by step.  Kept exactly, the per-step factor is

    exp(((mu - r) / sigma**2) * x  +  ((r**2 - mu**2) / (2 sigma**2)) * dt),

and to first order in dt (with the realized square return replaced by its
quadratic variation sigma**2 dt) it collapses to the excess-return index

    dI / I = ((mu - r) / sigma**2) * (x - r dt),

i.e. a Sharpe-ratio-targeted, vol-scaled excess return: the same leverage
(mu - r) / sigma**2 as the Merton/Kelly fraction.  The engine exposes both
series so the size of the substitution is measurable.

Randomness contract: every path owns an independent stream keyed by
(seed, path index), so results do not depend on chunking or worker count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedViewError, WipeoutError


@dataclass(frozen=True, eq=False)
class DynamicsSpec:
    """Per-step drift/vol/dt for a locally lognormal return process.

    Scalars broadcast to all steps; arrays must have one entry per step.
    """

    drift: np.ndarray
    vol: np.ndarray
    dt: np.ndarray
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        for name in ("drift", "vol", "dt"):
            arr = np.broadcast_to(
                np.asarray(getattr(self, name), dtype=float), (self.steps,)
            ).copy()
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.vol <= 0):
            raise ValueError("vol must be positive")
        if np.any(self.dt <= 0):
            raise ValueError("dt must be positive")

    @classmethod
    def from_json(cls, path) -> "DynamicsSpec":
        with open(path) as fh:
            obj = json.load(fh)
        return cls(
            drift=np.asarray(obj["drift"], dtype=float),
            vol=np.asarray(obj["vol"], dtype=float),
            dt=np.asarray(obj["dt"], dtype=float),
            steps=int(obj["steps"]),
        )

    def shares_clock_with(self, other: "DynamicsSpec") -> bool:
        return self.steps == other.steps and np.array_equal(self.dt, other.dt)


@dataclass(frozen=True, eq=False)
class PathSample:
    """Realized per-step returns and the level sequence they imply."""

    s0: float
    returns: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        returns = np.asarray(self.returns, dtype=float)
        levels = np.asarray(self.levels, dtype=float)
        if self.s0 <= 0:
            raise ValueError("s0 must be positive")
        if levels.shape != (returns.size + 1,):
            raise ValueError("levels must hold s0 plus one level per return")
        if np.any(levels <= 0):
            raise ValueError("levels must stay positive")
        implied = levels[:-1] * (1.0 + returns)
        if not np.allclose(implied, levels[1:], rtol=1e-12, atol=0.0):
            raise ValueError("levels are inconsistent with returns")
        returns.setflags(write=False)
        levels.setflags(write=False)
        object.__setattr__(self, "returns", returns)
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_returns(cls, s0: float, returns) -> "PathSample":
        returns = np.asarray(returns, dtype=float)
        levels = np.empty(returns.size + 1)
        levels[0] = s0
        np.cumprod(1.0 + returns, out=levels[1:])
        levels[1:] *= s0
        return cls(s0, returns, levels)

    @classmethod
    def from_levels(cls, levels) -> "PathSample":
        levels = np.asarray(levels, dtype=float)
        if levels.size < 2:
            raise ValueError("need at least two levels")
        returns = levels[1:] / levels[:-1] - 1.0
        return cls(float(levels[0]), returns, levels)


def _path_rng(seed: int, path_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(path_index,))
    )


def _returns_block(
    spec: DynamicsSpec, seed: int, start: int, count: int
) -> np.ndarray:
    out = np.empty((count, spec.steps))
    scale = spec.vol * np.sqrt(spec.dt)
    loc = spec.drift * spec.dt
    for j in range(count):
        eps = _path_rng(seed, start + j).standard_normal(spec.steps)
        out[j] = loc + scale * eps
    return out


def simulate_paths(
    spec: DynamicsSpec, s0: float, n_paths: int, seed: int
) -> list[PathSample]:
    """Draw ``n_paths`` independent paths of the spec's return process."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    block = _returns_block(spec, seed, 0, n_paths)
    return [PathSample.from_returns(s0, block[j]) for j in range(n_paths)]


def exact_ratio_step(x: float, r: float, mu: float, sigma: float, dt: float) -> float:
    """Per-step factor of the exact believed/market likelihood ratio."""
    if sigma <= 0 or dt <= 0:
        raise ValueError("sigma and dt must be positive")
    return math.exp(
        (mu - r) / sigma**2 * x + (r * r - mu * mu) / (2.0 * sigma**2) * dt
    )


def index_step(x: float, r: float, mu: float, sigma: float, dt: float) -> float:
    """Per-step relative increment of the first-order index."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return (mu - r) / sigma**2 * (x - r * dt)


@dataclass(frozen=True, eq=False)
class IndexSeries:
    """Exact-ratio and first-order index values along one path.

    Both series start at 1.  If a first-order increment reaches -1 the
    index is wiped out: ``first_order`` is truncated at the last positive
    value and ``wipeout_step`` records the fatal step (1-based).  The
    exact series is an exponential and cannot wipe out.
    """

    exact: np.ndarray
    first_order: np.ndarray
    wipeout_step: int | None = None

    def __post_init__(self):
        for name in ("exact", "first_order"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.size < 1 or arr[0] != 1.0:
                raise ValueError(f"{name} series must start at 1")
            if np.any(arr <= 0):
                raise ValueError(f"{name} series must stay positive")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _log_exact_increments(
    x: np.ndarray, market: DynamicsSpec, believed: DynamicsSpec
) -> np.ndarray:
    sig2 = market.vol**2
    return (believed.drift - market.drift) / sig2 * x + (
        market.drift**2 - believed.drift**2
    ) / (2.0 * sig2) * market.dt


def run_index(
    path: PathSample, market: DynamicsSpec, believed: DynamicsSpec
) -> IndexSeries:
    """Both series along one realized path.

    The derivation needs the two specs to share vol and clock; anything
    beyond a drift disagreement is rejected.
    """
    if not market.shares_clock_with(believed):
        raise UnsupportedViewError("market and believed specs disagree on dt/steps")
    if not np.array_equal(market.vol, believed.vol):
        raise UnsupportedViewError(
            "believed spec may differ from the market in drift only"
        )
    x = path.returns
    if x.size != market.steps:
        raise ValueError("path length does not match spec steps")

    # Log-space accumulation: no drift of the product over long horizons.
    log_exact = np.concatenate(([0.0], np.cumsum(_log_exact_increments(x, market, believed))))
    exact = np.exp(log_exact)

    increments = (believed.drift - market.drift) / market.vol**2 * (
        x - market.drift * market.dt
    )
    fatal = increments <= -1.0
    if np.any(fatal):
        stop = int(np.argmax(fatal))  # first fatal step, 0-based
        first = np.empty(stop + 1)
        first[0] = 1.0
        np.cumprod(1.0 + increments[:stop], out=first[1:])
        return IndexSeries(exact, first, wipeout_step=stop + 1)
    first = np.empty(x.size + 1)
    first[0] = 1.0
    np.cumprod(1.0 + increments, out=first[1:])
    return IndexSeries(exact, first)


@dataclass(frozen=True)
class KellyPoint:
    leverage: float
    mean_log_growth: float
    std_error: float
    n_paths: int
    n_wiped: int


def kelly_scan(
    market: DynamicsSpec,
    believed: DynamicsSpec,
    leverages,
    n_paths: int,
    seed: int,
    *,
    max_wipeout_fraction: float = 0.01,
    chunk: int = 20_000,
) -> list[KellyPoint]:
    """Mean terminal log growth of constant-leverage strategies.

    Paths are simulated under the believed measure; each leverage lam runs
    the strategy dV/V = lam * (x - r dt) on the same paths.  Wiped-out
    paths (an increment <= -1) are excluded and counted; more than
    ``max_wipeout_fraction`` of them at any leverage aborts the scan.
    """
    if not market.shares_clock_with(believed):
        raise UnsupportedViewError("market and believed specs disagree on dt/steps")
    leverages = [float(lam) for lam in leverages]
    if not leverages:
        raise ValueError("need at least one leverage")
    if n_paths < 2:
        raise ValueError("need at least 2 paths for a standard error")

    r_dt = market.drift * market.dt
    sums = np.zeros(len(leverages))
    sq_sums = np.zeros(len(leverages))
    counts = np.zeros(len(leverages), dtype=int)
    wiped = np.zeros(len(leverages), dtype=int)
    for start in range(0, n_paths, chunk):
        count = min(chunk, n_paths - start)
        x = _returns_block(believed, seed, start, count)
        excess = x - r_dt
        for i, lam in enumerate(leverages):
            y = lam * excess
            fatal = np.any(y <= -1.0, axis=1)
            ln_v = np.sum(np.log1p(y[~fatal]), axis=1)
            sums[i] += ln_v.sum()
            sq_sums[i] += np.dot(ln_v, ln_v)
            counts[i] += ln_v.size
            wiped[i] += int(fatal.sum())

    out = []
    for i, lam in enumerate(leverages):
        if wiped[i] > max_wipeout_fraction * n_paths:
            raise WipeoutError(
                f"{wiped[i]} of {n_paths} paths wiped out at leverage {lam:g}"
            )
        mean = sums[i] / counts[i]
        var = max(sq_sums[i] / counts[i] - mean * mean, 0.0)
        out.append(
            KellyPoint(
                leverage=lam,
                mean_log_growth=float(mean),
                std_error=float(math.sqrt(var / counts[i])),
                n_paths=int(counts[i]),
                n_wiped=int(wiped[i]),
            )
        )
    return out


def index_series_csv(path, series: IndexSeries) -> None:
    """Write ``step,exact,first_order`` rows; truncated entries are blank."""
    with open(path, "w", newline="") as fh:
        fh.write("step,exact,first_order\n")
        for step in range(series.exact.size):
            first = (
                f"{series.first_order[step]:.17g}"
                if step < series.first_order.size
                else ""
            )
            fh.write(f"{step},{series.exact[step]:.17g},{first}\n")
