"""View operators: transform the market vol curve into the believed one.

Views act on the curve rather than directly on densities, so every
believed density comes out of the same arbitrage-checked extraction as
the market one.  A view may be localized: the transformed vol is blended
back into the market vol with a Gaussian weight, which expresses "I only
question the market near this strike".
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .densities import Density, Grid
from .errors import InfeasibleViewError
from .market import VolCurve, implied_density, interpolate_vol


@dataclass(frozen=True)
class Localization:
    """Gaussian blend weight exp(-(K - center)**2 / (2 width**2))."""

    center: float
    width: float

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("localization width must be positive")

    def weight(self, strikes) -> np.ndarray:
        z = (np.asarray(strikes, dtype=float) - self.center) / self.width
        return np.exp(-0.5 * z * z)


@dataclass(frozen=True)
class DriftShift:
    """Shift the forward by a continuously-compounded return ``delta``."""

    delta: float
    localization: Localization | None = None

    def __post_init__(self):
        if self.localization is not None:
            # A drift view moves the forward, not the quotes; there is no
            # vol to blend, so a localized drift view has no meaning.
            raise ValueError("drift views cannot be localized")


@dataclass(frozen=True)
class VolShift:
    """Add ``shift`` vol points (signed) to every quote."""

    shift: float
    localization: Localization | None = None


@dataclass(frozen=True)
class SkewScale:
    """Scale each quote's distance from the ATM vol by ``scale``.

    ``scale = 1`` is the identity, ``scale = 0`` flattens the smile at the
    ATM level.  The pivot is the vol interpolated at the forward.
    """

    scale: float
    localization: Localization | None = None

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("skew scale must be >= 0")


ViewSpec = DriftShift | VolShift | SkewScale


def apply_view(curve: VolCurve, view: ViewSpec) -> VolCurve:
    """One curve transformation; raises ``InfeasibleViewError`` if any
    output vol would be non-positive."""
    if isinstance(view, DriftShift):
        forward = curve.forward * math.exp(view.delta * curve.maturity)
        return VolCurve(curve.maturity, forward, curve.strikes, curve.vols)

    if isinstance(view, VolShift):
        transformed = curve.vols + view.shift
    elif isinstance(view, SkewScale):
        atm = interpolate_vol(curve, curve.forward)
        transformed = atm + view.scale * (curve.vols - atm)
    else:
        raise TypeError(f"unknown view {view!r}")

    if view.localization is not None:
        w = view.localization.weight(curve.strikes)
        transformed = w * transformed + (1.0 - w) * curve.vols
    if np.any(transformed <= 0):
        raise InfeasibleViewError(f"view {view!r} drives implied vols below zero")
    return VolCurve(curve.maturity, curve.forward, curve.strikes, transformed)


def believed_density(market_curve: VolCurve, views, grid: Grid) -> Density:
    """Apply views left to right, then extract the density once.

    Composing views is composing curve maps; the order is the caller's
    statement of intent and is never commuted.
    """
    curve = market_curve
    for view in views:
        curve = apply_view(curve, view)
    return implied_density(curve, grid)


def view_from_dict(obj: dict) -> ViewSpec:
    """Parse one view object, e.g. {"kind": "skew_scale", "s": 0.5}."""
    kind = obj.get("kind")
    loc = obj.get("localization")
    localization = (
        Localization(center=float(loc["center"]), width=float(loc["width"]))
        if loc
        else None
    )
    if kind == "drift_shift":
        return DriftShift(delta=float(obj["delta"]), localization=localization)
    if kind == "vol_shift":
        return VolShift(shift=float(obj["v"]), localization=localization)
    if kind == "skew_scale":
        return SkewScale(scale=float(obj["s"]), localization=localization)
    raise ValueError(f"unknown view kind {kind!r}")


def view_to_dict(view: ViewSpec) -> dict:
    if isinstance(view, DriftShift):
        obj: dict = {"kind": "drift_shift", "delta": view.delta}
    elif isinstance(view, VolShift):
        obj = {"kind": "vol_shift", "v": view.shift}
    elif isinstance(view, SkewScale):
        obj = {"kind": "skew_scale", "s": view.scale}
    else:
        raise TypeError(f"unknown view {view!r}")
    if view.localization is not None:
        obj["localization"] = {
            "center": view.localization.center,
            "width": view.localization.width,
        }
    return obj


def views_from_json(path) -> list[ViewSpec]:
    """Read a JSON list of view objects (a single object is accepted too)."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    return [view_from_dict(obj) for obj in data]
