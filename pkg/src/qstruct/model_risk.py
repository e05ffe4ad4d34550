"""Entropy-based model-risk scoring over auditable buckets.

Two distributions for the same variable (alternative models, or two
implementations of one model) are coarse-grained onto an explicit bucket
grid and compared by relative entropy.  That number is the model-dependent
part of the expected rate of return of the payoff that would exploit the
difference, so it has a direct materiality threshold: risk is immaterial
while it stays below the commission return, equivalently while the
expected return stays below the risk-free return.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .densities import Density, Grid, kl_divergence
from .errors import CoverageError, NonEquivalenceError
from .market import PricingTerms

UNCOVERED_MASS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BucketGrid:
    """Strictly increasing edges defining the scoring buckets."""

    edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("need at least 2 edges")
        if not np.all(np.isfinite(edges)) or not np.all(np.diff(edges) > 0):
            raise ValueError("edges must be finite and strictly increasing")
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)

    @property
    def count(self) -> int:
        return self.edges.size - 1

    def midpoints(self) -> np.ndarray:
        return (self.edges[:-1] + self.edges[1:]) / 2.0

    def refines(self, coarse: "BucketGrid") -> bool:
        """True when every coarse edge appears among these edges."""
        i = np.searchsorted(self.edges, coarse.edges)
        i = np.minimum(i, self.edges.size - 1)
        return bool(np.all(np.isclose(self.edges[i], coarse.edges, rtol=1e-12, atol=1e-12)))

    @classmethod
    def from_json(cls, path) -> "BucketGrid":
        with open(path) as fh:
            obj = json.load(fh)
        edges = obj["edges"] if isinstance(obj, dict) else obj
        return cls(np.asarray(edges, dtype=float))


def coarse_grain(d: Density, buckets: BucketGrid) -> Density:
    """Sum grid mass into buckets; the top edge closes the last bucket.

    Mass falling outside the bucket range (beyond ``UNCOVERED_MASS_TOL``)
    is a ``CoverageError``: silently dropping it would bias the score.
    """
    x = d.grid.points
    idx = np.searchsorted(buckets.edges, x, side="right") - 1
    # Points exactly on the top edge belong to the last bucket.
    idx[x == buckets.edges[-1]] = buckets.count - 1
    outside = (idx < 0) | (idx >= buckets.count)
    uncovered = float(d.mass[outside].sum())
    if uncovered > UNCOVERED_MASS_TOL:
        raise CoverageError(
            f"buckets leave {uncovered:.3e} probability mass uncovered"
        )
    mass = np.bincount(idx[~outside], weights=d.mass[~outside], minlength=buckets.count)
    total = mass.sum()
    grid = Grid(buckets.midpoints(), np.diff(buckets.edges))
    return Density(grid, mass / total if total > 0 else mass)


@dataclass(frozen=True)
class ModelRiskReport:
    """Score, return decomposition and materiality verdict."""

    mrr: float
    rfr: float
    cr: float
    er: float
    verdict: str  # "safe" | "material"
    bucket_count: int
    per_bucket_contribution: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "mrr": self.mrr,
            "rfr": self.rfr,
            "cr": self.cr,
            "er": self.er,
            "verdict": self.verdict,
            "bucket_count": self.bucket_count,
            "contributions": list(self.per_bucket_contribution),
        }

    def to_json(self, path) -> None:
        with open(path, "w", newline="") as fh:
            json.dump(self.as_dict(), fh, indent=2)
            fh.write("\n")


def model_risk_report(
    b: Density, m: Density, buckets: BucketGrid, terms: PricingTerms
) -> ModelRiskReport:
    """Coarse-grain both densities and score their relative entropy.

    The function is symmetric in roles: callers decide which input is the
    candidate and which the benchmark.
    """
    cb = coarse_grain(b, buckets)
    cm = coarse_grain(m, buckets)
    support = cb.mass > 0
    orphan = support & (cm.mass == 0)
    if np.any(orphan):
        j = int(np.argmax(orphan))
        raise NonEquivalenceError(
            f"bucket {j} [{buckets.edges[j]:g}, {buckets.edges[j + 1]:g}) has "
            "mass under b but none under m"
        )
    contributions = np.zeros(buckets.count)
    contributions[support] = cb.mass[support] * np.log(
        cb.mass[support] / cm.mass[support]
    )
    mrr = kl_divergence(cb, cm)
    er = mrr + terms.rfr - terms.cr
    return ModelRiskReport(
        mrr=mrr,
        rfr=terms.rfr,
        cr=terms.cr,
        er=er,
        verdict="safe" if mrr < terms.cr else "material",
        bucket_count=buckets.count,
        per_bucket_contribution=tuple(float(c) for c in contributions),
    )


def refine_and_compare(
    b: Density, m: Density, coarse: BucketGrid, fine: BucketGrid
) -> tuple[float, float]:
    """Score on nested bucket grids; refining can only reveal more risk.

    Returns (mrr_coarse, mrr_fine).  The data-processing inequality makes
    mrr_fine >= mrr_coarse; a violation beyond rounding indicates a broken
    input and raises.
    """
    if not fine.refines(coarse):
        raise ValueError("fine bucket grid does not refine the coarse one")
    mrr_coarse = kl_divergence(coarse_grain(b, coarse), coarse_grain(m, coarse))
    mrr_fine = kl_divergence(coarse_grain(b, fine), coarse_grain(m, fine))
    if mrr_fine < mrr_coarse - 1e-12:
        raise RuntimeError(
            f"data-processing inequality violated: {mrr_fine!r} < {mrr_coarse!r}"
        )
    return mrr_coarse, mrr_fine
