"""Quantitative structuring toolkit.

Build growth-optimal payoffs as ratios of investor-believed to
market-implied densities, express views as vol-curve transformations,
derive drift-view indices, decompose delta-hedged P&L into realized
variance swaps, and score model risk by relative entropy.
"""

from .densities import (
    Density,
    Grid,
    Lognormal,
    Normal,
    SkewNormalParams,
    discretize,
    density_from_csv,
    density_to_csv,
    grid_from_points,
    kl_divergence,
    make_grid,
    moments,
    normal_cdf,
    normal_pdf,
    skew_normal_pdf,
)
from .errors import (
    ArbitrageError,
    CoverageError,
    DomainError,
    InfeasibleViewError,
    NonEquivalenceError,
    RankDeficientBasisError,
    StructuringError,
    UnsupportedViewError,
    WipeoutError,
)
from .hedging import (
    GammaVarDecomposition,
    HedgedPnlSpec,
    ProfileFn,
    bachelier_half_gamma,
    cubic_decomposition,
    dollar_gamma,
    hedged_pnl,
    log_realized_variances,
    swap_legs,
)
from .indices import (
    DynamicsSpec,
    IndexSeries,
    KellyPoint,
    PathSample,
    exact_ratio_step,
    index_step,
    kelly_scan,
    run_index,
    simulate_paths,
)
from .market import (
    PricingTerms,
    StatePrices,
    VolCurve,
    bs_call_price,
    implied_density,
    interpolate_vol,
    state_prices,
)
from .model_risk import (
    BucketGrid,
    ModelRiskReport,
    coarse_grain,
    model_risk_report,
    refine_and_compare,
)
from .payoffs import (
    Payoff,
    RateOfReturn,
    ReplicationPortfolio,
    expected_rate_of_return,
    growth_optimal_payoff,
    normalization,
    payoff_table_csv,
    price,
    replicate_vanilla,
)
from .views import (
    DriftShift,
    Localization,
    SkewScale,
    ViewSpec,
    VolShift,
    apply_view,
    believed_density,
    view_from_dict,
    view_to_dict,
    views_from_json,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
