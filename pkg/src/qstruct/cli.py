"""Command-line front end for the structuring pipeline.

Every command reads declared input files, writes deterministic CSV/JSON
output and exits 0 on success.  Failures print a single machine-readable
``error:<category>: <message>`` line on stderr and exit with the code for
that category (see EXIT_CODES / ``--help``).
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

import numpy as np

from . import densities, hedging, indices, model_risk, payoffs, views
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
from .market import PricingTerms, VolCurve, implied_density, state_prices

EXIT_CODES = {
    "usage": 2,
    "io": 3,
    "parse": 4,
    "arbitrage": 5,
    "non-equivalence": 6,
    "infeasible-view": 7,
    "unsupported-view": 8,
    "coverage": 9,
    "wipeout": 10,
    "rank-deficient-basis": 11,
    "domain": 12,
}

_EPILOG = """\
exit codes:
  0   success
  2   usage: bad flags or argument values
  3   io: missing or unreadable/unwritable file
  4   parse: malformed CSV/JSON input
  5   arbitrage: quotes imply a materially negative density
  6   non-equivalence: mass where the reference distribution has none
  7   infeasible-view: view drives implied vols below zero
  8   unsupported-view: dynamics differ in more than drift
  9   coverage: grid/buckets do not cover the required mass
  10  wipeout: too many leveraged paths lost everything
  11  rank-deficient-basis: collinear replication instruments
  12  domain: other domain error (degenerate inputs, empty mass, ...)

file formats:
  curve CSV       header 'strike,vol'; forward/maturity/discount factor come
                  from a JSON sidecar (same path, .json suffix) with keys
                  {"forward","maturity","discount_factor"} or from flags
  views JSON      list of {"kind":"drift_shift","delta":...} /
                  {"kind":"vol_shift","v":...} / {"kind":"skew_scale","s":...},
                  each with optional {"localization":{"center":...,"width":...}}
  terms JSON      {"discount_factor":...,"commission_rate":...,"budget":...}
  dynamics JSON   {"drift":...,"vol":...,"dt":...,"steps":...} (scalars or
                  per-step arrays)
  density CSV     header 'x,mass'
  profile CSV     header 'x,value'
  hedge spec JSON {"hedge_vol":...,"maturity":...,"fixings":[...],
                  "realized_vols":[...],"dts":[...]}
  buckets JSON    {"edges":[...]} or a bare list of edges
"""


class _ParseError(Exception):
    """Input file exists but its contents do not satisfy the contract."""


@contextlib.contextmanager
def _parsing(path):
    """Re-label content errors from input loading as parse failures."""
    try:
        yield
    except (ValueError, KeyError, TypeError) as exc:
        raise _ParseError(f"{path}: {exc}") from exc


def _load_curve(args) -> tuple[VolCurve, float]:
    """Curve plus discount factor from CSV + sidecar/flags."""
    sidecar = Path(args.curve).with_suffix(".json")
    meta = {}
    if sidecar.exists():
        with _parsing(sidecar), open(sidecar) as fh:
            meta = json.load(fh)
    forward = args.forward if args.forward is not None else meta.get("forward")
    maturity = args.maturity if args.maturity is not None else meta.get("maturity")
    df = (
        args.discount_factor
        if args.discount_factor is not None
        else meta.get("discount_factor", 1.0)
    )
    if forward is None or maturity is None:
        raise ValueError(
            "forward and maturity must come from the sidecar or from "
            "--forward/--maturity"
        )
    with _parsing(args.curve):
        curve = VolCurve.from_csv(args.curve, float(maturity), float(forward))
    return curve, float(df)


def _grid_for(args, forward: float) -> densities.Grid:
    lo = args.grid_lo if args.grid_lo is not None else 0.3 * forward
    hi = args.grid_hi if args.grid_hi is not None else 3.0 * forward
    return densities.make_grid(lo, hi, args.grid_count)


def _cmd_implied_density(args) -> int:
    curve, _ = _load_curve(args)
    density = implied_density(curve, _grid_for(args, curve.forward))
    densities.density_to_csv(density, args.out)
    return 0


def _cmd_payoff(args) -> int:
    curve, df = _load_curve(args)
    grid = _grid_for(args, curve.forward)
    view_list = []
    if args.view:
        with _parsing(args.view):
            view_list = views.views_from_json(args.view)
    if args.terms:
        with _parsing(args.terms):
            terms = PricingTerms.from_json(args.terms)
    else:
        terms = PricingTerms(discount_factor=df)
    m = implied_density(curve, grid)
    b = views.believed_density(curve, view_list, grid)
    payoff = payoffs.growth_optimal_payoff(m, b, terms)
    payoffs.payoff_table_csv(args.out, grid, m, b, payoff)
    if args.summary:
        ror = payoffs.expected_rate_of_return(payoff, b)
        cost = payoffs.price(payoff, state_prices(m, terms))
        _write_json(
            args.summary,
            {
                "er": ror.er,
                "mrr": ror.mrr,
                "rfr": ror.rfr,
                "cr": ror.cr,
                "price": cost,
            },
        )
    return 0


def _load_dynamics_pair(args):
    with _parsing(args.market):
        market = indices.DynamicsSpec.from_json(args.market)
    with _parsing(args.believed):
        believed = indices.DynamicsSpec.from_json(args.believed)
    return market, believed


def _cmd_index_simulate(args) -> int:
    market, believed = _load_dynamics_pair(args)
    paths = indices.simulate_paths(market if args.measure == "market" else believed,
                                   args.s0, args.n_paths, args.seed)
    series = [indices.run_index(p, market, believed) for p in paths]
    if args.out:
        indices.index_series_csv(args.out, series[args.path_index])
    if args.stats_out:
        terminal_exact = np.array([s.exact[-1] for s in series])
        full = [s for s in series if s.wipeout_step is None]
        stats = {
            "n_paths": args.n_paths,
            "measure": args.measure,
            "mean_exact_terminal": float(terminal_exact.mean()),
            "se_exact_terminal": float(
                terminal_exact.std(ddof=1) / np.sqrt(len(series))
            ),
            "mean_log_exact_terminal": float(np.log(terminal_exact).mean()),
            "n_wiped": len(series) - len(full),
            "mean_first_order_terminal": float(
                np.mean([s.first_order[-1] for s in full])
            )
            if full
            else None,
        }
        _write_json(args.stats_out, stats)
    return 0


def _cmd_kelly_scan(args) -> int:
    market, believed = _load_dynamics_pair(args)
    leverages = [float(tok) for tok in args.leverages.split(",") if tok.strip()]
    table = indices.kelly_scan(market, believed, leverages, args.n_paths, args.seed)
    with open(args.out, "w", newline="") as fh:
        fh.write("leverage,mean_log_growth,std_error,n_paths,n_wiped\n")
        for row in table:
            fh.write(
                f"{row.leverage:.17g},{row.mean_log_growth:.17g},"
                f"{row.std_error:.17g},{row.n_paths},{row.n_wiped}\n"
            )
    return 0


def _cmd_hedged_pnl(args) -> int:
    with _parsing(args.profile):
        profile = hedging.ProfileFn.from_csv(args.profile)
    with _parsing(args.spec):
        spec = hedging.HedgedPnlSpec.from_json(args.spec)
    pnl = hedging.hedged_pnl(profile, spec, kernel=args.kernel)
    _write_json(args.out, {"pnl": pnl, "kernel": args.kernel})
    return 0


def _cmd_cubic_decompose(args) -> int:
    with _parsing(args.profile):
        profile = hedging.ProfileFn.from_csv(args.profile)
    decomp = hedging.cubic_decomposition(profile)
    _write_json(
        args.out,
        {
            "alpha": decomp.alpha,
            "beta": decomp.beta,
            "fit_residual": decomp.fit_residual,
        },
    )
    return 0


def _cmd_model_risk(args) -> int:
    with _parsing(args.b):
        b = densities.density_from_csv(args.b)
    with _parsing(args.m):
        m = densities.density_from_csv(args.m)
    with _parsing(args.buckets):
        buckets = model_risk.BucketGrid.from_json(args.buckets)
    if args.terms:
        with _parsing(args.terms):
            terms = PricingTerms.from_json(args.terms)
    else:
        terms = PricingTerms()
    report = model_risk.model_risk_report(b, m, buckets, terms)
    report.to_json(args.out)
    return 0


def _write_json(path, obj) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _add_grid_flags(sub) -> None:
    sub.add_argument("--grid-lo", type=float, default=None,
                     help="grid lower bound (default 0.3 * forward)")
    sub.add_argument("--grid-hi", type=float, default=None,
                     help="grid upper bound (default 3.0 * forward)")
    sub.add_argument("--grid-count", type=int, default=801,
                     help="grid point count (default 801)")


def _add_curve_flags(sub) -> None:
    sub.add_argument("--curve", required=True, help="quotes CSV 'strike,vol'")
    sub.add_argument("--forward", type=float, default=None)
    sub.add_argument("--maturity", type=float, default=None)
    sub.add_argument("--discount-factor", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qstruct",
        description="Growth-optimal structuring pipeline",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("implied-density", help="extract the market-implied density")
    _add_curve_flags(s)
    _add_grid_flags(s)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=_cmd_implied_density)

    s = sub.add_parser("payoff", help="build the growth-optimal payoff table")
    _add_curve_flags(s)
    _add_grid_flags(s)
    s.add_argument("--view", default=None, help="views JSON (omit for no view)")
    s.add_argument("--terms", default=None, help="pricing terms JSON")
    s.add_argument("--out", required=True, help="payoff table CSV 'x,m,b,f'")
    s.add_argument("--summary", default=None, help="optional return summary JSON")
    s.set_defaults(fn=_cmd_payoff)

    s = sub.add_parser("index-simulate", help="simulate exact and first-order index")
    s.add_argument("--market", required=True, help="market dynamics JSON")
    s.add_argument("--believed", required=True, help="believed dynamics JSON")
    s.add_argument("--s0", type=float, default=100.0)
    s.add_argument("--n-paths", type=int, default=1)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--measure", choices=("market", "believed"), default="believed",
                   help="measure to simulate under")
    s.add_argument("--path-index", type=int, default=0)
    s.add_argument("--out", default=None, help="per-step CSV for one path")
    s.add_argument("--stats-out", default=None, help="aggregate statistics JSON")
    s.set_defaults(fn=_cmd_index_simulate)

    s = sub.add_parser("kelly-scan", help="mean log growth over a leverage grid")
    s.add_argument("--market", required=True)
    s.add_argument("--believed", required=True)
    s.add_argument("--leverages", required=True, help="comma-separated leverages")
    s.add_argument("--n-paths", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=_cmd_kelly_scan)

    s = sub.add_parser("hedged-pnl", help="delta-hedged P&L accumulator")
    s.add_argument("--profile", required=True, help="profile CSV 'x,value'")
    s.add_argument("--spec", required=True, help="hedge spec JSON")
    s.add_argument("--kernel", choices=("lognormal", "bachelier"), default="lognormal")
    s.add_argument("--out", required=True)
    s.set_defaults(fn=_cmd_hedged_pnl)

    s = sub.add_parser("cubic-decompose", help="gamma-swap/variance-swap weights")
    s.add_argument("--profile", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=_cmd_cubic_decompose)

    s = sub.add_parser("model-risk", help="entropy score and materiality verdict")
    s.add_argument("--b", required=True, help="candidate density CSV")
    s.add_argument("--m", required=True, help="benchmark density CSV")
    s.add_argument("--buckets", required=True, help="bucket edges JSON")
    s.add_argument("--terms", default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=_cmd_model_risk)

    return parser


def _fail(category: str, message: str) -> int:
    print(f"error:{category}: {message}", file=sys.stderr)
    return EXIT_CODES[category]


_ERROR_CATEGORIES: tuple[tuple[type, str], ...] = (
    (ArbitrageError, "arbitrage"),
    (NonEquivalenceError, "non-equivalence"),
    (InfeasibleViewError, "infeasible-view"),
    (UnsupportedViewError, "unsupported-view"),
    (CoverageError, "coverage"),
    (WipeoutError, "wipeout"),
    (RankDeficientBasisError, "rank-deficient-basis"),
    (DomainError, "domain"),
    (StructuringError, "domain"),
    (_ParseError, "parse"),
    (json.JSONDecodeError, "parse"),
    (FileNotFoundError, "io"),
    (PermissionError, "io"),
    (OSError, "io"),
    (KeyError, "parse"),
    (ValueError, "usage"),
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except tuple(cls for cls, _ in _ERROR_CATEGORIES) as exc:
        for cls, category in _ERROR_CATEGORIES:
            if isinstance(exc, cls):
                return _fail(category, str(exc))
        raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
