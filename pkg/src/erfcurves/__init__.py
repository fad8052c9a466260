"""Compress day-ahead auction supply and demand step curves into sums of erf terms."""

from .analytics import (
    CoefficientStats,
    FitReport,
    HourRecord,
    LayerCountStats,
    coefficient_stats,
    fit_hour,
    layer_stats,
    run_batch,
)
from .config import FitConfig
from .erf_model import ErfSumModel, ErfTerm, erf, evaluate, gradient, model_derivative
from .errors import *  # noqa: F401,F403
from .fitter import (
    FittedCurve,
    Segmentation,
    fit_curve,
    fit_segment,
    intersect_fitted,
    segment_plateau,
    segment_uniform,
)
from .ingestion import (
    Corpus,
    HourlyAuction,
    SynthParams,
    TechBand,
    generate_synthetic_corpus,
    load_corpus,
    parse_auction_csv,
    write_corpus,
)
from .lm_solver import LeastSquaresProblem, SolveResult, solve
from .market_curves import (
    DEMAND,
    SUPPLY,
    BidLayer,
    Equilibrium,
    StepCurve,
    build_demand_curve,
    build_supply_curve,
    clear_market,
    eval_step,
    truncate_curve,
)
from .reports import emit_report, render_curve_svg, render_report

__version__ = "0.1.0"
