"""Batch experiments over a corpus and corpus-level statistics."""

from __future__ import annotations

import calendar
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import FitConfig
from .errors import EmptyCorpusError, EmptyReportError, ErfCurvesError, InvalidInputError
from .fitter import FittedCurve, fit_curve, intersect_fitted
from .ingestion import Corpus, HourlyAuction
from .market_curves import (
    DEMAND,
    SUPPLY,
    build_demand_curve,
    build_supply_curve,
    clear_market,
    truncate_curve,
)

OK = "ok"
SKIPPED = "skipped"


@dataclass
class HourRecord:
    date: str
    hour: int
    status: str
    P: float | None = None
    P_appr: float | None = None
    abs_error: float | None = None
    quantity: float | None = None
    quantity_appr: float | None = None
    above_cap: bool = False
    reason: str = ""
    load_seconds: float = 0.0
    fit_seconds: float = 0.0
    intersect_seconds: float = 0.0


@dataclass
class HourResult:
    record: HourRecord
    supply_fit: FittedCurve | None = None
    demand_fit: FittedCurve | None = None


@dataclass
class FitReport:
    records: list[HourRecord]
    config: dict
    total_seconds: float = 0.0
    fits: dict = field(default_factory=dict, repr=False)

    @property
    def processed(self) -> list[HourRecord]:
        return [r for r in self.records if r.status == OK]

    @property
    def skipped(self) -> list[HourRecord]:
        return [r for r in self.records if r.status != OK]

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.abs_error for r in self.processed], dtype=float)

    @property
    def mean_abs_error(self) -> float:
        return float(np.mean(self.errors))

    @property
    def max_abs_error(self) -> float:
        return float(np.max(self.errors))

    def aggregates(self, include_timing: bool = False) -> dict:
        out = {
            "hours": len(self.records),
            "processed": len(self.processed),
            "skipped": len(self.skipped),
            "above_cap": sum(r.above_cap for r in self.processed),
            "mean_abs_error": self.mean_abs_error,
            "max_abs_error": self.max_abs_error,
        }
        if include_timing:
            out["total_seconds"] = self.total_seconds
            out["fit_seconds"] = float(sum(r.fit_seconds for r in self.records))
        return out


def fit_hour(auction: HourlyAuction, config: FitConfig, keep_fits: bool = False) -> HourResult:
    """Exact and fitted equilibrium for one hour.

    The exact price comes from the untruncated step curves; the fitted one
    from the erf models of the curves truncated at ``config.price_cap``.
    Failures are returned as skipped records, never raised.
    """
    record = HourRecord(auction.date.isoformat(), auction.hour, SKIPPED)
    t0 = time.perf_counter()
    try:
        supply = build_supply_curve(auction.offers)
        demand = build_demand_curve(auction.bids)
        exact = clear_market(supply, demand)
        record.P, record.quantity = exact.price, exact.quantity
        record.above_cap = exact.price > config.price_cap
        supply_cut = truncate_curve(supply, config.price_cap)
        demand_cut = truncate_curve(demand, config.price_cap)
    except ErfCurvesError as exc:
        record.reason = f"{type(exc).__name__}: {exc}"
        record.load_seconds = time.perf_counter() - t0
        return HourResult(record)
    t1 = time.perf_counter()
    record.load_seconds = t1 - t0
    prov = {"date": record.date, "hour": record.hour}
    try:
        fs = fit_curve(supply_cut, config.m_supply, config.method_for(SUPPLY), config, prov)
        fd = fit_curve(demand_cut, config.m_demand, config.method_for(DEMAND), config, prov)
    except ErfCurvesError as exc:
        record.reason = f"{type(exc).__name__}: {exc}"
        record.fit_seconds = time.perf_counter() - t1
        return HourResult(record)
    t2 = time.perf_counter()
    record.fit_seconds = t2 - t1
    try:
        q_max = min(supply_cut.total_quantity, demand_cut.total_quantity)
        # the side that runs out first closes vertically, as in exact clearing
        ends = DEMAND if demand_cut.total_quantity <= supply_cut.total_quantity else SUPPLY
        approx = intersect_fitted(fs.model, fd.model, q_max, ends=ends)
    except ErfCurvesError as exc:
        record.reason = f"{type(exc).__name__}: {exc}"
    else:
        record.status = OK
        record.P_appr, record.quantity_appr = approx.price, approx.quantity
        record.abs_error = abs(record.P - approx.price)
    record.intersect_seconds = time.perf_counter() - t2
    if keep_fits:
        return HourResult(record, fs, fd)
    return HourResult(record)


def _fit_chunk(args):
    auctions, config, keep_fits = args
    return [fit_hour(a, config, keep_fits) for a in auctions]


def run_batch(corpus: Corpus | Sequence[HourlyAuction], config: FitConfig | None = None,
              workers: int = 1, keep_fits: bool = False) -> FitReport:
    """Fit every hour of ``corpus`` and compare fitted and exact clearing prices.

    Hours are independent; with ``workers > 1`` they are spread over a process
    pool and reassembled in (date, hour) order, so the report does not depend
    on the worker count.  Raises :class:`EmptyReportError` if every hour was
    skipped.
    """
    config = config or FitConfig()
    auctions = sorted(corpus, key=lambda a: a.key)
    if not auctions:
        raise EmptyCorpusError("corpus has no hours")
    started = time.perf_counter()
    if workers <= 1:
        results = [fit_hour(a, config, keep_fits) for a in auctions]
    else:
        size = max(1, -(-len(auctions) // (4 * workers)))
        chunks = [(auctions[i:i + size], config, keep_fits) for i in range(0, len(auctions), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for chunk in pool.map(_fit_chunk, chunks) for r in chunk]
    report = FitReport([r.record for r in results], config.to_dict(),
                       time.perf_counter() - started)
    if keep_fits:
        report.fits = {(r.record.date, r.record.hour): (r.supply_fit, r.demand_fit)
                       for r in results if r.supply_fit is not None}
    if not report.processed:
        raise EmptyReportError(f"all {len(report.records)} hours were skipped")
    return report


# coefficient stability ----------------------------------------------------


@dataclass
class CoefficientStats:
    side: str
    n_curves: int
    rows: list[dict]  # one per term index: index, {a,b,c}_{min,mean,max}


def coefficient_stats(fitted: Sequence[FittedCurve], include_shape: bool = True) -> CoefficientStats:
    """Per-term-index min/mean/max of the fitted coefficients across curves."""
    models = [f.model if isinstance(f, FittedCurve) else f for f in fitted]
    if not models:
        raise InvalidInputError("no fitted curves")
    sides = {m.side for m in models}
    counts = {len(m) for m in models}
    if len(sides) != 1 or len(counts) != 1:
        raise InvalidInputError(f"mixed sides {sorted(sides)} or term counts {sorted(counts)}")
    names = ("a", "b", "c") if include_shape else ("a",)
    values = {
        "a": np.array([m.amplitudes for m in models]),
        "b": np.array([m.centers for m in models]),
        "c": np.array([m.shapes for m in models]),
    }
    rows = []
    for i in range(counts.pop()):
        row = {"index": i + 1}
        for name in names:
            col = values[name][:, i]
            lo, hi = float(col.min()), float(col.max())
            row[f"{name}_min"] = lo
            # clamp away rounding so identical columns give min == mean == max
            row[f"{name}_mean"] = min(max(float(col.mean()), lo), hi)
            row[f"{name}_max"] = hi
        rows.append(row)
    return CoefficientStats(sides.pop(), len(models), rows)


# layer counts ---------------------------------------------------------------


@dataclass
class LayerCountStats:
    """Mean offer/bid layer counts; each mapping goes key -> (offers, bids)."""

    by_hour: dict[int, tuple[float, float]]
    by_weekday: dict[str, tuple[float, float]]
    by_month: dict[str, tuple[float, float]]


def _means(groups):
    return {k: (float(np.mean([o for o, _ in v])), float(np.mean([b for _, b in v])))
            for k, v in groups.items()}


def layer_stats(corpus: Corpus | Sequence[HourlyAuction]) -> LayerCountStats:
    """Mean layer counts by hour of day, day of week and month (observed keys only)."""
    auctions = list(corpus)
    if not auctions:
        raise EmptyCorpusError("corpus has no hours")
    by_hour, by_day, by_month = defaultdict(list), defaultdict(list), defaultdict(list)
    for a in auctions:
        counts = (len(a.offers), len(a.bids))
        by_hour[a.hour].append(counts)
        by_day[a.date.weekday()].append(counts)
        by_month[a.date.month].append(counts)
    return LayerCountStats(
        by_hour=dict(sorted(_means(by_hour).items())),
        by_weekday={calendar.day_name[k]: v for k, v in sorted(_means(by_day).items())},
        by_month={calendar.month_name[k]: v for k, v in sorted(_means(by_month).items())},
    )
