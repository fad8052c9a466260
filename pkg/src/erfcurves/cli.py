"""Command line entry point: ``erfcurves {fit,batch,stats,coeffs,synth}``.

Exit status is 0 on success, 1 on a usage error and 2 on a data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analytics, reports
from .config import METHODS, FitConfig
from .erf_model import ErfSumModel
from .errors import ErfCurvesError
from .fitter import fit_curve, intersect_fitted
from .ingestion import (
    SynthParams,
    generate_synthetic_corpus,
    load_corpus,
    load_corpus_dir,
    parse_date,
    write_corpus,
)
from .market_curves import (
    DEMAND,
    SUPPLY,
    build_demand_curve,
    build_supply_curve,
    clear_market,
    truncate_curve,
)

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_input(p):
    p.add_argument("--supply-file", help="offer layers CSV (date,hour,volume,price)")
    p.add_argument("--demand-file", help="bid layers CSV (date,hour,volume,price)")
    p.add_argument("--corpus", help="directory written by 'synth' (offers.csv, bids.csv)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--skip-bad", action="store_true", help="skip malformed rows instead of failing")


def _add_fit_options(p):
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--m-supply", type=int)
    p.add_argument("--m-demand", type=int)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--price-cap", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="erfcurves", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit one hour, write the models as JSON")
    _add_input(p)
    _add_fit_options(p)
    p.add_argument("--date", help="dd-mm-yyyy or yyyy-mm-dd (required if the input has several hours)")
    p.add_argument("--hour", type=int)
    p.add_argument("--out", help="output JSON (default stdout)")
    p.add_argument("--svg", help="prefix for <prefix>_supply.svg and <prefix>_demand.svg")

    p = sub.add_parser("batch", help="fit every hour and report |P - P_appr|")
    _add_input(p)
    _add_fit_options(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="report file (default stdout)")
    p.add_argument("--models-dir", help="also write every fitted model as JSON here")
    p.add_argument("--timing", action="store_true", help="include wall-clock timings in the report")

    p = sub.add_parser("stats", help="mean layer counts by hour, weekday and month")
    _add_input(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")

    p = sub.add_parser("coeffs", help="coefficient min/mean/max over a directory of model JSON files")
    p.add_argument("--models-dir", required=True)
    p.add_argument("--side", choices=(SUPPLY, DEMAND), default=SUPPLY)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")

    p = sub.add_parser("synth", help="write a synthetic corpus")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--hours", type=int, default=24)
    p.add_argument("--supply-layers", type=int)
    p.add_argument("--demand-layers", type=int)
    p.add_argument("--config", help="JSON configuration file; generator settings under \"synth\"")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _config(args) -> FitConfig:
    base = FitConfig.load(args.config) if args.config else FitConfig()
    return base.with_overrides(m_supply=args.m_supply, m_demand=args.m_demand,
                               method=args.method, price_cap=args.price_cap)


def _corpus(args):
    if args.corpus:
        return load_corpus_dir(args.corpus)
    if not (args.supply_file and args.demand_file) and args.command != "stats":
        raise UsageError("give --supply-file and --demand-file, or --corpus")
    if not (args.supply_file or args.demand_file):
        raise UsageError("give --supply-file and/or --demand-file, or --corpus")
    return load_corpus(args.supply_file, args.demand_file, args.delimiter, args.skip_bad)


def _write(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_fit(args):
    corpus = _corpus(args)
    config = _config(args)
    if args.date is not None or args.hour is not None:
        if args.date is None or args.hour is None:
            raise UsageError("--date and --hour go together")
        auction = corpus.get(parse_date(args.date), args.hour)
    elif len(corpus) == 1:
        auction = corpus[0]
    else:
        raise UsageError(f"input has {len(corpus)} hours; pick one with --date and --hour")
    supply = build_supply_curve(auction.offers)
    demand = build_demand_curve(auction.bids)
    exact = clear_market(supply, demand)
    s_cut = truncate_curve(supply, config.price_cap)
    d_cut = truncate_curve(demand, config.price_cap)
    prov = {"date": auction.date.isoformat(), "hour": auction.hour}
    fs = fit_curve(s_cut, config.m_supply, config.method_for(SUPPLY), config, prov)
    fd = fit_curve(d_cut, config.m_demand, config.method_for(DEMAND), config, prov)
    ends = DEMAND if d_cut.total_quantity <= s_cut.total_quantity else SUPPLY
    approx = intersect_fitted(fs.model, fd.model, min(s_cut.total_quantity, d_cut.total_quantity),
                              ends=ends)
    record = {
        "date": auction.date.isoformat(),
        "hour": auction.hour,
        "P": exact.price,
        "P_appr": approx.price,
        "abs_error": abs(exact.price - approx.price),
        "supply": fs.model.to_dict(),
        "demand": fd.model.to_dict(),
        "config": config.to_dict(),
    }
    _write(json.dumps(record, indent=2) + "\n", args.out)
    if args.svg:
        reports.render_curve_svg(s_cut, fs.model, f"{args.svg}_supply.svg")
        reports.render_curve_svg(d_cut, fd.model, f"{args.svg}_demand.svg")


def cmd_batch(args):
    corpus = _corpus(args)
    config = _config(args)
    report = analytics.run_batch(corpus, config, workers=args.workers,
                                 keep_fits=bool(args.models_dir))
    if args.models_dir:
        out = Path(args.models_dir)
        out.mkdir(parents=True, exist_ok=True)
        for (date, hour), (fs, fd) in sorted(report.fits.items()):
            for fit in (fs, fd):
                name = f"{date}_h{hour:02d}_{fit.model.side}.json"
                (out / name).write_text(fit.model.to_json() + "\n")
    _write(reports.render_report(report, args.format, args.timing), args.out)
    agg = report.aggregates()
    print(f"processed {agg['processed']}/{agg['hours']} hours, mean |P - P_appr| "
          f"{agg['mean_abs_error']:.4f}, max {agg['max_abs_error']:.4f}", file=sys.stderr)


def cmd_stats(args):
    stats = analytics.layer_stats(_corpus(args))
    _write(reports.render_report(stats, args.format), args.out)


def cmd_coeffs(args):
    files = sorted(Path(args.models_dir).glob("*.json"))
    models = [ErfSumModel.from_json(f.read_text()) for f in files]
    models = [m for m in models if m.side == args.side]
    stats = analytics.coefficient_stats(models)
    _write(reports.render_report(stats, args.format), args.out)


def cmd_synth(args):
    params = None
    if args.config:
        params = SynthParams.from_dict(json.loads(Path(args.config).read_text()).get("synth", {}))
    corpus = generate_synthetic_corpus(args.seed, args.hours, args.supply_layers,
                                       args.demand_layers, params)
    write_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} hours to {args.out}", file=sys.stderr)


COMMANDS = {"fit": cmd_fit, "batch": cmd_batch, "stats": cmd_stats,
            "coeffs": cmd_coeffs, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"erfcurves: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ErfCurvesError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"erfcurves: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
