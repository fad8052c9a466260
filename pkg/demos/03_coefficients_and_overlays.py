"""Coefficient spread across hours, layer counts, and an SVG overlay of one fit."""

import tempfile
from pathlib import Path

from erfcurves import FitConfig, build_supply_curve, generate_synthetic_corpus, run_batch, truncate_curve
from erfcurves.analytics import coefficient_stats, layer_stats
from erfcurves.reports import render_curve_svg, render_report

corpus = generate_synthetic_corpus(seed=3, hours=72)
config = FitConfig(m_supply=10, m_demand=5)
report = run_batch(corpus, config, keep_fits=True)

# %% how much the terms move from hour to hour
supply_fits = [fs for fs, _ in report.fits.values()]
print(render_report(coefficient_stats(supply_fits), "csv"))

# %% offer and bid counts by hour of day
stats = layer_stats(corpus)
for hour, (offers, bids) in list(stats.by_hour.items())[:6]:
    print(hour, round(offers, 1), round(bids, 1))

# %% step curve and fitted model, one SVG per side
auction = corpus[0]
fs, fd = report.fits[(auction.date.isoformat(), auction.hour)]
curve = truncate_curve(build_supply_curve(auction.offers), config.price_cap)
out = Path(tempfile.mkdtemp())
print(render_curve_svg(curve, fs.model, out / "supply.svg"))
