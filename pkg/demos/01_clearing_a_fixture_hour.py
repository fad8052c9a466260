"""Clear one hour from the bundled fixture, then fit both curves with erf terms."""

import numpy as np

from erfcurves import (
    FitConfig,
    build_demand_curve,
    build_supply_curve,
    clear_market,
    evaluate,
    fit_curve,
    intersect_fitted,
    truncate_curve,
)
from erfcurves.fitter import residual_rms
from erfcurves.ingestion import load_fixture

corpus = load_fixture()
for auction in corpus:
    print(auction.date, "hour", auction.hour, len(auction.offers), "offers,", len(auction.bids), "bids")

# %% the first hour as step curves
auction = corpus[0]
supply = build_supply_curve(auction.offers)
demand = build_demand_curve(auction.bids)
print("supply breakpoints", supply.quantities, "prices", supply.prices)
print("demand breakpoints", demand.quantities, "prices", demand.prices)  # 0 EUR bids became 3000

exact = clear_market(supply, demand)
print(f"exact clearing: {exact.price} EUR at {exact.quantity} MW")

# %% smooth both curves; with a handful of steps each band holds one jump
config = FitConfig(m_supply=5, m_demand=5)
s_cut = truncate_curve(supply, config.price_cap)
d_cut = truncate_curve(demand, config.price_cap)
fs = fit_curve(s_cut, config.m_supply)
fd = fit_curve(d_cut, config.m_demand)
for term in fs.model.terms:
    print("supply term", term)
print("supply RMS on the plateau ends", residual_rms(s_cut, fs.model))

q = np.linspace(0, s_cut.total_quantity, 7)
print(np.column_stack((q, evaluate(fs.model, q))))

approx = intersect_fitted(fs.model, fd.model, min(s_cut.total_quantity, d_cut.total_quantity),
                          ends="demand" if d_cut.total_quantity <= s_cut.total_quantity else "supply")
print(f"fitted clearing: {approx.price:.4f} EUR at {approx.quantity:.1f} MW")
print("abs error", abs(approx.price - exact.price))
