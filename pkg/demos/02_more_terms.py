"""How the fitted clearing price improves as the supply curve gets more erf terms."""

from erfcurves import FitConfig, generate_synthetic_corpus, run_batch

corpus = generate_synthetic_corpus(seed=2017, hours=48)
print(len(corpus), "synthetic hours")

# %% supply terms against mean |P - P_appr|; demand stays at 5 terms
for m in (3, 5, 10, 15, 25):
    report = run_batch(corpus, FitConfig(m_supply=m, m_demand=5))
    agg = report.aggregates()
    print(f"M={m:2d}  mean {agg['mean_abs_error']:.3f} EUR  max {agg['max_abs_error']:.3f} EUR  "
          f"skipped {agg['skipped']}")

# %% uniform price levels instead of the widest plateaus
for m in (5, 15):
    report = run_batch(corpus, FitConfig(m_supply=m, m_demand=5, method="uniform"))
    print(f"uniform M={m:2d}  mean {report.mean_abs_error:.3f} EUR")
