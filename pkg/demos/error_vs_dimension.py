"""How test error changes with dimension.

A scaled-down scenario (three dimensions, four replications) keeps the run
to a minute or two. As d grows, Dirichlet(0.1) draws pile into a few
coordinates and move away from the Dirichlet(1) cloud, so the sphere error
falls while the linear rules stay near chance. The same table comes out of
``radialdwd simulate case1-desk`` at larger sample sizes.
"""
from radialdwd import ExperimentScenario, run_scenario

scenario = ExperimentScenario(alpha_plus=1.0, alpha_minus=0.1, dims=(10, 100, 1000),
                              n_pos=20, n_neg=50, n_test=200, replications=4, seed=0)
table = run_scenario(scenario)

print(f"{'d':>6} " + " ".join(f"{m:>8}" for m in ("md", "ldwd", "rdwd")))
for d in scenario.dims:
    print(f"{d:>6} " + " ".join(f"{table.get(m, d).avg_mean:8.3f}" for m in ("md", "ldwd", "rdwd")))
print("\n(average of false-positive and false-negative rates)")
