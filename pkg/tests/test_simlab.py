import numpy as np
import pytest
import scipy.stats

from radialdwd import simlab
from radialdwd.simlab import (DirichletParams, ExperimentScenario, ScenarioError,
                              sample_dirichlet)


def test_dirichlet_uniform_mean():
    X = sample_dirichlet(DirichletParams.constant(1.0, 3), np.random.default_rng(0), 100_000)
    np.testing.assert_allclose(X.mean(axis=0), [1 / 3] * 3, atol=0.01)


def test_dirichlet_variance_matches_closed_form():
    p = DirichletParams.constant(5.0, 50)
    X = sample_dirichlet(p, np.random.default_rng(1), 50_000)
    a0 = 250.0
    analytic = 5.0 * (a0 - 5.0) / (a0 ** 2 * (a0 + 1.0))
    np.testing.assert_allclose(X.var(axis=0), analytic, rtol=0.10)
    np.testing.assert_allclose(p.variance(), analytic)


@pytest.mark.parametrize("d", [3, 50])
def test_dirichlet_small_alpha_concentration(d):
    # reference frequency from scipy's independent sampler
    ref = scipy.stats.dirichlet.rvs([0.1] * d, size=100_000, random_state=7)
    ref_frac = np.mean(ref.max(axis=1) > 0.9)
    X = sample_dirichlet(DirichletParams.constant(0.1, d), np.random.default_rng(8), 100_000)
    frac = np.mean(X.max(axis=1) > 0.9)
    assert abs(frac - ref_frac) <= 5 * np.sqrt(ref_frac * (1 - ref_frac) / 1e5) + 1e-4
    if d == 3:
        assert frac >= 0.5


def test_samples_on_simplex():
    X = sample_dirichlet(DirichletParams.constant(0.1, 1000), np.random.default_rng(3), 50)
    assert np.all(X >= 0)
    np.testing.assert_allclose(X.sum(axis=1), 1.0, atol=1e-12)


def test_dirichlet_params_validation():
    with pytest.raises(ValueError):
        DirichletParams([1.0, 0.0])


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        ExperimentScenario(1.0, 0.1, (100, 10))
    with pytest.raises(ScenarioError):
        ExperimentScenario(1.0, 0.1, (10,), replications=0)
    with pytest.raises(ScenarioError):
        ExperimentScenario(1.0, 0.1, (10,), test_class="all")


def test_scenario_round_trip_and_bundled():
    s = simlab.load_scenario("case1-desk")
    assert s.dims == (10, 100, 1000) and s.alpha_minus == 0.1
    assert (s.n_pos, s.n_neg, s.n_test, s.replications) == (20, 50, 500, 10)
    assert simlab.parse_scenario(simlab.format_scenario(s)) == s
    assert simlab.load_scenario("case2-desk").alpha_minus == 0.5
    full = s.full()
    assert full.dims[-1] == 100000 and full.replications == 30 and full.n_test == 5000


@pytest.mark.parametrize("text", ["alpha_plus = 1\n", "alpha_plus = x\nalpha_minus=1\ndims=10\n",
                                  "alpha_plus=1\nalpha_minus=1\ndims=10\nbogus=3\n",
                                  "no equals sign\n"])
def test_scenario_parse_errors(text):
    with pytest.raises(ScenarioError):
        simlab.parse_scenario(text)


def test_run_scenario_deterministic_across_runs_and_workers():
    s = ExperimentScenario(1.0, 0.1, (10, 30), n_pos=5, n_neg=8, n_test=40,
                           replications=2, seed=3)
    t1 = simlab.run_scenario(s, workers=1)
    t2 = simlab.run_scenario(s, workers=2)
    assert t1.to_csv() == t2.to_csv()
    assert t1.to_csv().splitlines()[0] == "method,d,fp_mean,fp_sd,fn_mean,fn_sd,avg_mean,avg_sd,reps"
    assert len(t1.rows) == 6
    for key, rates in t1.raw.items():
        assert np.all((rates >= 0) & (rates <= 1))
        avg = (rates[:, 0] + rates[:, 1]) / 2
        row = t1.get(*key)
        assert abs(row.avg_mean - avg.mean()) <= 1e-12
    plot = t1.to_plot_csv().splitlines()
    assert plot[0] == "method,d,metric,value" and len(plot) == 1 + 6 * 6


def test_single_class_test_sets():
    s = ExperimentScenario(1.0, 0.5, (10,), n_pos=5, n_neg=6, n_test=30,
                           replications=1, test_class="neg")
    row = simlab.run_scenario(s, methods=("md",)).get("md", 10)
    assert np.isnan(row.fn_mean) and not np.isnan(row.fp_mean)
    assert ",," in simlab.run_scenario(s, methods=("md",)).to_csv()


def test_failed_fit_is_missing_cell(monkeypatch):
    def boom(method, data, cfg=None):
        raise simlab.RdwdError("synthetic failure")
    monkeypatch.setattr(simlab, "fit_method", boom)
    s = ExperimentScenario(1.0, 0.5, (10,), n_pos=3, n_neg=3, n_test=5, replications=1)
    row = simlab.run_scenario(s, methods=("md",)).get("md", 10)
    assert row.reps == 0 and np.isnan(row.avg_mean)


def test_simulation_one_counts_shape():
    out = simlab.simulation_one(0, methods=("md",))
    assert set(out) == {"md"} and 0 <= out["md"] <= 200
