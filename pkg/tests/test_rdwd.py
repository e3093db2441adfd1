import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest

import oracles
from conftest import TOY_C, TOY_X, TOY_Y
from fixtures import bundled_fixtures
from radialdwd import TrainingSet, rdwd, simlab
from radialdwd.rdwd import RdwdConfig
from radialdwd.socp import Nonneg, SecondOrder


# -- defaults -----------------------------------------------------------------

def test_initialize_center_modes():
    ts = TrainingSet([[0, 1], [1, 0], [0.5, 0.5]], [1, 1, -1])
    np.testing.assert_array_equal(rdwd.initialize_center(ts, "mean"), [0.5, 0.5])
    ts3 = TrainingSet([[0, 0, 1], [0, 1, 0], [1, 0, 0], [0.3, 0.3, 0.4]], [1, 1, 1, -1])
    np.testing.assert_array_equal(rdwd.initialize_center(ts3, "median"), [0, 0, 0])
    np.testing.assert_array_equal(rdwd.initialize_center(ts, "explicit", [0.2, 0.8]), [0.2, 0.8])


def test_initialize_center_needs_positives():
    empty = SimpleNamespace(X=np.eye(2), y=np.array([-1.0, -1.0]), d=2)
    with pytest.raises(rdwd.EmptyPositiveClass):
        rdwd.initialize_center(empty, "mean")


def test_default_penalty_examples():
    ts = TrainingSet([[0, 0], [2, 0], [0, 5]], [1, -1, -1])
    assert rdwd.default_penalty(ts, [0.0, 0.0]) == pytest.approx(2.5)
    one = TrainingSet([[0, 0], [1, 0]], [1, -1])
    assert rdwd.default_penalty(one, [0.0, 0.0]) == pytest.approx(10.0)
    with pytest.raises(rdwd.DegenerateCenter):
        rdwd.default_penalty(one, [1.0, 0.0])


def test_default_penalty_condition_on_simulated_data():
    for seed in range(5):
        data = simlab.draw_training(np.random.default_rng(seed), 1.0, 0.1, 100, 20, 50)
        o = rdwd.initialize_center(data)
        C = rdwd.default_penalty(data, o)
        d_neg = np.linalg.norm(data.X[data.y < 0] - o, axis=1)
        assert np.all(C * d_neg ** 2 > 1)


def test_default_weights_examples():
    def ts(npos, nneg):
        return TrainingSet(np.eye(npos + nneg)[:, :1] + 0.0, [1] * npos + [-1] * nneg)
    assert rdwd.default_weights(ts(8, 24)) == (0.75, 0.25)
    assert rdwd.default_weights(ts(5, 5)) == (0.5, 0.5)
    w = rdwd.default_weights(ts(20, 50))
    assert w == pytest.approx((5 / 7, 2 / 7))


def test_config_validation():
    with pytest.raises(ValueError):
        RdwdConfig(penalty=0)
    with pytest.raises(ValueError):
        RdwdConfig(weights=(1.0, -1.0))
    with pytest.raises(ValueError):
        RdwdConfig(init_mode="explicit")
    with pytest.raises(ValueError):
        RdwdConfig(stop_eps=0)


# -- step program -------------------------------------------------------------

def test_step_layout_counts():
    X = np.array([[1.0, 0.0], [0.0, 1.0]])
    y = np.array([1.0, -1.0])
    prog, lay = rdwd.build_step_problem(X, y, np.array([0.2, 0.3]), 3.0, (1.0, 1.0), 1e-3)
    assert prog.cones.blocks == (SecondOrder(3), SecondOrder(3), SecondOrder(3),
                                 Nonneg(1), Nonneg(2))
    n, dprime = 2, 2
    assert prog.nvar == 3 * n + dprime + 2 + n == lay.nvar
    assert prog.m == 2 * n + 1
    coords = np.concatenate([lay.rho, lay.sigma, lay.tau, [lay.trust_head],
                             np.arange(prog.nvar)[lay.displacement], [lay.radius],
                             np.arange(prog.nvar)[lay.slack]])
    assert sorted(coords) == list(range(prog.nvar))
    np.testing.assert_allclose(np.linalg.norm(lay.directions, axis=1), 1.0, atol=1e-12)


def test_step_objective_vector():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    y = np.array([1.0, -1.0, -1.0])
    prog, lay = rdwd.build_step_problem(X, y, np.array([0.2, 0.3]), 7.0, (1.0, 1.0), 1e-3)
    c = prog.objective
    assert np.all(c[lay.rho] == 1.0) and np.all(c[lay.sigma] == 1.0)
    assert np.all(c[lay.slack] == 7.0)
    mask = np.ones(c.size, bool)
    mask[np.r_[lay.rho, lay.sigma]] = False
    mask[lay.slack] = False
    assert np.all(c[mask] == 0.0)


def test_step_rejects_center_on_point():
    X = np.array([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(rdwd.DegeneratePoint):
        rdwd.build_step_problem(X, np.array([1.0, -1.0]), np.array([1.0, 0.0]),
                                1.0, (1.0, 1.0), 1e-3)


# -- objective ----------------------------------------------------------------

def test_objective_matches_oracle_and_unit_weights():
    rng = np.random.default_rng(2)
    for _ in range(20):
        o, r = rng.uniform(0, 1, 2), rng.uniform(0, 0.8)
        ours = rdwd.objective(TOY_X, TOY_Y, o, r, TOY_C)
        ref = oracles.sphere_objective(TOY_X, TOY_Y, o, r, TOY_C)
        assert ours == pytest.approx(ref, rel=1e-12)
        assert rdwd.objective(TOY_X, TOY_Y, o, r, TOY_C, weights=(1.0, 1.0)) == ours


# -- fitting ------------------------------------------------------------------

def test_toy_fit_matches_grid_oracle(toy, toy_fit):
    model, _ = toy_fit
    obj, o_ref, r_ref = oracles.sphere_grid_search(TOY_X, TOY_Y, TOY_C)
    assert np.linalg.norm(model.center - o_ref) <= 0.05
    assert model.objective <= obj + 1e-6
    assert model.radius > 0
    assert np.all(rdwd.training_residuals(model, toy) > 0)
    assert model.converged


def test_trust_region_respected():
    cfg = RdwdConfig(penalty=TOY_C, weights=(1.0, 1.0))
    history, *_ = rdwd._outer_loop(TOY_X, TOY_Y, TOY_X[:4].mean(axis=0), cfg)
    steps = [np.linalg.norm(b.center - a.center) for a, b in zip(history, history[1:])]
    assert max(steps) <= cfg.step_length + 1e-10
    assert abs(history[-1].objective - history[-2].objective) < cfg.stop_eps
    # both objectives are recorded; with a 1e-3 ball the linearization error is second order
    assert math.isnan(history[0].linearized_objective)
    for rec in history[1:]:
        assert rec.linearized_objective == pytest.approx(rec.objective, rel=1e-3)


def test_identical_positive_cloud():
    p = np.array([0.3, 0.3, 0.4])
    X = np.vstack([np.tile(p, (5, 1)), np.eye(3)])
    data = TrainingSet(X, np.r_[np.ones(5), -np.ones(3)])
    model, cert = rdwd.fit(data)
    assert np.linalg.norm(model.center - p) < 1e-4
    assert np.all(rdwd.training_residuals(model, data) > 0)
    assert cert.kkt_residuals["passed"]


def test_influence_decay():
    cfg = RdwdConfig(penalty=TOY_C, weights=(1.0, 1.0))
    far = np.array([[5.0, 5.0]])
    X1, y1 = np.vstack([TOY_X, far]), np.r_[TOY_Y, -1.0]
    m1, _ = rdwd.fit(TrainingSet(X1, y1), cfg)
    assert -m1.score(far)[0] >= 10 * m1.radius
    m2, _ = rdwd.fit(TrainingSet(np.vstack([X1, far]), np.r_[y1, -1.0]), cfg)
    assert np.linalg.norm(m1.center - m2.center) <= 1e-3


def test_fit_deterministic(toy):
    a, _ = rdwd.fit(toy)
    b, _ = rdwd.fit(toy)
    assert np.array_equal(a.center, b.center) and a.radius == b.radius


def test_max_iters_warning(toy):
    with pytest.warns(rdwd.MaxItersExceeded):
        model, _ = rdwd.fit(toy, RdwdConfig(max_outer_iters=2))
    assert not model.converged


def test_shrink_on_slow_option(toy):
    from radialdwd.socp import SolverTolerances
    cfg = RdwdConfig(max_outer_iters=3, shrink_on_slow=True,
                     solver=SolverTolerances(max_iters=3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model, _ = rdwd.fit(toy, cfg)
    assert model.center.shape == (2,)


# -- QR reduction -------------------------------------------------------------

def test_reduce_qr_invariants():
    rng = np.random.default_rng(0)
    data = simlab.draw_training(rng, 1.0, 0.5, 300, 6, 6)
    red = rdwd.reduce_qr(data)
    Q = red.q_basis
    np.testing.assert_allclose(Q.T @ Q, np.eye(Q.shape[1]), atol=1e-10)
    recon = red.reduced_points @ Q.T
    assert np.linalg.norm(recon - data.X) <= 1e-10 * np.linalg.norm(data.X)


def test_reduce_qr_orthonormal_points():
    X = np.eye(5)[:3]
    red = rdwd.reduce_qr(TrainingSet(X, [1, -1, -1]))
    np.testing.assert_allclose(np.abs(red.reduced_points), np.eye(3), atol=1e-12)


def test_reduce_qr_rank_deficient():
    rng = np.random.default_rng(1)
    x = rng.dirichlet(np.ones(50), size=3)
    X = np.vstack([x, x[:2]])
    red = rdwd.reduce_qr(TrainingSet(X, [1, 1, -1, 1, 1]))
    assert np.linalg.norm(red.reduced_points @ red.q_basis.T - X) <= 1e-10


def test_qr_invariance_d1000():
    rng = np.random.default_rng(42)
    data = simlab.draw_training(rng, 1.0, 0.1, 1000, 4, 6)
    full, _ = rdwd.fit(data, reduce=False)
    red, _ = rdwd.fit(data, reduce=True)
    assert red.meta["reduced"] and not full.meta["reduced"]
    np.testing.assert_allclose(red.score(data.X), full.score(data.X), atol=1e-6)


# -- certificates -------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(bundled_fixtures()))
def test_fixture_certified(name):
    data, cfg = bundled_fixtures()[name]
    with warnings.catch_warnings():
        warnings.simplefilter("error", rdwd.MaxItersExceeded)
        model, cert = rdwd.fit(data, cfg)
    report = rdwd.kkt_check(data, model, cert, tol=1e-4)
    assert report["passed"], report
    assert model.converged


def test_kkt_detects_corrupted_dual(toy, toy_fit):
    from dataclasses import replace
    model, cert = toy_fit
    z = cert.z.copy()
    z[0] += 0.1
    bad = rdwd.kkt_check(toy, model, replace(cert, z=z))
    assert not bad["passed"]
    assert bad["label_balance"] > 1e-4 or bad["rho_relation"] > 1e-4


def test_rho_sigma_at_unit_dual():
    rho, sigma = rdwd.optimal_rho_sigma(np.ones(4))
    assert np.all(sigma == 0.0) and np.all(rho == 1.0)


def test_certificate_dual_bounds(toy, toy_fit):
    _, cert = toy_fit
    cap = cert.penalty * rdwd.point_weights(toy.y, cert.weights)
    assert np.all(cert.z >= 0) and np.all(cert.z <= cap * (1 + 1e-8))
    assert toy.y @ cert.z <= 1e-6 * np.sum(np.abs(cert.z))


def test_dual_diagnostics(toy, toy_fit):
    _, cert = toy_fit
    diag = rdwd.dual_diagnostics(cert, toy)
    assert diag.available and diag.separability > 0
    zs = diag.z_star
    assert zs[toy.y > 0].sum() == pytest.approx(1.0, abs=1e-12)
    assert zs[toy.y < 0].sum() == pytest.approx(1.0, abs=1e-12)

    # algebraic round trip: z = eta_hat z* gives back eta_hat and the same z*
    from dataclasses import replace
    z_new = diag.eta_hat * zs
    again = rdwd.dual_diagnostics(replace(cert, z=z_new), toy)
    assert again.eta == pytest.approx(diag.eta_hat, rel=1e-8)
    assert again.eta_hat == pytest.approx(diag.eta_hat, rel=1e-8)

    # eta_hat maximizes the step dual along z*, and the solver's eta is close
    f = lambda eta: rdwd.step_dual_objective(toy, cert, eta * zs)
    assert f(diag.eta_hat) >= max(f(0.99 * diag.eta_hat), f(1.01 * diag.eta_hat), f(diag.eta))
    assert diag.eta == pytest.approx(diag.eta_hat, rel=1e-3)
