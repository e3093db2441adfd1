"""Training sets used by the certification tests and the acceptance run."""
import numpy as np

from conftest import TOY_C, TOY_X, TOY_Y
from radialdwd import RdwdConfig, TrainingSet, simlab


def _sim_one(seed, d=50):
    rng = np.random.default_rng(seed)
    return simlab.draw_training(rng, 5.0, 0.5, d, 20, 20)


def _overlap():
    rng = np.random.default_rng(4)
    pos = rng.normal([0.5, 0.5], 0.12, size=(12, 2))
    neg = rng.normal([0.5, 0.5], 0.35, size=(18, 2))
    return TrainingSet(np.vstack([pos, neg]), np.r_[np.ones(12), -np.ones(18)])


def _identical_pos():
    p = np.array([0.3, 0.3, 0.4])
    X = np.vstack([np.tile(p, (5, 1)), np.eye(3)])
    return TrainingSet(X, np.r_[np.ones(5), -np.ones(3)])


def _high_dim():
    rng = np.random.default_rng(8)
    return simlab.draw_training(rng, 1.0, 0.1, 200, 10, 15)


def bundled_fixtures():
    toy = TrainingSet(TOY_X, TOY_Y)
    return {
        "toy-unit-weights": (toy, RdwdConfig(penalty=TOY_C, weights=(1.0, 1.0))),
        "toy-defaults": (toy, RdwdConfig()),
        "toy-median-init": (toy, RdwdConfig(init_mode="median")),
        "identical-positives": (_identical_pos(), RdwdConfig()),
        "overlapping-classes": (_overlap(), RdwdConfig()),
        "simulation-one-d50": (_sim_one(0), RdwdConfig()),
        "dirichlet-d200-reduced": (_high_dim(), RdwdConfig()),
    }
