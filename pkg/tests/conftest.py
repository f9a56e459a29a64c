"""Shared fixtures.

The four acceptance-scale experiment runs cost minutes each on one core, so
they are session-scoped and shared between the harness tests and the
acceptance gate. Each heavy fixture returns (ExperimentResult, elapsed
seconds) so tests can report wall time alongside the science.
"""

import time

import numpy as np
import pytest

from bitboundary.harness import (
    DESK_DEFAULTS,
    KIND_CLOSEST,
    KIND_FLIPS,
    KIND_GP_CHECK,
    KIND_GREEDY_VS_EXACT,
    ExperimentConfig,
    run_experiment,
)
from bitboundary.kernel import build_profile
from bitboundary.nets import DeepNet, NetworkConfig

ACCEPTANCE_SEED = 42


def acceptance_config(kind, **extra):
    """The acceptance protocol for one experiment kind, seed 42."""
    base = dict(DESK_DEFAULTS[kind])
    base.update(extra)
    return ExperimentConfig(kind=kind, seed=ACCEPTANCE_SEED, **base)


def _timed_run(config):
    t0 = time.perf_counter()
    result = run_experiment(config)
    return result, time.perf_counter() - t0


def build_linear_net(coeffs, seed=0):
    """A ReLU net computing phi(x) = w . x exactly.

    Construction: relu(w.x) - relu(-w.x) = w.x. The two first-layer rows are
    w and -w, so their preactivations are exact negations bit for bit and the
    recombined output equals the first-layer row sum exactly. With integer
    coefficients the arithmetic is exact, which makes greedy and exact search
    results hand-derivable.
    """
    w = np.asarray(coeffs, dtype=float)
    n = w.size
    config = NetworkConfig(n=n, hidden_widths=(2, 2), seed=seed)
    weights = [
        np.vstack([w, -w]),
        np.eye(2),
        np.array([[1.0, -1.0]]),
    ]
    biases = [np.zeros(2), np.zeros(2), np.zeros(1)]
    return DeepNet(config, weights, biases)


def build_constant_net(n, value, seed=0):
    """A net with phi identically equal to ``value`` (no boundary at all)."""
    config = NetworkConfig(n=n, hidden_widths=(2, 2), sigma_b2=1.0, seed=seed)
    weights = [np.zeros((2, n)), np.zeros((2, 2)), np.zeros((1, 2))]
    biases = [np.zeros(2), np.zeros(2), np.full(1, float(value))]
    return DeepNet(config, weights, biases)


@pytest.fixture(scope="session")
def default_profile():
    """The default kernel profile: sigma_w2=2, sigma_b2=0, two ReLU layers."""
    return build_profile()


@pytest.fixture(scope="session")
def closest_run():
    """Acceptance-scale nearest-boundary run (also feeds the |phi| binning)."""
    return _timed_run(acceptance_config(KIND_CLOSEST))


@pytest.fixture(scope="session")
def flips_run():
    return _timed_run(acceptance_config(KIND_FLIPS))


@pytest.fixture(scope="session")
def gp_run():
    return _timed_run(acceptance_config(KIND_GP_CHECK))


@pytest.fixture(scope="session")
def gve_run():
    return _timed_run(acceptance_config(KIND_GREEDY_VS_EXACT))
