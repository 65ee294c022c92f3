from __future__ import annotations

import numpy as np
import pytest

from wc4dvar.covariance import CovarianceSpec, build_D, build_R, soar_matrix
from wc4dvar.harness import ExperimentConfig, analyse, run_twin
from wc4dvar.lorenz96 import ModelConfig, integrate, spin_up
from wc4dvar.operators import BlockOperators, ObservationNetwork


@pytest.fixture(scope="session")
def cfg():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def twin(cfg):
    return run_twin(cfg)


@pytest.fixture(scope="session")
def analyses(twin):
    """Dense analyses of every named network, computed lazily and shared."""
    cache = {}

    def get(net_id):
        if net_id not in cache:
            cache[net_id] = analyse(twin, net_id)
        return cache[net_id]

    return get


@pytest.fixture(scope="session")
def alt_analysis(cfg):
    alt = cfg.alt()
    return analyse(run_twin(alt), alt.network, with_an=True)


def small_operators(n=6, steps=3, pairs=None, seed=0, sigma_o=0.3, dt=0.05):
    """A small random-trajectory instance for dense oracles."""
    mcfg = ModelConfig(n=n, dt=dt, steps=steps)
    rng = np.random.default_rng(seed)
    x0 = spin_up(8.0 + rng.standard_normal(n), mcfg, 50)
    traj = integrate(x0, mcfg)
    spec = CovarianceSpec(sigma_b=0.5, length_scale=0.2, sigma_o=sigma_o, dx=1.0 / n, distance="chordal")
    B = soar_matrix(n, spec)
    if pairs is None:
        pairs = [(t, j) for t in range(steps + 1) for j in range(0, n, 2) if (t + j) % 3]
    net = ObservationNetwork.from_pairs(n, steps, pairs)
    R = build_R(net, sigma_o) if net.p else None
    return BlockOperators(traj.stages, net, build_D(B, B, steps), R)


@pytest.fixture
def small_ops():
    return small_operators()


@pytest.fixture(scope="session")
def figures(cfg):
    """Spectra and residual curves for networks a-f under the default config."""
    from wc4dvar.harness import reproduce_figures

    return reproduce_figures(cfg)


ACCEPTANCE = []


def record_criterion(number, title, passed, detail=""):
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
