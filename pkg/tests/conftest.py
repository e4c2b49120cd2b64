import json
from pathlib import Path

import numpy as np
import pytest

from hive.model import parse_config

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


def load(name):
    return parse_config(CONFIGS / name)


@pytest.fixture(scope="session")
def baseline3():
    return load("three_family.json")


@pytest.fixture(scope="session")
def multistable3():
    return load("three_family_multistable.json")


@pytest.fixture(scope="session")
def hopf3():
    return load("three_family_hopf.json")


@pytest.fixture(scope="session")
def cycling3():
    return load("three_family_cycling.json")


@pytest.fixture(scope="session")
def bistable2():
    return load("two_family_bistable.json")


@pytest.fixture(scope="session")
def five():
    return load("five_family.json")


@pytest.fixture(scope="session")
def five_sweep():
    return load("five_family_sweep.json")


def single_family(sigma=1.0, eta=0.7, c=0.7, w=1.0, A=1.0, R=5.0, B=10.0,
                  rho=1.0):
    return parse_config({
        "sigma": sigma, "budget": B, "preferences": [w],
        "resources": [{"name": "r", "R": R}],
        "families": [{"name": "f", "A": A, "c": c, "eta": eta, "rho": rho,
                      "alpha": [1.0], "gamma": [0.0]}],
    })


def random_config(rng, S=2, M=2, sigma=None, gamma_scale=0.0, eta_hi=0.9):
    """Admissible random config; gamma_scale=0 gives an externality-free
    instance where the fitness equals the welfare gradient exactly."""
    if sigma is None:
        sigma = float(rng.uniform(0.4, 1.2))
    w = rng.uniform(0.5, 1.5, S)
    w = w / w.sum()
    alpha = rng.uniform(0.2, 1.0, (S, M))
    alpha = alpha / alpha.sum(axis=1, keepdims=True)
    gamma = np.zeros((S, S))
    if gamma_scale > 0:
        gamma = rng.uniform(-gamma_scale, gamma_scale, (S, S))
        np.fill_diagonal(gamma, 0.0)
    doc = {
        "sigma": sigma, "budget": float(rng.uniform(5, 20)),
        "preferences": w.tolist(),
        "resources": [{"name": f"r{m}", "R": float(rng.uniform(3, 12))}
                       for m in range(M)],
        "families": [
            {"name": f"f{j}", "A": float(rng.uniform(0.5, 2.0)),
             "c": float(rng.uniform(0.3, 1.0)),
             "eta": float(rng.uniform(0.4, eta_hi)),
             "rho": float(rng.choice([0.6, 0.8, 1.0, 1.3])),
             "alpha": alpha[j].tolist(), "gamma": gamma[j].tolist()}
            for j in range(S)
        ],
    }
    return parse_config(doc)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from test_acceptance import RESULTS
    except Exception:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line, _clauses in RESULTS:
        terminalreporter.write_line(line)
