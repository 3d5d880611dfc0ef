"""Shared fixtures: a small surrogate model and a switch model."""

import numpy as np
import pytest

from pixelfas.em_model import FrequencyGrid, SurrogateParams, synth_pixel_surrogate
from pixelfas.impm import CircuitBranch, SwitchModel
from pixelfas.numerics import build_quadrature

_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_grid():
    return build_quadrature("upper-hemisphere", n_theta=16, n_phi=32)


@pytest.fixture(scope="session")
def small_model(small_grid):
    params = SurrogateParams(q=20, seed=11)
    freqs = FrequencyGrid(2.5e9, 2.5e9, 1)
    return synth_pixel_surrogate(params, small_grid, freqs)


@pytest.fixture(scope="session")
def switch_model():
    return SwitchModel(
        on_branch=CircuitBranch(topology="series", r_ohm=5.2, l_h=0.5e-9),
        off_branch=CircuitBranch(topology="series", r_ohm=9.0, l_h=0.3e-9,
                                 c_f=0.045e-12))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
