"""Shared fixtures. Desk-scale solves are cached for the whole session."""

import numpy as np
import pytest

from stripwave.geometry import flat_cylinder, sinusoidal_strip
from stripwave.oracle import solve_heteroclinic_1d
from stripwave.potential import ProductWell, ScalarQuartic
from stripwave.wave import solve_standing_wave


@pytest.fixture(scope="session")
def quartic():
    return ScalarQuartic()


@pytest.fixture(scope="session")
def product_well():
    return ProductWell()


@pytest.fixture(scope="session")
def flat_quartic_wave(quartic):
    return solve_standing_wave(quartic, flat_cylinder(), 1 / 32, 8, 2)


@pytest.fixture(scope="session")
def flat_pw_wave(product_well):
    return solve_standing_wave(product_well, flat_cylinder(), 1 / 32, 8, 2)


@pytest.fixture(scope="session")
def sinusoidal_wave(quartic):
    return solve_standing_wave(quartic, sinusoidal_strip(amplitude=0.2), 1 / 32, 8, 2)


@pytest.fixture(scope="session")
def ode_quartic(quartic):
    return solve_heteroclinic_1d(quartic, 8, 1 / 128)


@pytest.fixture(scope="session")
def ode_pw(product_well):
    return solve_heteroclinic_1d(product_well, 8, 1 / 128)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# --- acceptance reporting ----------------------------------------------------

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per criterion; returns ``record(n, ok, detail)``."""
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
