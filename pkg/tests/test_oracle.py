import math

import numpy as np
import pytest

from stripwave.geometry import build_line, build_mask, flat_cylinder
from stripwave.oracle import (CenteringError, centered_profile, compare_to_2d,
                              crossing_point, solve_heteroclinic_1d)

Q_ENERGY = 2 * math.sqrt(2) / 3
PW_ENERGY = 4 * math.sqrt(2) / 3


def test_quartic_energy(ode_quartic):
    assert ode_quartic.converged
    assert ode_quartic.energy == pytest.approx(Q_ENERGY, rel=5e-3)


def test_product_well_energy(ode_pw):
    assert ode_pw.converged
    assert ode_pw.energy == pytest.approx(PW_ENERGY, rel=5e-3)


def test_endpoints(ode_quartic, ode_pw, quartic, product_well):
    assert ode_quartic.endpoints_ok(quartic)
    assert ode_pw.endpoints_ok(product_well)


def test_quartic_tanh_profile(ode_quartic, quartic):
    prof = centered_profile(ode_quartic, quartic)
    s = np.linspace(-6, 6, 241)
    err = np.abs(prof(s)[:, 0] - np.tanh(s / math.sqrt(2))).max()
    assert err <= 5e-3


def test_product_well_profile(ode_pw, product_well):
    assert np.abs(ode_pw.u[:, 1]).max() <= 1e-7
    prof = centered_profile(ode_pw, product_well)
    s = np.linspace(-3, 3, 121)
    assert np.abs(prof(s)[:, 0] - np.tanh(math.sqrt(2) * s)).max() <= 5e-3


def test_equipartition_second_order(quartic):
    defects = [solve_heteroclinic_1d(quartic, 8, h, tol=1e-9).equipartition_defect
               for h in (1 / 32, 1 / 64)]
    assert defects[0] / defects[1] >= 3


def test_translation_quotient(quartic, ode_quartic):
    # a shifted, steeper start gives the same profile after centering
    D = build_line(8, 1 / 128, L=2)
    u0 = np.clip((D.s - 0.4) / 0.5, -1, 1)
    other = solve_heteroclinic_1d(quartic, 8, 1 / 128, u0=u0)
    s = np.linspace(-5, 5, 201)
    a = centered_profile(ode_quartic, quartic)(s)
    b = centered_profile(other, quartic)(s)
    assert np.abs(a - b).max() <= 1e-3


def test_crossing_point_linear_interpolation(quartic):
    s = np.array([0.0, 1.0, 2.0])
    u = np.array([-1.0, -0.5, 0.5])
    assert crossing_point(s, u, quartic) == pytest.approx(1.5)
    with pytest.raises(CenteringError):
        crossing_point(s, np.array([-1.0, -0.9, -0.8]), quartic)


def test_compare_extruded_profile(ode_quartic, quartic):
    D = build_mask(flat_cylinder(), 1 / 32, 6)
    prof = centered_profile(ode_quartic, quartic)
    u = prof(D.cell_s)
    cmp = compare_to_2d(ode_quartic, D, u, quartic)
    assert cmp.deviation <= 1e-12
    assert cmp.y_variation == 0.0


def test_flat_wave_matches_oracle(flat_quartic_wave, ode_quartic, quartic):
    w = flat_quartic_wave
    cmp = compare_to_2d(ode_quartic, w.domain, w.u, quartic)
    assert cmp.deviation <= 2e-2
    assert cmp.y_variation <= 1e-8


def test_sinusoidal_wave_varies_in_y(sinusoidal_wave, ode_quartic, quartic):
    w = sinusoidal_wave
    cmp = compare_to_2d(ode_quartic, w.domain, w.u, quartic)
    assert cmp.y_variation > 0
    assert set(cmp.to_dict()) >= {"deviation", "y_variation", "window"}
