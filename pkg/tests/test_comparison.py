import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stripwave.comparison import (DecayWindowError, PhiProblem, column_amplitude,
                                  contraction_consistent, contraction_rate,
                                  decay_fit, fit_decay_profile, flat_slab,
                                  iterate_tj, make_slab, pcg, solve_phi, t_hat,
                                  verify_comparison)
from stripwave.geometry import build_mask, flat_cylinder, sinusoidal_strip
from stripwave.potential import (RadialBoundFn, build_f, compute_g, linear_bound)

THETA = 1 / math.cosh(1.0)


@pytest.fixture(scope="module")
def slab():
    return flat_slab(h=1 / 32)


@pytest.fixture(scope="module")
def f_lin():
    return linear_bound(1.0)


def zero_bound():
    r = np.linspace(0, 1, 64)
    return RadialBoundFn(r=r, g=np.zeros_like(r), f_nodes=np.zeros_like(r),
                         mode="linear", linear_c2=0.0)


def test_pcg_solves_spd_system(rng):
    A = rng.standard_normal((20, 20))
    A = A @ A.T + 20 * np.eye(20)
    b = rng.standard_normal(20)
    x, _ = pcg(lambda v: A @ v, b, np.diag(A).copy(), rtol=1e-13)
    np.testing.assert_allclose(A @ x, b, atol=1e-10)


def test_slab_shape(slab):
    assert slab.n == 64 * 32
    assert slab.dirichlet.sum() == 2 * 32
    assert slab.central.size == 2 * 32
    D = build_mask(flat_cylinder(), 1 / 16, 4)
    with pytest.raises(ValueError):
        make_slab(D, 3.5)


def test_phi_zero_f_is_constant(slab):
    sol = solve_phi(PhiProblem(slab, zero_bound(), 0.7))
    np.testing.assert_allclose(sol.phi, 0.7, rtol=1e-12)
    assert t_hat(sol) == pytest.approx(0.7, rel=1e-12)


def test_phi_cosh_profile(f_lin):
    errs = []
    for h in (1 / 16, 1 / 32):
        sl = flat_slab(h=h)
        sol = solve_phi(PhiProblem(sl, f_lin, 1.0))
        assert sol.bounds_ok
        exact = np.cosh(sl.s) / math.cosh(1.0)
        errs.append(np.abs(sol.phi - exact).max())
        # y-independent
        assert np.ptp(sol.phi[sl.central]) < 1e-12
    assert errs[1] < 2e-4 and errs[0] / errs[1] > 3.5


def test_t_hat_linear(slab, f_lin):
    sol = solve_phi(PhiProblem(slab, f_lin, 1.0))
    assert t_hat(sol) / 1.0 == pytest.approx(THETA, abs=1e-3)


def test_phi_strictly_below_t_inside(slab, product_well):
    f = build_f(compute_g(product_well), "envelope")
    t = product_well.r0 ** 2 / 4
    sol = solve_phi(PhiProblem(slab, f, t))
    assert sol.bounds_ok
    interior = ~slab.dirichlet
    assert sol.phi[interior].max() < t - 1e-9
    assert sol.phi.min() >= 0
    assert t_hat(sol) < t


def test_linear_scaling(slab, f_lin):
    base = solve_phi(PhiProblem(slab, f_lin, 1.0), tol=1e-13).phi
    for t in (0.3, 0.05):
        phi = solve_phi(PhiProblem(slab, f_lin, t), tol=1e-13).phi
        np.testing.assert_allclose(phi, t * base, rtol=0, atol=1e-12 * t + 1e-15)


def test_monotone_in_t(slab, product_well):
    f = build_f(compute_g(product_well), "envelope")
    lo = solve_phi(PhiProblem(slab, f, 0.02)).phi
    hi = solve_phi(PhiProblem(slab, f, 0.05)).phi
    assert np.all(lo <= hi + 1e-12)


def test_tj_sequence_linear(slab, f_lin):
    seq = iterate_tj(slab, f_lin, 1.0, 4)
    want = [THETA ** j for j in range(5)]
    np.testing.assert_allclose(seq.t, want, rtol=0, atol=1e-3)
    assert seq.strictly_decreasing
    assert seq.theta == pytest.approx(THETA, abs=1e-3)
    assert seq.theta_defect < 1e-12


def test_tj_sequence_envelope(slab, product_well):
    f = build_f(compute_g(product_well), "envelope")
    seq = iterate_tj(slab, f, product_well.r0 ** 2 / 4, 4)
    assert seq.strictly_decreasing
    assert seq.t[-1] < 0.25 * seq.t[0]


def test_tj_from_zero(slab, f_lin):
    seq = iterate_tj(slab, f_lin, 0.0, 3)
    assert seq.t == [0.0] * 4


def test_tj_on_sinusoidal_slab(f_lin):
    D = build_mask(sinusoidal_strip(amplitude=0.2), 1 / 16, 2)
    seq = iterate_tj(make_slab(D, 0.0), f_lin, 1.0, 3)
    assert seq.strictly_decreasing


# --- comparison with computed waves ---------------------------------------

def test_comparison_on_flat_wave(flat_pw_wave, product_well):
    w = flat_pw_wave
    rep = verify_comparison(w.domain, w.u, product_well, w.f, 2)
    assert rep.passed
    assert len(rep.checks) == 6
    assert rep.to_dict()["passed"]


def test_comparison_trivial_at_minimum(product_well):
    D = build_mask(flat_cylinder(), 1 / 16, 8)
    u = np.where((D.cell_s < 0)[:, None], product_well.a_minus, product_well.a_plus)
    f = build_f(compute_g(product_well), "envelope")
    rep = verify_comparison(D, u, product_well, f, 2, eps=0.0)
    assert rep.passed
    assert all(c.t == 0 for c in rep.checks)


def test_comparison_detects_corrupted_tail(flat_pw_wave, product_well):
    w = flat_pw_wave
    D = w.domain
    u = w.u.copy()
    # bump at the center of slab k = 2 on the plus side; the overlapping
    # slabs k = 1, 3 end there and may flag it too
    sel = np.hypot(D.cell_s - 4.0, D.cell_y - 0.5) < 0.25
    u[sel] += [0.0, 0.2]
    rep = verify_comparison(D, u, product_well, w.f, 2)
    assert not rep.passed
    bad = [c for c in rep.checks if not c.passed]
    assert ("plus", 2) in [(c.side, c.k) for c in bad]
    assert all(c.side == "plus" for c in bad)
    assert rep.worst_violation > 0.01


# --- decay fits ------------------------------------------------------------

def test_fit_exact_exponential():
    s = np.linspace(0, 8, 257)
    fit = fit_decay_profile(s, 3.0 * np.exp(-2 * s), 1e-5, 0.25)
    assert fit.k0 == pytest.approx(2.0, abs=1e-3)
    assert fit.K0 == pytest.approx(3.0, rel=1e-9)
    assert fit.fit_residual < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(0.1, 10.0))
def test_fit_recovers_rate(k0, K0):
    s = np.linspace(0, 8, 257)
    fit = fit_decay_profile(s, K0 * np.exp(-k0 * s), 1e-9, 0.25)
    assert fit.k0 == pytest.approx(k0, rel=1e-9)


def test_fit_empty_window():
    s = np.linspace(0, 1, 20)
    with pytest.raises(DecayWindowError):
        fit_decay_profile(s, np.ones_like(s), 1e-3, 0.25)


def test_decay_rates_of_waves(flat_quartic_wave, flat_pw_wave, quartic, product_well):
    for w, P, k0, tol in ((flat_quartic_wave, quartic, math.sqrt(2), 0.10),
                          (flat_pw_wave, product_well, 2 * math.sqrt(2), 0.15)):
        for side in ("plus", "minus"):
            fit = decay_fit(w.domain, w.u, P, side)
            assert fit.k0 == pytest.approx(k0, rel=tol)
            assert fit.k0_linear == pytest.approx(k0, rel=1e-6)


def test_column_amplitude_at_minimum(product_well):
    D = build_mask(flat_cylinder(), 1 / 8, 2)
    u = np.tile(product_well.a_plus, (D.n_cells, 1))
    assert np.all(column_amplitude(D, u, product_well.a_plus) == 0)


def test_contraction_consistent_with_fit(flat_pw_wave, product_well):
    w = flat_pw_wave
    seq = iterate_tj(make_slab(w.domain, 3.0), w.f, product_well.r0 ** 2 / 4, 4)
    k0 = decay_fit(w.domain, w.u, product_well, "plus").k0
    rates = contraction_rate(seq, w.domain.L)
    assert all(r > 0 for r in rates)
    assert contraction_consistent(seq, w.domain.L, k0)
