import cmath

import numpy as np
import pytest
from hypothesis import given, strategies as st

from biharm_pml.dtn import (
    apply_symbols,
    discriminant,
    discriminant_closed_form,
    exact_entries,
    exact_symbol,
    forcing_terms,
    growth_ratios,
    incident_forcing,
    l2_trace_norm_sq,
    min_form_eigenvalue,
    normal_derivative,
    positivity_threshold,
    quadratic_form,
    surface_operators,
    tbc_defect_constant,
    tbc_form,
)
from biharm_pml.errors import MissingSymbolError, NotFoundError, ResonanceError
from biharm_pml.modal import Boundary, ProblemConfig, TraceCoefficients, mode_params


def outgoing_derivs(mode, a, b, x2=0.0):
    """Derivatives of a exp(i beta x2) + b exp(-gamma x2), the outgoing field above."""
    lam = np.array([1j * mode.beta_n, -mode.gamma_n])
    e = np.array([a, b]) * np.exp(lam * x2)
    return [np.sum(e * lam**j) for j in range(4)]


@given(st.integers(-40, 40), st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5),
       st.floats(0, 0.99))
def test_exact_symbol_maps_outgoing_traces(n, a, b, mu):
    """Oracle: on any outgoing field the symbol reproduces (N1 u, M1 u) from (u, u')."""
    cfg = ProblemConfig(mu=mu)
    mode = mode_params(cfg, n)
    d = outgoing_derivs(mode, a, b)
    nm = surface_operators(Boundary.GAMMA1, mode.alpha_n, mu, d)
    got = exact_symbol(mode, mu).apply(d[0], d[1])
    scale = max(1.0, abs(mode.alpha_n) ** 3) * (abs(a) + abs(b) + 1e-300)
    assert abs(got[0] - nm[0]) <= 1e-11 * scale
    assert abs(got[1] - nm[1]) <= 1e-11 * scale


@given(st.integers(-40, 40), st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5))
def test_same_symbol_on_lower_boundary(n, h, u):
    """Below: h exp(-i beta x2) + u exp(gamma x2) with outward normal -x2."""
    cfg = ProblemConfig()
    mode = mode_params(cfg, n)
    lam = np.array([-1j * mode.beta_n, mode.gamma_n])
    d = [np.sum(np.array([h, u]) * lam**j) for j in range(4)]
    nm = surface_operators(Boundary.GAMMA2, mode.alpha_n, cfg.mu, d)
    got = exact_symbol(mode, cfg.mu, Boundary.GAMMA2).apply(d[0], normal_derivative(Boundary.GAMMA2, d[1]))
    scale = max(1.0, abs(mode.alpha_n) ** 3) * (abs(h) + abs(u) + 1e-300)
    assert np.allclose(got, nm, atol=1e-11 * scale)


def test_symbol_is_symmetric(cfg):
    for n in range(-10, 11):
        t = exact_entries(mode_params(cfg, n), cfg.mu)
        assert t[0, 1] == t[1, 0]


def test_forcing_matches_generic_evaluation(cfg):
    direct = forcing_terms(cfg)
    generic = incident_forcing(cfg, exact_symbol(mode_params(cfg, 0), cfg.mu))
    assert direct.p1_hat == pytest.approx(generic.p1_hat, rel=1e-13)
    assert direct.p2_hat == pytest.approx(generic.p2_hat, rel=1e-13)


def test_forcing_normal_incidence():
    cfg = ProblemConfig(theta=0.0, h1=0.0, h2=-1.0)
    ft = forcing_terms(cfg)
    assert ft.p1_coeff == pytest.approx(-2 - 2j)
    assert ft.p2_coeff == pytest.approx(-2 - 2j)
    assert ft.phase == pytest.approx(1)


def test_forcing_phase(cfg):
    assert forcing_terms(cfg).phase == pytest.approx(cmath.exp(-1j * cfg.beta * cfg.h1))


def test_apply_symbols_missing_mode(cfg):
    trace = TraceCoefficients(Boundary.GAMMA1, {0: (1, 0), 3: (1, 1)})
    syms = {0: exact_symbol(mode_params(cfg, 0), cfg.mu)}
    with pytest.raises(MissingSymbolError):
        apply_symbols(syms, trace)
    syms[3] = exact_symbol(mode_params(cfg, 3), cfg.mu)
    out = apply_symbols(syms, trace)
    assert set(out) == {0, 3}


def test_growth_is_bounded(cfg):
    """|t11| ~ |alpha|^3, |t12| ~ |alpha|^2, |t22| ~ |alpha| as |n| grows."""
    ratios = np.array([growth_ratios(mode_params(cfg, n), cfg.mu) for n in (50, 100, 200, -200)])
    assert np.all(ratios < 10) and np.all(ratios > 0.1)


def test_positivity_threshold_default(cfg):
    n0 = positivity_threshold(cfg)
    assert 0 <= n0 <= 100
    for n in range(n0, 60):
        for k in (n, -n):
            assert min_form_eigenvalue(mode_params(cfg, k), cfg.mu) >= -1e-12 * abs(mode_params(cfg, k).alpha_n) ** 3


def test_positivity_threshold_random_pairs(cfg):
    """Independent oracle: random complex pairs never drive the form negative past n0."""
    rng = np.random.default_rng(1)
    n0 = positivity_threshold(cfg)
    for n in list(range(n0, n0 + 5)) + [150, -150]:
        mode = mode_params(cfg, n)
        f = rng.normal(size=1000) + 1j * rng.normal(size=1000)
        g = rng.normal(size=1000) + 1j * rng.normal(size=1000)
        scale = np.linalg.norm(exact_entries(mode, cfg.mu), 2) * (abs(f) ** 2 + abs(g) ** 2)
        assert np.all(quadratic_form(mode, cfg.mu, f, g) >= -1e-12 * scale)


def test_form_is_indefinite_below_threshold(cfg):
    n0 = positivity_threshold(cfg)
    if n0 == 0:
        pytest.skip("form definite everywhere")
    worst = min(min_form_eigenvalue(mode_params(cfg, k), cfg.mu) for k in (n0 - 1, 1 - n0))
    assert worst < 0


def test_positivity_threshold_not_found(cfg):
    with pytest.raises(NotFoundError):
        positivity_threshold(cfg, n_max=1, tol=-1e9)
    with pytest.raises(ValueError):
        positivity_threshold(cfg, n_max=0)


def test_discriminants_positive_for_large_modes(cfg):
    for n in (20, 50, 100, -100):
        mode = mode_params(cfg, n)
        d = discriminant(mode, cfg.mu)
        c = discriminant_closed_form(mode, cfg.mu)
        assert abs(d.imag) <= 1e-9 * abs(d) and d.real > 0
        assert abs(c.imag) <= 1e-9 * abs(c) and c.real > 0


def test_tbc_form_lower_bound(cfg):
    """-Re<Tu,u> >= -C (||f||^2 + ||g||^2) with the computed defect constant."""
    rng = np.random.default_rng(3)
    c = tbc_defect_constant(cfg)
    assert c >= 0
    for _ in range(20):
        coeffs = {n: tuple(rng.normal(size=2) + 1j * rng.normal(size=2)) for n in cfg.modes()}
        trace = TraceCoefficients(Boundary.GAMMA1, coeffs)
        assert tbc_form(cfg, trace) >= -c * l2_trace_norm_sq(cfg, trace) - 1e-9


def test_resonant_mode_propagates_error(normal_cfg):
    with pytest.raises(ResonanceError):
        exact_symbol(mode_params(normal_cfg, 1), normal_cfg.mu)
