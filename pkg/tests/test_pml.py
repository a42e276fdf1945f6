import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from biharm_pml.dtn import exact_entries, forcing_terms
from biharm_pml.errors import ConfigError, DegenerateDenominatorError, DomainError
from biharm_pml.modal import Boundary, ProblemConfig, mode_params
from biharm_pml.pml import (
    THETA_BRANCHES,
    PmlProfile,
    Region,
    closed_form_layer_coeffs,
    denominator,
    denominator_coefficient,
    denominator_unscaled,
    display_symbol,
    layer_coeffs,
    mode_extrema,
    pml_forcing,
    pml_symbol,
    stretch,
    stretch_inverse,
    symbol_error,
    theta_bound,
    weighted_symbol_error,
)

deltas = st.floats(0.3, 3.0)
small_modes = st.integers(-20, 20)
regions = st.sampled_from(list(Region))
data = st.complex_numbers(max_magnitude=10, min_magnitude=1e-3)


@pytest.mark.parametrize("kw", [dict(delta1=0), dict(delta2=-1), dict(sigma0=0), dict(m=1), dict(m=2.5)])
def test_invalid_profile(kw):
    with pytest.raises(ConfigError):
        PmlProfile(**kw)


def test_stretch_identity_in_strip(cfg, profile):
    for x2 in np.linspace(cfg.h2, cfg.h1, 7):
        assert stretch(profile, cfg, x2) == x2


@given(st.floats(0, 1))
def test_stretch_properties(s):
    cfg, profile = ProblemConfig(), PmlProfile(delta1=1.5, delta2=0.7)
    up = cfg.h1 + s * profile.delta1
    lo = cfg.h2 - s * profile.delta2
    z_up, z_lo = stretch(profile, cfg, up), stretch(profile, cfg, lo)
    assert z_up.real == up and z_up.imag >= 0
    assert z_lo.real == lo and z_lo.imag <= 0
    assert stretch_inverse(profile, cfg, z_up) == up
    assert stretch_inverse(profile, cfg, z_lo) == lo


def test_stretch_endpoints(cfg, profile):
    assert stretch(profile, cfg, cfg.h1 + profile.delta1) - cfg.h1 == pytest.approx(profile.h_tilde1)
    assert stretch(profile, cfg, cfg.h2 - profile.delta2) - cfg.h2 == pytest.approx(profile.h_tilde2)
    assert profile.h_tilde1 == pytest.approx(1 + 10j / 3)


def test_stretch_domain(cfg, profile):
    with pytest.raises(DomainError):
        stretch(profile, cfg, cfg.h1 + profile.delta1 + 0.1)
    with pytest.raises(DomainError):
        stretch_inverse(profile, cfg, 1.5 + 0j)


@given(small_modes)
def test_denominator_identity(n):
    mode = mode_params(ProblemConfig(), n)
    lhs = abs(denominator_coefficient(mode)) ** 2
    assert lhs == pytest.approx(abs(mode.gamma_plus_i_beta) ** 4, rel=1e-12)


def test_denominator_coefficient_naive_agreement(cfg):
    for n in range(-3, 4):
        mode = mode_params(cfg, n)
        b, g = mode.beta_n, mode.gamma_n
        assert denominator_coefficient(mode) == pytest.approx(1j * b * b - 1j * g * g + 2 * b * g, rel=1e-12)


@given(st.integers(-5, 5), st.floats(0.2, 1.0), regions)
def test_scaled_denominator_matches_direct(n, delta, region):
    mode = mode_params(ProblemConfig(), n)
    h = PmlProfile(delta1=delta, delta2=delta).h_tilde(region)
    den = denominator(mode, h, region)
    assert den.unscaled() == pytest.approx(denominator_unscaled(mode, h), rel=1e-10)


def test_degenerate_denominator(cfg):
    thin = PmlProfile(delta1=1e-6, delta2=1e-6)
    with pytest.raises(DegenerateDenominatorError):
        layer_coeffs(mode_params(cfg, 0), 1, 0, thin, Region.UPPER)


@given(small_modes, deltas, regions, data, data)
def test_layer_coefficients_satisfy_their_system(n, delta, region, f, g):
    mode = mode_params(ProblemConfig(), n)
    lay = layer_coeffs(mode, f, g, PmlProfile().with_delta(delta), region)
    res = lay.residuals(f, g)
    scale = max(abs(f), abs(g))
    assert np.max(np.abs(res[[0, 2]])) <= 1e-10 * scale
    assert np.max(np.abs(res[[1, 3]])) <= 1e-10 * scale * max(1.0, abs(mode.gamma_n))


@given(small_modes, st.sampled_from([0.5, 1.0, 2.0]), regions, data, data)
def test_closed_form_layer_coefficients(n, delta, region, f, g):
    mode = mode_params(ProblemConfig(), n)
    prof = PmlProfile().with_delta(delta)
    a = layer_coeffs(mode, f, g, prof, region).scaled
    b = closed_form_layer_coeffs(mode, f, g, prof, region).scaled
    assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(b))


@given(st.integers(-30, 30), deltas, st.sampled_from(list(Boundary)))
def test_display_symbol_matches_solve(n, delta, bnd):
    cfg = ProblemConfig()
    mode = mode_params(cfg, n)
    prof = PmlProfile().with_delta(delta)
    t = pml_symbol(mode, cfg.mu, prof, bnd).entries
    d = display_symbol(mode, cfg.mu, prof, bnd)
    assert np.allclose(t, d, rtol=1e-8, atol=1e-10 * np.max(np.abs(t)))


@given(st.integers(-10, 10), st.floats(0.3, 1.5), st.sampled_from(list(Boundary)))
def test_symbol_error_is_difference(n, delta, bnd):
    cfg = ProblemConfig()
    mode = mode_params(cfg, n)
    prof = PmlProfile().with_delta(delta)
    diff = pml_symbol(mode, cfg.mu, prof, bnd).entries - exact_entries(mode, cfg.mu)
    err = symbol_error(mode, cfg.mu, prof, bnd)
    assert np.allclose(err, diff, atol=1e-10 * np.max(np.abs(exact_entries(mode, cfg.mu))))


def test_pml_symbol_converges_to_exact(cfg, profile):
    mode = mode_params(cfg, 0)
    errs = [np.max(np.abs(symbol_error(mode, cfg.mu, profile.with_delta(d), Boundary.GAMMA1))) for d in (1, 2, 4, 8)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-6


def test_symbol_error_deep_modes_decay_at_gamma_rate(cfg, profile):
    """Deep evanescent modes: no cancellation floor, decay close to exp(-2 gamma delta)."""
    mode = mode_params(cfg, 30)
    e1 = np.max(np.abs(symbol_error(mode, cfg.mu, profile.with_delta(0.5), Boundary.GAMMA2)))
    e2 = np.max(np.abs(symbol_error(mode, cfg.mu, profile.with_delta(1.0), Boundary.GAMMA2)))
    assert e2 < 1e-20 * np.max(np.abs(exact_entries(mode, cfg.mu)))
    rate = math.log(e1 / e2) / 0.5
    assert rate == pytest.approx(2 * mode.gamma_n, rel=0.1)


def test_weighted_error_below_theta(cfg):
    for delta in (0.5, 1.0, 2.0):
        prof = PmlProfile().with_delta(delta)
        th = theta_bound(cfg, prof).theta
        worst = max(weighted_symbol_error(mode_params(cfg, n), cfg.mu, prof, b) for n in cfg.modes() for b in Boundary)
        assert worst <= 100 * th


def test_pml_forcing_converges(cfg, profile):
    exact = forcing_terms(cfg)
    f = pml_forcing(cfg, profile.with_delta(8))
    assert f.p1_hat == pytest.approx(exact.p1_hat, rel=1e-6)
    assert f.p2_hat == pytest.approx(exact.p2_hat, rel=1e-6)


def test_mode_extrema(cfg):
    d_minus, d_plus = mode_extrema(cfg)
    assert d_minus == pytest.approx(math.sqrt(3) / 2)
    assert d_plus == pytest.approx(math.sqrt(1.25))


def test_theta_default(cfg, profile):
    tb = theta_bound(cfg, profile)
    assert tb.theta == pytest.approx(math.exp(-2 * math.sqrt(1.25)))
    assert tb.dominant_branch in ("gamma", "evanescent")
    assert 0 < tb.theta < 1


@pytest.mark.parametrize(
    "cfg_kw, prof_kw, branch",
    [(dict(), dict(sigma0=1.0), "sigma"), (dict(theta=0.5), dict(), "evanescent"), (dict(theta=0.3, truncation=0), dict(), "gamma")],
)
def test_theta_branches(cfg_kw, prof_kw, branch):
    tb = theta_bound(ProblemConfig(**cfg_kw), PmlProfile(**prof_kw))
    assert tb.dominant_branch == branch
    assert branch in THETA_BRANCHES


def test_theta_uses_thinner_layer(cfg):
    tb = theta_bound(cfg, PmlProfile(delta1=2.0, delta2=0.5))
    assert tb.delta == 0.5
    assert theta_bound(cfg, PmlProfile(delta1=2.0, delta2=0.5), Boundary.GAMMA1).delta == 2.0
