"""Perfectly matched layers: coordinate stretching, layer solves and PML DtN symbols.

Inside a layer each mode is a combination of the four exponentials
``exp(lam_k t)``, ``lam = (-i beta, i beta, gamma, -gamma)``, in the stretched
offset ``t = x2~ - h_k``.  The outer edge sits at ``t = h~_k`` with
``h~_1 = delta1 (1 + i sigma0/(m+1))`` and ``h~_2 = -delta2 (1 + i sigma0/(m+1))``.

``exp(2 gamma_n h~)`` overflows doubles once ``gamma_n delta`` passes ~350, so
every coefficient is stored against a per-function anchor: basis functions
that grow along the layer are referenced to the outer edge, decaying ones to
the interface.  All stored numbers are then O(1) or smaller.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .dtn import DtnSymbol, ForcingTerms, incident_forcing, surface_operators
from .errors import ConfigError, DegenerateDenominatorError, DomainError, ResonanceError
from .modal import Boundary, ModeParams, ProblemConfig, mode_params

DEGENERATE_TOL = 1e-10


class Region(str, enum.Enum):
    UPPER = "Upper"
    LOWER = "Lower"

    @classmethod
    def of(cls, boundary: Boundary) -> "Region":
        return cls.UPPER if Boundary(boundary) is Boundary.GAMMA1 else cls.LOWER


@dataclass(frozen=True)
class PmlProfile:
    delta1: float = 1.0
    delta2: float = 1.0
    sigma0: float = 10.0
    m: int = 2

    def __post_init__(self):
        if not (self.delta1 > 0 and self.delta2 > 0):
            raise ConfigError("layer thicknesses must be positive")
        if not self.sigma0 > 0:
            raise ConfigError("sigma0 must be positive")
        if int(self.m) != self.m or self.m < 2:
            raise ConfigError("stretching order m must be an integer >= 2")

    @property
    def stretch_factor(self) -> complex:
        return 1 + 1j * self.sigma0 / (self.m + 1)

    @property
    def h_tilde1(self) -> complex:
        return self.delta1 * self.stretch_factor

    @property
    def h_tilde2(self) -> complex:
        return -self.delta2 * self.stretch_factor

    def h_tilde(self, region: Region) -> complex:
        return self.h_tilde1 if Region(region) is Region.UPPER else self.h_tilde2

    def delta(self, region: Region) -> float:
        return self.delta1 if Region(region) is Region.UPPER else self.delta2

    def with_delta(self, delta: float) -> "PmlProfile":
        return replace(self, delta1=delta, delta2=delta)


# stretching -----------------------------------------------------------------


def stretch(profile: PmlProfile, cfg: ProblemConfig, x2: float) -> complex:
    """Stretched coordinate ``phi(x2)``; the identity inside the strip."""
    h1, h2 = cfg.h1, cfg.h2
    d1, d2, s0, m = profile.delta1, profile.delta2, profile.sigma0, profile.m
    tol = 1e-12 * max(1.0, abs(h1), abs(h2), d1, d2)
    if x2 > h1 + d1 + tol or x2 < h2 - d2 - tol:
        raise DomainError(f"x2={x2} lies outside the padded strip [{h2 - d2}, {h1 + d1}]")
    if x2 > h1:
        return complex(x2, s0 * d1 / (m + 1) * ((x2 - h1) / d1) ** (m + 1))
    if x2 < h2:
        return complex(x2, -s0 * d2 / (m + 1) * ((h2 - x2) / d2) ** (m + 1))
    return complex(x2, 0.0)


def stretch_inverse(profile: PmlProfile, cfg: ProblemConfig, x2_tilde: complex) -> float:
    """Inverse ``psi`` of :func:`stretch` on its image curve (``Re phi(x2) = x2``)."""
    x2 = float(np.real(x2_tilde))
    back = stretch(profile, cfg, x2)
    if abs(back - x2_tilde) > 1e-10 * max(1.0, abs(x2_tilde)):
        raise DomainError(f"{x2_tilde} is not on the stretched contour")
    return x2


# layer systems -----------------------------------------------------------------


def basis_exponents(mode: ModeParams) -> np.ndarray:
    """``(-i beta, i beta, gamma, -gamma)``: the W, V, X, Y basis in the layer."""
    b, g = mode.beta_n, mode.gamma_n
    return np.array([-1j * b, 1j * b, g, -g], dtype=complex)


def basis_anchors(mode: ModeParams, h_tilde: complex) -> np.ndarray:
    """Offset each basis function is referenced to (``h~`` if it grows along the layer)."""
    lam = basis_exponents(mode)
    return np.where(np.real(lam * h_tilde) > 0, h_tilde, 0j)


@dataclass(frozen=True)
class ScaledDenominator:
    """``D = exp(log_scaling) * value`` with ``value`` of order one."""

    value: complex
    log_scaling: complex

    @property
    def scaling(self) -> complex:
        return cmath.exp(self.log_scaling)

    def unscaled(self) -> complex:
        return self.value * self.scaling


def _exponent_table(mode: ModeParams, h: complex) -> dict[str, complex]:
    b, g = mode.beta_n, mode.gamma_n
    return {
        "1": 0j,
        "B": 2j * b * h,  # e^{2 i beta h}
        "G": 2 * g * h,  # e^{2 gamma h}
        "H": (1j * b + g) * h,  # e^{(i beta + gamma) h}
        "BG": 2 * (1j * b + g) * h,
    }


def _log_scaling(mode: ModeParams, h: complex, region: Region) -> complex:
    if Region(region) is Region.UPPER:
        return 2 * mode.gamma_n * h
    return 2j * mode.beta_n * h


def denominator_coefficient(mode: ModeParams) -> complex:
    """``i beta^2 - i gamma^2 + 2 beta gamma`` evaluated stably.

    ``beta^2 - gamma^2 = -2 alpha^2``; for evanescent modes ``|beta| gamma - alpha^2``
    equals ``-kappa^4 / (|beta| gamma + alpha^2)``.
    """
    a2, g = mode.alpha_n**2, mode.gamma_n
    if mode.propagating:
        return complex(2 * mode.beta_n.real * g, -2 * a2)
    b = mode.beta_n.imag
    return complex(0.0, -2 * mode.kappa**4 / (b * g + a2))


def _denominator_terms(mode: ModeParams):
    b, g = mode.beta_n, mode.gamma_n
    c_minus = -1j * b * b + 1j * g * g + 2 * b * g
    c_plus = denominator_coefficient(mode)
    return [(-8 * b * g, "H"), (c_minus, "1"), (c_minus, "BG"), (c_plus, "B"), (c_plus, "G")]


def _sum_terms(terms, exps: dict[str, complex], shift: complex) -> complex:
    return complex(sum(c * cmath.exp(exps[key] + shift) for c, key in terms))


def denominator(mode: ModeParams, h_tilde: complex, region: Region) -> ScaledDenominator:
    """Layer-system denominator with its dominant exponential factored out.

    The factor is ``exp(2 gamma h~1)`` above and ``exp(2 i beta h~2)`` below.
    """
    region = Region(region)
    log_s = _log_scaling(mode, h_tilde, region)
    exps = _exponent_table(mode, h_tilde)
    value = _sum_terms(_denominator_terms(mode), exps, -log_s)
    g_ib = mode.gamma_plus_i_beta
    if abs(value) < DEGENERATE_TOL * abs(g_ib) ** 2:
        raise DegenerateDenominatorError(
            f"layer denominator vanishes for n={mode.n} (|D|/scale = {abs(value):.3e})"
        )
    return ScaledDenominator(value, log_s)


def denominator_unscaled(mode: ModeParams, h_tilde: complex) -> complex:
    """Direct four-term evaluation; overflows for thick layers or large ``|n|``."""
    exps = _exponent_table(mode, h_tilde)
    return _sum_terms(_denominator_terms(mode), exps, 0j)


@dataclass(frozen=True)
class LayerCoefficients:
    """Per-mode layer field ``sum_k c_k exp(lam_k t)`` stored as ``c_k = scaled_k exp(-lam_k a_k)``."""

    region: Region
    n: int
    mode: ModeParams
    h_tilde: complex
    scaled: np.ndarray
    anchors: np.ndarray
    denominator: ScaledDenominator

    @property
    def lam(self) -> np.ndarray:
        return basis_exponents(self.mode)

    @property
    def unscaled(self) -> np.ndarray:
        """Coefficients ``(W, V, X, Y)`` in the unanchored basis (may overflow)."""
        with np.errstate(over="ignore", invalid="ignore"):
            return self.scaled * np.exp(-self.lam * self.anchors)

    @property
    def w(self) -> complex:
        return complex(self.unscaled[0])

    @property
    def v(self) -> complex:
        return complex(self.unscaled[1])

    @property
    def x(self) -> complex:
        return complex(self.unscaled[2])

    @property
    def y(self) -> complex:
        return complex(self.unscaled[3])

    def derivs(self, t: complex, order: int = 3) -> list[complex]:
        """``d^j/dt^j`` of the layer field at stretched offset ``t``, j=0..order."""
        lam = self.lam
        e = self.scaled * np.exp(lam * (t - self.anchors))
        return [complex(np.sum(e * lam**j)) for j in range(order + 1)]

    def residuals(self, fhat: complex, ghat: complex) -> np.ndarray:
        """Residuals of the four defining equations (data rows then outer rows)."""
        sign = 1 if self.region is Region.UPPER else -1
        d0 = self.derivs(0j, 1)
        dh = self.derivs(self.h_tilde, 1)
        return np.array([d0[0] - fhat, d0[1] - sign * ghat, dh[0], dh[1]])


def _layer_matrix(lam: np.ndarray, anchors: np.ndarray, h: complex) -> np.ndarray:
    e0 = np.exp(-lam * anchors)
    eh = np.exp(lam * (h - anchors))
    return np.array([e0, lam * e0, eh, lam * eh])


def _solve_layer(mode: ModeParams, h: complex, rhs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam = basis_exponents(mode)
    anchors = basis_anchors(mode, h)
    mat = _layer_matrix(lam, anchors, h)
    scale = np.max(np.abs(lam))
    mat[[1, 3]] /= scale
    rhs = np.array(rhs, dtype=complex)
    rhs[[1, 3]] /= scale
    return np.linalg.solve(mat, rhs), anchors


def layer_coeffs(
    mode: ModeParams, fhat: complex, ghat: complex, profile: PmlProfile, region: Region
) -> LayerCoefficients:
    """Solve the 4x4 layer system for data ``(u, d_nu u) = (fhat, ghat)`` on the interface.

    The outward normal is ``+x2`` on Gamma1 and ``-x2`` on Gamma2, so the
    derivative row carries ``-ghat`` for the lower layer.
    """
    region = Region(region)
    h = profile.h_tilde(region)
    den = denominator(mode, h, region)
    sign = 1 if region is Region.UPPER else -1
    scaled, anchors = _solve_layer(mode, h, [fhat, sign * ghat, 0, 0])
    return LayerCoefficients(region, mode.n, mode, h, scaled, anchors, den)


def _closed_form_terms(mode: ModeParams):
    """Numerator terms for ``(W, V, X, Y) * D`` as ``(f_terms, g_terms)`` per coefficient.

    ``g_terms`` are written for the lower layer; the upper layer flips their sign.
    """
    b, g = mode.beta_n, mode.gamma_n
    bg = b * g
    return [
        (  # W
            [(g * b - 1j * g * g, "B"), (-2 * bg, "H"), (g * b + 1j * g * g, "BG")],
            [(b - 1j * g, "B"), (2j * g, "H"), (-(1j * g + b), "BG")],
        ),
        (  # V
            [(bg + 1j * g * g, "1"), (g * b - 1j * g * g, "G"), (-2 * bg, "H")],
            [(b + 1j * g, "1"), (-(b - 1j * g), "G"), (-2j * g, "H")],
        ),
        (  # X
            [(bg - 1j * b * b, "1"), (1j * b * b + bg, "B"), (-2 * bg, "H")],
            [(-(b + 1j * g), "1"), (-(b - 1j * g), "B"), (2 * b, "H")],
        ),
        (  # Y
            [(1j * b * b + bg, "G"), (-2 * bg, "H"), (bg - 1j * b * b, "BG")],
            [(b - 1j * g, "G"), (-2 * b, "H"), (1j * g + b, "BG")],
        ),
    ]


def closed_form_layer_coeffs(
    mode: ModeParams, fhat: complex, ghat: complex, profile: PmlProfile, region: Region
) -> LayerCoefficients:
    """Explicit ``(W, V, X, Y) / D`` formulas, evaluated in the same anchored scaling.

    Independent of the linear solve in :func:`layer_coeffs`; used as a cross-check.
    """
    region = Region(region)
    h = profile.h_tilde(region)
    den = denominator(mode, h, region)
    exps = _exponent_table(mode, h)
    lam = basis_exponents(mode)
    anchors = basis_anchors(mode, h)
    g_sign = -1 if region is Region.UPPER else 1
    scaled = np.empty(4, dtype=complex)
    for k, (f_terms, g_terms) in enumerate(_closed_form_terms(mode)):
        shift = lam[k] * anchors[k] - den.log_scaling
        num = fhat * _sum_terms(f_terms, exps, shift) + g_sign * ghat * _sum_terms(g_terms, exps, shift)
        scaled[k] = num / den.value
    return LayerCoefficients(region, mode.n, mode, h, scaled, anchors, den)


# PML DtN symbols ----------------------------------------------------------------


def _interface_operators(layer: LayerCoefficients, boundary: Boundary, mu: float):
    return surface_operators(boundary, layer.mode.alpha_n, mu, layer.derivs(0j, 3))


def pml_symbol(mode: ModeParams, mu: float, profile: PmlProfile, boundary: Boundary) -> DtnSymbol:
    """PML DtN matrix: columns are ``(N u, M u)`` of the layer field for unit ``f`` and unit ``g``."""
    boundary = Boundary(boundary)
    region = Region.of(boundary)
    cols = []
    for f, g in ((1.0, 0.0), (0.0, 1.0)):
        layer = layer_coeffs(mode, f, g, profile, region)
        cols.append(_interface_operators(layer, boundary, mu))
    entries = np.array(cols, dtype=complex).T
    return DtnSymbol(boundary, mode.n, entries, "pml", profile)


def display_symbol(mode: ModeParams, mu: float, profile: PmlProfile, boundary: Boundary) -> np.ndarray:
    """The explicit T^ formulas written out term by term (cross-check evaluator)."""
    boundary = Boundary(boundary)
    region = Region.of(boundary)
    h = profile.h_tilde(region)
    den = denominator(mode, h, region)
    exps = _exponent_table(mode, h)
    b, g = mode.beta_n, mode.gamma_n
    p = 1j * b**4 * g - b**3 * g**2 + 1j * b**2 * g**3 - b * g**4
    q = 1j * b**4 * g + b**3 * g**2 + 1j * b**2 * g**3 + b * g**4
    a_ = 0.5j * mu * b**4 + (1 - mu) * b**3 * g + (2 - mu) * 1j * b**2 * g**2 - (1 - mu) * b * g**3 + 0.5j * mu * g**4
    b_ = -0.5j * mu * b**4 + (1 - mu) * b**3 * g - (2 - mu) * 1j * b**2 * g**2 - (1 - mu) * b * g**3 - 0.5j * mu * g**4
    r = b**3 + 1j * b**2 * g + b * g**2 + 1j * g**3
    s = b**3 - 1j * b**2 * g + b * g**2 - 1j * g**3
    sign = 1 if region is Region.UPPER else -1
    t11 = [(-sign * p, "1"), (sign * q, "B"), (-sign * q, "G"), (sign * p, "BG")]
    t12 = [(a_, "1"), (b_, "B"), (b_, "G"), ((4 - 4 * mu) * (b * g**3 - b**3 * g), "H"), (a_, "BG")]
    t22 = [(-sign * r, "1"), (-sign * s, "B"), (sign * s, "G"), (sign * r, "BG")]
    shift = -den.log_scaling
    vals = [-_sum_terms(t, exps, shift) / den.value for t in (t11, t12, t22)]
    return np.array([[vals[0], vals[1]], [vals[1], vals[2]]], dtype=complex)


def symbol_error(mode: ModeParams, mu: float, profile: PmlProfile, boundary: Boundary) -> np.ndarray:
    """``T^ - T`` entrywise, without cancellation.

    The layer field is split into the exact outgoing field plus a correction
    that cancels it at the outer edge; the correction has zero interface
    data, so its boundary operators are exactly the symbol difference.
    """
    boundary = Boundary(boundary)
    region = Region.of(boundary)
    h = profile.h_tilde(region)
    denominator(mode, h, region)
    b, g = mode.beta_n, mode.gamma_n
    lam = basis_exponents(mode)
    # outgoing pieces: (i beta, -gamma) above, (-i beta, gamma) below
    idx = (1, 3) if region is Region.UPPER else (0, 2)
    cols = []
    for f, gg in ((1.0, 0.0), (0.0, 1.0)):
        den = mode.gamma_plus_i_beta
        a_out = (g * f + gg) / den
        b_out = (1j * b * f - gg) / den
        e = np.array([a_out * cmath.exp(lam[idx[0]] * h), b_out * cmath.exp(lam[idx[1]] * h)])
        val = -np.sum(e)
        dval = -np.sum(e * lam[list(idx)])
        corr, anchors = _solve_layer(mode, h, [0, 0, val, dval])
        layer = LayerCoefficients(region, mode.n, mode, h, corr, anchors, ScaledDenominator(1, 0))
        cols.append(_interface_operators(layer, boundary, mu))
    return np.array(cols, dtype=complex).T


def sobolev_weights() -> np.ndarray:
    """Exponents ``w`` so that ``|dT_ij| / (1 + alpha^2)^w_ij`` is the weighted symbol error."""
    return np.array([[1.5, 1.0], [1.0, 0.5]])


def weighted_symbol_error(mode: ModeParams, mu: float, profile: PmlProfile, boundary: Boundary) -> float:
    err = np.abs(symbol_error(mode, mu, profile, boundary))
    weights = (1 + mode.alpha_n**2) ** sobolev_weights()
    return float(np.max(err / weights))


def pml_forcing(cfg: ProblemConfig, profile: PmlProfile) -> ForcingTerms:
    """Incident forcing on Gamma1 built from the PML symbol instead of the exact one."""
    sym = pml_symbol(mode_params(cfg, 0), cfg.mu, profile, Boundary.GAMMA1)
    return incident_forcing(cfg, sym)


# Theta ------------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaBound:
    delta_minus: float | None
    delta_plus: float | None
    theta: float
    dominant_branch: str
    rate: float
    delta: float


THETA_BRANCHES = ("sigma", "gamma", "evanescent")


def mode_extrema(cfg: ProblemConfig) -> tuple[float | None, float | None]:
    """Min of ``Re beta_n`` over propagating and of ``Im beta_n`` over evanescent modes.

    Resonant modes (beta_n = 0) are excluded, as in the strict ``> 0`` minima.
    """
    props, evans = [], []
    for n in cfg.modes():
        try:
            mode = mode_params(cfg, n)
        except ResonanceError:
            continue
        (props if mode.propagating else evans).append(
            mode.beta_n.real if mode.propagating else mode.beta_n.imag
        )
    return (min(props) if props else None, min(evans) if evans else None)


def theta_bound(cfg: ProblemConfig, profile: PmlProfile, boundary: Boundary | None = None) -> ThetaBound:
    """``max(e^{-2 delta sigma0 D-/(m+1)}, e^{-2 delta sqrt(kappa^2+alpha^2)}, e^{-2 delta D+})``.

    ``delta = min(delta1, delta2)`` unless a boundary is given.  A missing
    propagating or evanescent set drops its branch.
    """
    if boundary is None:
        delta = min(profile.delta1, profile.delta2)
    else:
        delta = profile.delta(Region.of(boundary))
    d_minus, d_plus = mode_extrema(cfg)
    rates = {}
    if d_minus is not None:
        rates["sigma"] = 2 * profile.sigma0 * d_minus / (profile.m + 1)
    rates["gamma"] = 2 * math.sqrt(cfg.kappa**2 + cfg.alpha**2)
    if d_plus is not None:
        rates["evanescent"] = 2 * d_plus
    branch = min(rates, key=lambda k: (rates[k], THETA_BRANCHES.index(k)))
    rate = rates[branch]
    return ThetaBound(d_minus, d_plus, math.exp(-delta * rate), branch, rate, delta)
