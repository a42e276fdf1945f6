"""Per-mode strip solver under exact or PML transparent boundary rows.

Quasi-periodicity decouples the modes, so for a scenario whose geometry does
not depend on ``x1`` each mode is a 1D fourth-order two-point problem for
``(d^2/dx2^2 - alpha_n^2)^2 u - kappa^4 u = 0``.  Its solutions are spanned by
``exp(lam_k x2)`` with ``lam = (-i beta_n, i beta_n, gamma_n, -gamma_n)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dtn import exact_entries, forcing_terms, surface_operators
from .errors import ConfigError, DomainError, SingularSystemError
from .modal import Boundary, ModeParams, ProblemConfig, TraceCoefficients, mode_params, weighted_mode_norm
from .pml import (
    LayerCoefficients,
    PmlProfile,
    Region,
    basis_exponents,
    layer_coeffs,
    pml_forcing,
    pml_symbol,
    stretch,
)

COND_LIMIT = 1e13
NORM_NAMES = ("err_f_h32_g1", "err_g_h12_g1", "err_f_h32_g2", "err_g_h12_g2", "err_modal_h2")


@dataclass(frozen=True)
class Scenario:
    """Strip contents and forcing.

    ``h0`` adds a clamped line ``u = d_x2 u = 0`` at ``x2 = h0``.  ``forcing``
    replaces the incident plane wave by explicit right-hand sides
    ``(Gamma1 N-row, Gamma1 M-row, Gamma2 N-row, Gamma2 M-row)`` per mode.
    """

    h0: float | None = None
    forcing: Mapping[int, Sequence[complex]] | None = None

    @classmethod
    def empty_strip(cls) -> "Scenario":
        return cls()

    @classmethod
    def clamped_line(cls, h0: float) -> "Scenario":
        return cls(h0=h0)

    @classmethod
    def custom(cls, forcing: Mapping[int, Sequence[complex]], h0: float | None = None) -> "Scenario":
        return cls(h0=h0, forcing=dict(forcing))

    @property
    def variant(self) -> str:
        if self.forcing is not None:
            return "CustomTraceForcing"
        return "ClampedLine" if self.h0 is not None else "EmptyStrip"

    @property
    def incident(self) -> bool:
        return self.forcing is None

    def check(self, cfg: ProblemConfig) -> None:
        if self.h0 is not None and not cfg.h2 < self.h0 < cfg.h1:
            raise ConfigError(f"clamped line h0={self.h0} must lie strictly inside ({cfg.h2}, {cfg.h1})")

    def segments(self, cfg: ProblemConfig) -> list[tuple[float, float]]:
        """Strip pieces from top to bottom."""
        if self.h0 is None:
            return [(cfg.h2, cfg.h1)]
        return [(self.h0, cfg.h1), (cfg.h2, self.h0)]

    def modes(self, cfg: ProblemConfig) -> list[int]:
        if self.forcing is not None:
            return sorted(self.forcing)
        return list(cfg.modes())


@dataclass(frozen=True)
class Segment:
    """``u(x2) = sum_k c_k exp(lam_k (x2 - a_k))`` on ``[lo, hi]``."""

    lo: float
    hi: float
    lam: np.ndarray
    anchors: np.ndarray
    coeffs: np.ndarray

    @classmethod
    def basis_for(cls, mode: ModeParams, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        lam = basis_exponents(mode)
        # growing-upward functions referenced to the top, the rest to the bottom
        anchors = np.where(np.real(lam) > 0, hi, lo)
        return lam, anchors

    def basis_rows(self, x2: float, order: int = 3) -> np.ndarray:
        e = np.exp(self.lam * (x2 - self.anchors))
        return np.array([self.lam**j * e for j in range(order + 1)])

    def derivs(self, x2: float, order: int = 3) -> np.ndarray:
        return self.basis_rows(x2, order) @ self.coeffs

    def contains(self, x2: float, tol: float = 1e-12) -> bool:
        return self.lo - tol <= x2 <= self.hi + tol


@dataclass
class ModeSolution:
    n: int
    mode: ModeParams
    cfg: ProblemConfig
    scenario: Scenario
    profile: PmlProfile | None
    segments: list[Segment]
    symbols: dict[Boundary, np.ndarray]
    rhs: np.ndarray
    residuals: np.ndarray
    row_scale: np.ndarray
    incident_amp: complex = 0j
    upper: LayerCoefficients | tuple[complex, complex] | None = field(default=None, repr=False)
    lower: LayerCoefficients | tuple[complex, complex] | None = field(default=None, repr=False)

    @property
    def kind(self) -> str:
        return "exact" if self.profile is None else "pml"

    # incident piece ---------------------------------------------------

    def incident_derivs(self, x2: float, order: int = 3) -> np.ndarray:
        if self.incident_amp == 0:
            return np.zeros(order + 1, dtype=complex)
        lam = -1j * self.cfg.beta
        base = self.incident_amp * cmath.exp(lam * x2)
        return np.array([base * lam**j for j in range(order + 1)])

    # traces -----------------------------------------------------------

    def strip_derivs(self, x2: float, order: int = 3) -> np.ndarray:
        for seg in self.segments:
            if seg.contains(x2):
                return seg.derivs(x2, order)
        raise DomainError(f"x2={x2} is outside the strip")

    def trace(self, boundary: Boundary) -> tuple[complex, complex]:
        """Total-field data ``(u, d_nu u)`` on a boundary."""
        if Boundary(boundary) is Boundary.GAMMA1:
            d = self.segments[0].derivs(self.cfg.h1, 1)
            return complex(d[0]), complex(d[1])
        d = self.segments[-1].derivs(self.cfg.h2, 1)
        return complex(d[0]), complex(-d[1])

    def scattered_trace_gamma1(self) -> tuple[complex, complex]:
        f, g = self.trace(Boundary.GAMMA1)
        inc = self.incident_derivs(self.cfg.h1, 1)
        return f - complex(inc[0]), g - complex(inc[1])

    def boundary_operators(self, boundary: Boundary, side: str = "strip") -> tuple[complex, complex]:
        """``(N u, M u)`` at a boundary from the strip side or the exterior side."""
        boundary = Boundary(boundary)
        x2 = self.cfg.h1 if boundary is Boundary.GAMMA1 else self.cfg.h2
        d = self.strip_derivs(x2) if side == "strip" else self.exterior_derivs(x2)
        return surface_operators(boundary, self.mode.alpha_n, self.cfg.mu, d)

    # exterior ---------------------------------------------------------

    def exterior_derivs(self, x2: float, order: int = 3) -> np.ndarray:
        """Total field derivatives outside the strip (stretched-coordinate derivatives in a PML)."""
        cfg = self.cfg
        b, g = self.mode.beta_n, self.mode.gamma_n
        if x2 >= cfg.h1:
            if self.profile is None:
                a_out, b_out = self.upper
                t = x2 - cfg.h1
                lam = np.array([1j * b, -g])
                e = np.array([a_out, b_out]) * np.exp(lam * t)
                out = np.array([np.sum(e * lam**j) for j in range(order + 1)])
            else:
                t = stretch(self.profile, cfg, x2) - cfg.h1
                out = np.array(self.upper.derivs(t, order))
            return out + self.incident_derivs(x2, order)
        if x2 <= cfg.h2:
            if self.profile is None:
                h_out, u_out = self.lower
                t = x2 - cfg.h2
                lam = np.array([-1j * b, g])
                e = np.array([h_out, u_out]) * np.exp(lam * t)
                return np.array([np.sum(e * lam**j) for j in range(order + 1)])
            t = stretch(self.profile, cfg, x2) - cfg.h2
            return np.array(self.lower.derivs(t, order))
        raise DomainError(f"x2={x2} is inside the strip")

    def derivs(self, x2: float, order: int = 3) -> tuple[np.ndarray, str]:
        cfg = self.cfg
        if cfg.h2 <= x2 <= cfg.h1:
            return self.strip_derivs(x2, order), "Strip"
        region = region_of(cfg, self.profile, x2)
        return self.exterior_derivs(x2, order), region


def region_of(cfg: ProblemConfig, profile: PmlProfile | None, x2: float) -> str:
    if cfg.h2 <= x2 <= cfg.h1:
        return "Strip"
    if profile is None:
        return "Omega1" if x2 > cfg.h1 else "Omega2"
    tol = 1e-12 * max(1.0, abs(cfg.h1), abs(cfg.h2))
    if cfg.h1 < x2 <= cfg.h1 + profile.delta1 + tol:
        return "PmlUpper"
    if cfg.h2 - profile.delta2 - tol <= x2 < cfg.h2:
        return "PmlLower"
    raise DomainError(f"x2={x2} lies outside the PML-truncated domain")


def outgoing_coefficients(mode: ModeParams, f: complex, g: complex) -> tuple[complex, complex]:
    """Outgoing propagating/evanescent amplitudes matching trace data ``(f, g)``."""
    b, gam = mode.beta_n, mode.gamma_n
    den = mode.gamma_plus_i_beta
    return (gam * f + g) / den, (1j * b * f - g) / den


def _symbols_for(cfg: ProblemConfig, mode: ModeParams, profile: PmlProfile | None):
    if profile is None:
        t = exact_entries(mode, cfg.mu)
        return {Boundary.GAMMA1: t, Boundary.GAMMA2: t}
    return {b: pml_symbol(mode, cfg.mu, profile, b).entries for b in Boundary}


def _incident_rhs(cfg: ProblemConfig, profile: PmlProfile | None) -> tuple[complex, complex]:
    terms = forcing_terms(cfg) if profile is None else pml_forcing(cfg, profile)
    return terms.p1_hat, terms.p2_hat


def solve_mode(
    cfg: ProblemConfig,
    scenario: Scenario,
    n: int,
    symbols: PmlProfile | str | None = None,
) -> ModeSolution:
    """Solve one mode with exact (``symbols=None``) or PML (``symbols=profile``) boundary rows."""
    scenario.check(cfg)
    profile = symbols if isinstance(symbols, PmlProfile) else None
    if symbols not in (None, "exact") and profile is None:
        raise ValueError(f"symbols must be 'exact' or a PmlProfile, got {symbols!r}")
    mode = mode_params(cfg, n)
    syms = _symbols_for(cfg, mode, profile)
    mu, a2 = cfg.mu, mode.alpha_n**2

    segs = []
    for lo, hi in scenario.segments(cfg):
        lam, anchors = Segment.basis_for(mode, lo, hi)
        segs.append(Segment(lo, hi, lam, anchors, np.zeros(4, dtype=complex)))
    nseg = len(segs)
    mat = np.zeros((4 * nseg, 4 * nseg), dtype=complex)
    rhs = np.zeros(4 * nseg, dtype=complex)

    t1 = syms[Boundary.GAMMA1]
    d = segs[0].basis_rows(cfg.h1)
    n_row = (2 - mu) * a2 * d[1] - d[3]
    m_row = -mu * a2 * d[0] + d[2]
    mat[0, 0:4] = n_row - t1[0, 0] * d[0] - t1[0, 1] * d[1]
    mat[1, 0:4] = m_row - t1[1, 0] * d[0] - t1[1, 1] * d[1]

    t2 = syms[Boundary.GAMMA2]
    d = segs[-1].basis_rows(cfg.h2)
    n_row = -(2 - mu) * a2 * d[1] + d[3]
    m_row = -mu * a2 * d[0] + d[2]
    c = slice(4 * (nseg - 1), 4 * nseg)
    # g2 = -u'(h2)
    mat[2, c] = n_row - t2[0, 0] * d[0] + t2[0, 1] * d[1]
    mat[3, c] = m_row - t2[1, 0] * d[0] + t2[1, 1] * d[1]

    if nseg == 2:
        h0 = scenario.h0
        for k, seg in enumerate(segs):
            d = seg.basis_rows(h0, 1)
            mat[4 + 2 * k, 4 * k:4 * k + 4] = d[0]
            mat[5 + 2 * k, 4 * k:4 * k + 4] = d[1]

    incident_amp = 0j
    if scenario.forcing is not None:
        vals = scenario.forcing.get(n, (0, 0, 0, 0))
        rhs[:4] = np.asarray(vals, dtype=complex)
    elif n == 0:
        rhs[0], rhs[1] = _incident_rhs(cfg, profile)
        incident_amp = complex(cfg.amplitude)

    scale = np.max(np.abs(mat), axis=1)
    scale[scale == 0] = 1.0
    eq = mat / scale[:, None]
    if np.linalg.cond(eq) > COND_LIMIT:
        raise SingularSystemError(f"strip system for n={n} is numerically singular (bad wavenumber?)")
    sol = np.linalg.solve(eq, rhs / scale)
    residuals = mat @ sol - rhs
    segs = [
        Segment(s.lo, s.hi, s.lam, s.anchors, sol[4 * k:4 * k + 4]) for k, s in enumerate(segs)
    ]

    out = ModeSolution(
        n=n,
        mode=mode,
        cfg=cfg,
        scenario=scenario,
        profile=profile,
        segments=segs,
        symbols=syms,
        rhs=rhs,
        residuals=residuals,
        row_scale=scale,
        incident_amp=incident_amp,
    )
    fs, gs = out.scattered_trace_gamma1()
    f2, g2 = out.trace(Boundary.GAMMA2)
    if profile is None:
        out.upper = outgoing_coefficients(mode, fs, gs)
        out.lower = outgoing_coefficients(mode, f2, g2)
    else:
        out.upper = layer_coeffs(mode, fs, gs, profile, Region.UPPER)
        out.lower = layer_coeffs(mode, f2, g2, profile, Region.LOWER)
    return out


def solve(
    cfg: ProblemConfig, scenario: Scenario, symbols: PmlProfile | str | None = None
) -> dict[int, ModeSolution]:
    """All modes of the scenario, ordered by ``n``."""
    return {n: solve_mode(cfg, scenario, n, symbols) for n in scenario.modes(cfg)}


@dataclass(frozen=True)
class FieldSample:
    x1: float
    x2: float
    value: complex
    region: str


def _as_list(solutions) -> list[ModeSolution]:
    if isinstance(solutions, ModeSolution):
        return [solutions]
    if isinstance(solutions, Mapping):
        return [solutions[k] for k in sorted(solutions)]
    return list(solutions)


def field_eval(solutions, x1: float, x2: float, part: str = "total", order: int = 0) -> FieldSample:
    """Sum the modes at ``(x1, x2)``.

    ``part="scattered"`` subtracts the incident plane wave (taken at the real
    ``x2`` inside a PML, matching how the layer field is split).  ``order``
    selects an ``x2`` derivative (stretched inside a PML).
    """
    sols = _as_list(solutions)
    if not sols:
        raise ValueError("no mode solutions given")
    first = sols[0]
    region = region_of(first.cfg, first.profile, x2)
    total = 0j
    for sol in sols:
        d, _ = sol.derivs(x2, order)
        val = d[order]
        if part == "scattered":
            val -= sol.incident_derivs(x2, order)[order]
        elif part != "total":
            raise ValueError(f"part must be 'total' or 'scattered', got {part!r}")
        total += val * cmath.exp(1j * sol.mode.alpha_n * x1)
    return FieldSample(float(x1), float(x2), complex(total), region)


# norms ----------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _segment_energy(seg_a: Segment, seg_b: Segment | None, alpha_n: float) -> float:
    """``int |e''|^2 + a^2 |e'|^2 + a^4 |e|^2`` for ``e = u_a - u_b`` on one segment."""
    lo, hi = seg_a.lo, seg_a.hi
    half = 0.5 * (hi - lo)
    xs = lo + half * (_GL_NODES + 1)
    total = 0.0
    a2 = alpha_n * alpha_n
    w = (a2 * a2, a2, 1.0)
    for x, wt in zip(xs, _GL_WEIGHTS):
        d = seg_a.derivs(x, 2)
        if seg_b is not None:
            d = d - seg_b.derivs(x, 2)
        total += wt * (w[0] * abs(d[0]) ** 2 + w[1] * abs(d[1]) ** 2 + w[2] * abs(d[2]) ** 2)
    return half * total


def modal_h2_norm(sols_a, sols_b=None) -> float:
    """Modal H^2 surrogate norm of ``u_a`` or of ``u_a - u_b`` over the strip.

    ``(Lambda sum_n int |u_n''|^2 + alpha_n^2 |u_n'|^2 + alpha_n^4 |u_n|^2 dx2)^(1/2)``
    """
    a = {s.n: s for s in _as_list(sols_a)}
    b = {s.n: s for s in _as_list(sols_b)} if sols_b is not None else {}
    total = 0.0
    cfg = None
    for n in sorted(set(a) | set(b)):
        sa, sb = a.get(n), b.get(n)
        ref = sa or sb
        cfg = ref.cfg
        for k, seg in enumerate(ref.segments):
            seg_a = sa.segments[k] if sa else None
            seg_b = sb.segments[k] if sb else None
            if seg_a is None:
                seg_a, seg_b = seg_b, None
            total += _segment_energy(seg_a, seg_b, ref.mode.alpha_n)
    if cfg is None:
        return 0.0
    return math.sqrt(cfg.lambda_period * total)


def incident_h2_norm(cfg: ProblemConfig) -> float:
    """Modal H^2 norm of the incident wave over the strip."""
    mode = mode_params(cfg, 0)
    lam, anchors = Segment.basis_for(mode, cfg.h2, cfg.h1)
    coeffs = np.zeros(4, dtype=complex)
    # u^i = A exp(-i beta x2): first basis function, anchored at its own offset
    coeffs[0] = cfg.amplitude * cmath.exp(-1j * cfg.beta * anchors[0])
    seg = Segment(cfg.h2, cfg.h1, lam, anchors, coeffs)
    return math.sqrt(cfg.lambda_period * _segment_energy(seg, None, mode.alpha_n))


def trace_coefficients(sols, boundary: Boundary) -> TraceCoefficients:
    return TraceCoefficients(Boundary(boundary), {s.n: s.trace(boundary) for s in _as_list(sols)})


def solution_error(
    cfg: ProblemConfig,
    scenario: Scenario,
    profile: PmlProfile,
    norms: Iterable[str] | None = None,
) -> dict[str, float]:
    """Distance between the exact-TBC and PML-TBC solutions.

    Trace errors use H^{3/2} for ``u`` and H^{1/2} for ``d_nu u`` on each
    boundary; ``err_modal_h2`` is :func:`modal_h2_norm` of the difference.
    """
    names = tuple(norms) if norms is not None else NORM_NAMES
    unknown = set(names) - set(NORM_NAMES)
    if unknown:
        raise ValueError(f"unknown norms: {sorted(unknown)}")
    exact = solve(cfg, scenario, None)
    pml = solve(cfg, scenario, profile)
    return compare_solutions(cfg, exact, pml, names)


def compare_solutions(cfg: ProblemConfig, exact, pml, names: Sequence[str] = NORM_NAMES) -> dict[str, float]:
    out = {}
    for bnd, tag in ((Boundary.GAMMA1, "g1"), (Boundary.GAMMA2, "g2")):
        df = {n: exact[n].trace(bnd)[0] - pml[n].trace(bnd)[0] for n in exact}
        dg = {n: exact[n].trace(bnd)[1] - pml[n].trace(bnd)[1] for n in exact}
        out[f"err_f_h32_{tag}"] = weighted_mode_norm(df, cfg, 1.5)
        out[f"err_g_h12_{tag}"] = weighted_mode_norm(dg, cfg, 0.5)
    out["err_modal_h2"] = modal_h2_norm(exact, pml)
    return {k: out[k] for k in names}
