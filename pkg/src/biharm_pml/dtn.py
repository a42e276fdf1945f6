"""Exact Dirichlet-to-Neumann symbols on the flat boundaries Gamma1 and Gamma2.

For each mode the DtN operator is a 2x2 matrix taking the trace coefficients
``(f_n, g_n) = (u, d_nu u)`` to the coefficients of the plate boundary
operators ``(N u, M u)``.  The same matrix serves both boundaries; the
orientation of the outward normal (``+x2`` on Gamma1, ``-x2`` on Gamma2) is
absorbed into :func:`surface_operators` and :func:`normal_derivative`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .errors import MissingSymbolError, NotFoundError
from .modal import Boundary, ModeParams, ProblemConfig, TraceCoefficients, mode_params

if TYPE_CHECKING:
    from .pml import PmlProfile


@dataclass(frozen=True)
class DtnSymbol:
    boundary: Boundary
    n: int
    entries: np.ndarray
    kind: str = "exact"
    profile: "PmlProfile | None" = None

    def apply(self, f: complex, g: complex) -> tuple[complex, complex]:
        out = self.entries @ np.array([f, g], dtype=complex)
        return complex(out[0]), complex(out[1])


@dataclass(frozen=True)
class ForcingTerms:
    """Incident forcing on Gamma1: ``p_k(x1) = p_k_coeff * exp(i(alpha x1 - beta h1))``."""

    p1_coeff: complex
    p2_coeff: complex
    phase: complex = 1.0

    @property
    def p1_hat(self) -> complex:
        """Mode-0 Fourier coefficient of p1."""
        return self.p1_coeff * self.phase

    @property
    def p2_hat(self) -> complex:
        return self.p2_coeff * self.phase


def surface_operators(boundary: Boundary, alpha_n: float, mu: float, derivs: Sequence[complex]):
    """Mode coefficients of ``(N_k u, M_k u)`` from ``d^j u / dx2^j``, j=0..3."""
    u, u1, u2, u3 = derivs[:4]
    a2 = alpha_n * alpha_n
    m_val = -mu * a2 * u + u2
    if Boundary(boundary) is Boundary.GAMMA1:
        n_val = (2 - mu) * a2 * u1 - u3
    else:
        n_val = -(2 - mu) * a2 * u1 + u3
    return n_val, m_val


def normal_derivative(boundary: Boundary, du_dx2):
    """Outward normal derivative from the upward x2 derivative."""
    return du_dx2 if Boundary(boundary) is Boundary.GAMMA1 else -du_dx2


def exact_entries(mode: ModeParams, mu: float) -> np.ndarray:
    a, b, g = mode.alpha_n, mode.beta_n, mode.gamma_n
    off = -(mu * a * a - 1j * b * g)
    return np.array(
        [[1j * b * g * (g - 1j * b), off], [off, -(g - 1j * b)]],
        dtype=complex,
    )


def exact_symbol(mode: ModeParams, mu: float, boundary: Boundary = Boundary.GAMMA1) -> DtnSymbol:
    return DtnSymbol(Boundary(boundary), mode.n, exact_entries(mode, mu), "exact")


def forcing_terms(cfg: ProblemConfig) -> ForcingTerms:
    """Incident forcing for the exact TBC on Gamma1.

    ``p = (N1 - T11 - T12 d_x2) u^i``; with ``beta^2 + gamma^2 = 2 kappa^2``
    this collapses to ``p1 = -(2i beta gamma^2 + 2 beta^2 gamma)`` and
    ``p2 = -(2 beta^2 + 2i beta gamma)``.
    """
    b, g = cfg.beta, cfg.gamma
    p1 = -(2j * b * g * g + 2 * b * b * g)
    p2 = -(2 * b * b + 2j * b * g)
    return ForcingTerms(complex(p1), complex(p2), _incident_phase(cfg))


def _incident_phase(cfg: ProblemConfig) -> complex:
    return complex(cfg.amplitude * np.exp(-1j * cfg.beta * cfg.h1))


def incident_forcing(cfg: ProblemConfig, symbol: DtnSymbol) -> ForcingTerms:
    """``(N1 u^i - T11 u^i - T12 d_x2 u^i, M1 u^i - T21 u^i - T22 d_x2 u^i)`` for any symbol.

    Used for both exact and PML symbols; the result is normalised by the
    incident phase so it is comparable with :func:`forcing_terms`.
    """
    mode = mode_params(cfg, 0)
    b = cfg.beta
    # u^i = exp(-i beta t) on Gamma1: derivatives (-i beta)^j
    derivs = [(-1j * b) ** j for j in range(4)]
    n_val, m_val = surface_operators(Boundary.GAMMA1, mode.alpha_n, cfg.mu, derivs)
    t_f, t_g = symbol.entries[:, 0], symbol.entries[:, 1]
    p1 = n_val - t_f[0] - t_g[0] * derivs[1]
    p2 = m_val - t_f[1] - t_g[1] * derivs[1]
    return ForcingTerms(complex(p1), complex(p2), _incident_phase(cfg))


def apply_symbols(
    symbols: Mapping[int, DtnSymbol], trace: TraceCoefficients
) -> dict[int, tuple[complex, complex]]:
    """Per-mode ``(N u, M u)`` coefficients; forcing is not included."""
    out = {}
    for n in trace:
        if n not in symbols:
            raise MissingSymbolError(f"no DtN symbol for populated mode n={n}")
        out[n] = symbols[n].apply(*trace.get(n))
    return out


# positivity ---------------------------------------------------------------


def positivity_matrix(mode: ModeParams, mu: float) -> np.ndarray:
    """Matrix ``A = -T`` so that the positivity form is ``Re(z^H A z)``, ``z = (f, g)``."""
    return -exact_entries(mode, mu)


def quadratic_form(mode: ModeParams, mu: float, f, g):
    """``Re{a|f|^2 + c g conj(f) + c f conj(g) + d|g|^2}`` (vectorised over f, g)."""
    a_mat = positivity_matrix(mode, mu)
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    a, c, d = a_mat[0, 0], a_mat[0, 1], a_mat[1, 1]
    val = a * abs(f) ** 2 + c * g * np.conj(f) + c * f * np.conj(g) + d * abs(g) ** 2
    return np.real(val)


def min_form_eigenvalue(mode: ModeParams, mu: float) -> float:
    """Smallest eigenvalue of the Hermitian part of :func:`positivity_matrix`."""
    a_mat = positivity_matrix(mode, mu)
    herm = 0.5 * (a_mat + a_mat.conj().T)
    return float(np.linalg.eigvalsh(herm)[0])


def positivity_threshold(cfg: ProblemConfig, mu: float | None = None, n_max: int = 100,
                         tol: float = 1e-12) -> int:
    """Smallest ``n0`` with the quadratic form non-negative for ``n0 <= |n| <= n_max``.

    Non-negativity on all complex pairs is decided exactly through the
    Hermitian part of the per-mode matrix (``>= -tol`` scaled by its norm).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    mu = cfg.mu if mu is None else mu
    n0 = None
    for k in range(n_max, -1, -1):
        ok = True
        for n in {k, -k}:
            mode = mode_params(cfg, n)
            scale = np.linalg.norm(positivity_matrix(mode, mu), 2)
            if min_form_eigenvalue(mode, mu) < -tol * max(scale, 1.0):
                ok = False
        if not ok:
            break
        n0 = k
    if n0 is None:
        raise NotFoundError(f"quadratic form is indefinite at |n| = {n_max}")
    return n0


def discriminant(mode: ModeParams, mu: float) -> complex:
    """``a d - c^2`` of the positivity form (real positive once the form is definite)."""
    a_mat = positivity_matrix(mode, mu)
    return complex(a_mat[0, 0] * a_mat[1, 1] - a_mat[0, 1] ** 2)


def discriminant_closed_form(mode: ModeParams, mu: float) -> complex:
    """``(1 - mu)(alpha^4 - 2i gamma beta alpha^2) - kappa^4``.

    Not identical to :func:`discriminant`, but it shares its sign for large
    ``|n|``.
    """
    a, b, g = mode.alpha_n, mode.beta_n, mode.gamma_n
    return complex((1 - mu) * (a**4 - 2j * g * b * a * a) - mode.kappa**4)


def tbc_form(cfg: ProblemConfig, trace: TraceCoefficients, mu: float | None = None) -> float:
    """``-Re <T u, u>`` over Gamma, computed modewise: ``Lambda sum_n Re(z^H A_n z)``."""
    mu = cfg.mu if mu is None else mu
    total = 0.0
    for n in trace:
        f, g = trace.get(n)
        total += float(quadratic_form(mode_params(cfg, n), mu, f, g))
    return cfg.lambda_period * total


def tbc_defect_constant(cfg: ProblemConfig, mu: float | None = None) -> float:
    """Constant ``C`` with ``-Re<T u, u> >= -C (||f||^2 + ||g||^2)`` on the truncation.

    Equal to the largest negative part of the per-mode minimum eigenvalue.
    """
    mu = cfg.mu if mu is None else mu
    worst = 0.0
    for n in cfg.modes():
        worst = max(worst, -min_form_eigenvalue(mode_params(cfg, n), mu))
    return worst


def l2_trace_norm_sq(cfg: ProblemConfig, trace: TraceCoefficients) -> float:
    total = sum(abs(f) ** 2 + abs(g) ** 2 for f, g in trace.coeffs.values())
    return cfg.lambda_period * total


def growth_ratios(mode: ModeParams, mu: float) -> tuple[float, float, float]:
    """``|t11|/|a|^3, |t12|/|a|^2, |t22|/|a|`` for the boundedness check."""
    t = exact_entries(mode, mu)
    a = abs(mode.alpha_n)
    return abs(t[0, 0]) / a**3, abs(t[0, 1]) / a**2, abs(t[1, 1]) / a


