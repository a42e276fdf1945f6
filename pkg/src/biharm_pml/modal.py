"""Quasi-periodic mode parameters, boundary trace coefficients and trace norms.

A quasi-periodic field is expanded as ``sum_n u_n(x2) exp(i alpha_n x1)`` with
``alpha_n = alpha + 2 pi n / Lambda``.  Each mode carries a Helmholtz-type
vertical wavenumber ``beta_n`` (real for propagating modes, positive imaginary
for evanescent ones) and a modified-Helmholtz wavenumber ``gamma_n``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping

import numpy as np

from .errors import ConfigError, ResonanceError

RESONANCE_TOL = 1e-12


class Boundary(str, enum.Enum):
    GAMMA1 = "Gamma1"
    GAMMA2 = "Gamma2"


@dataclass(frozen=True)
class ProblemConfig:
    """Physical and geometric parameters of one periodic cell.

    The strip is ``h2 < x2 < h1``; the plane wave ``exp(i(alpha x1 - beta x2))``
    comes in from above at angle ``theta``.
    """

    kappa: float = 1.0
    theta: float = math.pi / 6
    lambda_period: float = 2 * math.pi
    mu: float = 0.3
    h1: float = 1.0
    h2: float = 0.0
    truncation: int = 30
    amplitude: complex = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigError(f"kappa must be positive, got {self.kappa}")
        if not abs(self.theta) < math.pi / 2:
            raise ConfigError(f"|theta| must be < pi/2, got {self.theta}")
        if not self.lambda_period > 0:
            raise ConfigError(f"lambda_period must be positive, got {self.lambda_period}")
        if not 0 <= self.mu < 1:
            raise ConfigError(f"mu must lie in [0, 1), got {self.mu}")
        if not self.h1 > self.h2:
            raise ConfigError(f"need h1 > h2, got h1={self.h1}, h2={self.h2}")
        if int(self.truncation) != self.truncation or self.truncation < 0:
            raise ConfigError(f"truncation must be a non-negative integer, got {self.truncation}")

    @property
    def alpha(self) -> float:
        return self.kappa * math.sin(self.theta)

    @property
    def beta(self) -> float:
        return self.kappa * math.cos(self.theta)

    @property
    def gamma(self) -> float:
        return math.hypot(self.kappa, self.alpha)

    def modes(self) -> range:
        return range(-self.truncation, self.truncation + 1)

    def with_(self, **changes) -> "ProblemConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class ModeParams:
    n: int
    alpha_n: float
    beta_n: complex
    gamma_n: float
    propagating: bool

    @property
    def kappa(self) -> float:
        # gamma^2 = kappa^2 + alpha^2
        return math.sqrt(self.gamma_n**2 - self.alpha_n**2)

    @property
    def gamma_plus_i_beta(self) -> complex:
        """``gamma_n + i beta_n`` without cancellation for evanescent modes."""
        if self.propagating:
            return complex(self.gamma_n, self.beta_n.real)
        # gamma - |beta| = (gamma^2 - |beta|^2) / (gamma + |beta|) and gamma^2 - |beta|^2 = 2 kappa^2
        return complex(2 * self.kappa**2 / (self.gamma_n + self.beta_n.imag), 0.0)


def mode_params(cfg: ProblemConfig, n: int) -> ModeParams:
    """Return ``(alpha_n, beta_n, gamma_n)`` for mode ``n``.

    Raises ResonanceError when ``|beta_n| < 1e-12 kappa``.
    """
    kappa = cfg.kappa
    alpha_n = cfg.alpha + 2 * math.pi * n / cfg.lambda_period
    a = abs(alpha_n)
    # factored form avoids cancellation near the cutoff
    disc = (kappa - a) * (kappa + a)
    propagating = kappa > a
    if propagating:
        beta_n = complex(math.sqrt(disc), 0.0)
    else:
        beta_n = complex(0.0, math.sqrt(-disc))
    if abs(beta_n) < RESONANCE_TOL * kappa:
        raise ResonanceError(n, beta_n)
    return ModeParams(
        n=n,
        alpha_n=alpha_n,
        beta_n=beta_n,
        gamma_n=math.hypot(kappa, alpha_n),
        propagating=propagating,
    )


@dataclass(frozen=True)
class TraceCoefficients:
    """Fourier coefficients ``(f_n, g_n)`` of ``(u, d_nu u)`` on one boundary.

    Stored sparsely: modes that are absent are zero.
    """

    boundary: Boundary
    coeffs: Mapping[int, tuple[complex, complex]] = field(default_factory=dict)

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.coeffs))

    def get(self, n: int) -> tuple[complex, complex]:
        return self.coeffs.get(n, (0j, 0j))

    def component(self, which: str) -> dict[int, complex]:
        idx = _component_index(which)
        return {n: complex(pair[idx]) for n, pair in self.coeffs.items()}

    def sample(self, cfg: ProblemConfig, x1, which: str = "f") -> np.ndarray:
        """Evaluate the trace component at the points ``x1``."""
        x1 = np.asarray(x1, dtype=float)
        out = np.zeros(x1.shape, dtype=complex)
        for n, c in self.component(which).items():
            alpha_n = cfg.alpha + 2 * math.pi * n / cfg.lambda_period
            out += c * np.exp(1j * alpha_n * x1)
        return out

    @classmethod
    def from_samples(
        cls,
        cfg: ProblemConfig,
        boundary: Boundary,
        f_samples,
        g_samples,
        tol: float = 0.0,
    ) -> "TraceCoefficients":
        """Project equispaced samples on ``[0, Lambda)`` onto the modes.

        ``M`` samples resolve ``|n| <= (M - 1) // 2``; the result is clipped to
        the configured truncation and coefficients with modulus <= ``tol`` are
        dropped.
        """
        f_samples = np.asarray(f_samples, dtype=complex)
        g_samples = np.asarray(g_samples, dtype=complex)
        m = f_samples.size
        x1 = np.arange(m) * cfg.lambda_period / m
        # remove the Bloch phase, then an FFT gives the periodic coefficients
        demod = np.exp(-1j * cfg.alpha * x1)
        fh = np.fft.fft(f_samples * demod) / m
        gh = np.fft.fft(g_samples * demod) / m
        nmax = min((m - 1) // 2, cfg.truncation)
        coeffs = {}
        for n in range(-nmax, nmax + 1):
            pair = (complex(fh[n % m]), complex(gh[n % m]))
            if max(abs(pair[0]), abs(pair[1])) > tol:
                coeffs[n] = pair
        return cls(boundary, coeffs)


def _component_index(which: str) -> int:
    if which == "f":
        return 0
    if which == "g":
        return 1
    raise ValueError(f"component must be 'f' or 'g', got {which!r}")


def incident_trace(cfg: ProblemConfig, boundary: Boundary = Boundary.GAMMA1) -> TraceCoefficients:
    """Trace of the incident plane wave on Gamma1 (outward normal +x2)."""
    if Boundary(boundary) is not Boundary.GAMMA1:
        raise ValueError("the incident wave is only prescribed on Gamma1")
    phase = cfg.amplitude * np.exp(-1j * cfg.beta * cfg.h1)
    return TraceCoefficients(Boundary.GAMMA1, {0: (complex(phase), complex(-1j * cfg.beta * phase))})


def sobolev_trace_norm(
    trace: TraceCoefficients, cfg: ProblemConfig, which: str = "f", s: float = 0.5
) -> float:
    """``(Lambda sum_n (1 + alpha_n^2)^s |c_n|^2)^(1/2)`` for one component."""
    total = 0.0
    for n, c in trace.component(which).items():
        alpha_n = cfg.alpha + 2 * math.pi * n / cfg.lambda_period
        total += (1 + alpha_n**2) ** s * abs(c) ** 2
    return math.sqrt(cfg.lambda_period * total)


def weighted_mode_norm(values: Mapping[int, complex], cfg: ProblemConfig, s: float) -> float:
    """Same norm as :func:`sobolev_trace_norm` for a bare ``n -> c`` map."""
    return sobolev_trace_norm(
        TraceCoefficients(Boundary.GAMMA1, {n: (c, 0j) for n, c in values.items()}), cfg, "f", s
    )
