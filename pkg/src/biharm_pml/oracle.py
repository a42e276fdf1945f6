"""Finite-difference oracle for the per-mode two-point boundary-value problem.

Second-order central differences in the interior; boundary rows reuse the
exact DtN symbols with one-sided derivative stencils accurate to fourth
order, so the closure does not pollute the interior rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dtn import exact_entries, forcing_terms
from .errors import ConfigError, SingularSystemError
from .modal import ProblemConfig, mode_params
from .solver import COND_LIMIT, ModeSolution, Scenario, solve_mode

BOUNDARY_ACCURACY = 4
MIN_NODES = 9
POINTS_PER_LENGTH = 20


@dataclass(frozen=True)
class FdGrid:
    lo: float
    hi: float
    h: float
    x: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.x.size < MIN_NODES:
            raise ConfigError(f"FD grid needs at least {MIN_NODES} nodes, got {self.x.size}")


def fd_weights(offsets, order: int) -> list[Fraction]:
    """Exact weights ``w`` with ``sum_k w_k u(x + o_k) ~ u^(order)(x)`` for unit spacing.

    Solves the Taylor-moment system in rational arithmetic (integer offsets).
    """
    offs = [Fraction(int(o)) for o in offsets]
    k = len(offs)
    # augmented rows: sum_k w_k o_k^j / j! = [j == order]
    rows = [[o**j / math.factorial(j) for o in offs] + [Fraction(int(j == order))] for j in range(k)]
    for col in range(k):
        piv = next(r for r in range(col, k) if rows[r][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        p = rows[col][col]
        rows[col] = [v / p for v in rows[col]]
        for r in range(k):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    return [rows[j][k] for j in range(k)]


def one_sided_weights(order: int, side: str, accuracy: int = BOUNDARY_ACCURACY) -> tuple[np.ndarray, list[Fraction]]:
    """Offsets and weights of a one-sided stencil pointing into the interval."""
    npts = order + accuracy
    offs = np.arange(npts)
    if side == "top":
        offs = -offs
    elif side != "bottom":
        raise ValueError(f"side must be 'top' or 'bottom', got {side!r}")
    return offs, fd_weights(offs, order)


def _node_count(lo: float, hi: float, h: float) -> int:
    n = round((hi - lo) / h)
    if n < 1 or abs(n * h - (hi - lo)) > 1e-9 * h * max(1, n):
        raise ConfigError(f"step h={h} does not divide the interval [{lo}, {hi}]")
    return n


def _boundary_rows(size: int, h: float, side: str) -> np.ndarray:
    """Rows approximating ``d^j u`` (j=0..3) at one end of a grid with ``size`` nodes."""
    rows = np.zeros((4, size), dtype=np.longdouble)
    end = size - 1 if side == "top" else 0
    rows[0, end] = 1
    hl = np.longdouble(h)
    for j in range(1, 4):
        offs, w = one_sided_weights(j, side)
        wl = np.array([np.longdouble(c.numerator) / np.longdouble(c.denominator) for c in w])
        rows[j, end + offs] = wl / hl**j
    return rows


def _resolution_check(cfg: ProblemConfig, n: int, h: float) -> None:
    mode = mode_params(cfg, n)
    scale = min(1 / mode.gamma_n, 1 / abs(mode.beta_n))
    if h > scale / POINTS_PER_LENGTH:
        raise ConfigError(f"h={h} under-resolves mode n={n}; need h <= {scale / POINTS_PER_LENGTH:.3e}")


def fd_solve_mode(cfg: ProblemConfig, scenario: Scenario, n: int, h: float) -> list[FdGrid]:
    """FD solution of one mode with exact DtN rows, one grid per strip segment (top first)."""
    scenario.check(cfg)
    _resolution_check(cfg, n, h)
    mode = mode_params(cfg, n)
    t = exact_entries(mode, cfg.mu)
    mu, a2, k4 = cfg.mu, mode.alpha_n**2, cfg.kappa**4

    if scenario.forcing is not None:
        vals = np.asarray(scenario.forcing.get(n, (0, 0, 0, 0)), dtype=complex)
    elif n == 0:
        ft = forcing_terms(cfg)
        vals = np.array([ft.p1_hat, ft.p2_hat, 0, 0], dtype=complex)
    else:
        vals = np.zeros(4, dtype=complex)

    segments = scenario.segments(cfg)
    grids = []
    for k, (lo, hi) in enumerate(segments):
        nint = _node_count(lo, hi, h)
        size = nint + 1
        if size < MIN_NODES:
            raise ConfigError(f"segment [{lo}, {hi}] has only {size} nodes at h={h}")
        # assembled in extended precision: the h^-4 stencil loses ~10 digits otherwise
        mat = np.zeros((size, size), dtype=np.clongdouble)
        rhs = np.zeros(size, dtype=np.clongdouble)
        hl = np.longdouble(h)
        d4 = np.array([1, -4, 6, -4, 1], dtype=np.longdouble) / hl**4
        d2 = np.array([1, -2, 1], dtype=np.longdouble) / hl**2
        for i in range(2, size - 2):
            row = i - 1
            mat[row, i - 2:i + 3] += d4
            mat[row, i - 1:i + 2] += -2 * a2 * d2
            mat[row, i] += a2 * a2 - k4

        top = _boundary_rows(size, h, "top")
        bot = _boundary_rows(size, h, "bottom")
        if k == 0:
            # Gamma1 rows, outward normal +x2
            mat[0] = (2 - mu) * a2 * top[1] - top[3] - t[0, 0] * top[0] - t[0, 1] * top[1]
            mat[size - 3] = -mu * a2 * top[0] + top[2] - t[1, 0] * top[0] - t[1, 1] * top[1]
            rhs[0], rhs[size - 3] = vals[0], vals[1]
        else:
            mat[0], mat[size - 3] = top[0], top[1]
        if k == len(segments) - 1:
            # Gamma2 rows, outward normal -x2 so g = -u'
            mat[size - 2] = -(2 - mu) * a2 * bot[1] + bot[3] - t[0, 0] * bot[0] + t[0, 1] * bot[1]
            mat[size - 1] = -mu * a2 * bot[0] + bot[2] - t[1, 0] * bot[0] + t[1, 1] * bot[1]
            rhs[size - 2], rhs[size - 1] = vals[2], vals[3]
        else:
            mat[size - 2], mat[size - 1] = bot[0], bot[1]

        values = _refined_solve(mat, rhs, n)
        x = lo + h * np.arange(size)
        grids.append(FdGrid(lo, hi, h, x, values))
    return grids


def _refined_solve(mat: np.ndarray, rhs: np.ndarray, n: int, sweeps: int = 4) -> np.ndarray:
    """Double-precision inverse with residuals in extended precision (iterative refinement)."""
    scale = np.max(np.abs(mat), axis=1)
    mat = mat / scale[:, None]
    rhs = rhs / scale
    eq = mat.astype(complex)
    if np.linalg.cond(eq) > COND_LIMIT:
        raise SingularSystemError(f"FD system for n={n} is numerically singular")
    inv = np.linalg.inv(eq)
    x = (inv @ rhs.astype(complex)).astype(np.clongdouble)
    for _ in range(sweeps):
        r = rhs - mat @ x
        x = x + (inv @ r.astype(complex)).astype(np.clongdouble)
    return x.astype(complex)


def analytic_on_grid(sol: ModeSolution, grid: FdGrid) -> np.ndarray:
    return np.array([sol.strip_derivs(float(x), 0)[0] for x in grid.x])


def _max_dev(grids, sol: ModeSolution) -> float:
    return max(float(np.max(np.abs(g.values - analytic_on_grid(sol, g)))) for g in grids)


@dataclass(frozen=True)
class ConvergenceReport:
    n: int
    steps: tuple[float, ...]
    errors: tuple[float, ...]
    orders: tuple[float, ...]
    richardson_error: float


def convergence_study(
    cfg: ProblemConfig,
    scenario: Scenario,
    n: int,
    steps: tuple[float, ...] = (1e-2, 5e-3, 2.5e-3),
) -> ConvergenceReport:
    """Max-node errors against the analytic solver, observed orders and a Richardson check.

    The Richardson value combines the two finest grids on the coarser one's
    nodes, ``u_f + (u_f - u_c) / 3``, assuming the steps halve.
    """
    if len(steps) < 2:
        raise ValueError("need at least two steps")
    for a, b in zip(steps, steps[1:]):
        if not math.isclose(a, 2 * b, rel_tol=1e-12):
            raise ValueError("steps must halve successively")
    sol = solve_mode(cfg, scenario, n)
    runs = [fd_solve_mode(cfg, scenario, n, h) for h in steps]
    errors = tuple(_max_dev(g, sol) for g in runs)
    orders = tuple(
        math.log2(e0 / e1) if e1 > 0 and e0 > 0 else math.inf for e0, e1 in zip(errors, errors[1:])
    )
    coarse, fine = runs[-2], runs[-1]
    rich = 0.0
    for gc, gf in zip(coarse, fine):
        extrap = gf.values[::2] + (gf.values[::2] - gc.values) / 3
        rich = max(rich, float(np.max(np.abs(extrap - analytic_on_grid(sol, gc)))))
    return ConvergenceReport(n, tuple(steps), errors, orders, rich)
