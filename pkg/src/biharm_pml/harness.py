"""Study configuration, convergence sweeps, CSV output and the verification suite.

Configuration files are INI documents with a single ``[study]`` section whose
keys mirror the field names of :class:`ProblemConfig`, :class:`PmlProfile` and
:class:`StudySpec`.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence, TextIO

import numpy as np

from .dtn import positivity_threshold, quadratic_form, positivity_matrix
from .errors import (
    BiharmError,
    ConfigError,
    DegenerateDenominatorError,
    ResonanceError,
    SingularSystemError,
)
from .modal import Boundary, ProblemConfig, mode_params
from .oracle import convergence_study
from .pml import (
    PmlProfile,
    Region,
    closed_form_layer_coeffs,
    denominator_coefficient,
    layer_coeffs,
    theta_bound,
)
from .solver import NORM_NAMES, Scenario, solution_error, solve

AXES = ("delta", "sigma0", "m", "kappa", "theta")
SCENARIOS = ("EmptyStrip", "ClampedLine")
NOISE_FLOOR = 1e-13
CSV_COLUMNS = (
    "sweep_value",
    "theta",
    "theta_branch",
    *NORM_NAMES,
    "status",
    "wall_ms",
    "slope",
    "predicted_slope",
)
SECTION = "study"

_CFG_FIELDS = {f.name: f for f in dataclasses.fields(ProblemConfig)}
_PROFILE_FIELDS = {f.name: f for f in dataclasses.fields(PmlProfile)}
_STUDY_KEYS = ("axis", "values", "scenario", "h0", "norms", "output", "seed")


def fmt(x: float | None) -> str:
    """Full double precision, empty for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(x, ".17g")


@dataclass(frozen=True)
class StudySpec:
    cfg: ProblemConfig = field(default_factory=ProblemConfig)
    profile: PmlProfile = field(default_factory=PmlProfile)
    axis: str = "delta"
    values: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
    scenario: str = "ClampedLine"
    h0: float | None = None
    norms: tuple[str, ...] = NORM_NAMES
    output: str | None = None
    seed: int = 0
    timing: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            raise ConfigError("sweep values must be nonempty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        unknown = set(self.norms) - set(NORM_NAMES)
        if unknown:
            raise ConfigError(f"unknown norms: {sorted(unknown)}")
        for v in self.values:
            self.point(v)
        self.make_scenario().check(self.cfg)

    def point(self, value: float) -> tuple[ProblemConfig, PmlProfile]:
        """Config and profile at one sweep value (validated)."""
        cfg, profile = self.cfg, self.profile
        if self.axis == "delta":
            profile = profile.with_delta(value)
        elif self.axis == "sigma0":
            profile = dataclasses.replace(profile, sigma0=value)
        elif self.axis == "m":
            if int(value) != value:
                raise ConfigError(f"m must be an integer, got {value}")
            profile = dataclasses.replace(profile, m=int(value))
        else:
            cfg = cfg.with_(**{self.axis: value})
        return cfg, profile

    def make_scenario(self) -> Scenario:
        if self.scenario == "EmptyStrip":
            return Scenario.empty_strip()
        h0 = self.h0 if self.h0 is not None else 0.5 * (self.cfg.h1 + self.cfg.h2)
        return Scenario.clamped_line(h0)


# configuration ------------------------------------------------------------------


def _parse_float_list(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    return tuple(float(p) for p in parts)


def _convert(name: str, raw: Any, ftype: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    try:
        if ftype in (int, "int"):
            val = float(raw)
            if val != int(val):
                raise ValueError
            return int(val)
        if ftype in (complex, "complex"):
            return complex(raw.replace(" ", ""))
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def read_config(path: str | Path) -> dict[str, str]:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not parser.has_section(SECTION):
        raise ConfigError(f"config {path} has no [{SECTION}] section")
    known = set(_CFG_FIELDS) | set(_PROFILE_FIELDS) | set(_STUDY_KEYS) | {"timing"}
    values = dict(parser.items(SECTION))
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return values


def build_spec(values: Mapping[str, Any]) -> StudySpec:
    """Typed :class:`StudySpec` from string or native values keyed by field name."""
    try:
        cfg_kw = {
            k: _convert(k, v, _CFG_FIELDS[k].type) for k, v in values.items() if k in _CFG_FIELDS and v is not None
        }
        prof_kw = {
            k: _convert(k, v, _PROFILE_FIELDS[k].type)
            for k, v in values.items()
            if k in _PROFILE_FIELDS and v is not None
        }
        cfg = ProblemConfig(**cfg_kw)
        profile = PmlProfile(**prof_kw)
        kw: dict[str, Any] = {}
        if values.get("axis") is not None:
            kw["axis"] = str(values["axis"]).strip()
        if values.get("values") is not None:
            v = values["values"]
            kw["values"] = _parse_float_list(v) if isinstance(v, str) else tuple(float(x) for x in v)
        if values.get("scenario") is not None:
            kw["scenario"] = str(values["scenario"]).strip()
        if values.get("h0") not in (None, ""):
            kw["h0"] = float(values["h0"])
        if values.get("norms") is not None:
            v = values["norms"]
            kw["norms"] = tuple(v.replace(",", " ").split()) if isinstance(v, str) else tuple(v)
        if values.get("output") not in (None, ""):
            kw["output"] = str(values["output"])
        if values.get("seed") is not None:
            kw["seed"] = int(_convert("seed", values["seed"], int))
        if values.get("timing") is not None:
            t = values["timing"]
            kw["timing"] = t if isinstance(t, bool) else str(t).strip().lower() in ("1", "true", "yes", "on")
        return StudySpec(cfg=cfg, profile=profile, **kw)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_spec(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> StudySpec:
    """File values first, then non-None overrides (CLI flags)."""
    values: dict[str, Any] = read_config(path) if path else {}
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return build_spec(values)


# sweeps -------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRecord:
    sweep_value: float
    theta: float | None
    theta_branch: str
    errors: dict[str, float]
    status: str
    wall_ms: float | None = None


@dataclass(frozen=True)
class StudyResult:
    spec: StudySpec
    records: list[ConvergenceRecord]
    slope: float | None
    predicted_slope: float | None


_STATUS = (
    (ResonanceError, "resonance"),
    (DegenerateDenominatorError, "degenerate_denominator"),
    (SingularSystemError, "singular"),
)


def _status_of(exc: BaseException) -> str:
    for cls, name in _STATUS:
        if isinstance(exc, cls):
            return name
    return "error"


def fit_slope(values: Sequence[float], errors: Sequence[float], floor: float = NOISE_FLOOR) -> float | None:
    """Least-squares slope of ``log(error)`` against the swept value, skipping the noise floor."""
    pts = [(v, e) for v, e in zip(values, errors) if e is not None and e >= floor]
    if len(pts) < 2:
        return None
    x = np.array([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def run_study(spec: StudySpec, clock: Callable[[], float] = time.perf_counter) -> StudyResult:
    scenario = spec.make_scenario()
    records = []
    for value in spec.values:
        cfg, profile = spec.point(value)
        start = clock()
        theta, branch, errors, status = None, "", {}, "ok"
        try:
            tb = theta_bound(cfg, profile)
            theta, branch = tb.theta, tb.dominant_branch
            errors = solution_error(cfg, scenario, profile, spec.norms)
        except BiharmError as exc:
            status = _status_of(exc)
        wall = (clock() - start) * 1e3 if spec.timing else None
        records.append(ConvergenceRecord(value, theta, branch, errors, status, wall))

    slope = None
    if "err_modal_h2" in spec.norms:
        ok = [r for r in records if r.status == "ok"]
        slope = fit_slope([r.sweep_value for r in ok], [r.errors["err_modal_h2"] for r in ok])
    predicted = None
    if spec.axis == "delta":
        try:
            predicted = -theta_bound(spec.cfg, spec.profile).rate
        except BiharmError:
            predicted = None
    return StudyResult(spec, records, slope, predicted)


def write_csv(result: StudyResult, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in result.records:
        row = [fmt(r.sweep_value), fmt(r.theta), r.theta_branch]
        row += [fmt(r.errors.get(name)) for name in NORM_NAMES]
        row += [r.status, fmt(r.wall_ms), "", ""]
        writer.writerow(row)
    summary = ["", "", "", *[""] * len(NORM_NAMES), "summary", "", fmt(result.slope), fmt(result.predicted_slope)]
    writer.writerow(summary)


def study_csv(result: StudyResult) -> str:
    buf = io.StringIO()
    write_csv(result, buf)
    return buf.getvalue()


# verification -------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class VerifyReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_json(self) -> str:
        payload = {"ok": self.ok, "checks": [dataclasses.asdict(c) for c in self.checks]}
        return json.dumps(payload, indent=2, sort_keys=True)


def _check_denominator_identity(cfg: ProblemConfig, profile: PmlProfile, rng) -> str:
    worst = 0.0
    for n in range(-50, 51):
        try:
            mode = mode_params(cfg, n)
        except ResonanceError:
            continue
        lhs = abs(denominator_coefficient(mode)) ** 2
        rhs = abs(mode.gamma_plus_i_beta) ** 4
        worst = max(worst, abs(lhs - rhs) / rhs)
    if worst > 1e-12:
        raise AssertionError(f"max relative deviation {worst:.3e}")
    return f"max relative deviation {worst:.3e}"


def _check_positivity(cfg: ProblemConfig, profile: PmlProfile, rng) -> str:
    n0 = positivity_threshold(cfg, n_max=100)
    worst = math.inf
    for n in (n0, -n0, n0 + 1, -(n0 + 1), 100, -100):
        mode = mode_params(cfg, n)
        f = rng.normal(size=200) + 1j * rng.normal(size=200)
        g = rng.normal(size=200) + 1j * rng.normal(size=200)
        vals = quadratic_form(mode, cfg.mu, f, g)
        scale = np.linalg.norm(positivity_matrix(mode, cfg.mu), 2) * (abs(f) ** 2 + abs(g) ** 2)
        worst = min(worst, float(np.min(vals / scale)))
        if np.any(vals < -1e-12 * scale):
            raise AssertionError(f"negative form value at n={n}")
    return f"n0={n0}, min scaled form {worst:.3e}"


def _check_closed_form(cfg: ProblemConfig, profile: PmlProfile, rng) -> str:
    worst = 0.0
    for n in range(-20, 21):
        try:
            mode = mode_params(cfg, n)
        except ResonanceError:
            continue
        f, g = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        for region in Region:
            a = layer_coeffs(mode, f, g, profile, region).scaled
            b = closed_form_layer_coeffs(mode, f, g, profile, region).scaled
            worst = max(worst, float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)))
    if worst > 1e-9:
        raise AssertionError(f"max relative deviation {worst:.3e}")
    return f"max relative deviation {worst:.3e}"


def _mid_clamp(cfg: ProblemConfig) -> Scenario:
    return Scenario.clamped_line(0.5 * (cfg.h1 + cfg.h2))


def _check_residual(cfg: ProblemConfig, profile: PmlProfile, rng) -> str:
    worst = 0.0
    for symbols in (None, profile):
        for sc in (Scenario.empty_strip(), _mid_clamp(cfg)):
            for sol in solve(cfg, sc, symbols).values():
                worst = max(worst, float(np.max(np.abs(sol.residuals) / sol.row_scale)))
    if worst > 1e-9:
        raise AssertionError(f"max scaled residual {worst:.3e}")
    return f"max scaled residual {worst:.3e}"


def _check_continuity(cfg: ProblemConfig, profile: PmlProfile, rng) -> str:
    worst = 0.0
    for symbols in (None, profile):
        for sol in solve(cfg, _mid_clamp(cfg), symbols).values():
            for bnd, x2 in ((Boundary.GAMMA1, cfg.h1), (Boundary.GAMMA2, cfg.h2)):
                inner = sol.strip_derivs(x2)
                outer = sol.exterior_derivs(x2)
                scale = max(1.0, float(np.max(np.abs(inner))))
                d_trace = float(np.max(np.abs(inner[:2] - outer[:2]))) / scale
                nm_in = np.array(sol.boundary_operators(bnd, "strip"))
                nm_out = np.array(sol.boundary_operators(bnd, "exterior"))
                d_op = float(np.max(np.abs(nm_in - nm_out))) / max(1.0, float(np.max(np.abs(nm_in))))
                worst = max(worst, d_trace, d_op)
    if worst > 1e-9:
        raise AssertionError(f"max scaled jump {worst:.3e}")
    return f"max scaled jump {worst:.3e}"


def fd_steps(cfg: ProblemConfig, n: int = 0, levels: int = 3) -> tuple[float, ...]:
    """Halving steps that divide both clamped segments and resolve mode ``n``."""
    seg = 0.5 * (cfg.h1 - cfg.h2)
    mode = mode_params(cfg, n)
    scale = min(1 / mode.gamma_n, 1 / abs(mode.beta_n))
    nint = max(50, math.ceil(20 * seg / scale))
    return tuple(seg / (nint * 2**k) for k in range(levels))


def _check_fd_oracle(cfg: ProblemConfig, profile: PmlProfile, rng) -> str:
    rep = convergence_study(cfg, _mid_clamp(cfg), 0, fd_steps(cfg))
    if not all(abs(o - 2.0) <= 0.3 for o in rep.orders):
        raise AssertionError(f"observed orders {rep.orders}")
    if rep.richardson_error > 1e-7:
        raise AssertionError(f"Richardson deviation {rep.richardson_error:.3e}")
    return f"orders {', '.join(f'{o:.3f}' for o in rep.orders)}; Richardson deviation {rep.richardson_error:.3e}"


VERIFY_CHECKS: tuple[tuple[str, Callable], ...] = (
    ("denominator_identity", _check_denominator_identity),
    ("positivity_threshold", _check_positivity),
    ("closed_form_vs_solve", _check_closed_form),
    ("residual", _check_residual),
    ("continuity", _check_continuity),
    ("fd_oracle", _check_fd_oracle),
)


def verify(cfg: ProblemConfig, profile: PmlProfile, seed: int = 0) -> VerifyReport:
    """Run every named check; exceptions become failures carrying their type."""
    checks = []
    for name, fn in VERIFY_CHECKS:
        rng = np.random.default_rng(seed)
        try:
            detail = fn(cfg, profile, rng)
            checks.append(CheckResult(name, True, detail))
        except AssertionError as exc:
            checks.append(CheckResult(name, False, str(exc)))
        except (BiharmError, ArithmeticError, ValueError) as exc:
            checks.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
    return VerifyReport(checks)
