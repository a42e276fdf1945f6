"""Command-line entry point: ``biharm-pml <command> [--config FILE] [--key VALUE ...]``."""

from __future__ import annotations

import argparse
import csv
import sys
from typing import Sequence, TextIO

import numpy as np

from .dtn import exact_symbol
from .errors import BiharmError, ConfigError, ResonanceError
from .harness import (
    _CFG_FIELDS,
    _PROFILE_FIELDS,
    StudySpec,
    fmt,
    load_spec,
    run_study,
    verify,
    write_csv,
)
from .modal import Boundary, mode_params
from .pml import pml_symbol, theta_bound, weighted_symbol_error
from .solver import field_eval, solve

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
COMMANDS = ("modes", "symbol", "pml-error", "solve", "sweep", "verify")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with a [study] section")
    for name in list(_CFG_FIELDS) + list(_PROFILE_FIELDS):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None)
    p.add_argument("--axis", default=None)
    p.add_argument("--values", default=None, help="comma or space separated sweep values")
    p.add_argument("--scenario", default=None, choices=("EmptyStrip", "ClampedLine"))
    p.add_argument("--h0", default=None)
    p.add_argument("--norms", default=None)
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--seed", default=None)
    p.add_argument("--timing", action="store_const", const=True, default=None,
                   help="fill wall_ms (makes output run-dependent)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="biharm-pml", description="Biharmonic grating scattering with exact and PML boundary conditions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _add_config_flags(p)
        if name in ("modes", "symbol"):
            p.add_argument("--n-min", type=int, default=None)
            p.add_argument("--n-max", type=int, default=None)
        if name == "solve":
            p.add_argument("--symbols", choices=("exact", "pml"), default="exact")
            p.add_argument("--samples", type=int, default=20, help="random sample points")
    return parser


def _spec_from_args(args) -> StudySpec:
    keys = list(_CFG_FIELDS) + list(_PROFILE_FIELDS) + ["axis", "values", "scenario", "h0", "norms", "output", "seed", "timing"]
    overrides = {k: getattr(args, k) for k in keys}
    return load_spec(args.config, overrides)


def _mode_range(args, spec: StudySpec) -> range:
    t = spec.cfg.truncation
    lo = -t if args.n_min is None else args.n_min
    hi = t if args.n_max is None else args.n_max
    if hi < lo:
        raise ConfigError("n-max must be >= n-min")
    return range(lo, hi + 1)


def _cx(z: complex) -> list[str]:
    return [fmt(z.real), fmt(z.imag)]


def cmd_modes(args, spec: StudySpec, out: TextIO) -> int:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["n", "alpha_n", "beta_re", "beta_im", "gamma_n", "propagating", "status"])
    for n in _mode_range(args, spec):
        try:
            m = mode_params(spec.cfg, n)
            w.writerow([n, fmt(m.alpha_n), *_cx(m.beta_n), fmt(m.gamma_n), int(m.propagating), "ok"])
        except ResonanceError:
            w.writerow([n, "", "", "", "", "", "resonance"])
    return EXIT_OK


def cmd_symbol(args, spec: StudySpec, out: TextIO) -> int:
    w = csv.writer(out, lineterminator="\n")
    head = ["n", "kind", "boundary"]
    for i in (1, 2):
        for j in (1, 2):
            head += [f"t{i}{j}_re", f"t{i}{j}_im"]
    w.writerow(head + ["status"])
    for n in _mode_range(args, spec):
        try:
            mode = mode_params(spec.cfg, n)
        except ResonanceError:
            w.writerow([n, "", "", *[""] * 8, "resonance"])
            continue
        for bnd in Boundary:
            rows = [("exact", lambda: exact_symbol(mode, spec.cfg.mu, bnd)),
                    ("pml", lambda: pml_symbol(mode, spec.cfg.mu, spec.profile, bnd))]
            for kind, make in rows:
                try:
                    t = make().entries
                    vals = [x for z in t.ravel() for x in _cx(complex(z))]
                    w.writerow([n, kind, bnd.value, *vals, "ok"])
                except BiharmError as exc:
                    w.writerow([n, kind, bnd.value, *[""] * 8, type(exc).__name__])
    return EXIT_OK


def cmd_pml_error(args, spec: StudySpec, out: TextIO) -> int:
    """Sobolev-weighted symbol error per mode at each swept layer thickness."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["delta", "n", "boundary", "weighted_error", "theta", "ratio", "status"])
    for d in spec.values:
        profile = spec.profile.with_delta(d)
        tb = theta_bound(spec.cfg, profile)
        for n in spec.cfg.modes():
            for bnd in Boundary:
                try:
                    e = weighted_symbol_error(mode_params(spec.cfg, n), spec.cfg.mu, profile, bnd)
                    w.writerow([fmt(d), n, bnd.value, fmt(e), fmt(tb.theta), fmt(e / tb.theta), "ok"])
                except BiharmError as exc:
                    w.writerow([fmt(d), n, bnd.value, "", fmt(tb.theta), "", type(exc).__name__])
    return EXIT_OK


def cmd_solve(args, spec: StudySpec, out: TextIO) -> int:
    cfg = spec.cfg
    symbols = spec.profile if args.symbols == "pml" else None
    sols = solve(cfg, spec.make_scenario(), symbols)
    rng = np.random.default_rng(spec.seed)
    if symbols is None:
        lo, hi = cfg.h2 - 1.0, cfg.h1 + 1.0
    else:
        lo, hi = cfg.h2 - spec.profile.delta2, cfg.h1 + spec.profile.delta1
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["x1", "x2", "region", "u_re", "u_im"])
    for _ in range(args.samples):
        x1 = float(rng.uniform(0, cfg.lambda_period))
        x2 = float(rng.uniform(lo, hi))
        s = field_eval(sols, x1, x2)
        w.writerow([fmt(s.x1), fmt(s.x2), s.region, *_cx(s.value)])
    return EXIT_OK


def cmd_sweep(args, spec: StudySpec, out: TextIO) -> int:
    result = run_study(spec)
    write_csv(result, out)
    return EXIT_OK


def cmd_verify(args, spec: StudySpec, out: TextIO) -> int:
    report = verify(spec.cfg, spec.profile, spec.seed)
    out.write(report.to_json() + "\n")
    return EXIT_OK if report.ok else EXIT_FAIL


HANDLERS = {
    "modes": cmd_modes,
    "symbol": cmd_symbol,
    "pml-error": cmd_pml_error,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _spec_from_args(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handler = HANDLERS[args.command]
    try:
        if spec.output and args.command != "verify":
            with open(spec.output, "w", encoding="utf-8", newline="") as fh:
                return handler(args, spec, fh)
        return handler(args, spec, sys.stdout)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BiharmError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
