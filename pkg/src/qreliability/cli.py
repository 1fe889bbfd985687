"""
Command-line driver: sweeps, fits and cross-checks written as CSV.

Run ``python -m qreliability <command> --help``.  Configuration is a flat
``key = value`` file (``#`` starts a comment); ``--set key=value`` overrides
single entries.  Ranges are written ``lo, hi, n``.

Exit codes: 0 pass, 1 quantitative check failed, 2 configuration error,
3 insufficient data.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .histories import check_consistency
from .model import DomainError, ModelParams, NumericError
from .reliability import (
    READINGS,
    SCALING_TARGETS,
    FitError,
    InsufficientDataError,
    ReliabilityReport,
    measurement_pipeline,
    relation_fit,
    scaling_fit,
    sweep,
)

__all__ = ["RunConfig", "ConfigError", "load_config", "main", "SWEEP_COLUMNS"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3

SWEEP_COLUMNS = (
    "k0", "b", "Bx", "R", "alpha_tilde", "beta_tilde", "B_measured", "delta_B", "sensitivity",
)
PARAM_KEYS = tuple(f.name for f in fields(ModelParams))
RANGE_KEYS = ("k0_range", "b_range", "Bx_range")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = ModelParams()
    k0_range: tuple | None = None
    b_range: tuple | None = None
    Bx_range: tuple | None = None
    reading: str = "beta_tilde"
    regime: str = "first_order"
    out: str | None = None
    # second field for the coefficient-independence check of fit-relation
    Bx_second: float = 1.0
    # z points of the discretised history family
    n: int = 512
    # grid spacing of the oracle comparison
    dz: float = 0.02
    r2_min: float = 0.98

    def values(self, key: str):
        rng = getattr(self, key)
        return None if rng is None else np.linspace(rng[0], rng[1], int(rng[2]))


OTHER_KEYS = tuple(f.name for f in fields(RunConfig) if f.name not in ("params", *RANGE_KEYS))
ALL_KEYS = PARAM_KEYS + RANGE_KEYS + OTHER_KEYS

# defaults per command (reference captions; Bx = 2 throughout unless noted)
COMMAND_DEFAULTS = {
    "run-point": {},
    "sweep-grid": {"k0_range": "2, 15, 50", "b_range": "5, 50, 50"},
    "sweep-field": {"Bx_range": "0.05, 2.5, 50"},
    "fit-relation": {"k0_range": "10, 15, 21", "b_range": "30, 50, 21"},
    "fit-scaling": {"k0_range": "13, 15, 21", "b_range": "30, 50, 21"},
    "check-consistency": {"k0": "10"},
    "oracle-compare": {},
}
# the second-order regime is the vanishing-field limit
SECOND_ORDER_BX = "0.001"


def _parse_range(key: str, text: str) -> tuple:
    parts = [p.strip() for p in text.replace(";", ",").split(",") if p.strip()]
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected 'lo, hi, n' (got {text!r})")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"{key}: expected 'lo, hi, n' (got {text!r})") from None
    if not lo < hi:
        raise ConfigError(f"{key}: lo < hi violated (lo={lo!r}, hi={hi!r})")
    if n < 2:
        raise ConfigError(f"{key}: n >= 2 violated (n={n!r})")
    return lo, hi, n


def parse_pairs(lines) -> dict:
    """``key = value`` pairs from config lines; rejects unknown keys."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value (got {raw.strip()!r})")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in ALL_KEYS:
            raise ConfigError(f"unknown config key {key!r}; known keys: {', '.join(ALL_KEYS)}")
        out[key] = value
    return out


def build_config(pairs: dict) -> RunConfig:
    phys, other = {}, {}
    for key, value in pairs.items():
        if key in RANGE_KEYS:
            other[key] = None if value.lower() in ("", "none") else _parse_range(key, value)
        elif key in PARAM_KEYS:
            try:
                phys[key] = float(value)
            except ValueError:
                raise ConfigError(f"{key}: not a number ({value!r})") from None
        elif key in ("reading", "regime", "out"):
            other[key] = value
        elif key == "n":
            try:
                other[key] = int(value)
            except ValueError:
                raise ConfigError(f"n: not an integer ({value!r})") from None
        else:
            try:
                other[key] = float(value)
            except ValueError:
                raise ConfigError(f"{key}: not a number ({value!r})") from None
    try:
        params = ModelParams(**phys)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(params=params, **other)
    if cfg.reading not in READINGS:
        raise ConfigError(f"reading must be one of {READINGS} (got {cfg.reading!r})")
    if cfg.regime not in SCALING_TARGETS:
        raise ConfigError(f"regime must be one of {tuple(SCALING_TARGETS)} (got {cfg.regime!r})")
    return cfg


def load_config(command: str, path=None, overrides=(), reading=None, regime=None, out=None) -> RunConfig:
    pairs = dict(COMMAND_DEFAULTS.get(command, {}))
    if command == "fit-scaling" and regime == "second_order":
        pairs["Bx"] = SECOND_ORDER_BX
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        pairs.update(parse_pairs(text.splitlines()))
    pairs.update(parse_pairs(overrides))
    for key, value in (("reading", reading), ("regime", regime), ("out", out)):
        if value is not None:
            pairs[key] = value
    return build_config(pairs)


# ---------------------------------------------------------------------------
# output


def fmt(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def report_row(r: ReliabilityReport) -> list:
    return [r.k0, r.b, r.Bx, r.R, r.alpha_tilde, r.beta_tilde, r.B_measured, r.delta_B, r.sensitivity]


def write_csv(header, rows, out) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    text = buf.getvalue()
    if out:
        Path(out).write_text(text, encoding="utf-8")
    return text


def _emit(cfg: RunConfig, header, rows, stdout):
    text = write_csv(header, rows, cfg.out)
    if not cfg.out:
        stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def run_point(cfg: RunConfig, stdout=sys.stdout) -> int:
    if any(getattr(cfg, k) is not None for k in RANGE_KEYS):
        raise ConfigError("run-point takes no sweep ranges")
    r = measurement_pipeline(cfg.params, which=cfg.reading)
    _emit(cfg, SWEEP_COLUMNS + ("degenerate_sensitivity",), [report_row(r) + [r.degenerate]], stdout)
    note = " (sensitivity degenerate at this field)" if r.degenerate else ""
    print(f"# R = {r.R:.10g}, delta_B = {r.delta_B:.6g}, S = {r.sensitivity:.6g}{note}", file=stdout)
    return EXIT_OK


def sweep_grid(cfg: RunConfig, stdout=sys.stdout) -> int:
    if cfg.k0_range is None or cfg.b_range is None:
        raise ConfigError("sweep-grid needs k0_range and b_range")
    reports = sweep(cfg.params, cfg.values("k0_range"), cfg.values("b_range"), which=cfg.reading)
    _emit(cfg, SWEEP_COLUMNS, [report_row(r) for r in reports], stdout)
    return EXIT_OK


def sweep_field(cfg: RunConfig, stdout=sys.stdout) -> int:
    if cfg.Bx_range is None:
        raise ConfigError("sweep-field needs Bx_range")
    reports = sweep(cfg.params, Bx_values=cfg.values("Bx_range"), which=cfg.reading)
    rows = [report_row(r) + [1 - r.R, abs(r.delta_B)] for r in reports]
    _emit(cfg, SWEEP_COLUMNS + ("one_minus_R", "abs_delta_B"), rows, stdout)
    return EXIT_OK


def _grid_reports(cfg: RunConfig, Bx: float):
    return sweep(
        cfg.params.with_(Bx=Bx), cfg.values("k0_range"), cfg.values("b_range"), which=cfg.reading
    )


def fit_relation(cfg: RunConfig, stdout=sys.stdout) -> int:
    """Fit ``1 - R`` against ``S |delta_B|`` at ``Bx`` and ``Bx_second``."""
    if cfg.k0_range is None or cfg.b_range is None:
        raise ConfigError("fit-relation needs k0_range and b_range")
    fields_ = [cfg.params.Bx, cfg.Bx_second]
    rows, fits = [], []
    for Bx in fields_:
        reports = _grid_reports(cfg, Bx)
        try:
            fit = relation_fit(reports)
        except InsufficientDataError as exc:
            print(f"insufficient data at Bx={Bx:g}: {exc}", file=sys.stderr)
            return EXIT_DATA
        fits.append(fit)
        for r in reports:
            rows.append(report_row(r) + [1 - r.R, abs(r.sensitivity * r.delta_B)])
    _emit(cfg, SWEEP_COLUMNS + ("one_minus_R", "S_abs_delta_B"), rows, stdout)
    ok = True
    for Bx, fit in zip(fields_, fits):
        passed = fit.r_squared >= cfg.r2_min
        ok &= passed
        print(
            f"# Bx={Bx:g}: slope={fit.slope:.6g} intercept={fit.intercept:.3g} "
            f"({100 * fit.intercept_fraction:.2f}% of range) r2={fit.r_squared:.6f} "
            f"n={fit.n_points} excluded={fit.n_excluded} {'PASS' if passed else 'FAIL'}",
            file=stdout,
        )
    spread = abs(fits[0].slope - fits[1].slope) / abs(fits[0].slope)
    print(f"# slope spread between fields: {100 * spread:.2f}%", file=stdout)
    return EXIT_OK if ok else EXIT_FAIL


def fit_scaling(cfg: RunConfig, stdout=sys.stdout) -> int:
    if cfg.k0_range is None or cfg.b_range is None:
        raise ConfigError("fit-scaling needs k0_range and b_range")
    reports = _grid_reports(cfg, cfg.params.Bx)
    try:
        fit = scaling_fit(reports, cfg.regime)
    except (FitError, DomainError) as exc:
        print(f"scaling fit failed: {exc}", file=sys.stderr)
        return EXIT_DATA
    rows = [report_row(r) + [1 - r.R, abs(r.delta_B)] for r in reports]
    _emit(cfg, SWEEP_COLUMNS + ("one_minus_R", "abs_delta_B"), rows, stdout)
    target = fit.extra["target"]
    passed = abs(fit.slope - target) <= 0.1
    print(
        f"# {cfg.regime}: slope={fit.slope:.6g} target={target:g} r2={fit.r_squared:.6f} "
        f"{'PASS' if passed else 'FAIL'}",
        file=stdout,
    )
    return EXIT_OK if passed else EXIT_FAIL


def consistency_verdict(fam, tol: float = 1e-8, stdout=sys.stdout) -> int:
    rep = check_consistency(fam, tol)
    print(f"max violation {rep.max_violation:.3e} (tol {tol:g})", file=stdout)
    for label, w in zip(fam.labels, rep.weights):
        print(f"W({label}) = {w:.12g}", file=stdout)
    print("consistent" if rep.consistent else "INCONSISTENT", file=stdout)
    return EXIT_OK if rep.consistent else EXIT_FAIL


def check_consistency_cmd(cfg: RunConfig, stdout=sys.stdout) -> int:
    from .oracle import discretize_pipeline

    fam, _ = discretize_pipeline(cfg.params, cfg.n)
    code = consistency_verdict(fam, stdout=stdout)
    R = measurement_pipeline(cfg.params).R
    print(f"closed-form R = {R:.12g}", file=stdout)
    return code


def oracle_compare(cfg: RunConfig, stdout=sys.stdout) -> int:
    """Closed forms against grid propagation."""
    from .oracle import half_line_probability, oracle_sg_populations, oracle_transmission
    from .scattering import momentum_averaged_transmission, scatter_spinor
    from .sterngerlach import sg_evolve

    p = cfg.params
    table = []
    for ch in ("plus", "minus"):
        table.append(
            (f"transmitted_{ch}", momentum_averaged_transmission(p, ch), oracle_transmission(p, ch, dz=cfg.dz), 1e-4)
        )
    sp = scatter_spinor(p)
    out = sg_evolve(sp, p.f, p.t2, p)
    alpha, beta, state = oracle_sg_populations(p, sp.up_coeff, sp.down_coeff, dz=cfg.dz)
    R_grid = abs(sp.up_coeff) ** 2 * half_line_probability(state, 0.0, "positive", 0) + abs(
        sp.down_coeff
    ) ** 2 * half_line_probability(state, 0.0, "negative", 1)
    R = measurement_pipeline(p).R
    table += [
        ("alpha_tilde", out.alpha_tilde, alpha, 1e-6),
        ("beta_tilde", out.beta_tilde, beta, 1e-6),
        ("R", R, R_grid, 1e-6),
    ]
    rows = [(q, cf, orc, abs(cf - orc), tol, abs(cf - orc) <= tol) for q, cf, orc, tol in table]
    _emit(cfg, ("quantity", "closed_form", "oracle", "abs_diff", "tolerance", "pass"), rows, stdout)
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_FAIL


COMMANDS = {
    "run-point": run_point,
    "sweep-grid": sweep_grid,
    "sweep-field": sweep_field,
    "fit-relation": fit_relation,
    "fit-scaling": fit_scaling,
    "check-consistency": check_consistency_cmd,
    "oracle-compare": oracle_compare,
}

HELP = {
    "run-point": "pipeline at one configuration",
    "sweep-grid": "reliability over a (k0, b) grid",
    "sweep-field": "reliability and error over a Bx range",
    "fit-relation": "fit 1 - R against S |delta_B| at two fields",
    "fit-scaling": "log-log slope of |delta_B| against 1 - R",
    "check-consistency": "consistency of the discretised history family",
    "oracle-compare": "closed forms against grid propagation",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qreliability", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--out", help="CSV output path (default: standard output)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one key")
        sp.add_argument("--reading", choices=READINGS)
        sp.add_argument("--regime", choices=tuple(SCALING_TARGETS))
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, args.set, args.reading, args.regime, args.out)
        return COMMANDS[args.command](cfg, stdout=stdout)
    except (ConfigError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
