"""Command-line entry point.

Three subcommands, each driven by a flat key=value config file and
emitting one CSV:

  simulate   -- Monte-Carlo PLR sweep over a load grid (plr/1 schema)
  analyze    -- closed-form curves: per-slot resolve probabilities over a
                population grid (pi_u mode) or the regime-comparison
                boundary curves (regions mode)
  threshold  -- density-evolution decoding thresholds and sum rates per
                scheme over a beta grid

Exit codes: 0 success, 2 config error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys

from .analysis import (
    AsymptoticRegime,
    MprProfile,
    asymptotic_sum_rate,
    codebook_size,
    comparison_boundaries,
    critical_collision_size,
    de_threshold,
    payload_length,
    pi_u_exact,
    pi_u_half,
    pi_u_lower_bound,
    threshold_ed_mpr,
)
from .degree import DegreeDistribution
from .errors import ConfigError, InvalidParametersError
from .montecarlo import DECODERS, ExperimentSpec, sweep, write_plr_csv

THRESHOLD_SCHEMES = ("original", "bch", "ed_mpr")


# --- config file handling -------------------------------------------------


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _parse_int(text: str) -> int:
    try:
        return int(float(text)) if float(text) == int(float(text)) else int(text)
    except ValueError as exc:
        raise ConfigError(f"not an integer: {text!r}") from exc


def _parse_grid(text: str) -> tuple[float, ...]:
    """Comma list, 'start:stop:step', or 'linspace(start, stop, count)'."""
    text = text.strip()
    if text.startswith("linspace(") and text.endswith(")"):
        parts = [p.strip() for p in text[len("linspace("):-1].split(",")]
        if len(parts) != 3:
            raise ConfigError(f"linspace needs 3 arguments: {text!r}")
        start, stop = _parse_float(parts[0]), _parse_float(parts[1])
        count = _parse_int(parts[2])
        if count < 1:
            raise ConfigError("linspace count must be >= 1")
        if count == 1:
            return (start,)
        step = (stop - start) / (count - 1)
        return tuple(start + i * step for i in range(count))
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range grid needs start:stop:step, got {text!r}")
        start, stop, step = (_parse_float(p) for p in parts)
        if step <= 0:
            raise ConfigError("grid step must be positive")
        out = []
        v = start
        while v <= stop + 1e-12:
            out.append(round(v, 12))
            v += step
        return tuple(out)
    return tuple(_parse_float(p) for p in text.split(",") if p.strip())


def _parse_list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def read_config(path) -> dict[str, str]:
    raw: dict[str, str] = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, value = line.split("=", 1)
                key = key.strip()
                if key in raw:
                    raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
                raw[key] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return raw


def _typed(raw: dict[str, str], schema: dict[str, tuple], path) -> dict:
    """Coerce raw strings per schema {key: (parser, required, default)}."""
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    out = {}
    for key, (parser, required, default) in schema.items():
        if key in raw:
            out[key] = parser(raw[key])
        elif required:
            raise ConfigError(f"{path}: missing required key {key!r}")
        else:
            out[key] = default
    return out


def _write_rows(path, schema_tag: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# irsa-bac schema={schema_tag}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# --- subcommands -----------------------------------------------------------

_SIM_SCHEMA = {
    "lambda_poly": (str, True, None),
    "N": (_parse_int, True, None),
    "mu": (_parse_float, True, None),
    "nu": (_parse_float, False, 0.5),
    "beta": (_parse_float, True, None),
    "delta": (_parse_float, True, None),
    "D": (_parse_float, False, 1.0),
    "G_grid": (_parse_grid, True, None),
    "decoders": (_parse_list, True, None),
    "frames": (_parse_int, True, None),
    "seed": (_parse_int, True, None),
    "ci_rel_target": (_parse_float, False, None),
    "out": (str, False, None),
}


def cmd_simulate(cfg: dict, out_path, workers: int) -> None:
    if cfg["frames"] < 1:
        raise ConfigError("frames must be >= 1")
    bad = set(cfg["decoders"]) - set(DECODERS)
    if bad:
        raise ConfigError(f"unknown decoders {sorted(bad)}; valid: {DECODERS}")
    if not 0.0 <= cfg["mu"] <= 1.0:
        raise ConfigError("mu must lie in [0, 1]")
    if cfg["mu"] == 0.0:
        raise ConfigError("mu = 0 gives an empty load grid; nothing to simulate")
    if not 0.0 < cfg["nu"] < 1.0:
        raise ConfigError("nu must lie in (0, 1)")
    if cfg["N"] < 1:
        raise ConfigError("N must be >= 1")
    dist = DegreeDistribution.from_string(cfg["lambda_poly"])
    spec = ExperimentSpec(
        dist=dist,
        n_slots=cfg["N"],
        mu=cfg["mu"],
        nu=cfg["nu"],
        beta=cfg["beta"],
        delta=cfg["delta"],
        payload_factor=cfg["D"],
        g_grid=tuple(cfg["G_grid"]),
        decoders=tuple(cfg["decoders"]),
        frames=cfg["frames"],
        master_seed=cfg["seed"],
        ci_rel_target=cfg["ci_rel_target"],
        workers=workers,
    )
    write_plr_csv(out_path, sweep(spec))


_ANALYZE_SCHEMA = {
    "mode": (str, True, None),
    "lambda_poly": (str, False, "x^2"),
    "K_grid": (_parse_grid, False, ()),
    "K_over_N": (_parse_float, False, None),
    "beta": (_parse_float, False, None),
    "delta": (_parse_float, False, None),
    "D": (_parse_float, False, 1.0),
    "mu": (_parse_float, False, 1.0),
    "nu_grid": (_parse_grid, False, (0.5,)),
    "U_grid": (_parse_grid, False, ()),
    "beta_grid": (_parse_grid, False, ()),
    "out": (str, False, None),
}


def cmd_analyze(cfg: dict, out_path) -> None:
    mode = cfg["mode"]
    if mode == "pi_u":
        for key in ("K_over_N", "beta", "delta"):
            if cfg[key] is None:
                raise ConfigError(f"pi_u mode requires key {key!r}")
        if not cfg["K_grid"] or not cfg["U_grid"]:
            raise ConfigError("pi_u mode requires K_grid and U_grid")
        dist = DegreeDistribution.from_string(cfg["lambda_poly"])
        d1 = dist.avg_degree()
        ratio = cfg["K_over_N"]
        rows = []
        for K in cfg["K_grid"]:
            K = int(round(K))
            n_slots = K / ratio
            M = codebook_size(K, cfg["delta"], cfg["D"])
            n0 = payload_length(cfg["beta"], M)
            r = d1 / n_slots
            regime = AsymptoticRegime(
                G=cfg["mu"] * ratio, D=cfg["D"], beta=cfg["beta"],
                delta=cfg["delta"], mu=cfg["mu"],
            )
            ustar = critical_collision_size(cfg["beta"], cfg["delta"])
            for nu in cfg["nu_grid"]:
                for U in cfg["U_grid"]:
                    U = int(round(U))
                    if U > M:
                        continue
                    exact = pi_u_exact(U, n0, nu, M, r)
                    if nu == 0.5:
                        half = repr(pi_u_half(U, n0, M, r))
                        lower = repr(pi_u_lower_bound(U, n0, M, r))
                        limit = repr(
                            1.0 if U < ustar else (0.0 if U > ustar else float("nan"))
                        )
                    else:
                        half = lower = limit = ""
                    rows.append([K, nu, int(round(n_slots)), M, n0, U,
                                 repr(exact), half, lower, limit])
        _write_rows(
            out_path, "pi_u/1",
            ["K", "nu", "N", "M", "n0", "U",
             "pi_exact", "pi_half", "pi_lower", "pi_asymptotic"],
            rows,
        )
    elif mode == "regions":
        if not cfg["beta_grid"]:
            raise ConfigError("regions mode requires beta_grid")
        rows = []
        for beta in cfg["beta_grid"]:
            low, high = comparison_boundaries(beta)
            rows.append([repr(beta), repr(low), repr(high)])
        _write_rows(out_path, "regions/1", ["beta", "delta_low", "delta_high"], rows)
    else:
        raise ConfigError(f"unknown analyze mode {mode!r} (pi_u or regions)")


_THRESHOLD_SCHEMA = {
    "lambda_poly": (str, True, None),
    "beta_grid": (_parse_grid, True, None),
    "delta": (_parse_float, True, None),
    "D": (_parse_float, False, 1.0),
    "mu": (_parse_float, False, 1.0),
    "schemes": (_parse_list, False, THRESHOLD_SCHEMES),
    "tol": (_parse_float, False, 1e-4),
    "out": (str, False, None),
}


def cmd_threshold(cfg: dict, out_path, tol_override: float | None) -> None:
    bad = set(cfg["schemes"]) - set(THRESHOLD_SCHEMES)
    if bad:
        raise ConfigError(f"unknown schemes {sorted(bad)}; valid: {THRESHOLD_SCHEMES}")
    tol = tol_override if tol_override is not None else cfg["tol"]
    if tol <= 0:
        raise ConfigError("tol must be positive")
    dist = DegreeDistribution.from_string(cfg["lambda_poly"])
    delta = cfg["delta"]
    rows = []
    for beta in cfg["beta_grid"]:
        for scheme in cfg["schemes"]:
            if scheme == "original":
                g_star = de_threshold(dist, MprProfile.singleton(), tol)
            elif scheme == "bch":
                g_star = de_threshold(dist, MprProfile.bounded(math.floor(beta)), tol)
            else:
                regime = AsymptoticRegime(
                    G=1.0, D=cfg["D"], beta=beta, delta=delta, mu=cfg["mu"]
                )
                g_star = threshold_ed_mpr(dist, regime, tol)
            r_sum = asymptotic_sum_rate(
                AsymptoticRegime(G=max(g_star, 1e-300), D=cfg["D"], beta=beta,
                                 delta=delta, mu=cfg["mu"])
            ) if g_star > 0 else 0.0
            rows.append([repr(beta), scheme, repr(g_star), repr(r_sum)])
    _write_rows(out_path, "threshold/1", ["beta", "scheme", "G_star", "R_sum"], rows)


# --- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irsa-bac",
        description="Slotted random access over the binary adder channel",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "analyze", "threshold"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="key = value parameter file")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--frames", type=int, default=None, help="override frame budget")
        p.add_argument("--workers", type=int, default=1, help="parallel frame workers")
        p.add_argument("--tol", type=float, default=None, help="bisection tolerance")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = read_config(args.config)
        if args.command == "simulate":
            cfg = _typed(raw, _SIM_SCHEMA, args.config)
            if args.seed is not None:
                cfg["seed"] = args.seed
            if args.frames is not None:
                cfg["frames"] = args.frames
            out = args.out or cfg["out"]
            if not out:
                raise ConfigError("no output path (config key 'out' or --out)")
            cmd_simulate(cfg, out, max(1, args.workers))
        elif args.command == "analyze":
            cfg = _typed(raw, _ANALYZE_SCHEMA, args.config)
            out = args.out or cfg["out"]
            if not out:
                raise ConfigError("no output path (config key 'out' or --out)")
            cmd_analyze(cfg, out)
        else:
            cfg = _typed(raw, _THRESHOLD_SCHEMA, args.config)
            out = args.out or cfg["out"]
            if not out:
                raise ConfigError("no output path (config key 'out' or --out)")
            cmd_threshold(cfg, out, args.tol)
    except (ConfigError, InvalidParametersError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
