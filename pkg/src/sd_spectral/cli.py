"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 integration diverged,
3 invariant failed (envelope violated, NLS-limit trend broken).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .bourgain import (
    BourgainParams,
    bilinear_ratio_uv,
    bilinear_ratio_uw,
    random_uv_ensemble,
    random_uw_ensemble,
    region_w_violations,
)
from .config import ScenarioConfig, config_to_text, load_config, parse_config_text
from .diagnostics import CSV_COLUMNS, calibrate_beta, gn_ratio
from .errors import ConfigError, IntegrationDiverged, InvariantViolation, RegionError, SnapshotError
from .scenarios import (
    RunResult,
    besse_bidegaray_config,
    beta_ensemble,
    build_grid,
    build_u,
    default_output_root,
    nls_limit_study,
    run_scenario,
    scaling_symmetry_check,
)
from .snapshot import atomic_write

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_INVARIANT = 3

logger = logging.getLogger("sd_spectral")


def _overrides(args) -> list[str]:
    items = list(args.set or [])
    if args.seed is not None:
        items.append(f"seed={args.seed}")
    return items


def _resolve(args, base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    raw = parse_config_text(config_to_text(base)) if base is not None else None
    return load_config(args.config, _overrides(args), base=raw)


def _out_root(args, cfg: ScenarioConfig) -> Path:
    if args.out:
        return Path(args.out)
    return Path(cfg.out_dir) if cfg.out_dir else default_output_root()


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, default=float))


def emit_plot(result: RunResult) -> list[Path]:
    """Write ``diagnostics.dat`` and a gnuplot stub next to the run outputs."""
    run_dir = result.run_dir
    lines = ["# " + " ".join(CSV_COLUMNS)]
    for r in result.records:
        lines.append(" ".join(format(x, ".17g") for x in r.as_row()))
    data = run_dir / "diagnostics.dat"
    atomic_write(data, ("\n".join(lines) + "\n").encode())
    col = {name: i + 1 for i, name in enumerate(CSV_COLUMNS)}
    script = run_dir / "plot.gp"
    atomic_write(
        script,
        (
            "# gnuplot -persist plot.gp\n"
            "set xlabel 't'\n"
            "set logscale y\n"
            f"plot 'diagnostics.dat' using 1:{col['f']} with lines title 'f', \\\n"
            f"     '' using 1:{col['gronwall_envelope']} with lines title 'envelope', \\\n"
            f"     '' using 1:{col['u_linf']} with lines title 'sup |u|'\n"
        ).encode(),
    )
    return [data, script]


def _finish_run(result: RunResult, plot: bool) -> int:
    if plot and result.run_dir is not None:
        emit_plot(result)
    _print_json(result.summary)
    if result.diverged:
        print(f"error: integration diverged at t={result.summary['failure_time']:.6g}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _resolve(args)
    return _finish_run(run_scenario(cfg, out_dir=_out_root(args, cfg)), args.plot)


def cmd_probe(args) -> int:
    base = besse_bidegaray_config(mu=args.mu, lam=args.lam)
    cfg = _resolve(args, base)
    result = run_scenario(cfg, out_dir=_out_root(args, cfg))
    if result.diverged:
        print(
            f"hint: refine the grid (grid.points {cfg.points} -> {2 * cfg.points}) "
            f"or the step (time.dt {cfg.dt:g} -> {cfg.dt / 2:g})",
            file=sys.stderr,
        )
    return _finish_run(result, args.plot)


def cmd_check_scaling(args) -> int:
    cfg = _resolve(args)
    check = scaling_symmetry_check(args.mu, cfg, samples=args.samples)
    _print_json(
        {
            "mu": check.mu,
            "times": check.times.tolist(),
            "discrepancies": check.discrepancies.tolist(),
            "max_discrepancy": check.max_discrepancy,
        }
    )
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def cmd_nls_limit(args) -> int:
    cfg = _resolve(args)
    mus = args.mu_list
    if any(m <= 0 for m in mus) or any(b >= a for a, b in zip(mus, mus[1:])):
        raise ConfigError("--mu-list must be positive and strictly decreasing")
    rows = nls_limit_study(mus, cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mu", "error", "diverged", "reference_error"])
    for r in rows:
        ref = "" if r.reference_error is None else format(r.reference_error, ".17g")
        w.writerow([format(r.mu, ".17g"), format(r.error, ".17g"), int(r.diverged), ref])
    out = _out_root(args, cfg) / cfg.name
    atomic_write(out / "nls_limit.csv", buf.getvalue().encode())
    sys.stdout.write(buf.getvalue())
    errors = [r.error for r in rows if not r.diverged]
    if any(b > a for a, b in zip(errors, errors[1:])):
        print("error: NLS-limit error increased as mu decreased", file=sys.stderr)
        return EXIT_INVARIANT
    if any(r.diverged for r in rows):
        return EXIT_DIVERGED
    return EXIT_OK


def _parse_point(text: str) -> tuple[float, float]:
    try:
        s, ell = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected S,ELL, got {text!r}") from None
    return s, ell


def sweep_point(s: float, ell: float, members: int, seed: int, eps: float) -> dict:
    """Ensemble statistics of both bilinear ratios at one lattice point."""
    p = BourgainParams(s, ell)
    uv = bilinear_ratio_uv(random_uv_ensemble(members, seed), p, eps, eps, eps)
    uw = bilinear_ratio_uw(random_uw_ensemble(members, seed + 1), p, eps, eps)
    return {"s": s, "ell": ell, "uv_max": uv.max, "uv_mean": uv.mean, "uw_max": uw.max, "uw_mean": uw.mean}


def bilinear_sweep(points: Sequence[tuple[float, float]], members: int = 200, seed: int = 0, eps: float = 0.05, jobs: int = 1) -> str:
    """CSV of ratio statistics over lattice points, all of which must lie in W."""
    for s, ell in points:
        bad = region_w_violations(s, ell)
        if bad:
            raise RegionError(f"(s, ell) = ({s:g}, {ell:g}) outside region W: violates {', '.join(bad)}")
    jobs_args = [(s, ell, members, seed, eps) for s, ell in points]
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(sweep_point, *zip(*jobs_args)))
    else:
        rows = [sweep_point(*a) for a in jobs_args]
    cols = ["s", "ell", "uv_max", "uv_mean", "uw_max", "uw_mean"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([format(r[c], ".17g") for c in cols])
    return buf.getvalue()


def _lattice(args) -> list[tuple[float, float]]:
    if args.point:
        return list(args.point)
    return [(s, ell) for s in args.s_values for ell in args.ell_values]


def cmd_bilinear_sweep(args) -> int:
    seed = 0 if args.seed is None else args.seed
    text = bilinear_sweep(_lattice(args), args.members, seed, args.eps, args.jobs)
    if args.out:
        atomic_write(Path(args.out) / "bilinear_sweep.csv", text.encode())
    sys.stdout.write(text)
    return EXIT_OK


def cmd_calibrate_beta(args) -> int:
    cfg = _resolve(args)
    grid = build_grid(cfg)
    members = beta_ensemble(grid, cfg.seed, [build_u(cfg.initial_u, grid)])
    ratios = [gn_ratio(u) for u in members]
    beta = calibrate_beta(members, cfg.beta_safety)
    _print_json({"beta": beta, "beta4": beta ** 4, "max_gn_ratio": max(ratios), "safety": cfg.beta_safety, "members": len(members)})
    return EXIT_OK


def cmd_validate_config(args) -> int:
    sys.stdout.write(config_to_text(_resolve(args)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario config file (key = value lines)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    common.add_argument("--out", metavar="DIR", help="output root (default $SD_SPECTRAL_OUT or ./runs)")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes for sweeps")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--quiet", action="store_true", help="only report warnings and errors")

    parser = argparse.ArgumentParser(prog="sd-spectral", description="Schrödinger-Debye spectral simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("run", cmd_run, "run one scenario")
    p.add_argument("config_path", nargs="?", help="config file (same as --config)")
    p.add_argument("--plot", action="store_true", help="also write gnuplot data and script")

    p = add("probe-blowup", cmd_probe, "Gaussian blow-up probe with envelope check")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=int, choices=(-1, 1), default=-1)
    p.add_argument("--plot", action="store_true", help="also write gnuplot data and script")

    p = add("check-scaling", cmd_check_scaling, "compare a mu-run with the rescaled mu = 1 run")
    p.add_argument("config_path", nargs="?")
    p.add_argument("--mu", type=float, default=4.0)
    p.add_argument("--samples", type=int, default=5)

    p = add("nls-limit", cmd_nls_limit, "distance to cubic NLS as mu decreases")
    p.add_argument("config_path", nargs="?")
    p.add_argument("--mu-list", type=_float_list, default=[0.1, 0.05, 0.025])

    p = add("bilinear-sweep", cmd_bilinear_sweep, "bilinear ratio statistics over (s, ell) lattice points")
    p.add_argument("--point", type=_parse_point, action="append", metavar="S,ELL")
    p.add_argument("--s-values", type=_float_list, default=[1.0])
    p.add_argument("--ell-values", type=_float_list, default=[0.0])
    p.add_argument("--members", type=int, default=200)
    p.add_argument("--eps", type=float, default=0.05)

    p = add("calibrate-beta", cmd_calibrate_beta, "estimate the Gagliardo-Nirenberg constant")
    p.add_argument("config_path", nargs="?")

    p = add("validate-config", cmd_validate_config, "resolve and echo a config")
    p.add_argument("config_path", nargs="?")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config_path", None):
        if args.config and args.config != args.config_path:
            print("error: config given twice", file=sys.stderr)
            return EXIT_CONFIG
        args.config = args.config_path
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ConfigError, RegionError, SnapshotError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationDiverged as exc:
        print(f"error: integration diverged at t={exc.time:.6g}: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except InvariantViolation as exc:
        result = getattr(exc, "result", None)
        if result is not None:
            _print_json(result.summary)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
