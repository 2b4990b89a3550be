"""Reproducible scenarios: initial data, runs, persistence and studies."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import InitialDataSpec, ScenarioConfig, config_to_text, parse_spec
from .diagnostics import (
    CSV_COLUMNS,
    DiagnosticsRecord,
    IteratedEnvelope,
    LINF_H1_CONSTANT,
    calibrate_beta,
    diagnostics_record,
    g_functional_1d,
    line_constants,
)
from .dynamics import (
    SDParams,
    SDState,
    StepControl,
    constant_solution,
    evolve,
    nls_evolve,
    scaling_transform,
)
from .errors import ConfigError, IntegrationDiverged, InvariantViolation
from .snapshot import atomic_write, read_snapshot, write_snapshot
from .spectral import ComplexField, Grid, RealField, lp_norm

logger = logging.getLogger(__name__)

__all__ = [
    "build_grid",
    "build_u",
    "build_v",
    "initial_state",
    "beta_ensemble",
    "RunResult",
    "run_scenario",
    "ProbeReport",
    "besse_bidegaray_config",
    "besse_bidegaray_probe",
    "scaling_symmetry_check",
    "nls_limit_study",
    "default_output_root",
]


def default_output_root() -> Path:
    return Path(os.environ.get("SD_SPECTRAL_OUT", "runs"))


def build_grid(cfg: ScenarioConfig) -> Grid:
    return Grid(cfg.dim, cfg.points, cfg.extent)


def _gaussian(grid: Grid, amplitude, width, center) -> np.ndarray:
    xs = grid.centered_coordinates()
    center = (0.0,) * grid.dim if center is None else tuple(center)
    if len(center) != grid.dim:
        raise ConfigError(f"gaussian center needs {grid.dim} components")
    r2 = sum((x - c) ** 2 for x, c in zip(xs, center))
    return amplitude * np.exp(-r2 / width ** 2)


def _mode(grid: Grid, k, amplitude) -> np.ndarray:
    k = (1,) + (0,) * (grid.dim - 1) if k is None else tuple(k)
    if len(k) != grid.dim or any(int(q) != q for q in k):
        raise ConfigError(f"mode index must be {grid.dim} integers, got {k!r}")
    if any(abs(q) >= grid.points // 2 for q in k):
        raise ConfigError(f"mode index {k!r} beyond the grid band limit")
    xs = grid.coordinates()
    phase = sum(2 * np.pi * q / grid.extent * x for q, x in zip(k, xs))
    return amplitude * np.exp(1j * phase)


def _random_bandlimited(grid: Grid, seed, cutoff, amplitude) -> np.ndarray:
    if cutoff >= grid.wavenumbers.max():
        raise ConfigError("random_bandlimited cutoff exceeds the grid band limit")
    rng = np.random.default_rng(seed)
    spec = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    spec = np.where(grid.xi_abs <= cutoff, spec, 0.0)
    vals = np.fft.ifftn(spec)
    peak = np.abs(vals).max()
    return vals if peak == 0 else amplitude * vals / peak


def _samples(spec: InitialDataSpec, grid: Grid) -> np.ndarray:
    if spec.kind == "zero":
        return np.zeros(grid.shape, dtype=complex)
    if spec.kind == "gaussian":
        return _gaussian(grid, spec.get("amplitude"), spec.get("width"), spec.get("center")).astype(complex)
    if spec.kind == "constant":
        return np.full(grid.shape, complex(spec.get("value")))
    if spec.kind == "mode":
        return _mode(grid, spec.get("k"), spec.get("amplitude"))
    if spec.kind == "random_bandlimited":
        return _random_bandlimited(grid, spec.get("seed"), spec.get("cutoff"), spec.get("amplitude"))
    if spec.kind == "from_file":
        f = read_snapshot(spec.get("path"))
        if f.grid != grid:
            raise ConfigError(f"snapshot grid {f.grid} does not match configured grid {grid}")
        return np.asarray(f.values, dtype=complex)
    raise ConfigError(f"initial-data kind {spec.kind!r} not usable here")


def build_u(spec, grid: Grid) -> ComplexField:
    return ComplexField(grid, _samples(parse_spec(spec), grid))


def build_v(spec, grid: Grid, u0: ComplexField, lam: int) -> RealField:
    spec = parse_spec(spec)
    if spec.kind == "debye_equilibrium":
        return RealField(grid, lam * np.abs(u0.values) ** 2)
    return RealField(grid, _samples(spec, grid).real)


def initial_state(cfg: ScenarioConfig) -> SDState:
    grid = build_grid(cfg)
    u0 = build_u(cfg.initial_u, grid)
    v0 = build_v(cfg.initial_v, grid, u0, cfg.lam)
    return SDState(u0, v0, 0.0, SDParams(cfg.mu, cfg.lam))


def beta_ensemble(grid: Grid, seed: int = 0, extra: Sequence[ComplexField] = ()) -> list[ComplexField]:
    """Gaussians of several widths plus seeded random band-limited fields.

    ``extra`` members that are zero or constant are ignored.
    """
    members = []
    for w in (0.5, 1.0, 1.5, 2.0):
        if 4 * w < grid.extent / 2:
            members.append(ComplexField(grid, _gaussian(grid, 1.0, w, None)))
    top = grid.wavenumbers.max()
    for i, cut in enumerate((0.25 * top, 0.5 * top)):
        members.append(ComplexField(grid, _random_bandlimited(grid, seed + i, cut, 1.0)))
    for u in extra:
        if lp_norm(u, 2) > 0 and np.ptp(np.abs(u.values)) + np.ptp(np.angle(u.values)) > 0:
            members.append(u)
    return members


@dataclass
class RunResult:
    config: ScenarioConfig
    records: list
    summary: dict
    final_state: Optional[SDState]
    run_dir: Optional[Path] = None

    @property
    def diverged(self) -> bool:
        return bool(self.summary["diverged"])


def _csv_text(records: Sequence[DiagnosticsRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([format(x, ".17g") for x in r.as_row()])
    return buf.getvalue()


def _segment_ends(t_end: float, windows: Sequence[float], snaps: Sequence[float]) -> list[tuple[float, bool, bool]]:
    """Sorted stop times with (is_window_boundary, is_snapshot) flags.

    Rounded times only merge near-coincident stops; the exact value of the
    first occurrence (windows first) is the one evolved to.
    """
    stops: dict[float, list] = {}
    for t in windows:
        stops.setdefault(round(t, 12), [t, False, False])[1] = True
    for t in snaps:
        if 0 < t <= t_end:
            stops.setdefault(round(t, 12), [t, False, False])[2] = True
    stops.setdefault(round(t_end, 12), [t_end, False, False])
    return [(t, a, b) for _, (t, a, b) in sorted(stops.items()) if t > 0]


def run_scenario(
    cfg: ScenarioConfig,
    out_dir: Optional[os.PathLike] = None,
    write: bool = True,
    check_envelope: bool = True,
) -> RunResult:
    """Evolve one scenario, record diagnostics and optionally persist them.

    In two dimensions every record carries the iterated Gronwall envelope
    (constants restarted from the measured state every ``T_mu``); in one
    dimension the envelope column holds the window bound on ``g = f + ||v_x||``
    and the margin is taken against ``g``. Three-dimensional runs carry no
    envelope.

    Divergence is recorded in the summary and the partial outputs are kept.
    A negative envelope margin raises :class:`InvariantViolation` after the
    outputs are written (the result is attached as ``exc.result``).
    """
    state = initial_state(cfg)
    grid = state.grid
    ctl = StepControl(cfg.dt, cfg.dealias)
    records: list[DiagnosticsRecord] = []
    g_values: list[float] = []

    beta = envelope = line_env = None
    if cfg.dim == 2:
        beta = cfg.beta
        if beta is None:
            beta = calibrate_beta(beta_ensemble(grid, cfg.seed, [state.u]), cfg.beta_safety)
        envelope = IteratedEnvelope(state.u, state.v, state.params, beta)
        windows = envelope.window_bounds(cfg.t_end)
    elif cfg.dim == 1:
        line_env = [(0.0, line_constants(state, LINF_H1_CONSTANT))]
        w = line_env[0][1].window
        windows = [] if not math.isfinite(w) else [k * w for k in range(1, int(cfg.t_end / w) + 1) if k * w < cfg.t_end - 1e-12]
    else:
        windows = []

    def envelope_at(t: float) -> float:
        if envelope is not None:
            return envelope(t)
        if line_env is not None:
            t0, c = [seg for seg in line_env if seg[0] <= t + 1e-12][-1]
            return c.a0 * math.exp(c.a1 * (t - t0))
        return math.nan

    def observe(s: SDState) -> None:
        if records and abs(s.t - records[-1].t) < 1e-12:
            return
        records.append(diagnostics_record(s, envelope_at(s.t)))
        if cfg.dim == 1:
            g_values.append(g_functional_1d(s))

    snapshots: list[tuple[float, ComplexField, RealField]] = []
    if 0.0 in [round(t, 12) for t in cfg.snapshot_times]:
        snapshots.append((0.0, state.u, state.v))

    diverged, fail_time = False, None
    current = state
    try:
        for stop, is_window, is_snap in _segment_ends(cfg.t_end, windows, cfg.snapshot_times):
            current = evolve(current, ctl, stop, observe, every=cfg.cadence)
            if is_snap:
                snapshots.append((current.t, current.u, current.v))
            if is_window:
                if envelope is not None:
                    envelope.restart(current)
                elif line_env is not None:
                    c = line_constants(current, LINF_H1_CONSTANT)
                    line_env.append((current.t, replace(c, window=line_env[0][1].window)))
        if cfg.t_end == 0:
            observe(current)
    except IntegrationDiverged as exc:
        diverged, fail_time = True, exc.time
        logger.warning("scenario %s diverged at t=%.6g", cfg.name, exc.time)

    summary = _summarize(cfg, records, g_values, diverged, fail_time, beta, envelope, line_env)
    result = RunResult(cfg, records, summary, None if diverged else current)

    if write:
        root = Path(out_dir) if out_dir is not None else Path(cfg.out_dir or default_output_root())
        run_dir = root / cfg.name
        run_dir.mkdir(parents=True, exist_ok=True)
        atomic_write(run_dir / "diagnostics.csv", _csv_text(records).encode())
        atomic_write(run_dir / "summary.json", (json.dumps(summary, indent=2, sort_keys=True) + "\n").encode())
        atomic_write(run_dir / "config.cfg", config_to_text(cfg).encode())
        for t, u, v in snapshots:
            write_snapshot(u, run_dir / "snapshots" / f"u_t{t:.6f}.snap", t)
            write_snapshot(v, run_dir / "snapshots" / f"v_t{t:.6f}.snap", t)
        result.run_dir = run_dir

    margin = summary["envelope_margin"]
    if check_envelope and margin is not None and margin < 0:
        exc = InvariantViolation(
            f"scenario {cfg.name}: measured size functional exceeds its envelope (margin {margin:.3e})"
        )
        exc.result = result
        raise exc
    return result


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _summarize(cfg, records, g_values, diverged, fail_time, beta, envelope, line_env) -> dict:
    summary: dict = {
        "name": cfg.name,
        "dim": cfg.dim,
        "mu": cfg.mu,
        "lambda": cfg.lam,
        "diverged": diverged,
        "failure_time": fail_time,
        "records": len(records),
        "t_final": records[-1].t if records else 0.0,
    }
    if not records:
        summary.update(envelope_margin=None)
        return summary
    mass = np.array([r.mass for r in records])
    f = np.array([r.f for r in records])
    linf = np.array([r.u_linf for r in records])
    env = np.array([r.gronwall_envelope for r in records])
    ea = np.array([r.energy_a for r in records])
    eb = np.array([r.energy_b for r in records])
    m0 = mass[0]
    summary.update(
        mass_initial=float(m0),
        mass_drift=float(np.max(np.abs(mass - m0)) / m0) if m0 > 0 else float(np.max(np.abs(mass))),
        energy_identity_max=float(np.max(np.abs(ea - eb) / (1 + np.abs(ea)))),
        max_f=float(f.max()),
        max_u_linf=float(linf.max()),
        u_linf_growth=float(linf.max() / linf[0]) if linf[0] > 0 else None,
        beta=_finite_or_none(beta),
    )
    if envelope is not None:
        summary.update(
            T_mu=_finite_or_none(envelope.T_mu),
            alpha0=envelope.initial.alpha0,
            alpha1=envelope.initial.alpha1,
            windows=1 + len(envelope.restarts),
        )
    measured = np.array(g_values) if g_values else f
    if np.all(np.isnan(env)):
        summary["envelope_margin"] = None
        summary["envelope_relative_margin"] = None
    else:
        gap = env - measured
        summary["envelope_margin"] = float(np.min(gap))
        pos = env > 0
        summary["envelope_relative_margin"] = float(np.min(gap[pos] / env[pos])) if pos.any() else None
    if line_env is not None:
        summary["max_g"] = float(measured.max())
    # strict JSON: non-finite values become null
    return {k: None if isinstance(v, float) and not math.isfinite(v) else v for k, v in summary.items()}


@dataclass
class ProbeReport:
    lam: int
    mu: float
    points: int
    diverged: bool
    failure_time: Optional[float]
    u_linf_growth: Optional[float]
    max_f: Optional[float]
    envelope_margin: Optional[float]
    summary: dict = field(repr=False, default_factory=dict)
    hint: Optional[str] = None

    def as_dict(self) -> dict:
        return asdict(self)


def besse_bidegaray_config(
    mu: float = 1.0,
    lam: int = -1,
    points: int = 256,
    extent: float = 20.0,
    dt: float = 5e-4,
    t_end: float = 5.0,
    cadence: int = 50,
    name: Optional[str] = None,
) -> ScenarioConfig:
    """Gaussian ``exp(-(x^2+y^2))`` with equilibrium ``v0 = lam |u0|^2``."""
    return ScenarioConfig(
        name=name or f"besse_bidegaray_lam{lam:+d}_mu{mu:g}_n{points}",
        dim=2,
        points=points,
        extent=extent,
        mu=mu,
        lam=lam,
        dt=dt,
        t_end=t_end,
        initial_u=parse_spec("gaussian(amplitude=1.0, width=1.0)"),
        initial_v=parse_spec("debye_equilibrium"),
        cadence=cadence,
    )


def besse_bidegaray_probe(
    mu: float = 1.0,
    lam: int = -1,
    points: int = 256,
    extent: float = 20.0,
    dt: float = 5e-4,
    t_end: float = 5.0,
    out_dir: Optional[os.PathLike] = None,
    write: bool = False,
    cadence: int = 50,
) -> ProbeReport:
    """Run the focusing (or defocusing) Gaussian and report growth and margin.

    The size functional ``f`` is checked against its envelope while
    ``||u||_inf`` is free to grow; the report carries both.
    """
    cfg = besse_bidegaray_config(mu, lam, points, extent, dt, t_end, cadence)
    try:
        res = run_scenario(cfg, out_dir=out_dir, write=write)
    except InvariantViolation as exc:
        res = exc.result
    s = res.summary
    hint = None
    if res.diverged:
        hint = (
            f"diverged at t={s['failure_time']:.4g}; refine the grid "
            f"(points {points} -> {2 * points}) or the step (dt {dt:g} -> {dt / 2:g})"
        )
    return ProbeReport(
        lam=lam,
        mu=mu,
        points=points,
        diverged=res.diverged,
        failure_time=s["failure_time"],
        u_linf_growth=s.get("u_linf_growth"),
        max_f=s.get("max_f"),
        envelope_margin=s.get("envelope_margin"),
        summary=s,
        hint=hint,
    )


@dataclass
class ScalingCheck:
    mu: float
    times: np.ndarray
    discrepancies: np.ndarray

    @property
    def max_discrepancy(self) -> float:
        return float(self.discrepancies.max()) if self.discrepancies.size else 0.0


def scaling_symmetry_check(
    mu: float,
    cfg: ScenarioConfig,
    samples: int = 5,
    dt_direct: Optional[float] = None,
) -> ScalingCheck:
    """Compare a rescaled mu-run with a direct mu = 1 run.

    ``cfg`` supplies data, grid and ``dt`` for the mu-run up to ``t_end``.
    The direct run uses the rescaled initial state on the box
    ``extent / mu**0.5`` with step ``dt / mu`` (or ``dt_direct``), so the
    comparison times are ``t_k / mu``. Returns the L2 discrepancy at
    ``samples`` equally spaced times including ``t_end``.
    """
    cfg = replace(cfg, mu=mu)
    s0 = initial_state(cfg)
    sample_times = np.linspace(0.0, cfg.t_end, samples + 1)[1:]
    scaled0 = scaling_transform(s0)
    h_direct = cfg.dt / mu if dt_direct is None else dt_direct
    disc = []
    cur, ref = s0, scaled0
    for t in sample_times:
        cur = evolve(cur, StepControl(cfg.dt, cfg.dealias), t)
        ref = evolve(ref, StepControl(h_direct, cfg.dealias), t / mu)
        mapped = scaling_transform(cur)
        diff = ComplexField(mapped.grid, mapped.u.values - ref.u.values)
        disc.append(lp_norm(diff, 2))
    return ScalingCheck(mu, sample_times, np.array(disc))


@dataclass
class NLSLimitRow:
    mu: float
    error: float
    diverged: bool = False
    reference_error: Optional[float] = None


def nls_limit_study(mu_list: Sequence[float], cfg: ScenarioConfig) -> list[NLSLimitRow]:
    """L2 distance at ``t_end`` between Schrödinger-Debye runs and cubic NLS.

    Initial ``v`` is forced to equilibrium ``lam |u0|^2``. Both sides use
    the same grid and ``dt``. For spatially constant data the row also
    carries ``reference_error``: the distance between the two closed-form
    solutions, which the numerical error must reproduce.
    """
    cfg = replace(cfg, initial_v=parse_spec("debye_equilibrium"))
    grid = build_grid(cfg)
    u0 = build_u(cfg.initial_u, grid)
    try:
        nls = nls_evolve(u0, cfg.lam, cfg.dt, cfg.t_end)
    except IntegrationDiverged:
        nls = None
    constant = cfg.initial_u.kind in ("constant", "zero")
    rows = []
    for mu in mu_list:
        c = replace(cfg, mu=mu)
        s0 = initial_state(c)
        try:
            s = evolve(s0, StepControl(c.dt, c.dealias), c.t_end)
        except IntegrationDiverged:
            rows.append(NLSLimitRow(mu, math.nan, True))
            continue
        if nls is None:
            rows.append(NLSLimitRow(mu, math.nan, True))
            continue
        err = lp_norm(ComplexField(grid, s.u.values - nls.values), 2)
        ref = None
        if constant:
            a = complex(u0.values.flat[0])
            sd_u, _ = constant_solution(a, c.lam * abs(a) ** 2, SDParams(mu, c.lam), c.t_end)
            nls_u = a * np.exp(-1j * c.lam * abs(a) ** 2 * c.t_end)
            ref = abs(sd_u - nls_u) * grid.extent ** (grid.dim / 2)
        rows.append(NLSLimitRow(mu, err, False, ref))
    return rows
