"""Scalar functionals, the energy-rate identity and Gronwall envelopes.

Quadrature everywhere is the Riemann sum of :mod:`sd_spectral.spectral`;
gradients are spectral.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .dynamics import SDParams, SDState
from .spectral import ComplexField, RealField, gradient_l2, lp_norm

__all__ = [
    "DiagnosticsRecord",
    "CSV_COLUMNS",
    "mass",
    "v_time_derivative",
    "energy",
    "diagnostics_record",
    "energy_rate_residual",
    "gn_ratio",
    "calibrate_beta",
    "GronwallConstants",
    "gronwall_constants",
    "gronwall_envelope",
    "IteratedEnvelope",
    "g_functional_1d",
    "LineConstants",
    "line_constants",
    "LINF_H1_CONSTANT",
]


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy_a: float
    energy_b: float
    grad_u_l2_sq: float
    v_l2_sq: float
    f: float
    u_linf: float
    u_l4: float
    vt_l2_sq: float
    gronwall_envelope: float = math.nan

    def as_row(self) -> tuple:
        return astuple(self)


CSV_COLUMNS = tuple(f.name for f in fields(DiagnosticsRecord))


def mass(u: ComplexField) -> float:
    return lp_norm(u, 2) ** 2


def v_time_derivative(state: SDState) -> RealField:
    """``v_t = (lam |u|^2 - v) / mu`` from the relaxation equation."""
    u = state.u.values
    p = state.params
    return RealField(state.grid, (p.lam * (u.real ** 2 + u.imag ** 2) - state.v.values) / p.mu)


def _energy_parts(state: SDState):
    g = state.grid
    u, v = state.u.values, state.v.values
    p = state.params
    rho = u.real ** 2 + u.imag ** 2
    grad_sq = gradient_l2(state.u) ** 2
    vt = (p.lam * rho - v) / p.mu
    dv = g.cell_volume
    vt_sq = dv * float(np.sum(vt * vt))
    e_a = grad_sq + p.lam * dv * float(np.sum(rho * rho)) - p.lam * p.mu ** 2 * vt_sq
    e_b = grad_sq + dv * float(np.sum(2.0 * v * rho - p.lam * v * v))
    return e_a, e_b, grad_sq, vt_sq, rho


def energy(state: SDState) -> tuple[float, float]:
    """Both integrand forms of the pseudo-energy.

    ``energy_a = ∫ |∇u|^2 + lam |u|^4 - lam mu^2 v_t^2`` with ``v_t`` from
    the relaxation equation, and ``energy_b = ∫ |∇u|^2 + 2 v |u|^2 - lam v^2``.
    They agree identically; any gap is rounding.
    """
    e_a, e_b, *_ = _energy_parts(state)
    return e_a, e_b


def diagnostics_record(state: SDState, envelope: float = math.nan) -> DiagnosticsRecord:
    g = state.grid
    e_a, e_b, grad_sq, vt_sq, rho = _energy_parts(state)
    dv = g.cell_volume
    m = dv * float(np.sum(rho))
    v_sq = dv * float(np.sum(state.v.values ** 2))
    return DiagnosticsRecord(
        t=float(state.t),
        mass=m,
        energy_a=e_a,
        energy_b=e_b,
        grad_u_l2_sq=grad_sq,
        v_l2_sq=v_sq,
        f=grad_sq + v_sq,
        u_linf=float(np.sqrt(rho.max())),
        u_l4=float((dv * np.sum(rho * rho)) ** 0.25),
        vt_l2_sq=vt_sq,
        gronwall_envelope=float(envelope),
    )


def energy_rate_residual(records: Sequence[DiagnosticsRecord], params: SDParams) -> np.ndarray:
    """Per-interval defect of ``dE/dt = 2 lam mu ||v_t||_2^2``.

    ``r_k = E(t_{k+1}) - E(t_k) - 2 lam mu * trapezoid(||v_t||^2, [t_k, t_{k+1}])``.
    """
    if len(records) < 2:
        raise ValueError("energy_rate_residual needs at least two records")
    t = np.array([r.t for r in records])
    e = np.array([r.energy_a for r in records])
    w = np.array([r.vt_l2_sq for r in records])
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-8, atol=1e-14):
        raise ValueError("records must be at a uniform cadence")
    rate_integral = 0.5 * steps * (w[1:] + w[:-1])
    return np.diff(e) - 2.0 * params.lam * params.mu * rate_integral


def gn_ratio(u: ComplexField) -> float:
    """``||u||_4^4 / (||u||_2^2 ||∇u||_2^2)``, bounded above by ``beta**4``."""
    l2 = lp_norm(u, 2)
    grad = gradient_l2(u)
    if l2 == 0 or grad == 0:
        raise ValueError("gn_ratio is undefined for zero or constant fields")
    return lp_norm(u, 4) ** 4 / (l2 ** 2 * grad ** 2)


def calibrate_beta(candidates: Iterable[ComplexField], safety: float = 2.0) -> float:
    """Gagliardo-Nirenberg constant: ``beta**4 = safety * max gn_ratio``."""
    ratios = [gn_ratio(u) for u in candidates]
    if not ratios:
        raise ValueError("calibrate_beta needs a non-empty ensemble")
    return (safety * max(ratios)) ** 0.25


@dataclass(frozen=True)
class GronwallConstants:
    beta: float
    alpha0: float
    alpha1: float
    T_mu: float
    E0: float
    mass: float


def _constants(beta4: float, m: float, v_sq: float, e0: float, mu: float):
    alpha0 = 2.0 * abs(e0) + 4.0 * v_sq * (2.0 * beta4 * m + 1.5)
    alpha1 = (2.0 / mu) * (5.0 * beta4 * m + 19.0 / 4.0)
    T_mu = math.inf if m == 0 else mu / (4.0 * beta4 * m)
    return alpha0, alpha1, T_mu


def gronwall_constants(u0: ComplexField, v0: RealField, params: SDParams, beta: float) -> GronwallConstants:
    """Constants of ``f(t) <= alpha0 exp(alpha1 t)`` on ``[0, T_mu]``.

    ``alpha0 = 2|E0| + 4||v0||^2 (2 beta^4 ||u0||^2 + 3/2)``,
    ``alpha1 = (2/mu)(5 beta^4 ||u0||^2 + 19/4)``,
    ``T_mu = mu / (4 beta^4 ||u0||^2)`` (infinite for ``u0 = 0``).
    """
    state = SDState(u0, v0, 0.0, params)
    e0, _ = energy(state)
    m = mass(u0)
    v_sq = lp_norm(v0, 2) ** 2
    alpha0, alpha1, T_mu = _constants(beta ** 4, m, v_sq, e0, params.mu)
    return GronwallConstants(beta, alpha0, alpha1, T_mu, e0, m)


def gronwall_envelope(
    constants: GronwallConstants,
    t: float,
    segment_starts: Sequence[tuple[float, GronwallConstants]] = (),
) -> float:
    """Value at ``t`` of the iterated envelope.

    ``constants`` cover the window starting at 0; ``segment_starts`` holds
    ``(t_k, constants_k)`` restarts measured at later window boundaries. A
    time not covered by any window returns ``inf`` (no bound available).
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    starts = [(0.0, constants), *sorted(segment_starts, key=lambda s: s[0])]
    t0, c = starts[bisect.bisect_right([s[0] for s in starts], t) - 1]
    tau = t - t0
    if tau > c.T_mu * (1 + 1e-12):
        return math.inf
    if c.alpha0 == 0:
        return 0.0
    try:
        return c.alpha0 * math.exp(c.alpha1 * tau)
    except OverflowError:
        return math.inf


class IteratedEnvelope:
    """Windowed envelope that restarts from measured norms every ``T_mu``.

    Call :meth:`restart` with the state at each window boundary; ``T_mu``
    depends only on the conserved mass, so a drift in the recomputed value
    beyond ``mass_rtol`` raises ``AssertionError``.
    """

    def __init__(self, u0: ComplexField, v0: RealField, params: SDParams, beta: float, mass_rtol: float = 1e-8):
        self.params = params
        self.beta = beta
        self.mass_rtol = mass_rtol
        self.initial = gronwall_constants(u0, v0, params, beta)
        self.restarts: list[tuple[float, GronwallConstants]] = []

    @property
    def T_mu(self) -> float:
        return self.initial.T_mu

    def window_bounds(self, t_end: float) -> list[float]:
        """Window boundaries strictly inside ``(0, t_end)``."""
        if not math.isfinite(self.T_mu):
            return []
        n = int(math.floor(t_end / self.T_mu + 1e-12))
        return [k * self.T_mu for k in range(1, n + 1) if k * self.T_mu < t_end - 1e-12]

    def restart(self, state: SDState) -> GronwallConstants:
        c = gronwall_constants(state.u, state.v, self.params, self.beta)
        if self.initial.mass > 0:
            drift = abs(c.mass - self.initial.mass) / self.initial.mass
            assert drift < self.mass_rtol, f"mass drifted by {drift:.2e}; T_mu no longer fixed"
        c = GronwallConstants(c.beta, c.alpha0, c.alpha1, self.T_mu, c.E0, c.mass)
        self.restarts.append((float(state.t), c))
        return c

    def __call__(self, t: float) -> float:
        return gronwall_envelope(self.initial, t, self.restarts)


# sharp on the line: ||w||_inf^2 <= ||w||_2 ||w'||_2 <= (||w||_2^2 + ||w'||_2^2) / 2
LINF_H1_CONSTANT = 0.5


def g_functional_1d(state: SDState) -> float:
    """``f(t) + ||v_x||_2`` (the norm itself, not its square)."""
    if state.grid.dim != 1:
        raise ValueError(f"g_functional_1d needs a 1D state, got dim={state.grid.dim}")
    f = gradient_l2(state.u) ** 2 + lp_norm(state.v, 2) ** 2
    return f + gradient_l2(state.v)


@dataclass(frozen=True)
class LineConstants:
    """Window constants for ``g(t) <= a0 exp(a1 t)`` in one dimension."""

    a0: float
    a1: float
    window: float


def line_constants(state: SDState, kappa_sq: float = LINF_H1_CONSTANT) -> LineConstants:
    """Constants of the one-dimensional envelope for ``g``.

    Follows the two-dimensional chain with ``||u||_4^4 <= K M (M + ||u_x||^2)``
    (``K = kappa_sq``, ``M`` the mass) in place of Gagliardo-Nirenberg, and
    ``||u||_inf ||u_x|| <= kappa (M/2 + ||u_x||^2)`` for the ``v_x`` term. On
    the window ``t <= mu / (4 K M)`` this gives ``g <= a0 + a1 ∫ g`` with

        a0 = 2|E0| + 4||v0||^2 (2KM + 3/2) + 7M/2 + 3/(8K) + ||v0_x|| + 1/(4 kappa)
        a1 = (2/mu)(5KM + 19/4) + 2 kappa / mu
    """
    if state.grid.dim != 1:
        raise ValueError("line_constants needs a 1D state")
    mu = state.params.mu
    m = mass(state.u)
    e0, _ = energy(state)
    v_sq = lp_norm(state.v, 2) ** 2
    vx = gradient_l2(state.v)
    k = kappa_sq
    kappa = math.sqrt(k)
    a0 = 2 * abs(e0) + 4 * v_sq * (2 * k * m + 1.5) + 3.5 * m + 3 / (8 * k) + vx + 1 / (4 * kappa)
    a1 = (2 / mu) * (5 * k * m + 19 / 4) + 2 * kappa / mu
    window = math.inf if m == 0 else mu / (4 * k * m)
    return LineConstants(a0, a1, window)
