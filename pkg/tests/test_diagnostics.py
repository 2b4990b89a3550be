import math

import numpy as np
import pytest

from sd_spectral.diagnostics import (
    CSV_COLUMNS,
    LINF_H1_CONSTANT,
    IteratedEnvelope,
    calibrate_beta,
    diagnostics_record,
    energy,
    energy_rate_residual,
    g_functional_1d,
    gn_ratio,
    gronwall_constants,
    gronwall_envelope,
    line_constants,
    v_time_derivative,
)
from sd_spectral.dynamics import SDParams, SDState, StepControl, constant_solution, evolve
from sd_spectral.spectral import ComplexField, RealField, lp_norm, make_grid

from conftest import gaussian, random_complex, smooth_random

PI = math.pi


def bb_state(lam, points=128, mu=1.0):
    """``u0 = exp(-|x|^2)``, ``v0 = lam |u0|^2`` on the 20-box."""
    g = make_grid(2, points, 20.0)
    u = ComplexField(g, gaussian(g, width_sq=1.0))
    v = RealField(g, lam * np.abs(u.values) ** 2)
    return SDState(u, v, 0.0, SDParams(mu, lam))


def test_csv_column_order():
    assert CSV_COLUMNS == (
        "t", "mass", "energy_a", "energy_b", "grad_u_l2_sq", "v_l2_sq",
        "f", "u_linf", "u_l4", "vt_l2_sq", "gronwall_envelope",
    )


class TestClosedFormGaussian:
    # hand-evaluated: M = pi/2, ||grad u||^2 = pi, ||u||_4^4 = ||v0||^2 = pi/4
    @pytest.mark.parametrize("lam", [-1, 1])
    def test_record(self, lam):
        r = diagnostics_record(bb_state(lam))
        assert r.mass == pytest.approx(PI / 2, abs=1e-12)
        assert r.grad_u_l2_sq == pytest.approx(PI, abs=1e-12)
        assert r.v_l2_sq == pytest.approx(PI / 4, abs=1e-12)
        assert r.f == pytest.approx(5 * PI / 4, abs=1e-12)
        assert r.u_l4 == pytest.approx((PI / 4) ** 0.25, abs=1e-12)
        assert r.u_linf == pytest.approx(1.0, abs=1e-12)
        assert r.vt_l2_sq == 0.0
        assert r.energy_a == pytest.approx(PI + lam * PI / 4, abs=1e-12)
        assert r.energy_b == pytest.approx(PI + lam * PI / 4, abs=1e-12)
        assert math.isnan(r.gronwall_envelope)

    def test_gn_ratio(self):
        assert gn_ratio(bb_state(1).u) == pytest.approx(1 / (2 * PI), abs=1e-12)

    @pytest.mark.parametrize("lam,alpha0", [(-1, 4 * PI), (1, 5 * PI)])
    def test_gronwall_constants_at_calibrated_beta(self, lam, alpha0):
        beta = (1 / PI) ** 0.25
        c = gronwall_constants(bb_state(lam).u, bb_state(lam).v, SDParams(1.0, lam), beta)
        assert c.alpha0 == pytest.approx(alpha0, abs=1e-10)
        assert c.alpha1 == pytest.approx(14.5, abs=1e-10)
        assert c.T_mu == pytest.approx(0.5, abs=1e-10)
        assert c.mass == pytest.approx(PI / 2, abs=1e-12)

    @pytest.mark.parametrize("mu,beta", [(0.3, 0.9), (2.5, 1.4)])
    def test_gronwall_constants_general(self, mu, beta):
        s = bb_state(-1, mu=mu)
        b4, m, v2, e0 = beta ** 4, PI / 2, PI / 4, 3 * PI / 4
        c = gronwall_constants(s.u, s.v, s.params, beta)
        assert c.alpha0 == pytest.approx(2 * e0 + 4 * v2 * (2 * b4 * m + 1.5), abs=1e-10)
        assert c.alpha1 == pytest.approx((2 / mu) * (5 * b4 * m + 19 / 4), abs=1e-10)
        assert c.T_mu == pytest.approx(mu / (4 * b4 * m), abs=1e-10)


class TestEnergy:
    @pytest.mark.parametrize("lam", [-1, 1])
    def test_forms_agree_off_equilibrium(self, lam, rng):
        g = make_grid(2, 32, 8.0)
        u = smooth_random(g, rng, amplitude=1.2)
        v = RealField(g, rng.standard_normal(g.shape))
        a, b = energy(SDState(u, v, 0.0, SDParams(0.4, lam)))
        assert abs(a - b) < 1e-12 * (1 + abs(a))

    def test_constant_data_rate_identity(self):
        # E(t) from the closed form; the rate integral from a fine trapezoid
        g = make_grid(1, 8, 3.0)
        p = SDParams(0.5, -1)
        a0, v0 = 0.9, 0.4
        ts = np.linspace(0.0, 1.0, 201)
        recs = []
        for t in ts:
            u, v = constant_solution(a0, v0, p, t)
            recs.append(diagnostics_record(SDState(
                ComplexField(g, np.full(8, complex(u))), RealField(g, np.full(8, float(v))), float(t), p)))
        r = energy_rate_residual(recs, p)
        coarse = energy_rate_residual(recs[::2], p)
        # trapezoid defect: third order per interval, second order accumulated
        assert np.max(np.abs(coarse)) / np.max(np.abs(r)) == pytest.approx(8.0, rel=0.05)
        assert coarse.sum() / r.sum() == pytest.approx(4.0, rel=0.01)

    def test_equilibrium_vt_zero(self, rng):
        g = make_grid(2, 16, 4.0)
        u = random_complex(g, rng)
        s = SDState(u, RealField(g, -np.abs(u.values) ** 2), 0.0, SDParams(3.0, -1))
        scale = np.max(np.abs(u.values) ** 2) / 3.0
        assert np.max(np.abs(v_time_derivative(s).values)) < 1e-15 * scale

    def test_residual_needs_uniform_cadence(self):
        g = make_grid(1, 8, 1.0)
        p = SDParams(1.0, 1)
        recs = [diagnostics_record(SDState(ComplexField.zeros(g), RealField.zeros(g), t, p)) for t in (0.0, 0.1, 0.3)]
        with pytest.raises(ValueError):
            energy_rate_residual(recs, p)
        with pytest.raises(ValueError):
            energy_rate_residual(recs[:1], p)


class TestBeta:
    def test_gn_ratio_scale_invariant(self, rng):
        # invariant under u -> c u and under dilation u(x) -> u(x / r)
        g = make_grid(2, 256, 40.0)
        base = gn_ratio(ComplexField(g, gaussian(g, width_sq=1.0)))
        assert gn_ratio(ComplexField(g, 3j * gaussian(g, width_sq=1.0))) == pytest.approx(base, rel=1e-12)
        assert gn_ratio(ComplexField(g, gaussian(g, width_sq=4.0))) == pytest.approx(base, rel=1e-10)

    def test_gn_ratio_undefined(self):
        g = make_grid(2, 8, 1.0)
        with pytest.raises(ValueError):
            gn_ratio(ComplexField.zeros(g))
        with pytest.raises(ValueError):
            gn_ratio(ComplexField(g, np.ones(g.shape)))

    def test_calibrate_beta(self):
        u = bb_state(1).u
        assert calibrate_beta([u], safety=2.0) ** 4 == pytest.approx(1 / PI, rel=1e-12)
        assert calibrate_beta([u], safety=1.0) ** 4 == pytest.approx(1 / (2 * PI), rel=1e-12)
        with pytest.raises(ValueError):
            calibrate_beta([])


class TestEnvelope:
    def constants(self, lam=-1):
        s = bb_state(lam, points=64)
        return s, gronwall_constants(s.u, s.v, s.params, (1 / PI) ** 0.25)

    def test_first_window(self):
        _, c = self.constants()
        assert gronwall_envelope(c, 0.0) == pytest.approx(c.alpha0)
        assert gronwall_envelope(c, 0.3) == pytest.approx(c.alpha0 * math.exp(c.alpha1 * 0.3))
        assert gronwall_envelope(c, c.T_mu) < math.inf
        assert gronwall_envelope(c, 0.6) == math.inf
        with pytest.raises(ValueError):
            gronwall_envelope(c, -0.1)

    def test_segments_restart(self):
        _, c = self.constants()
        later = type(c)(c.beta, 2.0, 1.0, c.T_mu, c.E0, c.mass)
        assert gronwall_envelope(c, 0.7, [(0.5, later)]) == pytest.approx(2.0 * math.exp(0.2))
        assert gronwall_envelope(c, 1.2, [(0.5, later)]) == math.inf

    def test_window_bounds(self):
        s, _ = self.constants()
        env = IteratedEnvelope(s.u, s.v, s.params, (1 / PI) ** 0.25)
        assert env.window_bounds(5.0) == pytest.approx([0.5 * k for k in range(1, 10)])
        assert env.window_bounds(0.5) == []
        assert env.window_bounds(0.51) == pytest.approx([0.5])

    def test_zero_data_has_no_windows(self):
        g = make_grid(2, 16, 4.0)
        env = IteratedEnvelope(ComplexField.zeros(g), RealField.zeros(g), SDParams(1, 1), 1.0)
        assert env.T_mu == math.inf and env.window_bounds(10.0) == []
        assert env(100.0) == 0.0

    def test_restart_from_evolved_state(self):
        s, _ = self.constants(1)
        env = IteratedEnvelope(s.u, s.v, s.params, (1 / PI) ** 0.25)
        mid = evolve(s, StepControl(5e-3), 0.5)
        c = env.restart(mid)
        assert c.T_mu == env.T_mu
        assert env(0.6) == pytest.approx(c.alpha0 * math.exp(c.alpha1 * 0.1))
        assert env(0.5) == pytest.approx(c.alpha0)

    def test_restart_rejects_mass_drift(self):
        s, _ = self.constants(1)
        env = IteratedEnvelope(s.u, s.v, s.params, 1.0)
        bad = SDState(s.u * 1.01, s.v, 0.5, s.params)
        with pytest.raises(AssertionError):
            env.restart(bad)

    @pytest.mark.parametrize("lam", [-1, 1])
    def test_bounds_measured_f(self, lam):
        s, _ = self.constants(lam)
        env = IteratedEnvelope(s.u, s.v, s.params, (1 / PI) ** 0.25)
        cur = s
        for stop in [*env.window_bounds(1.5), 1.5]:
            recs = []
            cur = evolve(cur, StepControl(5e-3), stop, lambda st: recs.append(diagnostics_record(st)), every=10)
            for r in recs:
                assert r.f <= env(r.t)
            if stop < 1.5:
                env.restart(cur)


class TestLine:
    def line_state(self, lam=1, mu=0.8):
        g = make_grid(1, 256, 30.0)
        u = ComplexField(g, gaussian(g, width_sq=1.0))
        v = RealField(g, 0.3 * gaussian(g, width_sq=2.0))
        return SDState(u, v, 0.0, SDParams(mu, lam))

    def test_linf_h1_inequality(self, rng):
        g = make_grid(1, 512, 60.0)
        x = g.centered_coordinates()[0]
        for _ in range(5):
            c = rng.standard_normal(4)
            w = ComplexField(g, (c[0] + 1j * c[1]) * np.exp(-(x - c[2]) ** 2 / (1 + c[3] ** 2)))
            lhs = lp_norm(w, np.inf) ** 2
            rhs = LINF_H1_CONSTANT * (lp_norm(w, 2) ** 2 + np.sum(np.abs(np.gradient(w.values, g.spacing)) ** 2) * g.spacing)
            assert lhs <= rhs * (1 + 1e-6)

    def test_constants_hand_formula(self):
        s = self.line_state()
        # 1D Gaussian integrals: ∫exp(-2x^2) = sqrt(pi/2), ∫4x^2 exp(-2x^2) = sqrt(pi/2)
        m = math.sqrt(PI / 2)
        grad = math.sqrt(PI / 2)
        v_sq = 0.09 * math.sqrt(PI / 2) * math.sqrt(2)  # ∫0.09 exp(-x^2)
        # ∫ (0.3 * x exp(-x^2/2))^2 = 0.09 * sqrt(pi)/2
        vx = math.sqrt(0.09 * math.sqrt(PI) / 2)
        vv = 0.3 * np.exp(-s.grid.centered_coordinates()[0] ** 2 / 2)
        rho = np.abs(s.u.values) ** 2
        e0 = grad + s.grid.cell_volume * np.sum(2 * vv * rho - vv ** 2)
        k, kap = 0.5, math.sqrt(0.5)
        a0 = 2 * abs(e0) + 4 * v_sq * (2 * k * m + 1.5) + 3.5 * m + 3 / (8 * k) + vx + 1 / (4 * kap)
        a1 = (2 / 0.8) * (5 * k * m + 19 / 4) + 2 * kap / 0.8
        c = line_constants(s)
        assert c.a0 == pytest.approx(a0, rel=1e-10)
        assert c.a1 == pytest.approx(a1, rel=1e-10)
        assert c.window == pytest.approx(0.8 / (4 * k * m), rel=1e-12)

    def test_g_functional(self):
        s = self.line_state()
        f = PI ** 0.5 / 2 ** 0.5 + 0.09 * PI ** 0.5
        assert g_functional_1d(s) == pytest.approx(f + math.sqrt(0.09 * math.sqrt(PI) / 2), rel=1e-10)

    def test_dimension_guard(self):
        s = bb_state(1, points=16)
        with pytest.raises(ValueError):
            g_functional_1d(s)
        with pytest.raises(ValueError):
            line_constants(s)

    @pytest.mark.parametrize("lam", [-1, 1])
    def test_g_under_window_envelope(self, lam):
        s = self.line_state(lam)
        c = line_constants(s)
        t_end = min(c.window, 1.0)
        seen = []
        evolve(s, StepControl(2e-3), t_end, lambda st: seen.append((st.t, g_functional_1d(st))), every=10)
        for t, gv in seen:
            assert gv <= c.a0 * math.exp(c.a1 * t)
