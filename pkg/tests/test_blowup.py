import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from critwave.blowup import (
    ConvexPhi,
    default_nu,
    functionals,
    g_and_G,
    jensen_check,
    ode_inequality_check,
    phi_profile,
    phi_R,
    phi_star,
    q_measure,
    q_measure_grid,
    r_ladder,
    rescaled_mean,
    theta,
)
from critwave.errors import CoverageError, LedgerTooShort
from critwave.modcont import CriticalPair, LogPow, Power, eval_clamped
from critwave.solver import SimConfig, Trajectory, simulate
from critwave.spectral import Grid

PAIR = CriticalPair(1, 3.0, 3.0)
LADDER = r_ladder(2.0, 1.25, 5)


def flat_trajectory(a, b, T, L=8.0, N=256, dt=0.05):
    g = Grid(1, L, N)
    tr = Trajectory(g)
    for t in np.arange(0.0, T + dt / 2, dt):
        tr.times.append(float(t))
        tr.u.append(np.full(g.shape, a))
        tr.v.append(np.full(g.shape, b))
    return tr


@pytest.fixture(scope="module")
def run():
    cfg = SimConfig(PAIR, LogPow(1), LogPow(1), amplitude=0.1, slots=(0.0, 1.0, 0.0, 1.0),
                    T_max=26.0, dt=0.1, N=512, snapshot_every=0.1)
    res = simulate(cfg)
    assert res.status == "ReachedTmax"
    return cfg, res.trajectory


# --- test function ----------------------------------------------------------


def test_phi_examples():
    assert phi_profile(0.3) == 1.0
    assert phi_profile(2.0) == 0.0
    assert phi_profile(0.75) == pytest.approx(0.5, abs=1e-15)
    assert phi_R(0.0, 0.0, 3.0, 1.0) == 1.0
    assert phi_R(0.0, 0.0, 3.0, 1.0, starred=True) == 0.0
    assert phi_R(9.0, 3.0, 3.0, 1.0) == 0.0 and phi_R(9.0, 3.0, 3.0, 1.0, starred=True) == 0.0


def test_phi_strictly_decreasing_and_smooth():
    # e^(-1/x) underflows next to the plateaus, so strictness is checked inside
    r = np.linspace(0.6, 0.9, 2001)
    assert np.all(np.diff(phi_profile(r)) < 0)
    r = np.linspace(0.5, 1.0, 501)
    np.testing.assert_allclose(phi_profile(r) + phi_profile(1.5 - r), 1.0, atol=1e-15)
    for edge in (0.5, 1.0):
        for h in (1e-2, 5e-3):
            x = edge + h * np.arange(-2, 3)
            f = phi_profile(x)
            d1 = (f[3] - f[1]) / (2 * h)
            d2 = (f[3] - 2 * f[2] + f[1]) / h**2
            assert abs(d1) < 1e-4 and abs(d2) < 1e-4


def test_cutoff_supports_are_exact():
    R = 2.5
    t = np.linspace(0, 2 * R * R, 301)[:, None]
    x = np.linspace(0, 2 * R, 301)[None, :]
    full = phi_R(t, x, R, 2.0)
    star = phi_R(t, x, R, 2.0, starred=True)
    rho = (t * t + x**4) / R**4
    assert np.all(full[rho >= 1] == 0.0)
    assert np.all(full[(full > 0)] <= 1.0)
    assert np.all((t <= R * R) & (x <= R) | (full == 0))
    assert np.all(star[rho < 0.5] == 0.0) and np.all(star[rho >= 1] == 0.0)


def test_nu_rule():
    assert default_nu(CriticalPair(1, 2.5, 6.0)) == pytest.approx(2 / 1.5)
    assert default_nu(CriticalPair(1, 2.5, 6.0)) >= 2 / (6.0 - 1)


# --- measures ---------------------------------------------------------------


@pytest.mark.parametrize("n,points", [(1, 400), (2, 60)])
def test_qstar_measure_exponent(n, points):
    R = np.geomspace(1.0, 10.0, 6)
    m = [q_measure_grid(r, n, starred=True, points=points) for r in R]
    fit = stats.linregress(np.log(R), np.log(m))
    assert abs(fit.slope - (n + 2)) < 0.05
    assert m[-1] == pytest.approx(q_measure(R[-1], n, starred=True), rel=0.05)


# --- functionals ------------------------------------------------------------


def test_zero_solution_functionals():
    tr = flat_trajectory(0.0, 0.0, 30.0)
    assert functionals(tr, PAIR, LogPow(1), LogPow(1), 2.0) == (0.0, 0.0)
    ledger = g_and_G(tr, PAIR, LogPow(1), LogPow(1), R_ladder=LADDER)
    for col in (ledger.I, ledger.J, ledger.g_p, ledger.g_q, ledger.G_p, ledger.G_q):
        assert np.all(col == 0.0)
    rep = ode_inequality_check(ledger, PAIR, LogPow(1), LogPow(1), C0=1.0)
    assert rep.status == "NotApplicable"


def test_unit_integrand_bounds():
    R = 2.0
    tr = flat_trajectory(1.0, 1.0, 5.0, dt=0.01, N=1024)
    I, J = functionals(tr, PAIR, None, None, R, p=0.0, q=0.0)
    assert I == J
    # box volume from above; the rho <= 1/2 plateau, where the cutoff is 1, from below
    plateau = integrate.quad(lambda t: 2 * (R**4 / 2 - t * t) ** 0.25, 0, R * R / math.sqrt(2))[0]
    assert plateau < I <= 2 * R**3


def test_coverage_errors():
    tr = flat_trajectory(0.1, 0.1, 3.0)
    with pytest.raises(CoverageError):
        functionals(tr, PAIR, LogPow(1), LogPow(1), 2.0)
    with pytest.raises(CoverageError):
        g_and_G(tr, PAIR, LogPow(1), LogPow(1), R_ladder=LADDER)


def test_cadence_convergence(run):
    cfg, tr = run
    coarse = Trajectory(tr.grid, tr.times[::2], tr.u[::2], tr.v[::2])
    for R in (2.0, 4.0):
        fine = functionals(tr, cfg.pair, cfg.mu1, cfg.mu2, R)
        half = functionals(coarse, cfg.pair, cfg.mu1, cfg.mu2, R)
        for a, b in zip(fine, half):
            assert abs(a - b) <= 0.01 * abs(a)


# --- ledger -----------------------------------------------------------------


def test_ledger_on_simulated_run(run, tmp_path):
    cfg, tr = run
    ledger = g_and_G(tr, cfg.pair, cfg.mu1, cfg.mu2, R_ladder=LADDER)
    assert np.all(np.diff(ledger.G_q) > 0) and np.all(np.diff(ledger.G_p) > 0)
    assert ledger.max_residual() <= 0.05
    rep = ode_inequality_check(ledger, cfg.pair, cfg.mu1, cfg.mu2)
    assert rep.status == "Consistent" and rep.C_emp > 0
    assert set(rep.sensitivity) == {0.1, 1.0, 10.0}
    ledger.write_csv(tmp_path / "l.csv")
    assert (tmp_path / "l.csv").read_text().splitlines()[0] == "R,I_R,J_R,g_p,g_q,G_p,G_q,res1,res2,C_emp"


def test_ledger_too_short(run):
    cfg, tr = run
    ledger = g_and_G(tr, cfg.pair, cfg.mu1, cfg.mu2, R_ladder=LADDER[:4])
    with pytest.raises(LedgerTooShort):
        ode_inequality_check(ledger, cfg.pair, cfg.mu1, cfg.mu2)


def _w_oracle(k):
    """1/4 int_{max(rho,1/2)}^1 phi^k(r)/r dr by adaptive quadrature."""
    def w(rho):
        lo = max(rho, 0.5)
        if lo >= 1:
            return 0.0
        return 0.25 * integrate.quad(lambda r: phi_profile(r) ** k / r, lo, 1.0, epsabs=1e-13)[0]
    return w


def _shape_constants(k):
    """Integrals of w(rho) and phi*(rho)^k over tau, y in [0, 1] in scaled variables.

    The area of {tau^2 + y^4 <= rho} is A rho^(3/4), so each double integral
    collapses to a single rho integral against (3/4) A rho^(-1/4).
    """
    w = _w_oracle(k)
    A = integrate.quad(lambda tau: (1 - tau * tau) ** 0.25, 0, 1)[0]
    dens = lambda rho: 0.75 * A * rho ** (-0.25)
    G = 2 * integrate.quad(lambda rho: w(rho) * dens(rho), 0, 1, points=[0.5], limit=200)[0]
    g = 2 * integrate.quad(lambda rho: phi_star(rho) ** k * dens(rho), 0.5, 1, limit=200)[0]
    return G, g


def test_flat_trajectory_derivative_and_constant_oracle():
    a = b = 0.05
    mu = LogPow(1)
    tr = flat_trajectory(a, b, (LADDER[-1] * 1.02) ** 2 + 0.1)
    ledger = g_and_G(tr, PAIR, mu, mu, R_ladder=LADDER)
    assert ledger.max_residual() < 0.05
    C0 = 1.0
    rep = ode_inequality_check(ledger, PAIR, mu, mu, C0=C0)

    nu = default_nu(PAIR)
    p = PAIR.p_c
    Gc, gc = _shape_constants(nu * p)
    amp = b**p * float(eval_clamped(mu, b))
    R = LADDER[1:]
    G = amp * Gc * R**3
    g = amp * gc * R**3
    C = (g / R) / (theta(R, 1, p, mu, C0) * G**p)
    assert rep.C_emp == pytest.approx(float(C.min()), rel=0.2)


# --- Jensen and rescaled means ------------------------------------------------


def test_jensen_never_violated(run):
    cfg, tr = run
    for R in (2.0, 3.5, 5.0):
        rep = jensen_check(tr, cfg.pair, cfg.mu2, R)
        assert rep.applicable and rep.checked > 0 and rep.violations == 0


def test_convex_extension_is_c2_and_invertible():
    Phi = ConvexPhi(3.0, LogPow(1), LogPow(1).smax)
    c = Phi.c0
    h = 1e-4
    left = (Phi(c) - Phi(c - h)) / h
    right = (Phi(c + h) - Phi(c)) / h
    # one-sided slopes straddle v1 by about h v2 / 2 each
    assert abs(0.5 * (left + right) - Phi.v1) < 1e-3 * Phi.v1
    assert (right - left) / h == pytest.approx(Phi.v2, rel=0.05)
    for y in (1e-8, Phi(c), 10.0):
        x = Phi.inverse(y)
        assert Phi(x) == pytest.approx(y, rel=1e-8)


def test_rescaled_mean_monotone(run):
    cfg, tr = run
    vals = [rescaled_mean(tr, cfg.pair, cfg.mu2, R) for R in (1.0, 2.0, 3.0, 4.0, 5.0)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 3.0), st.floats(0.5, 6.0), st.floats(0.5, 4.0))
def test_cutoff_bounds(t, x, R, nu):
    v = phi_R(t, x, R, nu)
    s = phi_R(t, x, R, nu, starred=True)
    assert 0.0 <= s <= v <= 1.0
