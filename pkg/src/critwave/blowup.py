"""Test-function functionals and the ordinary differential inequalities they obey.

All space-time integrals run over stored snapshots: trapezoidal in t,
Riemann sums in x.  Radial quantities use |x| in any dimension.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import CoverageError, LedgerTooShort
from .modcont import CriticalPair, Modulus, convexity_check, deriv, eval_clamped
from .solver import Trajectory, _source


def _h(x):
    x = np.asarray(x, dtype=float)
    pos = x > 0
    return np.where(pos, np.exp(-1.0 / np.where(pos, x, 1.0)), 0.0)


def phi_profile(rho):
    """Smooth cutoff: 1 on [0, 1/2], 0 on [1, inf), decreasing in between."""
    rho = np.asarray(rho, dtype=float)
    a = _h(1.0 - rho)
    b = _h(rho - 0.5)
    den = a + b
    out = np.where(den > 0, a / np.where(den > 0, den, 1.0), 0.0)
    out = np.where(rho <= 0.5, 1.0, np.where(rho >= 1.0, 0.0, out))
    return float(out) if out.ndim == 0 else out


def phi_star(rho):
    rho = np.asarray(rho, dtype=float)
    out = np.where(rho < 0.5, 0.0, phi_profile(rho))
    return float(out) if out.ndim == 0 else out


def rho_of(t, x_abs, R):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x_abs, dtype=float)
    return (t * t + x**4) / float(R) ** 4


def phi_R(t, x_abs, R, nu, starred: bool = False):
    """(phi(rho))^(nu+2) with rho = (t^2 + |x|^4)/R^4."""
    rho = rho_of(t, x_abs, R)
    base = phi_star(rho) if starred else phi_profile(rho)
    out = np.asarray(base) ** (nu + 2)
    return float(out) if out.ndim == 0 else out


def default_nu(pair: CriticalPair) -> float:
    return 2.0 / (pair.p_c - 1.0)


def _unit_ball(n: int) -> float:
    return 2.0 if n == 1 else math.pi


def q_measure(R: float, n: int, starred: bool = False) -> float:
    """Closed-form |Q_R| or |Q*_R|."""
    full = R**2 * _unit_ball(n) * R**n
    if not starred:
        return full
    inner = (R**2 / math.sqrt(2)) * _unit_ball(n) * (R / 2**0.25) ** n
    return full - inner


def q_measure_grid(R: float, n: int, starred: bool = False, points: int = 400) -> float:
    """|Q_R| or |Q*_R| by counting midpoints on a (t, x) mesh."""
    dt = R**2 / points
    dx = R / points
    t = (np.arange(points) + 0.5) * dt
    ax = (np.arange(-points, points) + 0.5) * dx
    if n == 1:
        r = np.abs(ax)
    else:
        r = np.sqrt(ax[:, None] ** 2 + ax[None, :] ** 2)
    inside_x = r <= R
    cell = dx**n
    total = 0.0
    for tj in t:
        mask = inside_x.copy()
        if starred:
            mask &= ~((tj <= R**2 / math.sqrt(2)) & (r <= R / 2**0.25))
        total += mask.sum() * cell * dt
    return total


# ---------------------------------------------------------------------------
# functionals


def _time_window(traj: Trajectory, T: float):
    times = np.asarray(traj.times, dtype=float)
    if traj.horizon < T * (1 - 1e-12):
        raise CoverageError(f"trajectory ends at t={traj.horizon}, need {T}")
    if traj.grid.L < (T**0.5) * (1 - 1e-12):
        raise CoverageError("spatial box does not cover |x| <= R")
    k = int(np.searchsorted(times, T * (1 + 1e-12), side="right"))
    return times[:k], k


def _st_integral(traj: Trajectory, T: float, integrand) -> float:
    """int_0^T int f(t_j, x) dx dt, trapezoidal in t."""
    times, k = _time_window(traj, T)
    cell = traj.grid.cell
    vals = np.array([float(np.sum(integrand(j, times[j]))) * cell for j in range(k)])
    if k < 2:
        return 0.0
    return float(trapezoid(vals, times))


def functionals(traj: Trajectory, pair: CriticalPair, mu1: Modulus | None, mu2: Modulus | None,
                R: float, nu: float | None = None, p: float | None = None, q: float | None = None,
                clamp: bool = True) -> tuple[float, float]:
    """(I_R, J_R).  ``p``/``q`` override the exponents; ``mu=None`` drops the modulus."""
    nu = default_nu(pair) if nu is None else nu
    p = pair.p_c if p is None else p
    q = pair.q_c if q is None else q
    r = traj.grid.radius

    def cut(t):
        return phi_R(t, r, R, nu)

    I = _st_integral(traj, R * R, lambda j, t: _source(traj.v[j], p, mu1, clamp) * cut(t))
    J = _st_integral(traj, R * R, lambda j, t: _source(traj.u[j], q, mu2, clamp) * cut(t))
    return I, J


class _Kernel:
    """w(rho) = 1/4 int_{max(rho, 1/2)}^1 phi(r)^k / r dr, tabulated."""

    def __init__(self, k: float, points: int = 20001):
        r = np.linspace(0.5, 1.0, points)
        f = phi_profile(r) ** k / r
        tail = cumulative_trapezoid(f[::-1], -r[::-1], initial=0.0)[::-1]
        self.r = r
        self.table = 0.25 * tail

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.interp(np.clip(rho, 0.5, 1.0), self.r, self.table, right=0.0)


def g_values(traj, pair, mu1, mu2, R, nu=None, clamp=True):
    """(g_p(R), g_q(R)) = int Phi(|.|) phi*(rho_R)^(nu p) over Q_R."""
    nu = default_nu(pair) if nu is None else nu
    p, q = pair.p_c, pair.q_c
    r = traj.grid.radius
    gp = _st_integral(traj, R * R, lambda j, t: _source(traj.v[j], p, mu1, clamp)
                      * phi_star(rho_of(t, r, R)) ** (nu * p))
    gq = _st_integral(traj, R * R, lambda j, t: _source(traj.u[j], q, mu2, clamp)
                      * phi_star(rho_of(t, r, R)) ** (nu * q))
    return gp, gq


def G_values(traj, pair, mu1, mu2, R, nu=None, clamp=True):
    """(G_p(R), G_q(R)) with the lambda integral done in closed kernel form."""
    nu = default_nu(pair) if nu is None else nu
    p, q = pair.p_c, pair.q_c
    wp, wq = _Kernel(nu * p), _Kernel(nu * q)
    r = traj.grid.radius
    Gp = _st_integral(traj, R * R, lambda j, t: _source(traj.v[j], p, mu1, clamp) * wp(rho_of(t, r, R)))
    Gq = _st_integral(traj, R * R, lambda j, t: _source(traj.u[j], q, mu2, clamp) * wq(rho_of(t, r, R)))
    return Gp, Gq


LEDGER_HEADER = ["R", "I_R", "J_R", "g_p", "g_q", "G_p", "G_q", "res1", "res2", "C_emp"]


@dataclass
class BlowupLedger:
    R: np.ndarray
    I: np.ndarray
    J: np.ndarray
    g_p: np.ndarray
    g_q: np.ndarray
    G_p: np.ndarray
    G_q: np.ndarray
    res1: np.ndarray  # relative residual of R G_p'(R) = g_p(R)
    res2: np.ndarray
    C_emp: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.R)

    def max_residual(self) -> float:
        vals = np.concatenate([self.res1, self.res2])
        vals = vals[np.isfinite(vals)]
        return float(vals.max()) if vals.size else 0.0

    def write_csv(self, path) -> None:
        C = self.C_emp if self.C_emp is not None else np.full(len(self), np.nan)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(LEDGER_HEADER)
            for row in zip(self.R, self.I, self.J, self.g_p, self.g_q, self.G_p, self.G_q,
                           self.res1, self.res2, C):
                w.writerow([repr(float(x)) for x in row])


def r_ladder(R0: float = 4.0, ratio: float = 1.25, count: int = 8) -> np.ndarray:
    return R0 * ratio ** np.arange(count)


def g_and_G(traj: Trajectory, pair: CriticalPair, mu1, mu2, nu=None, R_ladder=None,
            rel_step: float = 0.02) -> BlowupLedger:
    """Ledger over a geometric R ladder, with central-difference checks of R G'(R) = g(R)."""
    R_ladder = r_ladder() if R_ladder is None else np.asarray(R_ladder, dtype=float)
    top = float(R_ladder.max()) * (1 + rel_step)
    if traj.horizon < top**2 * (1 - 1e-12):
        raise CoverageError(f"trajectory ends at t={traj.horizon}, ladder needs {top**2}")
    rows = []
    for R in R_ladder:
        I, J = functionals(traj, pair, mu1, mu2, R, nu)
        gp, gq = g_values(traj, pair, mu1, mu2, R, nu)
        Gp, Gq = G_values(traj, pair, mu1, mu2, R, nu)
        hi = G_values(traj, pair, mu1, mu2, R * (1 + rel_step), nu)
        lo = G_values(traj, pair, mu1, mu2, R * (1 - rel_step), nu)
        dp = (hi[0] - lo[0]) / (2 * rel_step)
        dq = (hi[1] - lo[1]) / (2 * rel_step)
        r1 = abs(dp - gp) / gp if gp > 0 else (0.0 if dp == 0 else math.inf)
        r2 = abs(dq - gq) / gq if gq > 0 else (0.0 if dq == 0 else math.inf)
        rows.append((R, I, J, gp, gq, Gp, Gq, r1, r2))
    cols = [np.array(c, dtype=float) for c in zip(*rows)]
    return BlowupLedger(*cols)


# ---------------------------------------------------------------------------
# ordinary differential inequalities


@dataclass
class InequalityReport:
    status: str  # Consistent | Inconsistent | NotApplicable
    R: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    C_emp: float
    C0: float
    sensitivity: dict


def theta(r, n: int, power: float, mu: Modulus, C0: float):
    """r^-(n(power-1)-1) mu(C0 r^-n)."""
    r = np.asarray(r, dtype=float)
    return r ** (-(n * (power - 1) - 1)) * eval_clamped(mu, C0 * r ** (-n))


def _constants(ledger, pair, mu1, mu2, C0, mask):
    n, p, q = pair.n, pair.p_c, pair.q_c
    R = ledger.R[mask]
    dGp = ledger.g_p[mask] / R
    dGq = ledger.g_q[mask] / R
    with np.errstate(divide="ignore", invalid="ignore"):
        C1 = dGp / (theta(R, n, p, mu1, C0) * ledger.G_q[mask] ** p)
        C2 = dGq / (theta(R, n, q, mu2, C0) * ledger.G_p[mask] ** q)
    return R, C1, C2


def ode_inequality_check(ledger: BlowupLedger, pair: CriticalPair, mu1: Modulus, mu2: Modulus,
                         C0: float | None = None, R0: float | None = None,
                         scales=(0.1, 1.0, 10.0)) -> InequalityReport:
    """Largest C with G_p' >= C theta1 G_q^p and G_q' >= C theta2 G_p^q at each ladder r > R0."""
    R0 = float(ledger.R[0]) if R0 is None else R0
    mask = ledger.R > R0 * (1 + 1e-12)
    if mask.sum() < 4:
        raise LedgerTooShort(f"need 4 ladder points above R0={R0}, have {int(mask.sum())}")
    i0 = int(np.argmin(np.abs(ledger.R - R0)))
    if C0 is None:
        C0 = min(ledger.G_p[i0], ledger.G_q[i0])
    if not np.any(ledger.G_p[mask] > 0) and not np.any(ledger.G_q[mask] > 0):
        return InequalityReport("NotApplicable", ledger.R[mask], np.array([]), np.array([]), math.nan,
                                C0, {})
    R, C1, C2 = _constants(ledger, pair, mu1, mu2, C0, mask)
    both = np.minimum(C1, C2)
    C_emp = float(np.nanmin(both))
    full = np.full(len(ledger), np.nan)
    full[mask] = both
    ledger.C_emp = full
    sens = {}
    for s in scales:
        _, a, b = _constants(ledger, pair, mu1, mu2, C0 * s, mask)
        sens[s] = float(np.nanmin(np.minimum(a, b)))
    status = "Consistent" if C_emp > 0 and math.isfinite(C_emp) else "Inconsistent"
    return InequalityReport(status, R, C1, C2, C_emp, float(C0), sens)


# ---------------------------------------------------------------------------
# convex extension, Jensen and inverse


class ConvexPhi:
    """Phi(s) = s^power mu(s) on [0, c0], continued as a C^2 quadratic beyond c0."""

    def __init__(self, power: float, mu: Modulus | None, c0: float):
        self.power = power
        self.mu = mu
        self.c0 = c0
        s = c0
        m = 1.0 if mu is None else float(eval_clamped(mu, s))
        d1 = 0.0 if mu is None else float(deriv(mu, s, 1))
        d2 = 0.0 if mu is None else float(deriv(mu, s, 2))
        P = power
        self.v0 = s**P * m
        self.v1 = P * s ** (P - 1) * m + s**P * d1
        self.v2 = P * (P - 1) * s ** (P - 2) * m + 2 * P * s ** (P - 1) * d1 + s**P * d2

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inner = _source(np.minimum(s, self.c0), self.power, self.mu)
        d = s - self.c0
        outer = self.v0 + self.v1 * d + 0.5 * max(self.v2, 0.0) * d * d
        out = np.where(s <= self.c0, inner, outer)
        return float(out) if out.ndim == 0 else out

    def inverse(self, y: float, tol: float = 1e-10) -> float:
        """Monotone bisection."""
        if y <= 0:
            return 0.0
        lo, hi = 0.0, max(self.c0, 1.0)
        while self(hi) < y:
            hi *= 2
        while hi - lo > tol * max(hi, 1e-300):
            mid = 0.5 * (lo + hi)
            if self(mid) < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


@dataclass
class JensenReport:
    applicable: bool
    checked: int
    violations: int
    worst_gap: float


def jensen_check(traj: Trajectory, pair: CriticalPair, mu2: Modulus, R: float, nu: float | None = None,
                 c0: float | None = None, slack: float = 1e-12) -> JensenReport:
    """Phi_q(mean f) <= mean Phi_q(f) on Q*_R at every snapshot, f = |u| (phi*_R)^(nu/(nu+2))."""
    nu = default_nu(pair) if nu is None else nu
    c0 = mu2.smax if c0 is None else c0
    if not convexity_check(mu2, pair.q_c, c0).passed:
        return JensenReport(False, 0, 0, 0.0)
    Phi = ConvexPhi(pair.q_c, mu2, c0)
    times, k = _time_window(traj, min(R * R, traj.horizon))
    r = traj.grid.radius
    violations, worst, checked = 0, -math.inf, 0
    for j in range(k):
        t = times[j]
        region = (t <= R * R) & (r <= R) & ~((t <= R * R / math.sqrt(2)) & (r <= R / 2**0.25))
        if not np.any(region):
            continue
        f = np.abs(traj.u[j][region]) * phi_R(t, r[region], R, nu, starred=True) ** (nu / (nu + 2))
        lhs = float(Phi(f.mean()))
        rhs = float(np.mean(Phi(f)))
        gap = lhs - rhs
        worst = max(worst, gap / max(abs(rhs), 1e-300))
        if gap > slack * max(abs(rhs), 1.0):
            violations += 1
        checked += 1
    return JensenReport(True, checked, violations, worst if checked else 0.0)


def rescaled_mean(traj: Trajectory, pair: CriticalPair, mu2: Modulus, R: float, c0: float | None = None) -> float:
    """Phi_q^-1 of int_{Q_R} Phi_q(|u|); nondecreasing in R for a fixed trajectory."""
    c0 = mu2.smax if c0 is None else c0
    Phi = ConvexPhi(pair.q_c, mu2, c0)
    r = traj.grid.radius
    total = _st_integral(traj, R * R, lambda j, t: Phi(np.abs(traj.u[j])) * (r <= R))
    return Phi.inverse(total)
