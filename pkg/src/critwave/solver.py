"""Nonlinear time integration of the coupled damped wave system.

    u_tt - Lap u + u_t = |v|^p mu1(|v|),   v_tt - Lap v + v_t = |u|^q mu2(|u|)

The linear flow is exact per Fourier mode; the Duhamel integral over one
step is approximated by linear interpolation of the forcing (ETD2RK).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import NonFiniteInput, NonFiniteOutput
from .modcont import CriticalPair, EllConfig, Modulus, Power, eval_clamped, evaluate, loss_weight
from .spectral import Grid, GridField, NormProbe, auto_grid, field_norms, multipliers

PROFILES = ("gaussian", "bump", "constant", "dgauss", "random")
SLOTS = ("u0", "u1", "v0", "v1")


def nonlinearity(f: GridField, p: float, mu: Modulus | None, clamp: bool = True) -> GridField:
    """Pointwise |f|^p mu(|f|), zero where f vanishes."""
    f.check_finite()
    return GridField(f.grid, _source(f.values, p, mu, clamp))


def _source(values, p, mu, clamp=True):
    a = np.abs(values)
    if mu is None:
        return a**p
    if isinstance(mu, Power) and mu.s_max is None:
        return a ** (p + mu.alpha)
    m = eval_clamped(mu, a) if clamp else evaluate(mu, a)
    return a**p * m


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SimConfig:
    pair: CriticalPair
    mu1: Modulus
    mu2: Modulus
    amplitude: float = 1e-2
    profile: str = "gaussian"
    radius: float = 1.0
    slots: tuple = (0.0, 1.0, 0.0, 1.0)  # weights of u0, u1, v0, v1
    dt: float = 0.1
    T_max: float = 100.0
    blowup_threshold: float = 1e6
    probe_count: int = 60
    probe_start: float = 1.0
    N: int | None = None
    L: float | None = None
    seed: int = 0
    clamp: bool = True
    nonlinear: bool = True
    eps0: float = 0.1
    ell_eps: float = 0.01
    snapshot_every: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.amplitude < 0 or not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite and nonnegative")
        if not self.blowup_threshold > self.amplitude:
            raise ValueError("blowup_threshold must exceed the data amplitude")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}")
        if len(self.slots) != 4:
            raise ValueError("slots holds four weights (u0, u1, v0, v1)")
        if not self.T_max > 0:
            raise ValueError("T_max must be positive")

    @property
    def n(self) -> int:
        return self.pair.n

    def support_radius(self) -> float:
        # gaussians are below 1e-15 beyond 6 widths
        return self.radius if self.profile == "bump" else 6.0 * self.radius

    def grid(self) -> Grid:
        if self.L is not None:
            return Grid(self.n, float(self.L), int(self.N or (8192 if self.n == 1 else 1024)))
        return auto_grid(self.n, self.support_radius(), self.T_max, self.N)

    def echo(self) -> dict:
        return {
            "n": self.n, "p_c": self.pair.p_c, "q_c": self.pair.q_c,
            "mu1": self.mu1.literal(), "mu2": self.mu2.literal(),
            "amplitude": self.amplitude, "profile": self.profile, "radius": self.radius,
            "slots": list(self.slots), "dt": self.dt, "T_max": self.T_max,
            "blowup_threshold": self.blowup_threshold, "probe_count": self.probe_count,
            "N": self.grid().N, "L": self.grid().L, "seed": self.seed,
        }


def data_profile(grid: Grid, kind: str, radius: float = 1.0, seed: int = 0) -> np.ndarray:
    """Unit-amplitude data shapes."""
    r = grid.radius / radius
    if kind == "gaussian":
        return np.exp(-r * r)
    if kind == "bump":
        inside = r < 1
        out = np.zeros(grid.shape)
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
        return out
    if kind == "constant":
        return np.ones(grid.shape)
    if kind == "dgauss":
        # zero-mean: derivative of a gaussian along the first axis
        x = grid.axis if grid.n == 1 else grid.axis[:, None] + 0 * grid.axis[None, :]
        return -2 * (x / radius) * np.exp(-r * r)
    if kind == "random":
        rng = np.random.default_rng(seed)
        spec = grid.rfft(rng.standard_normal(grid.shape))
        spec *= np.exp(-(grid.xi_abs * radius) ** 2)
        smooth = grid.irfft(spec)
        return smooth * np.exp(-r * r / 36.0) / np.max(np.abs(smooth))
    raise ValueError(f"unknown profile {kind!r}")


@dataclass
class SimState:
    u: GridField
    ut: GridField
    v: GridField
    vt: GridField
    t: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def linf(self) -> float:
        return max(float(np.max(np.abs(self.u.values))), float(np.max(np.abs(self.v.values))))

    def finite(self) -> bool:
        return all(np.all(np.isfinite(f.values)) for f in (self.u, self.ut, self.v, self.vt))


def initial_state(cfg: SimConfig, grid: Grid | None = None) -> SimState:
    grid = grid or cfg.grid()
    shape = cfg.amplitude * data_profile(grid, cfg.profile, cfg.radius, cfg.seed)
    u0, u1, v0, v1 = (GridField(grid, w * shape) for w in cfg.slots)
    return SimState(u0, u1, v0, v1, 0.0)


# ---------------------------------------------------------------------------
# stepping

Forcing = Callable[[float, Grid], tuple]


@dataclass
class StepWeights:
    """Per-mode weights of one exponential step of size h."""

    h: float
    K0: np.ndarray
    K1: np.ndarray
    dtK0: np.ndarray
    dtK1: np.ndarray
    a1: np.ndarray  # int_0^h K1(s) ds
    b: np.ndarray  # int_0^h K1(s) (h - s)/h ds


def step_weights(grid: Grid, h: float) -> StepWeights:
    xi = grid.xi_abs
    m = multipliers(h, xi)
    # K1(s) is smooth and oscillates at most with |xi|; Gauss-Legendre on [0, h]
    nodes = max(12, int(math.ceil(float(np.max(xi)) * h)) + 12)
    x, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * h * (x + 1)
    w = 0.5 * h * w
    a1 = np.zeros_like(xi)
    b = np.zeros_like(xi)
    for si, wi in zip(s, w):
        k1 = multipliers(si, xi)["K1"]
        a1 += wi * k1
        b += wi * k1 * (h - si) / h
    return StepWeights(h, m["K0"], m["K1"], m["dtK0"], m["dtK1"], a1, b)


class Stepper:
    """Caches transform weights per step size."""

    def __init__(self, cfg: SimConfig, grid: Grid, forcing: Forcing | None = None):
        self.cfg = cfg
        self.grid = grid
        self.forcing = forcing
        self._weights: dict = {}

    def weights(self, h: float) -> StepWeights:
        key = round(h, 15)
        if key not in self._weights:
            self._weights[key] = step_weights(self.grid, h)
        return self._weights[key]

    def sources(self, u, v, t):
        cfg = self.cfg
        g = self.grid
        if cfg.nonlinear:
            fu = _source(v, cfg.pair.p_c, cfg.mu1, cfg.clamp)
            fv = _source(u, cfg.pair.q_c, cfg.mu2, cfg.clamp)
        else:
            fu = np.zeros(g.shape)
            fv = np.zeros(g.shape)
        if self.forcing is not None:
            su, sv = self.forcing(t, g)
            fu = fu + su
            fv = fv + sv
        return g.rfft(fu), g.rfft(fv)

    def step(self, state: SimState, h: float) -> SimState:
        g = self.grid
        W = self.weights(h)
        hat = [g.rfft(f.values) for f in (state.u, state.ut, state.v, state.vt)]
        lin_u = W.K0 * hat[0] + W.K1 * hat[1]
        lin_ut = W.dtK0 * hat[0] + W.dtK1 * hat[1]
        lin_v = W.K0 * hat[2] + W.K1 * hat[3]
        lin_vt = W.dtK0 * hat[2] + W.dtK1 * hat[3]
        Fu, Fv = self.sources(state.u.values, state.v.values, state.t)
        # predictor: forcing frozen at the left end
        u_p = g.irfft(lin_u + W.a1 * Fu)
        v_p = g.irfft(lin_v + W.a1 * Fv)
        with np.errstate(over="ignore", invalid="ignore"):
            if not (np.all(np.isfinite(u_p)) and np.all(np.isfinite(v_p))):
                raise NonFiniteOutput(f"predictor non-finite at t={state.t}")
            Gu, Gv = self.sources(u_p, v_p, state.t + h)
            du, dv = Gu - Fu, Gv - Fv
            u = g.irfft(lin_u + W.a1 * Fu + W.b * du)
            ut = g.irfft(lin_ut + W.K1 * Fu + (W.a1 / h) * du)
            v = g.irfft(lin_v + W.a1 * Fv + W.b * dv)
            vt = g.irfft(lin_vt + W.K1 * Fv + (W.a1 / h) * dv)
        out = SimState(GridField(g, u), GridField(g, ut), GridField(g, v), GridField(g, vt), state.t + h)
        if not out.finite():
            raise NonFiniteOutput(f"step from t={state.t} produced non-finite values")
        return out


def step(state: SimState, cfg: SimConfig, forcing: Forcing | None = None) -> SimState:
    """One exponential step of size cfg.dt."""
    for f in (state.u, state.ut, state.v, state.vt):
        f.check_finite()
    return Stepper(cfg, state.grid, forcing).step(state, cfg.dt)


# ---------------------------------------------------------------------------
# simulation


@dataclass
class Trajectory:
    """Snapshots of (u, v) used by the test-function functionals."""

    grid: Grid
    times: list = field(default_factory=list)
    u: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def add(self, state: SimState) -> None:
        self.times.append(state.t)
        self.u.append(state.u.values.copy())
        self.v.append(state.v.values.copy())

    @property
    def horizon(self) -> float:
        return self.times[-1] if self.times else 0.0


@dataclass
class SimOutcome:
    status: str  # ReachedTmax | BlowUpDetected | NumericalFailure
    probes: list
    wall_time: float
    t_star: float | None = None
    t_fail: float | None = None
    final: SimState | None = None
    trajectory: Trajectory | None = None

    def series(self, unknown: str, kind: str):
        rows = [p for p in self.probes if p.unknown == unknown]
        return np.array([p.t for p in rows]), np.array([getattr(p, kind) for p in rows])


def probe_steps(cfg: SimConfig) -> np.ndarray:
    """Step indices of the probes: 0 plus a log-spaced ladder up to T_max."""
    total = int(round(cfg.T_max / cfg.dt))
    start = max(cfg.probe_start, cfg.dt)
    ladder = np.geomspace(start, cfg.T_max, max(cfg.probe_count - 1, 1))
    idx = np.unique(np.clip(np.rint(ladder / cfg.dt).astype(np.int64), 1, total))
    return np.concatenate([[0], idx])


def _probe(state: SimState) -> list:
    g = state.grid
    return [NormProbe(state.t, "u", *field_norms(state.u.values, g)),
            NormProbe(state.t, "v", *field_norms(state.v.values, g))]


MAX_HALVINGS = 6


def simulate(cfg: SimConfig, forcing: Forcing | None = None, state: SimState | None = None) -> SimOutcome:
    """Advance to T_max with probes; stop on growth past the threshold."""
    t0 = time.perf_counter()
    grid = cfg.grid()
    state = state or initial_state(cfg, grid)
    stepper = Stepper(cfg, grid, forcing)
    marks = set(int(i) for i in probe_steps(cfg))
    total = int(round(cfg.T_max / cfg.dt))
    traj = Trajectory(grid) if cfg.snapshot_every else None
    snap_stride = max(1, int(round((cfg.snapshot_every or cfg.dt) / cfg.dt)))
    probes = _probe(state)
    if traj is not None:
        traj.add(state)

    def done(status, **kw):
        return SimOutcome(status, probes, time.perf_counter() - t0, final=state, trajectory=traj, **kw)

    for k in range(total):
        t_next = (k + 1) * cfg.dt
        new, t_hit = _advance(stepper, state, cfg.dt, cfg.blowup_threshold)
        if new is None:
            return done("NumericalFailure", t_fail=state.t)
        if t_hit is not None:
            state = new
            return done("BlowUpDetected", t_star=t_hit)
        new.t = t_next
        state = new
        if traj is not None and (k + 1) % snap_stride == 0:
            traj.add(state)
        if k + 1 in marks:
            probes.extend(_probe(state))
    return done("ReachedTmax")


def _advance(stepper: Stepper, state: SimState, h: float, threshold: float):
    """Advance by h, subdividing on trouble.

    Returns (state, None) on a clean step, (state, t) if the sup norm first
    exceeds the threshold at time t, and (None, None) when the step stays
    non-finite after MAX_HALVINGS subdivisions.
    """
    for level in range(MAX_HALVINGS + 1):
        sub = 2**level
        hs = h / sub
        cur = state
        try:
            for j in range(sub):
                cur = stepper.step(cur, hs)
                if cur.linf() > threshold:
                    if level == 0 and sub == 1 and MAX_HALVINGS > 0:
                        break  # resolve the crossing at finer steps
                    return cur, cur.t
            else:
                return cur, None
        except NonFiniteOutput:
            continue
    return None, None


# ---------------------------------------------------------------------------
# Picard iteration


@dataclass
class PicardReport:
    distances: list
    factors: list
    contraction: float
    no_contraction: bool
    monotone: bool
    small_data: bool


def x_norm(pair: CriticalPair, ell_cfg: EllConfig | None, grid: Grid, times, u_hist, v_hist) -> float:
    """Sup over times of the weighted solution-space norm of (u, v)."""
    n, sigma = pair.n, pair.sigma
    times = np.asarray(times, dtype=float)
    ell = np.ones_like(times) if ell_cfg is None else np.asarray(loss_weight(ell_cfg, times))
    best = 0.0
    for t, e, u, v in zip(times, ell, u_hist, v_hist):
        _, ul2, ulinf, uh1 = field_norms(u, grid)
        _, vl2, vlinf, vh1 = field_norms(v, grid)
        w = 1 + t
        val = (w ** (n / 4 - sigma) * ul2 + w ** (n / 4 + 0.5 - sigma) * uh1 + w ** (n / 2 - sigma) * ulinf) / e
        val += w ** (n / 4) * vl2 + w ** (n / 4 + 0.5) * vh1 + w ** (n / 2) * vlinf
        best = max(best, val)
    return best


def picard_iterate(cfg: SimConfig, iterations: int, T: float) -> PicardReport:
    """Iterate the Duhamel map on [0, T] with trapezoidal history quadrature.

    Distances are computed from the nonlinear parts, since the linear parts
    of consecutive iterates agree exactly.
    """
    grid = cfg.grid()
    h = cfg.dt
    M = int(round(T / h))
    times = h * np.arange(M + 1)
    st = initial_state(cfg, grid)
    hat = [grid.rfft(f.values) for f in (st.u, st.ut, st.v, st.vt)]
    lags = [multipliers(t, grid.xi_abs) for t in times]
    lin_u = np.array([grid.irfft(m["K0"] * hat[0] + m["K1"] * hat[1]) for m in lags])
    lin_v = np.array([grid.irfft(m["K0"] * hat[2] + m["K1"] * hat[3]) for m in lags])
    K1 = np.array([m["K1"] for m in lags])
    ell_cfg = EllConfig.auto(cfg.mu1, cfg.mu2, cfg.pair.q_c, eps=cfg.ell_eps)
    if ell_cfg.regime == "both-converge":
        ell_cfg = None

    def duhamel(F):
        Fh = np.array([grid.rfft(f) for f in F])
        out = np.zeros_like(F)
        for j in range(1, M + 1):
            w = np.full(j + 1, h)
            w[0] = w[-1] = h / 2
            acc = np.einsum("i,ik->k", w, K1[j::-1] * Fh[: j + 1])
            out[j] = grid.irfft(acc)
        return out

    nl_u = np.zeros_like(lin_u)
    nl_v = np.zeros_like(lin_v)
    distances = []
    diverged = False
    for _ in range(iterations):
        u = lin_u + nl_u
        v = lin_v + nl_v
        with np.errstate(over="ignore", invalid="ignore"):
            new_u = duhamel(_source(v, cfg.pair.p_c, cfg.mu1, cfg.clamp))
            new_v = duhamel(_source(u, cfg.pair.q_c, cfg.mu2, cfg.clamp))
            if not (np.all(np.isfinite(new_u)) and np.all(np.isfinite(new_v))):
                # overflow: the iteration has left every bounded set
                distances.append(math.inf)
                diverged = True
                break
            if not distances:
                # first distance: the whole first iterate against the zero start
                d = x_norm(cfg.pair, ell_cfg, grid, times, lin_u + new_u, lin_v + new_v)
            else:
                d = x_norm(cfg.pair, ell_cfg, grid, times, new_u - nl_u, new_v - nl_v)
        distances.append(d)
        nl_u, nl_v = new_u, new_v
    return _picard_report(distances, diverged, cfg.amplitude <= cfg.eps0)


PICARD_FLOOR = 1e-14


def _picard_report(distances, diverged, small_data) -> PicardReport:
    """Contraction statistics; distances below PICARD_FLOOR * d_1 count as converged."""
    floor = PICARD_FLOOR * distances[0] if distances and math.isfinite(distances[0]) else 0.0
    factors = [b / a if a > 0 else 0.0 for a, b in zip(distances, distances[1:])]
    grow = 0
    no_contraction = diverged
    for a, b in zip(distances, distances[1:]):
        grow = grow + 1 if b > a else 0
        if grow >= 3:
            no_contraction = True
    monotone = not diverged and all(b < a or (a <= floor and b <= floor)
                                    for a, b in zip(distances, distances[1:]))
    live = [f for f, a in zip(factors, distances) if a > floor]
    contraction = max(live) if live else 0.0
    return PicardReport(distances, factors, contraction, no_contraction, monotone, small_data)


def zero_mode_oracle(cfg: SimConfig, a0: float, T: float, rtol=1e-12):
    """Spatially constant solution: the ODE system of the zero Fourier mode.

    Initial data: u = v = 0, u_t = v_t = a0 scaled by the slots.
    """
    from scipy.integrate import solve_ivp

    p, q = cfg.pair.p_c, cfg.pair.q_c
    w = cfg.slots

    def rhs(_, y):
        u, ut, v, vt = y
        fu = float(_source(np.array(v), p, cfg.mu1, cfg.clamp))
        fv = float(_source(np.array(u), q, cfg.mu2, cfg.clamp))
        return [ut, fu - ut, vt, fv - vt]

    y0 = [w[0] * a0, w[1] * a0, w[2] * a0, w[3] * a0]
    return solve_ivp(rhs, (0, T), y0, method="DOP853", rtol=rtol, atol=1e-14, dense_output=True)


def with_amplitude(cfg: SimConfig, amplitude: float) -> SimConfig:
    return replace(cfg, amplitude=amplitude)


def manufactured(cfg: SimConfig, grid: Grid, width: float = 1.0):
    """Exact solution u = v = e^-t g(x) with g gaussian, and the forcing it needs.

    Returns (initial state, forcing, exact(t) -> values).
    """
    r2 = (grid.radius / width) ** 2
    g = np.exp(-r2)
    lap_g = (4 * r2 - 2 * grid.n) / width**2 * g
    p, q = cfg.pair.p_c, cfg.pair.q_c

    def forcing(t, _grid):
        e = math.exp(-t)
        w = e * g
        # w_tt + w_t = 0 for e^-t, so only -Lap w remains on the left
        lhs = -e * lap_g
        nl_u = _source(w, p, cfg.mu1, cfg.clamp) if cfg.nonlinear else 0.0
        nl_v = _source(w, q, cfg.mu2, cfg.clamp) if cfg.nonlinear else 0.0
        return lhs - nl_u, lhs - nl_v

    f0 = GridField(grid, g.copy())
    f1 = GridField(grid, -g)
    state = SimState(f0, f1, GridField(grid, g.copy()), GridField(grid, -g), 0.0)
    return state, forcing, lambda t: math.exp(-t) * g
