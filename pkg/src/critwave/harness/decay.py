"""Log-log decay fits and the linear-flow rate checks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from ..errors import InsufficientData
from ..modcont import EllConfig, loss_weight
from ..spectral import Grid, GridField, NormProbe, auto_grid, field_norms, multipliers
from .curve import linear_exponent

TOLERANCE = 0.1


@dataclass
class DecayReport:
    unknown: str
    kind: str
    window: tuple
    exponent: float
    ci: tuple
    predicted: float | None
    compensated: float | None
    verdict: str  # Pass | Fail | NoPrediction
    points: int

    def to_json(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d["ci"] = list(self.ci)
        return d


def fit_power(t, y, ell=None):
    """Slope, stderr and 95% half-width of log y against log(1+t)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if ell is not None:
        y = y / np.asarray(ell, dtype=float)
    x = np.log1p(t)
    res = stats.linregress(x, np.log(y))
    dof = len(t) - 2
    half = float(stats.t.ppf(0.975, dof) * res.stderr) if dof > 0 else math.inf
    return float(res.slope), float(res.stderr), half


def fit_decay(probes, window, unknown: str = "u", kind: str = "l2", predicted: float | None = None,
              ell=None, min_points: int = 20, check_window: bool = True) -> DecayReport:
    """Fit the decay exponent of one norm of one unknown over ``window``.

    ``probes`` is a list of NormProbe or a pair of arrays (t, values).
    ``ell`` (EllConfig or callable of t) divides the norm before a second fit.
    """
    t1, t2 = window
    if check_window and (t1 < 10 or t2 < 10 * t1 * (1 - 1e-12)):
        raise ValueError("fit window must start at t >= 10 and span a decade")
    if isinstance(probes, tuple):
        t, y = (np.asarray(a, dtype=float) for a in probes)
    else:
        rows = [p for p in probes if p.unknown == unknown]
        t = np.array([p.t for p in rows])
        y = np.array([getattr(p, kind) for p in rows])
    m = (t >= t1 * (1 - 1e-12)) & (t <= t2 * (1 + 1e-12))
    t, y = t[m], y[m]
    if len(t) < min_points:
        raise InsufficientData(f"{len(t)} probes in window, need {min_points}")
    if np.any(~(y > 0)):
        raise InsufficientData("norms must be positive in the fit window")
    slope, _, half = fit_power(t, y)
    comp = None
    if ell is not None:
        w = loss_weight(ell, t) if isinstance(ell, EllConfig) else ell(t)
        comp, _, _ = fit_power(t, y, w)
    if predicted is None:
        verdict = "NoPrediction"
    else:
        best = comp if comp is not None else slope
        verdict = "Pass" if abs(best - predicted) <= TOLERANCE else "Fail"
    return DecayReport(unknown, kind, (float(t1), float(t2)), slope, (slope - half, slope + half),
                       predicted, comp, verdict, int(len(t)))


def linear_probes(grid: Grid, w0: np.ndarray, w1: np.ndarray, times) -> list:
    """Norms of the free flow at the given times, straight from the multipliers."""
    h0, h1 = grid.rfft(w0), grid.rfft(w1)
    out = []
    for t in times:
        m = multipliers(t, grid.xi_abs)
        spec = m["K0"] * h0 + m["K1"] * h1
        vals = grid.irfft(spec)
        out.append(NormProbe(float(t), "u", *field_norms(vals, grid, spec)))
    return out


def linear_rate_check(n: int, profile: str = "gaussian", T_max: float | None = None, N: int | None = None,
                    radius: float = 1.0, slots=(0.0, 1.0), count: int = 60, t_start: float = 10.0):
    """Fit L^2, L^inf and gradient-L^2 rates of the linear flow on [t_start, T_max]."""
    from ..solver import data_profile

    T_max = (800.0 if n == 1 else 200.0) if T_max is None else float(T_max)
    sup = radius if profile == "bump" else 6.0 * radius
    grid = auto_grid(n, sup, T_max, N)
    shape = data_profile(grid, profile, radius)
    times = np.geomspace(t_start, T_max, count)
    probes = linear_probes(grid, slots[0] * shape, slots[1] * shape, times)
    reports = {}
    for kind in ("l2", "linf", "h1"):
        reports[kind] = fit_decay(probes, (t_start, T_max), "u", kind, linear_exponent(n, kind))
    return reports, probes, grid
