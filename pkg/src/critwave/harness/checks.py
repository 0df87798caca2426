"""Numerical checks of the convolution-in-time bound and the interpolation inequality."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import integrate

from ..errors import ParameterError, QuadratureFailure
from ..modcont import Modulus
from ..spectral import GridField


@dataclass
class ConvolutionReport:
    t: np.ndarray
    left: np.ndarray
    right: np.ndarray
    ratios: np.ndarray
    sup_ratio: float
    bound: float
    passed: bool


def _log_weight(mu1, mu2, beta1, beta2, gamma, C):
    def w(tau):
        y = -math.log(C) + gamma * math.log1p(tau)
        out = 0.0
        if beta1:
            out += beta1 * float(mu1.log_value_t(y))
        if beta2:
            out += beta2 * float(mu2.log_value_t(y))
        return math.exp(out)

    return w


def _quad(f, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(f, a, b, limit=400, epsabs=0.0, epsrel=1e-10)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    return val


def convolution_sides(mu1: Modulus, mu2: Modulus, alpha, beta1, beta2, gamma, t, C=None):
    """Both sides of the bound int_0^t (1+t-tau)^-alpha (1+tau)^-1 W(tau) <~ (1+t)^-alpha int_0^t (1+tau)^-1 W."""
    C = min(mu1.smax, mu2.smax) if C is None else C
    w = _log_weight(mu1, mu2, beta1, beta2, gamma, C)
    # logarithmic variables keep the endpoint peaks resolved
    h = t / 2

    def inner(s):  # s = log(1 + tau), tau in [0, t/2]
        tau = math.expm1(s)
        return (1 + t - tau) ** (-alpha) * w(tau)

    def outer(s):  # s = log(1 + t - tau), tau in [t/2, t]
        tau = t - math.expm1(s)
        return (1 + t - tau) ** (1 - alpha) / (1 + tau) * w(tau)

    left = _quad(inner, 0, math.log1p(h)) + _quad(outer, 0, math.log1p(t - h))
    base = _quad(lambda s: w(math.expm1(s)), 0, math.log1p(t))
    return left, (1 + t) ** (-alpha) * base


def convolution_check(mu1: Modulus, mu2: Modulus, alpha: float, beta1: float, beta2: float, gamma: float,
                   t_grid, C: float | None = None, bound: float = 4.0) -> ConvolutionReport:
    if alpha > 1:
        raise ValueError("alpha must be at most 1")
    if min(beta1, beta2, gamma) < 0:
        raise ValueError("beta1, beta2, gamma must be nonnegative")
    t = np.asarray(t_grid, dtype=float)
    sides = np.array([convolution_sides(mu1, mu2, alpha, beta1, beta2, gamma, ti, C) for ti in t])
    ratios = sides[:, 0] / sides[:, 1]
    sup = float(ratios.max())
    return ConvolutionReport(t, sides[:, 0], sides[:, 1], ratios, sup, bound, bool(sup <= bound))


# ---------------------------------------------------------------------------
# interpolation inequality


@dataclass
class InterpolationReport:
    lhs: float
    rhs: float
    ratio: float


def gn_bookkeeping(n, j, m, theta, r, r1, r2) -> float:
    """Residual of j - n/r = (m - n/r1) theta - (n/r2)(1 - theta)."""
    inv = lambda x: 0.0 if math.isinf(x) else 1.0 / x  # noqa: E731
    return (j - n * inv(r)) - ((m - n * inv(r1)) * theta - n * inv(r2) * (1 - theta))


def derivative_magnitude(f: GridField, order: int) -> np.ndarray:
    """Frobenius magnitude of all partial derivatives of the given order."""
    if order == 0:
        return np.abs(f.values)
    g = f.grid
    spec = g.rfft(f.values)
    ks = g._wavenumbers
    total = np.zeros(g.shape)
    for idx in product(range(g.n), repeat=order):
        mult = np.ones_like(spec)
        for axis in idx:
            mult = mult * (1j * ks[axis])
        total += g.irfft(mult * spec) ** 2
    return np.sqrt(total)


def lp_norm(values: np.ndarray, r: float, cell: float) -> float:
    a = np.abs(values)
    if math.isinf(r):
        return float(a.max())
    return float((np.sum(a**r) * cell) ** (1.0 / r))


def gn_check(f: GridField, j: int, m: int, theta: float, r: float, r1: float, r2: float) -> InterpolationReport:
    """||D^j f||_r against ||D^m f||_r1^theta ||f||_r2^(1-theta)."""
    n = f.grid.n
    if abs(gn_bookkeeping(n, j, m, theta, r, r1, r2)) > 1e-12:
        raise ParameterError("exponents violate the scaling relation")
    if not (j / m <= theta <= 1):
        raise ParameterError("need j/m <= theta <= 1")
    cell = f.grid.cell
    lhs = lp_norm(derivative_magnitude(f, j), r, cell)
    rhs = lp_norm(derivative_magnitude(f, m), r1, cell) ** theta * lp_norm(f.values, r2, cell) ** (1 - theta)
    ratio = lhs / rhs if rhs > 0 else (math.inf if lhs > 0 else math.nan)
    return InterpolationReport(lhs, rhs, ratio)
