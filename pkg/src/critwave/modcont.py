"""Moduli of continuity built from power and (iterated) logarithm atoms.

A modulus is a finite product of atoms

    Power(a)           s**a
    LogPow(a)          log(1/s)**-a
    IterLogPow(m, a)   L1**-1 * L2**-1 * ... * Lm**-a,   L1 = log(1/s), L(j+1) = log(Lj)

so every modulus has the canonical form ``s**a * prod_j Lj**-e_j``.  All
evaluation goes through ``t = log(1/s)`` which keeps very small arguments
(s well below the float range) representable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureFailure

_ONE_TOL = 1e-12


# ---------------------------------------------------------------------------
# canonical form helpers


def _domain_threshold(depth: int) -> float:
    """Supremum of s for which L1, ..., L_depth are all positive."""
    if depth <= 0:
        return math.inf
    if depth == 1:
        return 1.0
    tower = 0.0  # Ldepth > 0  <=>  L1 > exp^(depth-2)(1)
    for _ in range(depth - 1):
        tower = math.exp(tower)
    return math.exp(-tower)


def _default_smax(depth: int) -> float:
    if depth == 0:
        return 1.0
    if depth <= 2:
        return 0.1
    return _domain_threshold(depth) ** 2


def _log_chain(t, depth: int) -> list:
    """Return [L1, ..., L_depth] for t = log(1/s)."""
    chain = [t]
    for _ in range(depth - 1):
        chain.append(np.log(chain[-1]))
    return chain


def _combine(a: float, e: Sequence[float], b: float, f: Sequence[float], wa=1.0, wb=1.0):
    depth = max(len(e), len(f))
    out = [0.0] * depth
    for j, x in enumerate(e):
        out[j] += wa * x
    for j, x in enumerate(f):
        out[j] += wb * x
    return wa * a + wb * b, tuple(out)


class Modulus:
    """Base class; subclasses provide ``canonical()``."""

    s_max: float | None

    def canonical(self) -> tuple[float, tuple[float, ...]]:
        raise NotImplementedError

    @property
    def depth(self) -> int:
        return len(self.canonical()[1])

    @property
    def smax(self) -> float:
        if self.s_max is not None:
            return self.s_max
        return _default_smax(self.depth)

    def validate(self) -> None:
        a, e = self.canonical()
        if a < 0 or any(x < 0 for x in e):
            raise DomainError(f"{self.literal()}: negative exponent, modulus not increasing")
        if a == 0 and not any(x > 0 for x in e):
            raise DomainError(f"{self.literal()}: constant, not a modulus of continuity")
        thr = _domain_threshold(len(e))
        if not (0 < self.smax < thr):
            raise DomainError(f"{self.literal()}: s_max={self.smax} outside (0, {thr})")

    def log_value_t(self, t):
        """log(mu(exp(-t))) for t >= log(1/s_max)."""
        a, e = self.canonical()
        t = np.asarray(t, dtype=float)
        out = -a * t
        if e:
            for ej, Lj in zip(e, _log_chain(t, len(e))):
                if ej:
                    out = out - ej * np.log(Lj)
        return out

    def log_derivatives_t(self, t):
        """Return (s mu'/mu, s^2 mu''/mu) as functions of t = log(1/s)."""
        a, e = self.canonical()
        t = np.asarray(t, dtype=float)
        h = np.full_like(t, a)
        extra = np.zeros_like(t)
        if e:
            prod = np.ones_like(t)
            inv_sum = np.zeros_like(t)
            for ej, Lj in zip(e, _log_chain(t, len(e))):
                prod = prod * Lj
                inv_sum = inv_sum + 1.0 / prod
                h = h + ej / prod
                extra = extra + ej / prod * inv_sum
        return h, h * h - h + extra

    def __call__(self, s):
        return evaluate(self, s)

    def literal(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.literal()

    def __mul__(self, other: "Modulus") -> "Product":
        return Product(_atoms(self) + _atoms(other))


def _fmt(x: float) -> str:
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


@dataclass(frozen=True)
class Power(Modulus):
    alpha: float
    s_max: float | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"Power exponent must be positive, got {self.alpha}")

    def canonical(self):
        return float(self.alpha), ()

    def literal(self):
        return f"pow:{_fmt(self.alpha)}"


@dataclass(frozen=True)
class LogPow(Modulus):
    alpha: float
    s_max: float | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"LogPow exponent must be positive, got {self.alpha}")

    def canonical(self):
        return 0.0, (float(self.alpha),)

    def literal(self):
        return f"logpow:{_fmt(self.alpha)}"


@dataclass(frozen=True)
class IterLogPow(Modulus):
    """(L1 * ... * L(m-1) * Lm**alpha)**-weight."""

    m: int
    alpha: float
    weight: float = 1.0
    s_max: float | None = None

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"IterLogPow depth must be >= 1, got {self.m}")
        if not (self.alpha > 0 and self.weight > 0):
            raise DomainError("IterLogPow exponents must be positive")

    def canonical(self):
        w = float(self.weight)
        return 0.0, (w,) * (self.m - 1) + (w * self.alpha,)

    def literal(self):
        lit = f"iterlog:{self.m}:{_fmt(self.alpha)}"
        if self.weight != 1.0:
            lit += f"^{_fmt(self.weight)}"
        return lit


@dataclass(frozen=True)
class Product(Modulus):
    factors: tuple = field(default_factory=tuple)
    s_max: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise DomainError("empty product")
        for f in self.factors:
            if isinstance(f, Product):
                raise DomainError("nested products are flattened by the * operator")

    def canonical(self):
        a, e = 0.0, ()
        for f in self.factors:
            a, e = _combine(a, e, *f.canonical())
        return a, e

    @property
    def smax(self) -> float:
        if self.s_max is not None:
            return self.s_max
        return min([_default_smax(self.depth)] + [f.smax for f in self.factors if f.s_max is not None])

    def literal(self):
        return "*".join(f.literal() for f in self.factors)


def _atoms(mu: Modulus) -> tuple:
    return mu.factors if isinstance(mu, Product) else (mu,)


def parse_modulus(text: str, s_max: float | None = None) -> Modulus:
    """Parse ``pow:0.5``, ``logpow:1.5``, ``iterlog:2:1.0`` joined by ``*``.

    An atom may carry an outer exponent as ``iterlog:2:3^0.25``.
    """
    atoms = []
    for chunk in text.strip().split("*"):
        chunk = chunk.strip()
        weight = 1.0
        if "^" in chunk:
            chunk, w = chunk.split("^", 1)
            weight = float(w)
        kind, _, rest = chunk.partition(":")
        args = rest.split(":") if rest else []
        try:
            if kind == "pow" and len(args) == 1:
                atoms.append(Power(float(args[0]) * weight))
            elif kind == "logpow" and len(args) == 1:
                atoms.append(LogPow(float(args[0]) * weight))
            elif kind == "iterlog" and len(args) == 2:
                atoms.append(IterLogPow(int(args[0]), float(args[1]), weight))
            else:
                raise DomainError(f"cannot parse modulus atom {chunk!r}")
        except ValueError as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"cannot parse modulus atom {chunk!r}") from exc
    mu = atoms[0] if len(atoms) == 1 else Product(tuple(atoms))
    if s_max is not None:
        mu = with_smax(mu, s_max)
    mu.validate()
    return mu


def with_smax(mu: Modulus, s_max: float) -> Modulus:
    from dataclasses import replace

    out = replace(mu, s_max=float(s_max))
    out.validate()
    return out


# ---------------------------------------------------------------------------
# evaluation


def _to_t(mu: Modulus, s, allow_clamp=False):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(~np.isfinite(s)):
        raise DomainError("modulus argument must be finite and nonnegative")
    smax = mu.smax
    if not allow_clamp and np.any(s > smax * (1 + 1e-12)):
        raise DomainError(f"argument exceeds s_max={smax} of {mu.literal()}")
    pos = s > 0
    t = np.where(pos, -np.log(np.where(pos, np.minimum(s, smax), 1.0)), np.inf)
    return s, pos, t


def evaluate(mu: Modulus, s):
    """mu(s), exactly 0 at s = 0.  Scalars in, float out."""
    s_arr, pos, t = _to_t(mu, s)
    out = np.zeros_like(s_arr)
    if np.any(pos):
        out[pos] = np.exp(mu.log_value_t(t[pos]))
    return float(out) if out.ndim == 0 else out


def eval_clamped(mu: Modulus, s):
    """mu(min(s, s_max)): the modulus frozen at mu(s_max) above its domain."""
    s_arr, pos, t = _to_t(mu, s, allow_clamp=True)
    out = np.zeros_like(s_arr)
    if np.any(pos):
        out[pos] = np.exp(mu.log_value_t(t[pos]))
    return float(out) if out.ndim == 0 else out


def deriv(mu: Modulus, s, order: int = 1):
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    s_arr, pos, t = _to_t(mu, s)
    if not np.all(pos):
        raise DomainError("derivatives are taken at s > 0 only")
    val = np.exp(mu.log_value_t(t))
    h1, h2 = mu.log_derivatives_t(t)
    out = val * h1 / s_arr if order == 1 else val * h2 / s_arr**2
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# hypothesis checks


@dataclass
class StarReport:
    sup_ratio: float
    passed: bool
    threshold: float


def check_star(mu: Modulus, sample_grid, threshold: float = 10.0) -> StarReport:
    """Uniform bound of s mu'(s) / mu(s) over the sample grid."""
    s = np.asarray(sample_grid, dtype=float)
    if np.any(s <= 0):
        raise DomainError("grid points must be positive")
    _, _, t = _to_t(mu, s)
    h, _ = mu.log_derivatives_t(t)
    sup = float(np.max(np.abs(h)))
    return StarReport(sup, bool(np.isfinite(sup) and sup <= threshold), threshold)


@dataclass
class LittleOReport:
    ratios: list
    decreasing: bool
    limit_estimate: float
    passed: bool


def check_littleo(mu: Modulus, order: int, s_sequence, tol: float = 0.01) -> LittleOReport:
    """Evidence that s^k mu^(k)(s) = o(mu(s)) as s -> 0.

    Ratios must decrease strictly along the sequence, and either the last
    ratio or its extrapolation to s = 0 must fall below ``tol``.  The
    extrapolation is a least-squares quadratic in 1/log(1/s), the natural
    variable of the logarithmic families.
    """
    s = np.asarray(s_sequence, dtype=float)
    if np.any(np.diff(s) >= 0):
        raise DomainError("s_sequence must be strictly decreasing")
    _, _, t = _to_t(mu, s)
    h1, h2 = mu.log_derivatives_t(t)
    ratios = np.abs(h1 if order == 1 else h2)
    decreasing = bool(np.all(np.diff(ratios) < 0))
    x = 1.0 / t
    deg = min(2, len(s) - 1)
    limit = float(np.polyval(np.polyfit(x, ratios, deg), 0.0)) if deg >= 1 else float(ratios[-1])
    small = ratios[-1] < tol or abs(limit) < tol
    return LittleOReport(ratios.tolist(), decreasing, limit, bool(decreasing and small))


@dataclass
class ConvexityReport:
    passed: bool
    min_second_difference: float
    grid_size: int


def _phi_values(mu: Modulus, p: float, s):
    return np.asarray(s, dtype=float) ** p * evaluate(mu, s)


def convexity_check(mu: Modulus, p: float, c0: float, grid_size: int = 1000) -> ConvexityReport:
    """Nonnegative second differences of s^p mu(s) on a uniform grid of [0, c0]."""
    if c0 > mu.smax * (1 + 1e-12):
        raise DomainError(f"c0={c0} exceeds s_max={mu.smax}")
    s = np.linspace(0.0, c0, grid_size + 1)
    phi = _phi_values(mu, p, s)
    d2 = phi[:-2] - 2 * phi[1:-1] + phi[2:]
    scale = np.maximum(np.abs(phi[:-2]), np.abs(phi[2:]))
    ok = bool(np.all(d2 >= -1e-12 * scale))
    return ConvexityReport(ok, float(d2.min()), grid_size)


# ---------------------------------------------------------------------------
# Dini integrals


def _integrand_t(mu1, mu2, beta1, beta2):
    def f(t):
        acc = 0.0
        if beta1:
            acc += beta1 * mu1.log_value_t(t)
        if beta2:
            acc += beta2 * mu2.log_value_t(t)
        return math.exp(float(acc))

    return f


def _quad(f, a, b, tol, limit):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err, info = integrate.quad(f, a, b, epsabs=tol, epsrel=0.0, limit=limit, full_output=1)[:3]
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc).splitlines()[0]) from exc
    if not err <= tol:
        raise QuadratureFailure(f"estimated error {err:.3g} above tolerance {tol:.3g}")
    return val, err, info["neval"]


def dini_integral(mu1: Modulus, mu2: Modulus, beta1: float, beta2: float, c: float, eps: float,
                  tol: float = 1e-8, budget: int = 10**6) -> float:
    """Integral of mu1(s)**beta1 * mu2(s)**beta2 / s over [eps, c].

    Computed in t = log(1/s) where the integrand is slowly varying, with
    adaptive Gauss-Kronrod panels on a dyadic partition of t.  ``eps = 0``
    requests the improper integral.
    """
    return dini_integral_report(mu1, mu2, beta1, beta2, c, eps, tol, budget)[0]


def dini_integral_report(mu1, mu2, beta1, beta2, c, eps, tol=1e-8, budget=10**6):
    """Like ``dini_integral`` but returns (value, error_estimate, evaluations)."""
    if beta1 < 0 or beta2 < 0:
        raise DomainError("exponents beta must be nonnegative")
    cap = min(m.smax for m, b in ((mu1, beta1), (mu2, beta2)) if b) if (beta1 or beta2) else math.inf
    if not (0 <= eps < c) or c > cap * (1 + 1e-12):
        raise DomainError(f"need 0 <= eps < c <= {cap}")
    f = _integrand_t(mu1, mu2, beta1, beta2)
    t0 = -math.log(c)
    t1 = math.inf if eps == 0 else -math.log(eps)
    if not (beta1 or beta2):
        if eps == 0:
            raise QuadratureFailure("integral of ds/s over (0, c] diverges")
        return t1 - t0, 0.0, 0
    edges = [t0]
    step = max(t0, 1.0)
    while edges[-1] + step < min(t1, 2.0**40 * max(t0, 1.0)):
        edges.append(edges[-1] + step)
        step *= 2.0
    if t1 != edges[-1]:
        edges.append(t1)
    pieces = len(edges) - 1
    limit = max(50, budget // (21 * pieces))
    total, err, neval = 0.0, 0.0, 0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e, n = _quad(f, a, b, tol / pieces, limit)
        total, err, neval = total + v, err + e, neval + n
        if neval > budget:
            raise QuadratureFailure(f"evaluation budget {budget} exhausted")
    return total, err, neval


# ---------------------------------------------------------------------------
# classification


@dataclass
class DiniVerdict:
    status: str  # "Converges" | "Diverges" | "Unknown"
    analytic_rule_used: str
    numeric_estimate: float | None = None
    evidence: list = field(default_factory=list)
    trend: str = "not computed"  # "bounded" | "growing" | "inconclusive"

    @property
    def contradicts_evidence(self) -> bool:
        return (self.status == "Converges" and self.trend == "growing") or (
            self.status == "Diverges" and self.trend == "bounded"
        )

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "rule": self.analytic_rule_used,
            "estimate": self.numeric_estimate,
            "evidence": self.evidence,
            "trend": self.trend,
        }


def middle_weights(q_c: float) -> tuple[float, float]:
    return q_c / (q_c + 1.0), 1.0 / (q_c + 1.0)


def _middle_canonical(mu1, mu2, q_c):
    w1, w2 = middle_weights(q_c)
    return _combine(*mu1.canonical(), *mu2.canonical(), wa=w1, wb=w2)


def _rule(a: float, e: tuple) -> tuple[str, str, int]:
    """Bertrand-type rule on the canonical exponents; returns (status, text, level)."""
    if a > 0:
        return "Converges", f"power factor s^{a:.6g} with positive exponent", 0
    for j, ej in enumerate(e, start=1):
        if abs(ej - 1.0) > _ONE_TOL:
            status = "Converges" if ej > 1 else "Diverges"
            rel = ">" if ej > 1 else "<"
            return status, f"weighted exponent of log^({j}) is {ej:.6g} {rel} 1 (lower levels equal 1)", j
    return "Diverges", f"weighted exponents equal 1 through log^({len(e)}) (equality case)", len(e)


def _evidence(a, e, level, c, ladder=30):
    """Partial integrals along a geometric ladder of the deciding log variable.

    Level 0 uses eps = c 2^-j (dyadic shrinkage of s).  Level k >= 1 doubles
    y = L_k(eps), in which the integrand behaves like y**-e_k.
    """
    depth = len(e)

    def chain_from(level_k, y):
        # rebuild L1..L_depth from L_k = y
        up = [y]
        for _ in range(level_k - 1):
            up.append(math.exp(up[-1]))
        chain = up[::-1]
        while len(chain) < depth:
            chain.append(math.log(chain[-1]))
        return chain

    if level == 0:
        def g(t):
            acc = -a * t
            for ej, Lj in zip(e, _log_chain(t, depth) if depth else []):
                acc -= ej * math.log(Lj)
            return math.exp(acc)
        t0 = -math.log(c)
        nodes = [t0 + j * math.log(2.0) for j in range(ladder + 1)]
        ratio = 2.0
        ys = nodes
    else:
        def g(y):
            chain = chain_from(level, y)
            acc = 0.0
            for j, Lj in enumerate(chain, start=1):
                acc -= e[j - 1] * math.log(Lj)
                if j < level:
                    acc += math.log(Lj)
            return math.exp(acc)
        y0 = _log_chain(np.array(-math.log(c)), level)[-1].item()
        ymax = 1e15 if level == 1 else 700.0
        for _ in range(level - 2):
            ymax = math.log(ymax)
        ratio = 2.0 if y0 * 2.0**ladder <= ymax else (ymax / y0) ** (1.0 / 10)
        count = ladder if ratio == 2.0 else 10
        ys = [y0 * ratio**j for j in range(count + 1)]
    partial, incs = 0.0, []
    evidence = []
    for lo, hi in zip(ys[:-1], ys[1:]):
        inc = integrate.quad(g, lo, hi, epsabs=0.0, epsrel=1e-10, limit=200)[0]
        incs.append(inc)
        partial += inc
        if level <= 1:
            log_inv_eps = hi
        else:
            log_inv_eps = chain_from(level, hi)[0]
        evidence.append({"log_inv_eps": log_inv_eps, "partial": partial})
    kappa = [math.log(incs[i] / incs[i + 1]) / math.log(ratio) for i in range(len(incs) - 1)
             if incs[i] > 0 and incs[i + 1] > 0]
    tail = kappa[-4:]
    if len(tail) < 4:
        trend = "inconclusive"
    elif all(k >= 0.05 for k in tail):
        trend = "bounded"
    elif all(k <= 0.01 for k in tail):
        trend = "growing"
    else:
        trend = "inconclusive"
    return partial, evidence, trend


def classify_dini(mu1: Modulus, mu2: Modulus, q_c: float, c: float | None = None,
                  evidence: bool = True) -> DiniVerdict:
    """Convergence of the integral of mu1^(q/(q+1)) mu2^(1/(q+1)) / s near 0.

    The verdict comes from exponent arithmetic on the shared logarithmic
    scale; dyadic partial integrals are attached as numeric evidence.
    """
    c = min(mu1.smax, mu2.smax) if c is None else c
    try:
        a, e = _middle_canonical(mu1, mu2, q_c)
        status, text, level = _rule(a, e)
    except NotImplementedError as exc:
        status, text, level = "Unknown", f"no rule applies ({exc})", None
    verdict = DiniVerdict(status, text)
    if evidence and level is not None:
        est, ev, trend = _evidence(a, e, level, c)
        verdict.numeric_estimate, verdict.evidence, verdict.trend = est, ev, trend
        if status == "Unknown":
            verdict.status = {"bounded": "Converges", "growing": "Diverges"}.get(trend, "Unknown")
    return verdict


def classify_single(mu: Modulus, c: float | None = None, evidence: bool = False) -> DiniVerdict:
    """Convergence of the integral of mu(s)/s near 0."""
    return classify_dini(mu, mu, 1.0, c, evidence)


def middle_modulus(mu1: Modulus, mu2: Modulus, q_c: float) -> Modulus:
    """The product mu1^(q/(q+1)) * mu2^(1/(q+1)) as a modulus expression."""
    if mu1 == mu2:
        return mu1
    w1, w2 = middle_weights(q_c)
    powers, logs, iters = 0.0, 0.0, {}
    for w, mu in ((w1, mu1), (w2, mu2)):
        for atom in _atoms(mu):
            if isinstance(atom, Power):
                powers += w * atom.alpha
            elif isinstance(atom, LogPow):
                logs += w * atom.alpha
            else:
                wt, num = iters.get(atom.m, (0.0, 0.0))
                iters[atom.m] = (wt + w * atom.weight, num + w * atom.weight * atom.alpha)
    atoms = []
    if powers > 0:
        atoms.append(Power(powers))
    if logs > 0:
        atoms.append(LogPow(logs))
    for m in sorted(iters):
        wt, num = iters[m]
        weight = 1.0 if abs(wt - 1.0) < _ONE_TOL else wt
        atoms.append(IterLogPow(m, num / wt, weight))
    smax = min(mu1.smax, mu2.smax)
    out = atoms[0] if len(atoms) == 1 else Product(tuple(atoms))
    if smax != out.smax:
        out = with_smax(out, smax)
    return out


# ---------------------------------------------------------------------------
# critical pair and loss weight


@dataclass(frozen=True)
class CriticalPair:
    """Exponents (p_c, q_c) on the critical curve (1 + q)/(p q - 1) = n/2."""

    n: int
    p_c: float
    q_c: float

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("space dimension must be 1 or 2")
        if not (1 < self.p_c <= self.q_c):
            raise ValueError("need 1 < p_c <= q_c")
        lhs = (1 + self.q_c) / (self.p_c * self.q_c - 1)
        if abs(lhs - self.n / 2) > 1e-12 * (self.n / 2):
            raise ValueError(f"({self.p_c}, {self.q_c}) is not on the critical curve for n={self.n}")

    @property
    def sigma(self) -> float:
        return (self.q_c - self.p_c) / (self.p_c * self.q_c - 1)


@dataclass(frozen=True)
class EllConfig:
    mu1: Modulus
    mu2: Modulus
    q_c: float
    eps: float = 0.01
    c: float = 0.1
    regime: str = "mixed"  # or "both-converge"

    @classmethod
    def auto(cls, mu1, mu2, q_c, eps=0.01, c=None):
        c = min(mu1.smax, mu2.smax) if c is None else c
        both = all(classify_single(m, c).status == "Converges" for m in (mu1, mu2))
        return cls(mu1, mu2, q_c, eps, c, "both-converge" if both else "mixed")


def loss_weight(cfg: EllConfig, t):
    """The weight ell(t) multiplying the decay rates of u."""
    t = np.asarray(t, dtype=float)
    if cfg.regime == "both-converge":
        out = np.ones_like(t)
    else:
        log_inv = -math.log(cfg.c) + cfg.eps * np.log1p(t)
        if np.any(log_inv < -math.log(min(cfg.mu1.smax, cfg.mu2.smax)) * (1 - 1e-12)):
            raise DomainError("c (1+t)^-eps outside the moduli domains")
        out = np.exp((cfg.mu1.log_value_t(log_inv) - cfg.mu2.log_value_t(log_inv)) / (cfg.q_c + 1))
    return float(out) if out.ndim == 0 else out


@dataclass
class WeightReport:
    passed: bool
    increasing: bool
    bounded: bool
    sup_bound_ratio: float
    eps_limit: float
    precondition_ok: bool


def weight_monotonicity_check(cfg: EllConfig, pair: CriticalPair, t_grid) -> WeightReport:
    """(1+t)^sigma ell(t) nondecreasing and (1+t)^(eps-(1+p)/(pq-1)) ell(t) nonincreasing.

    The second condition is the bound (1+t)^-((1+p)/(pq-1)) ell(t) <= C (1+t)^-eps
    with the constant C = ell(0) fixed at the left end of the grid.
    """
    t = np.sort(np.asarray(t_grid, dtype=float))
    ell = loss_weight(cfg, t)
    f = (1 + t) ** pair.sigma * ell
    gamma = (1 + pair.p_c) / (pair.p_c * pair.q_c - 1)
    h = (1 + t) ** (cfg.eps - gamma) * ell
    tol = 1e-12
    increasing = bool(np.all(np.diff(f) >= -tol * f[1:]))
    bounded = bool(np.all(h[1:] <= h[0] * (1 + tol)))
    s_grid = cfg.c * np.logspace(-12, 0, 200)
    c_star = check_star(cfg.mu1, s_grid).sup_ratio
    limit = math.inf if c_star == 0 else (pair.q_c - pair.p_c) * (pair.q_c + 1) / (c_star * (pair.p_c * pair.q_c - 1))
    return WeightReport(increasing and bounded, increasing, bounded, float(np.max(h / h[0])),
                        limit, bool(cfg.eps < limit))
