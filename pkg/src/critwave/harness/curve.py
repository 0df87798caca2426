"""Critical-curve utilities and the decay rates predicted on it."""

from __future__ import annotations

from ..errors import NoAdmissiblePartner
from ..modcont import CriticalPair

NORM_KINDS = ("l2", "linf", "h1")


def curve_qc(n: int, p_c: float) -> CriticalPair:
    """Partner q_c >= p_c with (1 + q)/(p q - 1) = n/2."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    if not p_c > 1:
        raise ValueError("p_c must exceed 1")
    den = n * p_c - 2
    if den <= 0:
        raise NoAdmissiblePartner(f"no finite partner for p_c={p_c} in n={n}")
    q = (n + 2) / den
    if q <= 1 or q < p_c * (1 - 1e-14):
        raise NoAdmissiblePartner(f"solved q={q:g} is not an admissible partner of p_c={p_c}")
    return CriticalPair(n, float(p_c), float(max(q, p_c)))


def fujita(n: int) -> float:
    return 1 + 2 / n


def predicted_exponents(pair: CriticalPair, unknown: str, kind: str, k: int | None = None) -> float:
    """Decay exponent of the given norm; u carries the loss sigma, v does not.

    ``kind`` is l2, linf or h1 (the gradient in L^2, i.e. k = 1).
    """
    if unknown not in ("u", "v"):
        raise ValueError("unknown must be 'u' or 'v'")
    if kind not in NORM_KINDS:
        raise ValueError(f"kind must be one of {NORM_KINDS}")
    n = pair.n
    if kind == "linf":
        base = -n / 2
    else:
        k = (1 if kind == "h1" else 0) if k is None else k
        base = -n / 4 - k / 2
    return base + (pair.sigma if unknown == "u" else 0.0)


def linear_exponent(n: int, kind: str) -> float:
    """Rates of the free damped wave flow."""
    return {"l2": -n / 4, "linf": -n / 2, "h1": -n / 4 - 0.5}[kind]
