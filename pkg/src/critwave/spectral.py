"""Periodic-box Fourier engine for the linear damped wave flow.

Each Fourier mode of ``w_tt - Laplace(w) + w_t = 0`` obeys
``m'' + m' + |xi|^2 m = 0``; the multipliers below are its exact solutions
with initial data (1, 0) (``K0``) and (0, 1) (``K1``).
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .errors import GridMismatch, NonFiniteInput

KINDS = ("K0", "K1", "dtK0", "dtK1")

# |1 - 4 xi^2| below this uses the double-root series
DOUBLE_ROOT_GAP = 1e-8

_workers = 1


def set_workers(k: int) -> None:
    """Thread count used by the transforms."""
    global _workers
    _workers = max(1, int(k))


@dataclass(frozen=True)
class Grid:
    """Uniform periodic box [-L, L)^n with N points per axis."""

    n: int
    L: float
    N: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("only n = 1, 2 are supported")
        if self.N < 16 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two >= 16")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def dx(self) -> float:
        return 2 * self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def cell(self) -> float:
        return self.dx**self.n

    @property
    def measure(self) -> float:
        return (2 * self.L) ** self.n

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @cached_property
    def radius(self) -> np.ndarray:
        """|x| on the grid."""
        if self.n == 1:
            return np.abs(self.axis)
        x = self.axis
        return np.sqrt(x[:, None] ** 2 + x[None, :] ** 2)

    @cached_property
    def _wavenumbers(self):
        full = 2 * np.pi * sfft.fftfreq(self.N, d=self.dx)
        half = 2 * np.pi * sfft.rfftfreq(self.N, d=self.dx)
        if self.n == 1:
            return (half,)
        return (full[:, None], half[None, :])

    @cached_property
    def xi_abs(self) -> np.ndarray:
        """|xi| in the layout of ``rfftn`` output."""
        ks = self._wavenumbers
        return np.abs(ks[0]) if self.n == 1 else np.sqrt(ks[0] ** 2 + ks[1] ** 2)

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        """Weights turning sum |F|^2 over the half spectrum into sum |f|^2 * N^n."""
        w = np.full(self.N // 2 + 1, 2.0)
        w[0] = w[-1] = 1.0
        return w if self.n == 1 else np.broadcast_to(w[None, :], (self.N, self.N // 2 + 1))

    def rfft(self, values: np.ndarray) -> np.ndarray:
        return sfft.rfftn(values, workers=_workers)

    def irfft(self, spec: np.ndarray) -> np.ndarray:
        return sfft.irfftn(spec, s=self.shape, workers=_workers)

    def zeros(self) -> "GridField":
        return GridField(self, np.zeros(self.shape))


def auto_grid(n: int, support_radius: float, T_max: float, N: int | None = None) -> Grid:
    """Box large enough that unit-speed propagation cannot wrap before T_max."""
    L = 1.1 * (support_radius + T_max)
    if N is None:
        N = 8192 if n == 1 else 1024
    return Grid(n, float(L), int(N))


@dataclass(frozen=True, eq=False)
class GridField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise GridMismatch(f"values of shape {self.values.shape} on grid {self.grid.shape}")

    def check_finite(self) -> "GridField":
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteInput("field contains NaN or Inf")
        return self


def _require_same_grid(*fields: GridField) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatch("fields live on different grids")
    return grid


# ---------------------------------------------------------------------------
# multipliers


def _series(z, t, odd: bool, terms: int = 24):
    """sum_k z^k t^(2k+o) / (2k+o)!  (cosh/sinh of sqrt(z) t, divided for odd)."""
    term = t if odd else np.ones_like(z * t)
    total = term
    x = z * t * t
    for k in range(1, terms):
        d = (2 * k) * (2 * k + 1) if odd else (2 * k - 1) * (2 * k)
        term = term * x / d
        total = total + term
    return total


def multipliers(t: float, xi_abs) -> dict:
    """All four multipliers K0, K1, dtK0, dtK1 at time t on an array of |xi|."""
    xi = np.asarray(xi_abs, dtype=float)
    t = float(t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    xi2 = xi * xi
    z = 0.25 - xi2
    K0 = np.empty_like(xi)
    K1 = np.empty_like(xi)
    dK1 = np.empty_like(xi)

    real = z > DOUBLE_ROOT_GAP / 4
    cplx = z < -DOUBLE_ROOT_GAP / 4
    dbl = ~(real | cplx)

    if np.any(real):
        r = np.sqrt(z[real])
        lam_p = -xi2[real] / (0.5 + r)
        ep = np.exp(lam_p * t)
        em = np.exp(-(0.5 + r) * t)
        small = 2 * r * t <= 1.0
        k1 = np.where(small, em * np.expm1(np.where(small, 2 * r * t, 0.0)) / (2 * r), (ep - em) / (2 * r))
        K1[real] = k1
        K0[real] = 0.5 * (ep + em) + 0.5 * k1
        dK1[real] = (lam_p * ep + (0.5 + r) * em) / (2 * r)
    if np.any(cplx):
        w = np.sqrt(-z[cplx])
        env = math.exp(-0.5 * t)
        c = np.cos(w * t)
        sn = t * np.sinc(w * t / np.pi)
        K1[cplx] = env * sn
        K0[cplx] = env * (c + 0.5 * sn)
        dK1[cplx] = env * (c - 0.5 * sn)
    if np.any(dbl):
        env = math.exp(-0.5 * t)
        S = _series(z[dbl], t, odd=True)
        C = _series(z[dbl], t, odd=False)
        K1[dbl] = env * S
        K0[dbl] = env * (C + 0.5 * S)
        dK1[dbl] = env * (C - 0.5 * S)
    return {"K0": K0, "K1": K1, "dtK0": -xi2 * K1, "dtK1": dK1}


def kernel_multiplier(t: float, xi_abs, which: str):
    """Fourier multiplier of K0, K1 or their time derivatives."""
    if which not in KINDS:
        raise ValueError(f"which must be one of {KINDS}")
    out = multipliers(t, xi_abs)[which]
    return float(out) if np.ndim(out) == 0 else out


def apply_kernel(f: GridField, t: float, which: str) -> GridField:
    f.check_finite()
    grid = f.grid
    m = kernel_multiplier(t, grid.xi_abs, which)
    return GridField(grid, grid.irfft(m * grid.rfft(f.values)))


def linear_evolve(w0: GridField, w1: GridField, t: float) -> tuple[GridField, GridField]:
    """Exact linear flow: (K0 * w0 + K1 * w1, dtK0 * w0 + dtK1 * w1)."""
    grid = _require_same_grid(w0, w1)
    w0.check_finite()
    w1.check_finite()
    m = multipliers(t, grid.xi_abs)
    h0, h1 = grid.rfft(w0.values), grid.rfft(w1.values)
    w = grid.irfft(m["K0"] * h0 + m["K1"] * h1)
    wt = grid.irfft(m["dtK0"] * h0 + m["dtK1"] * h1)
    return GridField(grid, w), GridField(grid, wt)


# ---------------------------------------------------------------------------
# norms


@dataclass(frozen=True)
class NormProbe:
    t: float
    unknown: str
    l1: float
    l2: float
    linf: float
    h1: float

    def row(self) -> list:
        return [repr(float(self.t)), self.unknown, repr(self.l1), repr(self.l2), repr(self.linf), repr(self.h1)]


PROBE_HEADER = ["t", "unknown", "l1", "l2", "linf", "h1"]


def field_norms(values: np.ndarray, grid: Grid, spec: np.ndarray | None = None) -> tuple:
    """(l1, l2, linf, ||grad||_2) of raw values on ``grid``."""
    a = np.abs(values)
    with np.errstate(over="ignore", invalid="ignore"):
        return _norms(values, a, grid, spec)


def _norms(values, a, grid, spec):
    l1 = float(a.sum() * grid.cell)
    l2 = float(math.sqrt(float(np.sum(values * values)) * grid.cell))
    linf = float(a.max())
    if spec is None:
        spec = grid.rfft(values)
    energy = np.sum(grid.parseval_weights * grid.xi_abs**2 * (spec.real**2 + spec.imag**2))
    h1 = float(math.sqrt(energy * grid.cell / grid.N**grid.n))
    return l1, l2, linf, h1


def norms(f: GridField, t: float = 0.0, unknown: str = "u") -> NormProbe:
    f.check_finite()
    return NormProbe(float(t), unknown, *field_norms(f.values, f.grid))


def write_probes_csv(path, probes) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROBE_HEADER)
        for p in probes:
            w.writerow(p.row())


def read_probes_csv(path) -> list[NormProbe]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [NormProbe(float(r["t"]), r["unknown"], float(r["l1"]), float(r["l2"]),
                      float(r["linf"]), float(r["h1"])) for r in rows]


# ---------------------------------------------------------------------------
# snapshots

_HEADER = struct.Struct("<qqdd")


def save_snapshot(path, f: GridField, t: float, meta: dict | None = None) -> None:
    """Flat little-endian binary (n, N, L, t, values...) plus a JSON sidecar."""
    path = Path(path)
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(g.n, g.N, g.L, float(t)))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    side = {"n": g.n, "N": g.N, "L": g.L, "t": float(t), "dtype": "<f8", "layout": "C"}
    side.update(meta or {})
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(side, indent=2, sort_keys=True))


def load_snapshot(path) -> tuple[GridField, float]:
    raw = Path(path).read_bytes()
    n, N, L, t = _HEADER.unpack_from(raw)
    grid = Grid(int(n), L, int(N))
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(grid.shape).copy()
    return GridField(grid, values), t
