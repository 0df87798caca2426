"""Concurrent parameter sweeps with a deterministic summary table."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from ..errors import CritwaveError
from ..modcont import classify_dini
from ..solver import SimConfig, simulate
from ..spectral import write_probes_csv
from .curve import predicted_exponents
from .decay import fit_decay

SUMMARY_HEADER = ["name", "n", "p_c", "q_c", "mu1", "mu2", "amplitude", "T_max", "dt", "status", "t_star",
                  "classifier", "u_linf_fit", "u_linf_pred", "v_linf_fit", "v_linf_pred", "decay_verdict",
                  "consistency"]


@dataclass
class SweepSpec:
    runs: list  # (name, SimConfig)
    out_dir: Path
    seed: int = 0
    threads: int = 1
    plots: bool = True

    def validate(self) -> None:
        if not self.runs:
            raise ValueError("sweep has no runs")
        names = [n for n, _ in self.runs]
        if len(set(names)) != len(names):
            raise ValueError("run names must be distinct")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _one(name: str, cfg: SimConfig, out_dir: str) -> dict:
    row = {"name": name, "n": cfg.n, "p_c": cfg.pair.p_c, "q_c": cfg.pair.q_c, "mu1": cfg.mu1.literal(),
           "mu2": cfg.mu2.literal(), "amplitude": cfg.amplitude, "T_max": cfg.T_max, "dt": cfg.dt}
    try:
        row["classifier"] = classify_dini(cfg.mu1, cfg.mu2, cfg.pair.q_c, evidence=False).status
    except CritwaveError as exc:
        row["classifier"] = f"Error:{type(exc).__name__}"
    try:
        out = simulate(cfg)
    except Exception as exc:  # isolate per-run failures
        row["status"] = f"Error:{type(exc).__name__}"
        return row
    row["status"] = out.status
    row["t_star"] = out.t_star
    write_probes_csv(Path(out_dir) / f"{name}_probes.csv", out.probes)
    verdicts = []
    if out.status == "ReachedTmax" and cfg.T_max >= 100:
        for unknown in ("u", "v"):
            pred = predicted_exponents(cfg.pair, unknown, "linf")
            try:
                rep = fit_decay(out.probes, (10.0, cfg.T_max), unknown, "linf", pred)
            except CritwaveError:
                continue
            row[f"{unknown}_linf_fit"] = rep.exponent
            row[f"{unknown}_linf_pred"] = pred
            verdicts.append(rep.verdict)
    row["decay_verdict"] = "/".join(verdicts)
    return row


def _consistency(row: dict, eps0: float) -> str:
    if row.get("classifier") == "Converges" and row["amplitude"] <= eps0 and row.get("status") != "ReachedTmax":
        return "VIOLATION"
    return "ok"


def run_sweep(spec: SweepSpec) -> list[dict]:
    """Run every config, write <name>_probes.csv, summary.csv and plots."""
    spec.validate()
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = [(name, replace(cfg, seed=spec.seed + i)) for i, (name, cfg) in enumerate(spec.runs)]
    if spec.threads > 1:
        with ProcessPoolExecutor(max_workers=spec.threads) as pool:
            rows = list(pool.map(_one, [n for n, _ in runs], [c for _, c in runs], [str(out)] * len(runs)))
    else:
        rows = [_one(n, c, str(out)) for n, c in runs]
    for row, (_, cfg) in zip(rows, runs):
        row["consistency"] = _consistency(row, cfg.eps0)
    write_summary(out / "summary.csv", rows)
    if spec.plots:
        from .plots import sweep_plots

        sweep_plots(out, rows, dict(runs))
    return rows


def write_summary(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for row in rows:
            w.writerow([_fmt(row.get(k)) for k in SUMMARY_HEADER])


def default_threads() -> int:
    return max(1, (os.cpu_count() or 1) // 2)
