"""Command-line entry point: ``critwave <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import spectral
from ..blowup import g_and_G, jensen_check, ode_inequality_check, r_ladder
from ..errors import CritwaveError
from ..modcont import classify_dini, parse_modulus
from ..solver import picard_iterate, simulate
from ..spectral import write_probes_csv
from .config import load_sim_config, load_sweep
from .curve import curve_qc, predicted_exponents
from .decay import linear_rate_check
from .plots import probe_plot
from .sweep import SweepSpec, run_sweep


def _emit(obj, out: Path | None, name: str) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_jsonable)
    if out is not None:
        (out / name).write_text(text + "\n")
    print(text)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def cmd_classify(a, out):
    v = classify_dini(parse_modulus(a.mu1), parse_modulus(a.mu2), a.qc, c=a.c, evidence=not a.no_evidence)
    _emit(v.to_json(), out, "classify.json")


def cmd_curve(a, out):
    pair = curve_qc(a.n, a.p)
    res = {"n": pair.n, "p_c": pair.p_c, "q_c": pair.q_c, "sigma": pair.sigma,
           "predicted": {f"{u}_{k}": predicted_exponents(pair, u, k) for u in "uv" for k in ("l2", "linf", "h1")}}
    _emit(res, out, "curve.json")


def cmd_linear_decay(a, out):
    reports, probes, grid = linear_rate_check(a.n, a.profile, a.T, a.N)
    write_probes_csv(out / "linear_probes.csv", probes)
    res = {"n": a.n, "L": grid.L, "N": grid.N, "T_max": a.T or probes[-1].t,
           "reports": {k: r.to_json() for k, r in reports.items()}}
    _emit(res, out, "linear_decay.json")


def _load(a):
    cfg = load_sim_config(a.config)
    if a.seed is not None:
        cfg = replace(cfg, seed=a.seed)
    return cfg


def cmd_simulate(a, out):
    cfg = _load(a)
    res = simulate(cfg)
    probes_path = out / "probes.csv"
    write_probes_csv(probes_path, res.probes)
    if not a.no_plot:
        probe_plot(out / "probes.svg", res.probes, cfg.pair, res.status)
    obj = {"status": res.status, "probes_csv_path": str(probes_path), "config_echo": cfg.echo(),
           "wall_time_s": res.wall_time}
    if res.t_star is not None:
        obj["t_star"] = res.t_star
    if res.t_fail is not None:
        obj["t_fail"] = res.t_fail
    _emit(obj, out, "outcome.json")
    return 0


def cmd_picard(a, out):
    cfg = _load(a)
    rep = picard_iterate(cfg, a.iterations, a.T)
    _emit({"distances": rep.distances, "factors": rep.factors, "contraction": rep.contraction,
           "no_contraction": rep.no_contraction, "monotone": rep.monotone, "small_data": rep.small_data,
           "config_echo": cfg.echo()}, out, "picard.json")


def cmd_blowup_scan(a, out):
    cfg = _load(a)
    R0, ratio, count = (float(x) for x in a.ladder.split(","))
    ladder = r_ladder(R0, ratio, int(count))
    every = cfg.snapshot_every or 0.1
    # the last snapshot must land at or beyond the top of the ladder
    horizon = math.ceil((ladder[-1] * 1.02) ** 2 / every + 1) * every
    cfg = replace(cfg, T_max=max(cfg.T_max, horizon), snapshot_every=every)
    res = simulate(cfg)
    obj = {"status": res.status, "config_echo": cfg.echo()}
    if res.status != "ReachedTmax":
        obj["t_star"] = res.t_star
        obj["note"] = "trajectory ended early; the ledger needs the full horizon"
        _emit(obj, out, "blowup_scan.json")
        return 1
    ledger = g_and_G(res.trajectory, cfg.pair, cfg.mu1, cfg.mu2, R_ladder=ladder)
    rep = ode_inequality_check(ledger, cfg.pair, cfg.mu1, cfg.mu2, C0=a.C0)
    ledger.write_csv(out / "ledger.csv")
    jen = jensen_check(res.trajectory, cfg.pair, cfg.mu2, float(ladder[-1]))
    obj.update({"inequality": rep.status, "C_emp": rep.C_emp, "C0": rep.C0,
                "C0_sensitivity": {str(k): v for k, v in rep.sensitivity.items()},
                "max_derivative_residual": ledger.max_residual(),
                "jensen": {"applicable": jen.applicable, "checked": jen.checked, "violations": jen.violations},
                "ledger_csv_path": str(out / "ledger.csv")})
    _emit(obj, out, "blowup_scan.json")


def cmd_sweep(a, out):
    runs = load_sweep(a.config)
    spec = SweepSpec(runs, out, seed=a.seed or 0, threads=a.threads, plots=not a.no_plot)
    rows = run_sweep(spec)
    flagged = [r["name"] for r in rows if r.get("consistency") == "VIOLATION"]
    for name in flagged:
        print(f"CONSISTENCY VIOLATION: {name}", file=sys.stderr)
    print(f"{len(rows)} runs written to {out / 'summary.csv'}")
    return 2 if flagged else 0


def cmd_report(a, out):
    src = Path(a.dir) if a.dir else out
    path = src / "summary.csv"
    if not path.exists():
        raise CritwaveError(f"no summary.csv in {src}")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = ["name", "status", "classifier", "u_linf_fit", "u_linf_pred", "v_linf_fit", "v_linf_pred",
            "decay_verdict", "consistency"]
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for r in rows:
        lines.append("| " + " | ".join(_short(r.get(c, "")) for c in cols) + " |")
    text = "\n".join(lines) + "\n"
    (src / "report.md").write_text(text)
    print(text, end="")


def _short(s: str) -> str:
    try:
        return f"{float(s):.4g}"
    except ValueError:
        return s


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="critwave", description="Coupled damped wave experiments.")
    p.add_argument("--out", default="out", help="output directory (created if missing)")
    p.add_argument("--threads", type=int, default=1, help="worker threads/processes")
    p.add_argument("--seed", type=int, default=None, help="seed for random data profiles")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", help="Dini verdict for a pair of moduli")
    s.add_argument("--mu1", required=True)
    s.add_argument("--mu2", required=True)
    s.add_argument("--qc", type=float, required=True)
    s.add_argument("--c", type=float, default=None)
    s.add_argument("--no-evidence", action="store_true")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("curve", help="critical partner and predicted rates")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.set_defaults(func=cmd_curve)

    s = sub.add_parser("linear-decay", help="fit decay rates of the free flow")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--T", type=float, default=None)
    s.add_argument("--N", type=int, default=None)
    s.add_argument("--profile", default="gaussian")
    s.set_defaults(func=cmd_linear_decay)

    s = sub.add_parser("simulate", help="run the nonlinear system")
    s.add_argument("--config", required=True)
    s.add_argument("--no-plot", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("picard", help="Picard iterates of the Duhamel map")
    s.add_argument("--config", required=True)
    s.add_argument("--iterations", type=int, default=6)
    s.add_argument("--T", type=float, default=10.0)
    s.set_defaults(func=cmd_picard)

    s = sub.add_parser("blowup-scan", help="test-function ledger on one trajectory")
    s.add_argument("--config", required=True)
    s.add_argument("--ladder", default="4,1.25,6", help="R0,ratio,count")
    s.add_argument("--C0", type=float, default=None)
    s.set_defaults(func=cmd_blowup_scan)

    s = sub.add_parser("sweep", help="run a sectioned config concurrently")
    s.add_argument("--config", required=True)
    s.add_argument("--no-plot", action="store_true")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("report", help="tabulate a sweep summary")
    s.add_argument("--dir", default=None)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spectral.set_workers(args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        code = args.func(args, out)
    except CritwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
