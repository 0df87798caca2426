import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critwave.errors import ConfigError, InsufficientData, NoAdmissiblePartner, ParameterError
from critwave.harness.checks import gn_check, convolution_check
from critwave.harness.cli import main
from critwave.harness.config import load_sweep, parse_text, sim_config
from critwave.harness.curve import curve_qc, predicted_exponents
from critwave.harness.decay import fit_decay, linear_rate_check
from critwave.harness.sweep import SUMMARY_HEADER, SweepSpec, run_sweep
from critwave.modcont import CriticalPair, LogPow, Power
from critwave.solver import SimConfig
from critwave.spectral import Grid, GridField

# --- critical curve ---------------------------------------------------------


def test_curve_examples():
    pair = curve_qc(2, 1.5)
    assert pair.q_c == pytest.approx(4.0, rel=1e-15) and pair.sigma == pytest.approx(0.5, rel=1e-15)
    pair = curve_qc(1, 2.5)
    assert pair.q_c == pytest.approx(6.0, rel=1e-15) and pair.sigma == pytest.approx(0.25, rel=1e-15)
    with pytest.raises(NoAdmissiblePartner):
        curve_qc(2, 3.0)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([1, 2]), st.floats(1.01, 4.0))
def test_curve_roundtrip(n, p):
    try:
        pair = curve_qc(n, p)
    except NoAdmissiblePartner:
        return
    q = pair.q_c
    assert abs((1 + q) / (p * q - 1) - n / 2) <= 1e-12
    assert q >= p


def test_predicted_exponents():
    pair = CriticalPair(1, 2.5, 6.0)
    assert predicted_exponents(pair, "u", "linf") == pytest.approx(-0.25)
    assert predicted_exponents(pair, "v", "l2") == pytest.approx(-0.25)
    assert predicted_exponents(pair, "v", "h1") == pytest.approx(-0.75)
    sym = CriticalPair(1, 3.0, 3.0)
    for kind in ("l2", "linf", "h1"):
        assert predicted_exponents(sym, "u", kind) == predicted_exponents(sym, "v", kind)


# --- decay fits -------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(st.floats(-3.0, 0.5))
def test_fit_exact_power_law(a):
    t = np.geomspace(10, 1000, 40)
    rep = fit_decay((t, (1 + t) ** a), (10, 1000), predicted=a)
    assert abs(rep.exponent - a) < 1e-6 and rep.verdict == "Pass"
    assert all(math.isfinite(c) for c in rep.ci)


def test_fit_with_loss_compensation():
    t = np.geomspace(10, 1e4, 60)
    y = (1 + t) ** -0.5 * np.log(math.e + t) ** (2 / 3)
    rep = fit_decay((t, y), (10, 1e4), predicted=-0.5, ell=lambda s: np.log(math.e + s) ** (2 / 3))
    assert abs(rep.compensated + 0.5) < 0.02


def test_fit_rejects_bad_windows():
    t = np.geomspace(10, 1000, 40)
    with pytest.raises(ValueError):
        fit_decay((t, t**-1.0), (5, 1000))
    with pytest.raises(ValueError):
        fit_decay((t, t**-1.0), (10, 50))
    with pytest.raises(InsufficientData):
        fit_decay((t[:10], t[:10] ** -1.0), (10, 1000))
    with pytest.raises(InsufficientData):
        fit_decay((t, np.zeros_like(t)), (10, 1000))


def test_linear_run_l2_rate():
    reports, _, _ = linear_rate_check(1, T_max=800.0, N=4096, t_start=20.0)
    assert abs(reports["l2"].exponent + 0.25) < 0.05


def test_zero_mean_data_decays_faster():
    reports, _, _ = linear_rate_check(1, profile="dgauss", T_max=400.0, N=2048)
    assert reports["l2"].exponent < -0.25 - 0.2


# --- convolution and interpolation checks ----------------------------------


def test_convolution_bound_examples():
    grid = [10.0, 1e2, 1e3, 1e4]
    rep = convolution_check(Power(1), Power(1), 1.0, 0.0, 0.0, 0.0, grid)
    assert rep.passed and rep.sup_ratio <= 2.0 + 1e-9
    rep = convolution_check(Power(1), Power(1), 0.0, 0.0, 0.0, 0.0, grid)
    np.testing.assert_allclose(rep.ratios, 1.0, rtol=1e-9)
    rep = convolution_check(LogPow(2), LogPow(2), 0.5, 1.0, 0.0, 1.0, grid)
    assert rep.passed and np.all(np.isfinite(rep.ratios))


def test_gn_examples():
    g = Grid(1, 40.0, 1024)
    const = GridField(g, np.ones(g.shape))
    rep = gn_check(const, 0, 1, 1 / 4, 4.0, 2.0, 2.0)
    assert rep.lhs > 0 and rep.ratio == math.inf  # flat field has no gradient
    ratios = []
    for lam in (0.5, 0.75, 1.0, 1.5, 2.0):
        f = GridField(g, np.exp(-((lam * g.axis) ** 2)))
        ratios.append(gn_check(f, 0, 1, 1 / 4, 4.0, 2.0, 2.0).ratio)
    assert max(ratios) / min(ratios) - 1 < 0.03
    with pytest.raises(ParameterError):
        gn_check(f, 0, 1, 0.5, 4.0, 2.0, 2.0)


def test_gn_random_fields_bounded():
    g = Grid(1, 20.0, 512)
    rng = np.random.default_rng(5)
    ratios = []
    for _ in range(50):
        spec = g.rfft(rng.standard_normal(g.shape)) * np.exp(-(g.xi_abs**2))
        f = g.irfft(spec) * np.exp(-(g.axis / 8) ** 2)
        ratios.append(gn_check(GridField(g, f), 0, 1, 1 / 4, 4.0, 2.0, 2.0).ratio)
    assert np.all(np.isfinite(ratios)) and max(ratios) < 1.0


# --- configuration ----------------------------------------------------------


def test_parse_text_sections():
    base, sec = parse_text("n = 1 # dim\np_c = 2.5\n[a]\namplitude = 0.1\n[b]\n")
    assert base == {"n": "1", "p_c": "2.5"} and sec == {"a": {"amplitude": "0.1"}, "b": {}}


@pytest.mark.parametrize("text", ["junk", "x = 1\nx = 2", "[a]\n[a]", "= 3", "[]"])
def test_parse_text_errors(text):
    with pytest.raises(ConfigError):
        parse_text(text)


def test_sim_config_from_keys():
    cfg = sim_config({"n": "1", "p_c": "2.5", "mu1": "pow:0.5", "mu2": "pow:0.5", "slots": "0,1,0,1"})
    assert cfg.pair.q_c == pytest.approx(6.0) and cfg.slots == (0.0, 1.0, 0.0, 1.0)
    for bad in ({"n": "1", "p_c": "2.5", "mu1": "pow:0.5"},
                {"n": "1", "p_c": "2.5", "mu1": "pow:0.5", "mu2": "pow:0.5", "colour": "red"},
                {"n": "1", "p_c": "2.5", "mu1": "pow:0.5", "mu2": "pow:0.5", "dt": "fast"},
                {"n": "1", "p_c": "2.5", "mu1": "pow:0.5", "mu2": "pow:0.5", "dt": "-1"}):
        with pytest.raises(ConfigError):
            sim_config(bad)


# --- sweep and CLI ----------------------------------------------------------

SWEEP = """n = 1
p_c = 3
q_c = 3
T_max = 4
dt = 0.1
N = 256
L = 20
slots = 0,1,0,1
[small]
mu1 = pow:0.5
mu2 = pow:0.5
amplitude = 0.01
[large]
mu1 = logpow:1
mu2 = logpow:1
amplitude = 50
profile = random
"""


def test_empty_sweep_rejected(tmp_path):
    with pytest.raises(ValueError):
        run_sweep(SweepSpec([], tmp_path))
    cfg = SimConfig(CriticalPair(1, 3.0, 3.0), Power(1), Power(1))
    with pytest.raises(ValueError):
        run_sweep(SweepSpec([("a", cfg), ("a", cfg)], tmp_path))


def test_sweep_rows_and_determinism(tmp_path):
    cfg_path = tmp_path / "s.cfg"
    cfg_path.write_text(SWEEP)
    runs = load_sweep(cfg_path)
    a = run_sweep(SweepSpec(runs, tmp_path / "a", seed=3, plots=False))
    b = run_sweep(SweepSpec(runs, tmp_path / "b", seed=3, threads=2, plots=False))
    statuses = {r["name"]: r["status"] for r in a}
    assert statuses == {"small": "ReachedTmax", "large": "BlowUpDetected"}
    assert all(r["consistency"] == "ok" for r in a + b)
    sa = (tmp_path / "a" / "summary.csv").read_bytes()
    assert sa == (tmp_path / "b" / "summary.csv").read_bytes()
    assert sa.decode().splitlines()[0] == ",".join(SUMMARY_HEADER)
    for name in ("small", "large"):
        assert (tmp_path / "a" / f"{name}_probes.csv").read_bytes() == (tmp_path / "b" / f"{name}_probes.csv").read_bytes()


def test_cli_smoke(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--out", str(out), "classify", "--mu1", "logpow:1", "--mu2", "logpow:1", "--qc", "5"]) == 0
    assert json.loads((out / "classify.json").read_text())["status"] == "Diverges"
    assert main(["--out", str(out), "curve", "--n", "1", "--p", "2.5"]) == 0
    assert json.loads((out / "curve.json").read_text())["q_c"] == pytest.approx(6.0)
    assert main(["--out", str(out), "curve", "--n", "2", "--p", "3"]) == 1

    cfg = tmp_path / "sim.cfg"
    cfg.write_text("n = 1\np_c = 2.5\nmu1 = pow:0.5\nmu2 = pow:0.5\nT_max = 3\nN = 256\nL = 20\n")
    assert main(["--out", str(out), "simulate", "--config", str(cfg)]) == 0
    obj = json.loads((out / "outcome.json").read_text())
    assert obj["status"] == "ReachedTmax" and (out / "probes.csv").exists() and (out / "probes.svg").exists()
    assert main(["--out", str(out), "picard", "--config", str(cfg), "--iterations", "3", "--T", "2"]) == 0
    assert len(json.loads((out / "picard.json").read_text())["distances"]) == 3

    sweep = tmp_path / "s.cfg"
    sweep.write_text(SWEEP)
    sw = tmp_path / "sweep"
    assert main(["--out", str(sw), "sweep", "--config", str(sweep)]) == 0
    assert main(["--out", str(sw), "report"]) == 0
    assert (sw / "report.md").read_text().startswith("| name |")
    assert main(["--out", str(out), "simulate", "--config", str(tmp_path / "missing.cfg")]) == 1
