import csv
import io
import json

import numpy as np
import pytest

from almgvar import cli
from almgvar.gvar import parse_trace_csv
from almgvar.market_data import parse_returns_csv


def _write_prices(path, n=700, seed=7):
    """Calm random walk with a crash and a volatile stretch in the middle."""
    rng = np.random.default_rng(seed)
    sig = np.full(n, 0.008)
    sig[300:360] = 0.035
    r = sig * rng.standard_normal(n)
    r[320] -= 0.09
    closes = 1000 * np.exp(np.cumsum(r))
    start = np.datetime64("2015-01-01")
    lines = ["date,close"] + [f"{start + i},{c:.4f}" for i, c in enumerate(closes)]
    path.write_text("\n".join(lines) + "\n")


def _config(tmp_path, body):
    p = tmp_path / "run.yaml"
    p.write_text(body)
    return p


@pytest.fixture
def analyzed(tmp_path):
    _write_prices(tmp_path / "px.csv")
    cfg = _config(tmp_path, "alpha: 1/20\nseries:\n  - {name: spx, path: px.csv, preset: sp500}\noutput: out\n")
    return tmp_path, cfg


def test_analyze_outputs_exist_and_parse(analyzed):
    tmp, cfg = analyzed
    assert cli.main(["analyze", "--config", str(cfg)]) == 0
    out = tmp / "out"
    names = {p.name for p in out.iterdir()}
    assert names == {
        "spx_returns.csv", "spx_uncertainty.csv", "spx_gvar.csv", "spx_signals.csv",
        "spx_signals.json", "analyze_summary.json",
    }
    ret = parse_returns_csv((out / "spx_returns.csv").read_text())
    assert len(ret) == (700 - 1 - 2) // 2 + 1
    rows = list(csv.DictReader(io.StringIO((out / "spx_uncertainty.csv").read_text())))
    assert len(rows) == len(ret) - 20 + 1
    trace = parse_trace_csv((out / "spx_gvar.csv").read_text())
    assert len(trace) == len(ret) - 20
    assert all(r["g_var"] == -r["q"] for r in trace)
    sig_csv = list(csv.DictReader(io.StringIO((out / "spx_signals.csv").read_text())))
    sig_json = json.loads((out / "spx_signals.json").read_text())
    assert len(sig_csv) == len(sig_json) > 0
    assert [r["indicator"] for r in sig_csv] == [r["indicator"] for r in sig_json]
    summary = json.loads((out / "analyze_summary.json").read_text())
    assert summary["spx"]["scored"] == len(trace)


def test_analyze_is_byte_identical(analyzed, tmp_path):
    tmp, cfg = analyzed
    cli.main(["analyze", "--config", str(cfg), "--output", str(tmp / "a")])
    cli.main(["analyze", "--config", str(cfg), "--output", str(tmp / "b")])
    for p in (tmp / "a").iterdir():
        assert p.read_bytes() == (tmp / "b" / p.name).read_bytes()


def test_missing_input_exit_2_without_outputs(tmp_path):
    cfg = _config(tmp_path, "series:\n  - {name: x, path: nope.csv, preset: sp500}\noutput: out\n")
    assert cli.main(["analyze", "--config", str(cfg)]) == 2
    assert not (tmp_path / "out").exists()


def test_one_bad_series_writes_nothing(tmp_path):
    _write_prices(tmp_path / "px.csv")
    cfg = _config(
        tmp_path,
        "series:\n  - {name: a, path: px.csv, preset: sp500}\n  - {name: b, path: nope.csv, preset: sp500}\noutput: out\n",
    )
    assert cli.main(["analyze", "--config", str(cfg)]) == 2
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("body", [
    "series:\n  - {name: x, path: px.csv, preset: nasdaq100}\n",
    "alpha: 0.7\nseries:\n  - {name: x, path: px.csv, preset: sp500}\n",
    "series:\n  - {name: x, path: px.csv}\n",
    "series:\n  - {name: x, path: px.csv, block: {n0: 20, n1: 8}}\n",
    "series: []\n",
    "alpha: [\n",
])
def test_config_errors_exit_1(tmp_path, body):
    _write_prices(tmp_path / "px.csv")
    assert cli.main(["analyze", "--config", str(_config(tmp_path, body))]) == 1


def test_missing_config_exit_1(tmp_path):
    assert cli.main(["analyze", "--config", str(tmp_path / "none.yaml")]) == 1


def test_print_preset(capsys):
    assert cli.main(["--print-preset", "sp500"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert (d["lower_mean_line"], d["mean_diff_line"], d["upper_vol_line"], d["vol_ratio_line"]) == (
        -0.01, 0.015, 0.03, 3.0)
    assert (d["n0"], d["n1"]) == (20, 8)
    assert cli.main(["--print-preset", "nikkei"]) == 1


def test_cli_preset_flag_fills_missing_preset(tmp_path):
    _write_prices(tmp_path / "px.csv")
    cfg = _config(tmp_path, "series:\n  - {name: x, path: px.csv}\noutput: out\n")
    assert cli.main(["analyze", "--config", str(cfg), "--preset", "ftse"]) == 0


def test_backtest_injected_trace(tmp_path):
    flags = np.zeros(375, dtype=int)
    flags[np.linspace(5, 370, 19).astype(int)] = 1
    lines = ["date,q,g_var,violated,running_rate,n0,n1,mu,sigma_lower,sigma_upper"]
    lines += [f"{i},-0.03,0.03,{f},0.05,20,8,0.0,0.01,0.02" for i, f in enumerate(flags)]
    (tmp_path / "trace.csv").write_text("\n".join(lines) + "\n")
    cfg = _config(tmp_path, "alpha: 1/20\nseries:\n  - {name: spx, trace: trace.csv}\noutput: out\n")
    assert cli.main(["backtest", "--config", str(cfg)]) == 0
    d = json.loads((tmp_path / "out" / "spx_backtest.json").read_text())["backtest"]
    assert d["fact_viol"] == 19 and d["total"] == 375
    assert d["theo_viol"] == pytest.approx(18.75)
    assert round(d["alpha_hat"], 4) == 0.0507
    assert abs(d["lr_uc_p"] - 0.9529) <= 0.01
    assert d["pass_uc"] is True
    table = (tmp_path / "out" / "backtest_table.csv").read_text().splitlines()
    assert table[0] == "Index,Theo-Viol,Fact-Viol,alpha_hat,LR_uc,LR_ind"
    assert table[1].startswith("spx,18.75,19,0.0507,0.95")


def test_backtest_synthetic_passes_coverage(tmp_path):
    from almgvar.synthetic import RegimeModel, generate_regime_series

    z = generate_regime_series(RegimeModel.alternating((0.01, 0.03), 50, 5020, seed=3)).values
    # stride-1, horizon-1 sampling turns these closes back into exactly z
    closes = 100 * np.exp(np.concatenate([[0.0], np.cumsum(z)]))
    lines = ["date,close"] + [f"{i},{float(c)!r}" for i, c in enumerate(closes)]
    (tmp_path / "sim.csv").write_text("\n".join(lines) + "\n")
    cfg = _config(
        tmp_path,
        "alpha: 1/20\nsampling: {horizon: 1, stride: 1}\n"
        "series:\n  - {name: sim, path: sim.csv, preset: sp500}\noutput: out\n",
    )
    assert cli.main(["backtest", "--config", str(cfg)]) == 0
    d = json.loads((tmp_path / "out" / "sim_backtest.json").read_text())
    assert d["backtest"]["total"] == len(z) - 20 >= 5000
    assert d["backtest"]["pass_uc"] is True
    assert set(d["evaluation"]) >= {"mean", "volatility", "gvar", "GVarDeep"}


def test_empty_signals_against_events(tmp_path):
    # thresholds that can never fire, on data that has a crash
    _write_prices(tmp_path / "px.csv")
    cfg = _config(
        tmp_path,
        "series:\n  - name: x\n    path: px.csv\n    block: {n0: 20, n1: 8}\n    thresholds:\n"
        "      lower_mean_line: -100.0\n      mean_diff_line: 100.0\n      upper_vol_line: 100.0\n"
        "      vol_ratio_line: 1.0e9\n      gvar_level: -50.0\n      gvar_trend: -100.0\n"
        "      gvar_deep: -100.0\n      gvar_deep_near: -90.0\noutput: out\n",
    )
    assert cli.main(["backtest", "--config", str(cfg)]) == 0
    ev = json.loads((tmp_path / "out" / "x_backtest.json").read_text())["evaluation"]
    for fam in ("mean", "volatility", "gvar"):
        assert ev[fam]["counts"]["fn"] > 0
        assert ev[fam]["miss"] == 1.0
        assert ev[fam]["precision"] is None


def test_report_after_backtest(analyzed, capsys):
    tmp, cfg = analyzed
    assert cli.main(["report", "--config", str(cfg)]) == 2
    assert cli.main(["backtest", "--config", str(cfg)]) == 0
    capsys.readouterr()
    assert cli.main(["report", "--config", str(cfg)]) == 0
    printed = capsys.readouterr().out
    assert printed == (tmp / "out" / "report.csv").read_text()
    assert printed.splitlines()[1].startswith("spx,")


SIM = """alpha: 1/20
simulate: {seed: 5, seeds: 2, length: 2500, replications: 1000}
output: out
"""


def test_simulate_same_seed_byte_identical(tmp_path):
    cfg = _config(tmp_path, SIM)
    assert cli.main(["simulate", "--config", str(cfg), "--output", str(tmp_path / "a")]) == 0
    assert cli.main(["simulate", "--config", str(cfg), "--output", str(tmp_path / "b")]) == 0
    a = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert a == ["convergence.json", "convergence_seed5.csv", "convergence_seed6.csv", "prop41.json"]
    for name in a:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    prop = json.loads((tmp_path / "a" / "prop41.json").read_text())
    assert prop["all_conform"] is True
    trace = parse_trace_csv((tmp_path / "a" / "convergence_seed5.csv").read_text())
    assert len(trace) == 2500 - 20


def test_simulate_seed_flag_changes_output(tmp_path):
    cfg = _config(tmp_path, SIM)
    cli.main(["simulate", "--config", str(cfg), "--output", str(tmp_path / "a")])
    cli.main(["simulate", "--config", str(cfg), "--output", str(tmp_path / "b"), "--seed", "9"])
    assert (tmp_path / "b" / "convergence_seed9.csv").exists()
    assert not (tmp_path / "b" / "convergence_seed5.csv").exists()


def test_alpha_flag_overrides_config(analyzed):
    tmp, cfg = analyzed
    assert cli.main(["backtest", "--config", str(cfg), "--alpha", "1/100"]) == 0
    d = json.loads((tmp / "out" / "spx_backtest.json").read_text())["backtest"]
    assert d["alpha"] == 0.01
    assert cli.main(["backtest", "--config", str(cfg), "--alpha", "3/4"]) == 1
