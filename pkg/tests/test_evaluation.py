import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from almgvar.errors import DegenerateInput, DomainError, IndexSpaceMismatch, SeriesTooShort
from almgvar.evaluation import (
    ConfusionCounts,
    backtest,
    backtest_table,
    chi2_cdf,
    chi2_sf,
    christoffersen_ind_test,
    classification_metrics,
    kupiec_uc_test,
    match_warnings,
    reports_to_json,
)
from almgvar.market_data import EventLabels
from almgvar.signals import Indicator, WarningSignal
from oracles import mp_chi2_sf_df1, naive_christoffersen, naive_kupiec


def labels_at(n, events):
    flags = np.zeros(n, bool)
    flags[list(events)] = True
    return EventLabels(tuple(range(n)), flags)


def test_match_examples():
    lab = labels_at(20, [11])
    assert match_warnings([10], lab, 1) == ConfusionCounts(tp=1, fp=0, fn=0)
    assert match_warnings([10], labels_at(20, []), 1) == ConfusionCounts(tp=0, fp=1, fn=0)
    assert match_warnings([], lab, 1) == ConfusionCounts(tp=0, fp=0, fn=1)


def test_match_window_edges():
    lab = labels_at(20, [11])
    assert match_warnings([9], lab, 1) == ConfusionCounts(0, 1, 1)
    assert match_warnings([11], lab, 0) == ConfusionCounts(1, 0, 0)
    assert match_warnings([12], lab, 3) == ConfusionCounts(0, 1, 1)
    assert match_warnings([19], labels_at(20, [19]), 5) == ConfusionCounts(1, 0, 0)


def test_multiple_signals_one_event():
    lab = labels_at(20, [11])
    assert match_warnings([10, 11], lab, 1) == ConfusionCounts(tp=2, fp=0, fn=0)


def brute_match(sig, events, n, h):
    tp = sum(any(e in events for e in range(s, s + h + 1)) for s in sig)
    fn = sum(not any(s in sig for s in range(e - h, e + 1)) for e in events)
    return ConfusionCounts(tp, len(sig) - tp, fn)


@given(st.integers(1, 40), st.data())
def test_match_matches_brute_force(n, data):
    events = data.draw(st.sets(st.integers(0, n - 1)))
    sig = data.draw(st.lists(st.integers(0, n - 1), max_size=15))
    h = data.draw(st.integers(0, 4))
    assert match_warnings(sig, labels_at(n, events), h) == brute_match(sig, events, n, h)


def test_index_space_checks():
    lab = labels_at(5, [1])
    with pytest.raises(IndexSpaceMismatch):
        match_warnings([7], lab)
    good = WarningSignal(2, 2, Indicator.MEAN_DIFF, 0.02)
    bad = WarningSignal("2008-01-01", 2, Indicator.MEAN_DIFF, 0.02)
    match_warnings([good], lab)
    with pytest.raises(IndexSpaceMismatch):
        match_warnings([bad], lab)


def test_metrics_published_mean_difference_row():
    r = classification_metrics(ConfusionCounts(tp=20, fp=9, fn=0))
    assert round(r.precision, 4) == 0.6897
    assert round(r.miss, 4) == 0.0
    assert round(r.f1, 4) == 0.8163


def test_metrics_hand_case_and_undefined():
    r = classification_metrics(ConfusionCounts(1, 1, 1))
    assert (r.precision, r.miss, r.recall, r.f1) == (0.5, 0.5, 0.5, 0.5)
    r = classification_metrics(ConfusionCounts(0, 0, 0))
    assert (r.precision, r.miss, r.recall, r.f1) == (None, None, None, None)
    r = classification_metrics(ConfusionCounts(0, 0, 4))
    assert r.precision is None and r.miss == 1.0 and r.f1 == 0.0


@given(st.integers(0, 200), st.integers(0, 200), st.integers(0, 200))
def test_metric_identities(tp, fp, fn):
    r = classification_metrics(ConfusionCounts(tp, fp, fn))
    if tp + fn > 0:
        assert r.miss + r.recall == pytest.approx(1.0, abs=1e-15)
    if r.precision and r.recall:
        harmonic = 2 / (1 / r.precision + 1 / r.recall)
        assert abs(harmonic - r.f1) <= 1e-12


def test_chi2():
    assert chi2_sf(0.0) == 1.0
    assert abs(chi2_sf(3.841459) - 0.05) <= 1e-5
    assert abs(chi2_sf(0.0037) - 0.9515) <= 5e-3
    for x in (0.01, 0.5, 2.0, 10.0, 50.0, 200.0):
        assert chi2_sf(x) == pytest.approx(float(mp_chi2_sf_df1(x)), rel=1e-10, abs=1e-300)
        assert chi2_sf(x) + chi2_cdf(x) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DomainError):
        chi2_sf(-1.0)


def test_kupiec_examples():
    stat, p = kupiec_uc_test(5, 100, 0.05)
    assert stat == 0 and p == 1
    stat, p = kupiec_uc_test(19, 375, 0.05)
    ostat, op = naive_kupiec(19, 375, "0.05")
    assert stat == pytest.approx(ostat, rel=1e-10)
    assert abs(p - 0.9529) <= 0.01 and p == pytest.approx(op, rel=1e-10)
    stat, p = kupiec_uc_test(0, 375, 0.05)
    assert stat == pytest.approx(2 * 375 * math.log(1 / 0.95), rel=1e-12)
    assert stat == pytest.approx(38.47, abs=0.01) and p < 1e-8
    with pytest.raises(DegenerateInput):
        kupiec_uc_test(0, 0, 0.05)


@given(st.integers(1, 400), st.data())
def test_kupiec_against_oracle(t, data):
    n = data.draw(st.integers(0, t))
    stat, p = kupiec_uc_test(n, t, 0.05)
    ostat, op = naive_kupiec(n, t, "0.05")
    assert stat == pytest.approx(ostat, rel=1e-8, abs=1e-10)
    assert p == pytest.approx(op, rel=1e-7, abs=1e-12)


def test_kupiec_p_peaks_at_alpha_and_decreases():
    t = 400
    ps = [kupiec_uc_test(n, t, 0.05).p for n in range(0, 61)]
    assert ps[20] == 1.0
    assert all(a < b for a, b in zip(ps[:20], ps[1:21]))
    assert all(a > b for a, b in zip(ps[20:], ps[21:]))


def test_christoffersen_degenerate():
    res = christoffersen_ind_test([False] * 50)
    assert res.degenerate and math.isnan(res.p)
    with pytest.raises(SeriesTooShort):
        christoffersen_ind_test([True])


def test_christoffersen_clustered():
    flags = np.zeros(5000, bool)
    flags[1000:1020] = True
    stat, p = christoffersen_ind_test(flags)
    ostat, op = naive_christoffersen(flags.tolist())
    assert stat == pytest.approx(ostat, rel=1e-9)
    assert stat == pytest.approx(233.8039354177, rel=1e-9)
    assert p < 1e-3


@pytest.mark.parametrize("seed", range(5))
def test_christoffersen_matches_oracle(seed):
    flags = np.random.default_rng(seed).random(600) < 0.1
    stat, p = christoffersen_ind_test(flags)
    ostat, op = naive_christoffersen(flags.tolist())
    assert stat == pytest.approx(ostat, rel=1e-8, abs=1e-10)
    assert p == pytest.approx(op, rel=1e-7)


@pytest.mark.slow
def test_christoffersen_size_under_independence():
    rejections = 0
    for seed in range(200):
        flags = np.random.default_rng(10_000 + seed).random(5000) < 0.05
        rejections += christoffersen_ind_test(flags).p < 0.05
    assert 0.01 <= rejections / 200 <= 0.10


def test_backtest_report_and_table():
    flags = np.zeros(375, bool)
    flags[np.linspace(5, 370, 19).astype(int)] = True
    r = backtest(flags, "1/20")
    assert r.theo_viol == pytest.approx(18.75)
    assert r.fact_viol == 19 and round(r.alpha_hat, 4) == 0.0507
    assert abs(r.lr_uc_p - 0.9529) < 0.01 and r.pass_uc
    assert r.pass_ind == (r.lr_ind_p > 0.05)
    table = backtest_table({"S&P500": r})
    assert table.splitlines()[0] == "Index,Theo-Viol,Fact-Viol,alpha_hat,LR_uc,LR_ind"
    assert table.splitlines()[1].startswith("S&P500,18.75,19,0.0507,0.952")
    assert '"fact_viol": 19' in reports_to_json({"x": r})


def test_backtest_without_violations():
    r = backtest(np.zeros(100, bool), 0.05)
    assert r.lr_ind_p is None and r.pass_ind is None and not r.pass_uc
