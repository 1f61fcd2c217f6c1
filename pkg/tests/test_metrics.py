"""Tests for derived session metrics."""

import math

import numpy as np
import pytest

from muqkd_cli.channel import ChannelConfig
from muqkd_cli.errors import InvalidArgumentError
from muqkd_cli.evaluation import binomial_within
from muqkd_cli.metrics import (
    SessionMetrics,
    balance,
    efficiencies,
    key_bits,
    overall_efficiencies,
    pns_report,
    qber,
    useful_check_probability,
)
from muqkd_cli.protocol import CheckSamples, Mode, ProtocolConfig, run_session


def test_qber_classes():
    samples = CheckSamples(z_checks=[(0, 0), (1, 0)], x_checks=[(1, 0), (2, 3)], bob_upstream_checks=[])
    report = qber(samples)
    assert report.qber_z == 0.5
    assert report.qber_x == 1.0
    assert report.qber_upstream is None
    assert qber(CheckSamples()) == (None, None, None)


def test_balance_examples():
    assert balance(0.3) == pytest.approx((0.3, 0.42))
    assert balance(0.5).p_eu == pytest.approx(0.5)
    assert balance(1e-9).p_eu == pytest.approx(0.0, abs=1e-8)
    for bad in (0.0, -0.1, 0.6):
        with pytest.raises(InvalidArgumentError):
            balance(bad)


def test_balance_identity_and_maximum():
    grid = np.round(np.arange(1, 501) * 0.001, 3)
    for p_d in grid:
        p_cz, _ = balance(float(p_d))
        assert (1 - p_d) * p_cz == pytest.approx(p_d * (1 - p_cz), abs=1e-15)
    values = [balance(float(p)).p_eu for p in grid]
    assert grid[int(np.argmax(values))] == pytest.approx(0.5)


def test_useful_check_probability_unbalanced():
    assert useful_check_probability(0.2, 0.5) == pytest.approx(0.5)
    assert useful_check_probability(0.1, 0.9) == pytest.approx(0.9 * 0.9 + 0.1 * 0.1)


@pytest.mark.parametrize("d", [2, 4, 8, 16])
def test_key_bits(d):
    assert key_bits(100, d) == 100 * math.log2(d)


def test_pns_report():
    report = pns_report(0.05, 1.0, 1.0, 10)
    assert report.passed
    assert report.multi_given_nonempty == pytest.approx(0.024782, abs=1e-6)
    assert "2.5%" in report.summary()

    failing = pns_report(0.05, 0.1, 0.2, 10)
    assert failing.p_cu == pytest.approx(0.02)
    assert not failing.passed
    assert "FAIL" in failing.summary()

    with pytest.raises(InvalidArgumentError):
        pns_report(0.0, 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        pns_report(0.05, 1.2, 1.0)


def test_key_efficiency_matches_closed_form():
    """Key rounds per coded round approach (1 - p_d) p_cm."""
    cfg = ProtocolConfig(d=2, n_rounds=100_000, p_bm=0.9, p_cm=0.9, p_d=0.1)
    result = run_session(cfg, ChannelConfig(), seed=2)
    coded = sum(1 for log in result.logs if log.bob_mode is Mode.MESSAGE)
    eta_q, eta_t = efficiencies(result)
    assert eta_q == result.metrics.eta_q
    assert binomial_within(len(result.key), coded, 0.9 * 0.9)
    overall_q, overall_t = overall_efficiencies(result)
    assert overall_q < eta_q
    assert overall_t < eta_t


def test_session_metrics_columns_and_ranges():
    cfg = ProtocolConfig(d=4, n_rounds=3_000, p_bm=0.8, p_cm=0.6, p_d=0.2, sample_fraction=0.05)
    m = run_session(cfg, ChannelConfig(mu=0.2, eta_opt=0.9, eta_d=0.8), seed=3).metrics
    names = SessionMetrics.field_names()
    assert names[:3] == ["rounds", "key_length", "key_bits"]
    assert list(m.as_dict()) == names
    for name in ("qber_z", "qber_x", "qber_upstream", "eta_q", "eta_t", "p_eu_empirical", "charlie_yield"):
        value = getattr(m, name)
        assert value is None or 0.0 <= value <= 1.0
    assert m.p_cu == pytest.approx(0.72)
    assert m.p_eu_expected == pytest.approx(2 * 0.2 * 0.8)
    assert m.pns_condition is False  # 10 x 9.7% exceeds 0.72


def test_ideal_source_has_no_pns_columns():
    cfg = ProtocolConfig(d=2, n_rounds=200, p_bm=0.8, p_cm=0.6, p_d=0.2)
    m = run_session(cfg, ChannelConfig(), seed=3).metrics
    assert m.multi_given_nonempty is None
    assert m.pns_condition is None
    assert m.multi_photon_rate is None
