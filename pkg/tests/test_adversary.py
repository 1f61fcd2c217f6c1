"""Tests for the attack strategies."""

import math

import numpy as np
import pytest

from muqkd_cli.adversary import (
    BELL_STATES,
    AdversaryStrategy,
    AttackKind,
    BellOutcome,
    EveRecord,
    Segment,
    TwoQubitState,
    bell_measure,
    epr_attack_round,
    fake_initial_announcement,
    forget_decoy_rounds,
    intercept_resend,
    pns_attack,
    pns_forward_probability,
)
from muqkd_cli.channel import ChannelConfig, Pulse, PulseOrigin, multi_photon_given_nonempty, poisson_pmf
from muqkd_cli.errors import InvalidArgumentError, UnsupportedStrategyError
from muqkd_cli.evaluation import binomial_within
from muqkd_cli.protocol import CharlieChoice, Mode, ProtocolConfig, run_session
from muqkd_cli.qudit import Basis, BasisKind, basis_state, measure, x_basis_state


def test_strategy_validation():
    with pytest.raises(UnsupportedStrategyError, match="requires d = 2"):
        AdversaryStrategy(AttackKind.EPR_SERVER).validate(4)
    AdversaryStrategy(AttackKind.EPR_SERVER).validate(2)
    with pytest.raises(InvalidArgumentError):
        AdversaryStrategy(AttackKind.PNS_SPLIT, eve_channel_eta=1.5)
    with pytest.raises(InvalidArgumentError):
        AdversaryStrategy(AttackKind.TROJAN_HORSE, trojan_photons=1)
    assert Segment.BOTH.covers(Segment.CHARLIE_ALICE)
    assert not Segment.BOB_CHARLIE.covers(Segment.CHARLIE_ALICE)


def test_epr_server_rejected_before_any_round():
    cfg = ProtocolConfig(d=4, n_rounds=10, p_bm=0.5, p_cm=0.5, p_d=0.2)
    with pytest.raises(UnsupportedStrategyError):
        run_session(cfg, ChannelConfig(), AdversaryStrategy(AttackKind.EPR_SERVER))


def test_intercept_z_on_eigenstate_is_invisible():
    rng = np.random.default_rng(0)
    resent, record = intercept_resend(Pulse(1, basis_state(4, 3)), Basis(BasisKind.Z, 4), rng, round_id=5)
    assert resent.state.equals(basis_state(4, 3))
    assert resent.origin_tag is PulseOrigin.EVE
    assert record == EveRecord(round_id=5, learned_shift=3, caused_disturbance=False)


@pytest.mark.parametrize("d", [2, 4])
def test_intercept_z_on_decoy_disturbs_x_checks(d):
    """Z-collapse of an X eigenstate mismatches an X check with probability (d-1)/d."""
    rng = np.random.default_rng(d)
    n = 10_000
    x = Basis(BasisKind.X, d)
    mismatches = 0
    for _ in range(n):
        resent, record = intercept_resend(Pulse(1, x_basis_state(d, 1)), Basis(BasisKind.Z, d), rng)
        assert record.caused_disturbance
        mismatches += measure(resent.state, x, rng).outcome != 1
    assert binomial_within(mismatches, n, (d - 1) / d)


def test_intercept_x_learns_nothing():
    rng = np.random.default_rng(1)
    _, record = intercept_resend(Pulse(1, basis_state(2, 1)), Basis(BasisKind.X, 2), rng)
    assert record.learned_shift is None


def test_intercept_needs_photon():
    with pytest.raises(InvalidArgumentError):
        intercept_resend(Pulse(0), Basis(BasisKind.Z, 2), np.random.default_rng(0))


def test_bell_measure():
    rng = np.random.default_rng(2)
    for _ in range(20):
        outcome, collapsed = bell_measure(BELL_STATES[BellOutcome.PSI_MINUS], rng)
        assert outcome is BellOutcome.PSI_MINUS
        assert collapsed.equals(BELL_STATES[BellOutcome.PSI_MINUS])

    n = 10_000
    zero_zero = TwoQubitState.product(basis_state(2, 0), basis_state(2, 0))
    outcomes = [bell_measure(zero_zero, rng)[0] for _ in range(n)]
    assert set(outcomes) <= {BellOutcome.PHI_PLUS, BellOutcome.PHI_MINUS}
    assert binomial_within(outcomes.count(BellOutcome.PHI_PLUS), n, 0.5)


def test_bell_states_are_orthonormal():
    vectors = np.array([s.amplitudes for s in BELL_STATES.values()])
    assert np.allclose(vectors.conj() @ vectors.T, np.eye(4))


def test_epr_message_round_reads_both_shifts():
    rng = np.random.default_rng(3)
    for j_b in (0, 1):
        for j_c in (0, 1):
            epr = epr_attack_round(basis_state(2, j_b), CharlieChoice(Mode.MESSAGE, shift=j_c), rng)
            expected = BellOutcome.PHI_MINUS if j_c else BellOutcome.PSI_MINUS
            assert epr.bell_outcome is expected
            assert epr.record.learned_shift == j_b
            assert epr.alice_published == (j_b + j_c) % 2
            assert not epr.record.caused_disturbance


@pytest.mark.parametrize(
    "stored, basis, reference",
    [
        (basis_state(2, 1), BasisKind.Z, 1),
        (x_basis_state(2, 0), BasisKind.X, 0),
        (basis_state(2, 0), BasisKind.X, 0),
    ],
)
def test_epr_check_photon_is_maximally_mixed(stored, basis, reference):
    """Whatever Charlie measures on photon B is uniform over outcomes."""
    rng = np.random.default_rng(4)
    n = 10_000
    mismatches = sum(
        epr_attack_round(stored, CharlieChoice(Mode.CHECK, basis=basis), rng).charlie_outcome != reference
        for _ in range(n)
    )
    assert binomial_within(mismatches, n, 0.5)


def test_epr_rejects_qudits():
    with pytest.raises(UnsupportedStrategyError):
        epr_attack_round(basis_state(3, 0), CharlieChoice(Mode.MESSAGE, shift=1), np.random.default_rng(0))


def test_fake_initial_announcement_table():
    assert fake_initial_announcement(BellOutcome.PSI_MINUS, decoy=False) == 0
    assert fake_initial_announcement(BellOutcome.PSI_PLUS, decoy=False) == 0
    assert fake_initial_announcement(BellOutcome.PHI_MINUS, decoy=False) == 1
    assert fake_initial_announcement(BellOutcome.PHI_PLUS, decoy=False) == 1
    assert fake_initial_announcement(BellOutcome.PSI_MINUS, decoy=True) == 0
    assert fake_initial_announcement(BellOutcome.PSI_PLUS, decoy=True) == 1
    assert fake_initial_announcement(BellOutcome.PHI_MINUS, decoy=True) == 0
    assert fake_initial_announcement(BellOutcome.PHI_PLUS, decoy=True) == 1


def test_pns_drops_single_photons():
    rng = np.random.default_rng(5)
    for n in (0, 1):
        state = basis_state(2, 1) if n else None
        out, record = pns_attack(Pulse(n, state), 1.0, rng)
        assert out.is_empty
        assert record.learned_shift is None


def test_pns_splits_multi_photon_pulse():
    rng = np.random.default_rng(6)
    out, record = pns_attack(Pulse(3, basis_state(4, 2)), 1.0, rng, round_id=9)
    assert out.photon_count == 2
    assert out.state.equals(basis_state(4, 2))
    assert record.learned_shift == 2 and record.round_id == 9


def test_pns_forward_probability_limits():
    assert pns_forward_probability(None, 0.1, 1.0) == 1.0
    # a lossless line beats what the multi-photon pulses alone can deliver
    assert pns_forward_probability(0.05, 1.0, 1.0) == 1.0
    assert pns_forward_probability(0.5, 0.1, 0.0) == 1.0
    assert pns_forward_probability(0.5, 0.1, 1.0) == pytest.approx(-math.expm1(-0.05) / (1 - 1.5 * math.exp(-0.5)))


@pytest.mark.parametrize("mu, eta_opt, eve_eta", [(0.5, 0.1, 1.0), (0.5, 0.1, 0.5), (1.0, 0.2, 0.7)])
def test_pns_forwarding_matches_honest_delivery(mu, eta_opt, eve_eta):
    """Forwarded split pulses arrive as often as pulses on the honest line."""
    forward = pns_forward_probability(mu, eta_opt, eve_eta)
    assert 0.0 < forward < 1.0
    eve = sum(poisson_pmf(n, mu) * (1 - (1 - eve_eta) ** (n - 1)) for n in range(2, 80))
    honest = sum(poisson_pmf(n, mu) * (1 - (1 - eta_opt) ** n) for n in range(1, 80))
    assert forward * eve == pytest.approx(honest, rel=1e-9)


def test_pns_attack_can_block_split_pulses():
    rng = np.random.default_rng(7)
    out, record = pns_attack(Pulse(3, basis_state(2, 1)), 1.0, rng, forward_probability=0.0)
    assert out.is_empty
    assert record.learned_shift == 1
    with pytest.raises(InvalidArgumentError):
        pns_attack(Pulse(3, basis_state(2, 1)), 1.0, rng, forward_probability=1.5)


def test_forget_decoy_rounds():
    records = [EveRecord(1, learned_shift=1), EveRecord(2, learned_shift=0, caused_disturbance=True)]
    out = forget_decoy_rounds(records, {2})
    assert out[0].learned_shift == 1
    assert out[1].learned_shift is None and out[1].caused_disturbance


def test_no_adversary_gives_no_information():
    cfg = ProtocolConfig(d=2, n_rounds=2_000, p_bm=0.9, p_cm=0.9, p_d=0.1)
    assert run_session(cfg, ChannelConfig(), seed=1).metrics.eve_info == 0.0


@pytest.mark.parametrize("d", [2, 4])
def test_intercept_resend_session(d):
    cfg = ProtocolConfig(d=d, n_rounds=30_000, p_bm=0.9, p_cm=0.3, p_d=0.3)
    result = run_session(cfg, ChannelConfig(), AdversaryStrategy(AttackKind.INTERCEPT_RESEND_Z), seed=11)
    m = result.metrics
    errors = sum(1 for expected, observed in result.checks.x_checks if expected != observed)
    assert m.qber_z == 0.0
    assert binomial_within(errors, m.checks_x, (d - 1) / d)
    assert m.eve_info == 1.0
    assert m.key_mismatches == 0


def test_intercept_x_on_charlie_alice_corrupts_key():
    cfg = ProtocolConfig(d=2, n_rounds=5_000, p_bm=0.9, p_cm=0.9, p_d=0.1)
    adv = AdversaryStrategy(AttackKind.INTERCEPT_RESEND_X, segments=Segment.CHARLIE_ALICE)
    m = run_session(cfg, ChannelConfig(), adv, seed=12).metrics
    assert m.qber_z == 0.0 and m.qber_x == 0.0
    assert binomial_within(m.key_mismatches, m.key_length, 0.5)
    assert m.eve_info == 0.0


def test_epr_server_contrast():
    adv = AdversaryStrategy(AttackKind.EPR_SERVER)
    assisted = ProtocolConfig(d=2, n_rounds=20_000, p_bm=0.9, p_cm=0.5, p_d=0.3, server_assisted_checks=True)
    fixed = ProtocolConfig(d=2, n_rounds=20_000, p_bm=0.9, p_cm=0.5, p_d=0.3)

    a = run_session(assisted, ChannelConfig(), adv, seed=13)
    assert a.metrics.eve_info == 1.0
    assert a.metrics.qber_z == 0.0 and a.metrics.qber_x == 0.0
    assert a.key.bob_key == a.key.charlie_key

    f = run_session(fixed, ChannelConfig(), adv, seed=13)
    z_errors = sum(1 for e, o in f.checks.z_checks if e != o)
    x_errors = sum(1 for e, o in f.checks.x_checks if e != o)
    assert binomial_within(z_errors, len(f.checks.z_checks), 0.5)
    assert binomial_within(x_errors, len(f.checks.x_checks), 0.5)


def test_pns_session_is_invisible_without_monitoring():
    cfg = ProtocolConfig(d=2, n_rounds=200_000, p_bm=0.9, p_cm=0.9, p_d=0.1)
    m = run_session(cfg, ChannelConfig(mu=0.05), AdversaryStrategy(AttackKind.PNS_SPLIT), seed=17).metrics
    assert m.key_length > 0
    assert m.eve_info == 1.0
    assert m.qber_z in (None, 0.0) and m.qber_x in (None, 0.0) and m.qber_upstream == 0.0
    assert not m.multi_photon_alarm


def _charlie_clicks(result):
    checks = sum(1 for log in result.logs if log.charlie_mode is Mode.CHECK)
    clicks = sum(1 for log in result.logs if log.charlie_measurement is not None)
    return clicks, checks


def test_pns_keeps_charlie_yield_on_a_lossy_line():
    """Charlie's click rate under PNS matches the honest lossy line."""
    cfg = ProtocolConfig(d=2, n_rounds=100_000, p_bm=1.0, p_cm=0.0, p_d=0.2)
    channel = ChannelConfig(mu=0.5, eta_opt=0.1)
    expected = -math.expm1(-0.05) / -math.expm1(-0.5)

    honest = run_session(cfg, channel, seed=23)
    attacked = run_session(cfg, channel, AdversaryStrategy(AttackKind.PNS_SPLIT), seed=23)
    for result in (honest, attacked):
        clicks, checks = _charlie_clicks(result)
        assert binomial_within(clicks, checks, expected)
        assert result.metrics.charlie_yield == pytest.approx(clicks / checks)
    assert attacked.metrics.qber_z == 0.0 and attacked.metrics.qber_x == 0.0


def test_pns_yield_drops_when_loss_is_too_low_to_hide():
    cfg = ProtocolConfig(d=2, n_rounds=100_000, p_bm=1.0, p_cm=0.0, p_d=0.2)
    channel = ChannelConfig(mu=0.05, eta_opt=0.2)
    clicks, checks = _charlie_clicks(run_session(cfg, channel, AdversaryStrategy(AttackKind.PNS_SPLIT), seed=24))
    assert binomial_within(clicks, checks, multi_photon_given_nonempty(0.05))


def test_pns_session_trips_alarm_with_sampling():
    cfg = ProtocolConfig(d=2, n_rounds=200_000, p_bm=0.9, p_cm=0.9, p_d=0.1, sample_fraction=0.1, probe_fraction=0.1)
    m = run_session(cfg, ChannelConfig(mu=0.05), AdversaryStrategy(AttackKind.PNS_SPLIT), seed=17).metrics
    assert m.probe_multi_rate == 1.0
    assert m.multi_photon_alarm
    assert m.multi_photon_rate < 0.1


def test_trojan_horse_exposed_by_input_sampling():
    cfg = ProtocolConfig(d=2, n_rounds=5_000, p_bm=0.9, p_cm=0.9, p_d=0.1, sample_fraction=0.1)
    adv = AdversaryStrategy(AttackKind.TROJAN_HORSE, trojan_photons=2)
    m = run_session(cfg, ChannelConfig(), adv, seed=19).metrics
    assert m.multi_photon_rate == 1.0
    assert m.multi_photon_alarm
    assert m.eve_info == 1.0
