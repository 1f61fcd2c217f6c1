"""
Session metrics: error rates, efficiencies, decoy balance and PNS reports
"""

import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

from .adversary import eve_information
from .channel import multi_photon_alarm, multi_photon_approximation, multi_photon_given_nonempty
from .errors import InvalidArgumentError
from .protocol import CheckSamples, Mode, RoundTerminal, SessionResult


class QberReport(NamedTuple):
    """Error rates per check family; None when the family has no samples."""

    qber_z: Optional[float]
    qber_x: Optional[float]
    qber_upstream: Optional[float]


class BalanceResult(NamedTuple):
    p_cz: float
    p_eu: float


class Efficiencies(NamedTuple):
    eta_q: Optional[float]
    eta_t: Optional[float]


@dataclass(frozen=True)
class PnsReport:
    """
    Comparison of Charlie's detection probability with the multi-photon
    fraction of a faint source.

    Attributes:
        mu: Mean photon number
        p_cu: Probability that Charlie detects a single photon, eta_opt * eta_d
        multi_given_nonempty: Exact P(n>1 | n>0)
        approximation: Small-mu approximation mu / 2
        margin: Required ratio p_cu / multi_given_nonempty
    """

    mu: float
    p_cu: float
    multi_given_nonempty: float
    approximation: float
    margin: float

    @property
    def ratio(self) -> float:
        return self.p_cu / self.multi_given_nonempty

    @property
    def passed(self) -> bool:
        return self.p_cu >= self.margin * self.multi_given_nonempty

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"mu={self.mu:g}: P_cu={self.p_cu:.6g}, P(n>1|n>0)={self.multi_given_nonempty:.6g} "
            f"(~{100 * self.multi_given_nonempty:.1f}%, mu/2={self.approximation:.6g}), "
            f"ratio={self.ratio:.4g} vs margin {self.margin:g}: {verdict}"
        )


@dataclass(frozen=True)
class SessionMetrics:
    """Per-session figures; field order is the column order of result files."""

    rounds: int
    key_length: int
    key_bits: float
    key_mismatches: int
    qber_upstream: Optional[float]
    qber_z: Optional[float]
    qber_x: Optional[float]
    checks_upstream: int
    checks_z: int
    checks_x: int
    p_eu_empirical: Optional[float]
    p_eu_expected: float
    eta_q: Optional[float]
    eta_t: Optional[float]
    eta_q_overall: Optional[float]
    eta_t_overall: Optional[float]
    p_cu: float
    multi_given_nonempty: Optional[float]
    pns_condition: Optional[bool]
    charlie_yield: Optional[float]
    multi_photon_rate: Optional[float]
    probe_multi_rate: Optional[float]
    multi_photon_alarm: bool
    eve_info: float

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _error_rate(pairs: Sequence[Tuple[int, int]]) -> Optional[float]:
    if not pairs:
        return None
    return sum(1 for expected, observed in pairs if expected != observed) / len(pairs)


def qber(samples: CheckSamples) -> QberReport:
    """Fraction of check samples whose outcome differs from the reference."""
    return QberReport(
        qber_z=_error_rate(samples.z_checks),
        qber_x=_error_rate(samples.x_checks),
        qber_upstream=_error_rate(samples.bob_upstream_checks),
    )


def useful_check_probability(p_d: float, p_cz: float) -> float:
    """P_eu = (1 - p_d) p_cz + p_d (1 - p_cz)."""
    return (1.0 - p_d) * p_cz + p_d * (1.0 - p_cz)


def balance(p_d: float) -> BalanceResult:
    """
    Charlie's Z-basis probability matched to Bob's decoy rate (p_cz = p_d) and
    the resulting useful-check probability 2 p_d (1 - p_d).

    Raises:
        InvalidArgumentError: Unless 0 < p_d <= 0.5
    """
    if not 0.0 < p_d <= 0.5:
        raise InvalidArgumentError(f"p_d must lie in (0, 0.5], got {p_d}")
    return BalanceResult(p_cz=p_d, p_eu=useful_check_probability(p_d, p_d))


def key_bits(length: int, d: int) -> float:
    """Key size in bits; each sifted symbol carries log2(d) bits."""
    return length * math.log2(d)


def _count(session: SessionResult) -> Dict[str, int]:
    counts = {"message": 0, "published": 0, "charlie_checks": 0, "charlie_measured": 0}
    for log in session.logs:
        if log.bob_mode is Mode.MESSAGE:
            counts["message"] += 1
        if log.terminal is RoundTerminal.ALICE_PUBLISHED:
            counts["published"] += 1
        if log.charlie_mode is Mode.CHECK:
            counts["charlie_checks"] += 1
        if log.terminal is RoundTerminal.CHARLIE_MEASURED:
            counts["charlie_measured"] += 1
    return counts


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


def efficiencies(session: SessionResult) -> Efficiencies:
    """
    Key efficiency eta_q = q_u / q_t and communication efficiency
    eta_t = q_u / (q_t + b_t), where q_u is the sifted key length, q_t the
    photons Bob coded and b_t the classical symbols Alice published.
    """
    counts = _count(session)
    q_u = len(session.key)
    return Efficiencies(
        eta_q=_ratio(q_u, counts["message"]),
        eta_t=_ratio(q_u, counts["message"] + counts["published"]),
    )


def overall_efficiencies(session: SessionResult) -> Efficiencies:
    """Same as `efficiencies` with every round counted as a spent photon."""
    counts = _count(session)
    q_u = len(session.key)
    rounds = len(session.logs)
    return Efficiencies(eta_q=_ratio(q_u, rounds), eta_t=_ratio(q_u, rounds + counts["published"]))


def pns_report(mu: float, eta_opt: float, eta_d: float, margin: float = 10.0) -> PnsReport:
    """
    Raises:
        InvalidArgumentError: If mu <= 0 or an efficiency is outside [0, 1]
    """
    for name, value in (("eta_opt", eta_opt), ("eta_d", eta_d)):
        if not 0.0 <= value <= 1.0:
            raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value}")
    if margin <= 0:
        raise InvalidArgumentError(f"margin must be > 0, got {margin}")
    return PnsReport(
        mu=mu,
        p_cu=eta_opt * eta_d,
        multi_given_nonempty=multi_photon_given_nonempty(mu),
        approximation=multi_photon_approximation(mu),
        margin=margin,
    )


def session_metrics(session: SessionResult) -> SessionMetrics:
    cfg = session.protocol
    ch = session.channel
    rates = qber(session.checks)
    eff = efficiencies(session)
    overall = overall_efficiencies(session)
    counts = _count(session)
    checks = session.checks
    useful = len(checks.z_checks) + len(checks.x_checks)

    multi = None
    condition = None
    if ch.mu:
        report = pns_report(ch.mu, ch.eta_opt, ch.eta_d, cfg.detection_margin)
        multi = report.multi_given_nonempty
        condition = report.passed

    alarm = any(
        multi_photon_alarm(stats, ch.mu, cfg.alarm_factor)
        for stats in (session.upstream_stats, session.probe_stats)
    )

    return SessionMetrics(
        rounds=len(session.logs),
        key_length=len(session.key),
        key_bits=key_bits(len(session.key), cfg.d),
        key_mismatches=session.key.mismatches,
        qber_upstream=rates.qber_upstream,
        qber_z=rates.qber_z,
        qber_x=rates.qber_x,
        checks_upstream=len(checks.bob_upstream_checks),
        checks_z=len(checks.z_checks),
        checks_x=len(checks.x_checks),
        p_eu_empirical=_ratio(useful, counts["charlie_measured"]),
        p_eu_expected=useful_check_probability(cfg.p_d, cfg.p_cz),
        eta_q=eff.eta_q,
        eta_t=eff.eta_t,
        eta_q_overall=overall.eta_q,
        eta_t_overall=overall.eta_t,
        p_cu=ch.eta_opt * ch.eta_d,
        multi_given_nonempty=multi,
        pns_condition=condition,
        charlie_yield=_ratio(counts["charlie_measured"], counts["charlie_checks"]),
        multi_photon_rate=session.upstream_stats.multi_fraction,
        probe_multi_rate=session.probe_stats.multi_fraction,
        multi_photon_alarm=alarm,
        eve_info=eve_information(session, session.eve_records),
    )

