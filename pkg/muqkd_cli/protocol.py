"""
Round engine for one network cell: server Alice, sender Bob, receiver Charlie

Each round the server prepares |0> and sends it to Bob. Bob either measures
it in Z_d (checking mode) or codes it with a shift U_B and, with probability
p_d, turns it into a decoy with H_d. Charlie either codes with U_C and
forwards to Alice, or measures in Z_d / X_d. Alice measures in Z_d and
publishes the difference from |0>. Sifting turns the round logs into the
shared key and the public check samples.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from .adversary import AdversaryStrategy, EveRecord, epr_attack_round, fake_initial_announcement, forget_decoy_rounds
from .channel import ChannelConfig, MultiPhotonStats, PhotonNumberMonitor, Pulse, PulseOrigin, click, detect, emit_pulse
from .errors import InvalidArgumentError, ProtocolAbortError
from .qudit import Basis, BasisKind, MeasurementRecord, QuditState, apply, basis_state, hadamard, measure, shift_op

if TYPE_CHECKING:
    from .metrics import SessionMetrics

logger = logging.getLogger(__name__)

MAX_SEED = 2 ** 64 - 1


class Mode(Enum):
    CHECK = "check"
    MESSAGE = "message"


class RoundTerminal(Enum):
    BOB_MEASURED = "bob_measured"
    CHARLIE_MEASURED = "charlie_measured"
    ALICE_PUBLISHED = "alice_published"
    CONSUMED_BY_SAMPLING = "consumed_by_sampling"
    LOST = "lost"


def _probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class ProtocolConfig:
    """
    Protocol parameters.

    Attributes:
        d: Photon dimension
        n_rounds: Rounds per session
        p_bm: Probability that Bob chooses the message-coding mode
        p_cm: Probability that Charlie chooses the message-coding mode
        p_d: Probability that Bob turns a coded photon into a decoy (< 1/2)
        p_cz: Probability that a checking Charlie measures in Z_d (defaults to p_d)
        sample_fraction: Fraction of rounds whose incoming pulse Bob consumes
            with a photon-number check
        probe_fraction: Fraction of coded pulses Bob marks as downstream
            probes; Charlie consumes them on arrival
        server_assisted_checks: Check references come from the server's
            announcement of the initial state instead of the agreed |0>
        alarm_factor: Multi-photon alarm threshold, in units of the source's
            expected multi-photon fraction
        detection_margin: Required ratio P_cu / P(n>1|n>0)
    """

    d: int
    n_rounds: int
    p_bm: float
    p_cm: float
    p_d: float
    p_cz: Optional[float] = None
    sample_fraction: float = 0.0
    probe_fraction: float = 0.0
    server_assisted_checks: bool = False
    alarm_factor: float = 10.0
    detection_margin: float = 10.0

    def __post_init__(self):
        if isinstance(self.d, bool) or not isinstance(self.d, int) or self.d < 2:
            raise InvalidArgumentError(f"d must be an integer >= 2, got {self.d!r}")
        if isinstance(self.n_rounds, bool) or not isinstance(self.n_rounds, int) or self.n_rounds < 1:
            raise InvalidArgumentError(f"n_rounds must be a positive integer, got {self.n_rounds!r}")
        for name in ("p_bm", "p_cm", "p_d", "sample_fraction", "probe_fraction"):
            _probability(name, getattr(self, name))
        if self.p_d >= 0.5:
            raise InvalidArgumentError(f"p_d must be < 0.5, got {self.p_d}")
        if self.p_cz is None:
            object.__setattr__(self, "p_cz", self.p_d)
        _probability("p_cz", self.p_cz)
        if self.alarm_factor <= 0:
            raise InvalidArgumentError(f"alarm_factor must be > 0, got {self.alarm_factor}")
        if self.detection_margin <= 0:
            raise InvalidArgumentError(f"detection_margin must be > 0, got {self.detection_margin}")

    @property
    def p_cx(self) -> float:
        return 1.0 - self.p_cz


@dataclass(frozen=True)
class BobChoice:
    mode: Mode
    shift: int = 0
    decoy: bool = False
    probe: bool = False


@dataclass(frozen=True)
class BobAction:
    choice: BobChoice
    measurement: Optional[MeasurementRecord] = None
    lost: bool = False

    @property
    def decoy_index(self) -> Optional[int]:
        """Index l of the decoy state |l>_x, which reuses the coding shift."""
        if self.choice.mode is Mode.MESSAGE and self.choice.decoy:
            return self.choice.shift
        return None


@dataclass(frozen=True)
class CharlieChoice:
    mode: Mode
    shift: int = 0
    basis: Optional[BasisKind] = None

    @property
    def is_message(self) -> bool:
        return self.mode is Mode.MESSAGE


@dataclass(frozen=True)
class CharlieAction:
    choice: CharlieChoice
    measurement: Optional[MeasurementRecord] = None
    lost: bool = False


@dataclass
class RoundLog:
    """Everything that happened in one round, public or private."""

    round_id: int
    terminal: RoundTerminal = RoundTerminal.LOST
    source_photons: int = 0
    bob_mode: Optional[Mode] = None
    bob_shift: Optional[int] = None
    decoy: Optional[int] = None
    bob_measurement: Optional[int] = None
    probe: bool = False
    probe_photons: Optional[int] = None
    probe_arrived: bool = False
    charlie_mode: Optional[Mode] = None
    charlie_shift: Optional[int] = None
    charlie_measurement: Optional[Tuple[BasisKind, int]] = None
    alice_published: Optional[int] = None
    announced_initial: int = 0
    consumed_by_sampling: bool = False
    eve_touched: List[str] = field(default_factory=list)


@dataclass
class SiftedKeyPair:
    bob_key: List[int] = field(default_factory=list)
    charlie_key: List[int] = field(default_factory=list)
    positions: List[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def mismatches(self) -> int:
        return sum(1 for b, c in zip(self.bob_key, self.charlie_key) if b != c)


@dataclass
class CheckSamples:
    """Public check samples as (expected, observed) pairs."""

    z_checks: List[Tuple[int, int]] = field(default_factory=list)
    x_checks: List[Tuple[int, int]] = field(default_factory=list)
    bob_upstream_checks: List[Tuple[int, int]] = field(default_factory=list)


@dataclass
class SessionResult:
    protocol: ProtocolConfig
    channel: ChannelConfig
    adversary: AdversaryStrategy
    seed: int
    trial: int
    logs: List[RoundLog]
    key: SiftedKeyPair
    checks: CheckSamples
    eve_records: List[EveRecord]
    upstream_stats: MultiPhotonStats
    probe_stats: MultiPhotonStats
    probes_sent: int = 0
    metrics: Optional["SessionMetrics"] = None


def session_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Generator for trial `trial` of a run seeded with `seed` (counter-based split)."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed <= MAX_SEED:
        raise InvalidArgumentError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    if trial < 0:
        raise InvalidArgumentError(f"trial must be >= 0, got {trial}")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(trial),)))


def alice_prepare(cfg: ProtocolConfig) -> QuditState:
    """The server's traveling photon always starts in |0>."""
    return basis_state(cfg.d, 0)


def bob_choose(cfg: ProtocolConfig, rng: np.random.Generator) -> BobChoice:
    if rng.random() >= cfg.p_bm:
        return BobChoice(Mode.CHECK)
    shift = int(rng.integers(cfg.d))
    decoy = bool(rng.random() < cfg.p_d)
    probe = cfg.probe_fraction > 0 and bool(rng.random() < cfg.probe_fraction)
    return BobChoice(Mode.MESSAGE, shift=shift, decoy=decoy, probe=probe)


def charlie_choose(cfg: ProtocolConfig, rng: np.random.Generator) -> CharlieChoice:
    if rng.random() < cfg.p_cm:
        return CharlieChoice(Mode.MESSAGE, shift=int(rng.integers(cfg.d)))
    basis = BasisKind.Z if rng.random() < cfg.p_cz else BasisKind.X
    return CharlieChoice(Mode.CHECK, basis=basis)


def bob_process(
    photon: Pulse,
    cfg: ProtocolConfig,
    rng: np.random.Generator,
    choice: Optional[BobChoice] = None,
    eta_d: float = 1.0,
) -> Tuple[BobAction, Optional[Pulse]]:
    """
    Bob's step. Checking mode measures in Z_d and consumes the photon; message
    mode codes with U_B and optionally applies H_d to make the decoy |j_B>_x.
    Every photon of the pulse undergoes the same operation.
    """
    choice = choice or bob_choose(cfg, rng)
    if photon.is_empty:
        return BobAction(choice, lost=True), None
    if choice.mode is Mode.CHECK:
        if not detect(photon, eta_d, rng):
            return BobAction(choice, lost=True), None
        return BobAction(choice, measurement=measure(photon.state, Basis(BasisKind.Z, cfg.d), rng)), None
    state = apply(shift_op(cfg.d, choice.shift), photon.state)
    if choice.decoy:
        state = apply(hadamard(cfg.d), state)
    return BobAction(choice), photon.with_state(state)


def charlie_process(
    photon: Pulse,
    cfg: ProtocolConfig,
    rng: np.random.Generator,
    choice: Optional[CharlieChoice] = None,
    eta_d: float = 1.0,
) -> Tuple[CharlieAction, Optional[Pulse]]:
    """Charlie's step: code with U_C and forward, or measure in his chosen basis."""
    choice = choice or charlie_choose(cfg, rng)
    if photon.is_empty:
        return CharlieAction(choice, lost=True), None
    if choice.is_message:
        return CharlieAction(choice), photon.with_state(apply(shift_op(cfg.d, choice.shift), photon.state))
    if choice.basis is None:
        raise InvalidArgumentError("a checking Charlie needs a measuring basis")
    if not detect(photon, eta_d, rng):
        return CharlieAction(choice, lost=True), None
    return CharlieAction(choice, measurement=measure(photon.state, Basis(choice.basis, cfg.d), rng)), None


def alice_measure_publish(
    photon: Pulse,
    cfg: ProtocolConfig,
    rng: np.random.Generator,
    eta_d: float = 1.0,
    initial: int = 0,
) -> Optional[int]:
    """
    Measure in Z_d and return the published difference (j_final - initial) mod d.
    None means the round was lost (empty pulse or no click).
    """
    if photon.is_empty or not detect(photon, eta_d, rng):
        return None
    final = measure(photon.state, Basis(BasisKind.Z, cfg.d), rng).outcome
    return (final - initial) % cfg.d


def _abort(log: RoundLog, reason: str) -> None:
    raise ProtocolAbortError(f"round {log.round_id}: {reason}")


def _check_announcements(log: RoundLog, d: int) -> None:
    terminals = [
        log.bob_measurement is not None,
        log.charlie_measurement is not None,
        log.alice_published is not None,
        log.consumed_by_sampling,
    ]
    if sum(terminals) > 1:
        _abort(log, "more than one terminal event announced")
    for name in ("bob_shift", "decoy", "bob_measurement", "charlie_shift", "alice_published", "announced_initial"):
        value = getattr(log, name)
        if value is not None and not 0 <= value < d:
            _abort(log, f"{name} = {value} outside [0, {d})")
    if log.decoy is not None and (log.bob_mode is not Mode.MESSAGE or log.decoy != log.bob_shift):
        _abort(log, "decoy announced for a round Bob did not code")

    if log.terminal is RoundTerminal.BOB_MEASURED:
        if log.bob_mode is not Mode.CHECK or log.bob_measurement is None:
            _abort(log, "upstream check without a checking-mode measurement")
    elif log.terminal is RoundTerminal.CHARLIE_MEASURED:
        if log.bob_mode is not Mode.MESSAGE or log.bob_shift is None:
            _abort(log, "Charlie measured a photon Bob did not code")
        if log.charlie_mode is not Mode.CHECK or log.charlie_measurement is None:
            _abort(log, "Charlie measurement missing for a checking round")
        if not 0 <= log.charlie_measurement[1] < d:
            _abort(log, "Charlie outcome out of range")
    elif log.terminal is RoundTerminal.ALICE_PUBLISHED:
        if log.bob_mode is not Mode.MESSAGE or log.charlie_mode is not Mode.MESSAGE:
            _abort(log, "Alice published for a round that was not coded by both users")
        if log.alice_published is None or log.charlie_shift is None or log.bob_shift is None:
            _abort(log, "key round without publication or coding shifts")
    elif log.terminal is RoundTerminal.CONSUMED_BY_SAMPLING:
        if not log.consumed_by_sampling:
            _abort(log, "sampled round not marked as consumed")
    elif any(terminals):
        _abort(log, "lost round carries a terminal event")


def sift(logs: Sequence[RoundLog], d: int) -> Tuple[SiftedKeyPair, CheckSamples]:
    """
    Turn round logs into the sifted key and public check samples.

    Announcement order: Charlie names his checking rounds and bases, then Bob
    names the decoy rounds and reveals j_B (or l) for Charlie's checking
    rounds only; Alice's publications are already public.

    Key rounds: both users coded, no decoy, Alice published. Bob keeps j_B,
    Charlie computes (published - j_C) mod d. Check samples pair a non-decoy
    photon with a Z_d measurement or a decoy with an X_d measurement; the
    other two combinations carry no information and are dropped. Decoys that
    reached Alice are deleted.

    Raises:
        ProtocolAbortError: If announcements contradict each other
    """
    key = SiftedKeyPair()
    checks = CheckSamples()
    seen = set()
    for log in logs:
        if log.round_id in seen:
            _abort(log, "duplicate round id")
        seen.add(log.round_id)
        _check_announcements(log, d)

        if log.terminal is RoundTerminal.BOB_MEASURED:
            checks.bob_upstream_checks.append((log.announced_initial, log.bob_measurement))
        elif log.terminal is RoundTerminal.CHARLIE_MEASURED:
            basis, outcome = log.charlie_measurement
            reference = (log.bob_shift + log.announced_initial) % d
            if log.decoy is None and basis is BasisKind.Z:
                checks.z_checks.append((reference, outcome))
            elif log.decoy is not None and basis is BasisKind.X:
                checks.x_checks.append((reference, outcome))
        elif log.terminal is RoundTerminal.ALICE_PUBLISHED and log.decoy is None:
            key.positions.append(log.round_id)
            key.bob_key.append(log.bob_shift)
            key.charlie_key.append((log.alice_published - log.charlie_shift) % d)
    return key, checks


class _RoundRunner:
    """Drives single rounds for one session; owns the monitors and the rng."""

    def __init__(self, cfg: ProtocolConfig, ch: ChannelConfig, adv: AdversaryStrategy, rng: np.random.Generator):
        self.cfg = cfg
        self.ch = ch
        self.adv = adv
        self.rng = rng
        self.upstream = PhotonNumberMonitor(cfg.sample_fraction) if cfg.sample_fraction > 0 else None
        self.probe_stats = MultiPhotonStats()
        self.probes_sent = 0
        self.records: List[EveRecord] = []

    def _eve(self, log: RoundLog, record: Optional[EveRecord], where: str) -> None:
        if record is not None:
            self.records.append(record)
            log.eve_touched.append(where)

    def _probe_arrival(self, log: RoundLog, arrived: bool) -> RoundLog:
        log.probe_arrived = arrived
        if arrived:
            self.probe_stats.record(log.probe_photons)
        log.consumed_by_sampling = True
        log.terminal = RoundTerminal.CONSUMED_BY_SAMPLING
        return log

    def run(self, round_id: int) -> RoundLog:
        cfg, ch, rng = self.cfg, self.ch, self.rng
        log = RoundLog(round_id=round_id)

        prepared = alice_prepare(cfg)
        pulse = self.adv.on_source(emit_pulse(ch, prepared, rng), prepared)
        log.source_photons = pulse.photon_count
        if pulse.origin_tag is PulseOrigin.EVE:
            log.eve_touched.append("source")

        if self.upstream is not None and self.upstream.inspect(pulse, rng):
            log.consumed_by_sampling = True
            log.terminal = RoundTerminal.CONSUMED_BY_SAMPLING
            return log

        bob, pulse = bob_process(pulse, cfg, rng, eta_d=ch.eta_d)
        log.bob_mode = bob.choice.mode
        if bob.choice.mode is Mode.MESSAGE:
            log.bob_shift = bob.choice.shift
            log.decoy = bob.decoy_index
            log.probe = bob.choice.probe
        if bob.lost:
            return log
        if bob.measurement is not None:
            log.bob_measurement = bob.measurement.outcome
            log.terminal = RoundTerminal.BOB_MEASURED
            return log

        if log.probe:
            log.probe_photons = pulse.photon_count
            self.probes_sent += 1

        if self.adv.replaces_lines:
            return self._run_epr_downstream(log, pulse.state)

        pulse, record = self.adv.on_bob_charlie(round_id, pulse, ch.eta_opt, rng, mu=ch.mu)
        self._eve(log, record, "bob_charlie")
        if log.probe:
            return self._probe_arrival(log, detect(pulse, ch.eta_d, rng))

        charlie, pulse = charlie_process(pulse, cfg, rng, eta_d=ch.eta_d)
        log.charlie_mode = charlie.choice.mode
        if charlie.choice.is_message:
            log.charlie_shift = charlie.choice.shift
        if charlie.lost:
            return log
        if charlie.measurement is not None:
            log.charlie_measurement = (charlie.choice.basis, charlie.measurement.outcome)
            log.terminal = RoundTerminal.CHARLIE_MEASURED
            return log

        pulse, record = self.adv.on_charlie_alice(round_id, pulse, ch.eta_opt, rng)
        self._eve(log, record, "charlie_alice")
        published = alice_measure_publish(pulse, cfg, rng, eta_d=ch.eta_d)
        if published is None:
            return log
        log.alice_published = published
        log.terminal = RoundTerminal.ALICE_PUBLISHED
        return log

    def _run_epr_downstream(self, log: RoundLog, stored: QuditState) -> RoundLog:
        """The server holds Bob's photon and answers Charlie with half of an EPR pair."""
        cfg, rng = self.cfg, self.rng
        if log.probe:
            return self._probe_arrival(log, click(1, self.ch.eta_d, rng))

        charlie = charlie_choose(cfg, rng)
        log.charlie_mode = charlie.mode
        if charlie.is_message:
            log.charlie_shift = charlie.shift
        elif not click(1, self.ch.eta_d, rng):
            return log

        epr = epr_attack_round(stored, charlie, rng, round_id=log.round_id)
        self._eve(log, epr.record, "epr_server")
        if charlie.is_message:
            log.alice_published = epr.alice_published
            log.terminal = RoundTerminal.ALICE_PUBLISHED
            return log

        log.charlie_measurement = (charlie.basis, epr.charlie_outcome)
        if cfg.server_assisted_checks:
            log.announced_initial = fake_initial_announcement(epr.bell_outcome, decoy=log.decoy is not None)
        log.terminal = RoundTerminal.CHARLIE_MEASURED
        return log


def run_session(
    cfg: ProtocolConfig,
    ch: ChannelConfig,
    adv: Optional[AdversaryStrategy] = None,
    seed: int = 0,
    trial: int = 0,
) -> SessionResult:
    """
    Run `cfg.n_rounds` rounds and return logs, sifted key, checks and metrics.

    The result depends only on the arguments: the same seed and trial give an
    identical SessionResult.

    Raises:
        InvalidArgumentError: On an invalid seed
        UnsupportedStrategyError: If the adversary cannot run in dimension d
    """
    from .metrics import session_metrics

    adv = adv or AdversaryStrategy.none()
    adv.validate(cfg.d)
    rng = session_rng(seed, trial)
    runner = _RoundRunner(cfg, ch, adv, rng)

    logger.info(
        "session seed=%s trial=%s: d=%d rounds=%d adversary=%s",
        seed, trial, cfg.d, cfg.n_rounds, adv.kind.value,
    )
    logs = [runner.run(i) for i in range(cfg.n_rounds)]

    decoys = {log.round_id for log in logs if log.decoy is not None}
    records = forget_decoy_rounds(runner.records, decoys)
    key, checks = sift(logs, cfg.d)

    result = SessionResult(
        protocol=cfg,
        channel=ch,
        adversary=adv,
        seed=seed,
        trial=trial,
        logs=logs,
        key=key,
        checks=checks,
        eve_records=records,
        upstream_stats=runner.upstream.stats if runner.upstream is not None else MultiPhotonStats(),
        probe_stats=runner.probe_stats,
        probes_sent=runner.probes_sent,
    )
    result.metrics = session_metrics(result)
    if result.metrics.multi_photon_alarm:
        logger.warning(
            "multi-photon alarm (seed=%s trial=%s): upstream=%s probes=%s",
            seed, trial, result.metrics.multi_photon_rate, result.metrics.probe_multi_rate,
        )
    logger.info("session seed=%s trial=%s: key length %d", seed, trial, len(key))
    return result
