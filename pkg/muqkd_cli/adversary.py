"""
Attack strategies on the two quantum lines of a network cell

Eve can sit on the Bob->Charlie line, the Charlie->Alice line, or be the
server itself. Strategies are stateless between rounds; the session owns the
list of EveRecord entries they produce.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from enum import Enum
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .channel import Pulse, PulseOrigin, transmit
from .errors import InvalidArgumentError, UnsupportedStrategyError
from .qudit import (
    STATE_ATOL,
    Basis,
    BasisKind,
    QuditOperator,
    QuditState,
    apply,
    basis_state,
    eigen_index,
    hadamard,
    identity,
    measure,
)

if TYPE_CHECKING:
    from .protocol import CharlieChoice, SessionResult

logger = logging.getLogger(__name__)


class AttackKind(Enum):
    NONE = "none"
    INTERCEPT_RESEND_Z = "intercept_resend_Z"
    INTERCEPT_RESEND_X = "intercept_resend_X"
    EPR_SERVER = "epr_server"
    PNS_SPLIT = "pns_split"
    TROJAN_HORSE = "trojan_horse"


class Segment(Enum):
    BOB_CHARLIE = "bob_charlie"
    CHARLIE_ALICE = "charlie_alice"
    BOTH = "both"

    def covers(self, segment: "Segment") -> bool:
        return self is Segment.BOTH or self is segment


class BellOutcome(Enum):
    PSI_MINUS = "psi_minus"
    PSI_PLUS = "psi_plus"
    PHI_MINUS = "phi_minus"
    PHI_PLUS = "phi_plus"


@dataclass(frozen=True)
class EveRecord:
    round_id: int
    learned_shift: Optional[int] = None
    caused_disturbance: bool = False
    bell_outcome: Optional[BellOutcome] = None


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Pure two-qubit state over |00>, |01>, |10>, |11> (first qubit is the high bit)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != 4:
            raise InvalidArgumentError(f"two-qubit state needs 4 amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > STATE_ATOL:
            raise InvalidArgumentError(f"two-qubit state is not normalized (norm^2 = {norm:.12g})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def product(cls, first: QuditState, second: QuditState) -> "TwoQubitState":
        if first.dim != 2 or second.dim != 2:
            raise InvalidArgumentError("two-qubit states are built from qubits")
        return cls(np.kron(first.amplitudes, second.amplitudes))

    def apply_local(self, op: QuditOperator, qubit: int) -> "TwoQubitState":
        """Apply a single-qubit operator to qubit 0 or 1."""
        if op.dim != 2 or qubit not in (0, 1):
            raise InvalidArgumentError("apply_local needs a 2x2 operator and qubit 0 or 1")
        full = np.kron(op.matrix, np.eye(2)) if qubit == 0 else np.kron(np.eye(2), op.matrix)
        return TwoQubitState(full @ self.amplitudes)

    def equals(self, other: "TwoQubitState", atol: float = STATE_ATOL) -> bool:
        return abs(abs(np.vdot(self.amplitudes, other.amplitudes)) - 1.0) <= atol


_SQRT_HALF = 1.0 / np.sqrt(2.0)

BELL_STATES: Dict[BellOutcome, TwoQubitState] = {
    BellOutcome.PSI_MINUS: TwoQubitState(np.array([0, 1, -1, 0]) * _SQRT_HALF),
    BellOutcome.PSI_PLUS: TwoQubitState(np.array([0, 1, 1, 0]) * _SQRT_HALF),
    BellOutcome.PHI_MINUS: TwoQubitState(np.array([1, 0, 0, -1]) * _SQRT_HALF),
    BellOutcome.PHI_PLUS: TwoQubitState(np.array([1, 0, 0, 1]) * _SQRT_HALF),
}

SIGMA_X = QuditOperator(np.array([[0, 1], [1, 0]]), name="sigma_x")
SIGMA_Z = QuditOperator(np.array([[1, 0], [0, -1]]), name="sigma_z")
I_SIGMA_Y = QuditOperator(np.array([[0, 1], [-1, 0]]), name="i*sigma_y")

# Bell outcome on (A, T) -> operation relating photon B to the stored photon T
FAKE_PUBLICATION_TABLE: Dict[BellOutcome, QuditOperator] = {
    BellOutcome.PSI_MINUS: identity(2),
    BellOutcome.PSI_PLUS: SIGMA_Z,
    BellOutcome.PHI_MINUS: SIGMA_X,
    BellOutcome.PHI_PLUS: I_SIGMA_Y,
}

# Charlie's coding shift on B, read back from the Bell outcome on (A, B)
_CODING_FROM_BELL = {BellOutcome.PSI_MINUS: 0, BellOutcome.PHI_MINUS: 1}


@dataclass(frozen=True)
class EprRound:
    """What the dishonest server observes and fabricates in one round."""

    record: EveRecord
    bell_outcome: BellOutcome
    charlie_outcome: Optional[int] = None
    alice_published: Optional[int] = None


@dataclass(frozen=True)
class AdversaryStrategy:
    """
    Attack configuration plus per-round hooks for both lines.

    Attributes:
        kind: Which attack to run
        eve_channel_eta: Transmission of Eve's private line (pns_split)
        segments: Lines an intercept-resend Eve attacks
        trojan_photons: Photons per pulse injected by a Trojan-horse server
    """

    kind: AttackKind = AttackKind.NONE
    eve_channel_eta: float = 1.0
    segments: Segment = Segment.BOB_CHARLIE
    trojan_photons: int = 2

    def __post_init__(self):
        if not 0.0 <= self.eve_channel_eta <= 1.0:
            raise InvalidArgumentError(f"eve_channel_eta must lie in [0, 1], got {self.eve_channel_eta}")
        if self.trojan_photons < 2:
            raise InvalidArgumentError(f"trojan_photons must be >= 2, got {self.trojan_photons}")

    @classmethod
    def none(cls) -> "AdversaryStrategy":
        return cls()

    def validate(self, d: int) -> None:
        """Check that the strategy can run in dimension `d`."""
        if self.kind is AttackKind.EPR_SERVER and d != 2:
            raise UnsupportedStrategyError(f"adversary epr_server requires d = 2, got d = {d}")

    @property
    def replaces_lines(self) -> bool:
        """True when the server takes over both lines (EPR attack)."""
        return self.kind is AttackKind.EPR_SERVER

    @property
    def _intercept_basis(self) -> Optional[BasisKind]:
        if self.kind is AttackKind.INTERCEPT_RESEND_Z:
            return BasisKind.Z
        if self.kind is AttackKind.INTERCEPT_RESEND_X:
            return BasisKind.X
        return None

    def on_source(self, pulse: Pulse, prepared: QuditState) -> Pulse:
        """Server-side hook on the freshly emitted pulse."""
        if self.kind is AttackKind.TROJAN_HORSE:
            return Pulse(self.trojan_photons, prepared, PulseOrigin.EVE)
        return pulse

    def on_bob_charlie(
        self,
        round_id: int,
        pulse: Pulse,
        eta_opt: float,
        rng: np.random.Generator,
        mu: Optional[float] = None,
    ) -> Tuple[Pulse, Optional[EveRecord]]:
        """Bob -> Charlie line, including the honest fibre loss. `mu` is the source mean."""
        if pulse.is_empty:
            return pulse, None

        if self.kind is AttackKind.PNS_SPLIT:
            forward = pns_forward_probability(mu, eta_opt, self.eve_channel_eta)
            return pns_attack(pulse, self.eve_channel_eta, rng, round_id=round_id, forward_probability=forward)

        if self.kind is AttackKind.TROJAN_HORSE:
            if pulse.photon_count < 2:
                return transmit(pulse, eta_opt, rng), None
            kept = measure(pulse.state, Basis(BasisKind.Z, pulse.state.dim), rng)
            record = EveRecord(round_id=round_id, learned_shift=kept.outcome)
            return transmit(pulse.with_count(pulse.photon_count - 1), eta_opt, rng), record

        basis = self._intercept_basis
        if basis is not None and self.segments.covers(Segment.BOB_CHARLIE):
            resent, record = intercept_resend(pulse, Basis(basis, pulse.state.dim), rng, round_id=round_id)
            return transmit(resent, eta_opt, rng), record

        return transmit(pulse, eta_opt, rng), None

    def on_charlie_alice(
        self, round_id: int, pulse: Pulse, eta_opt: float, rng: np.random.Generator
    ) -> Tuple[Pulse, Optional[EveRecord]]:
        """Charlie -> Alice line, including the honest fibre loss."""
        basis = self._intercept_basis
        if pulse.is_empty or basis is None or not self.segments.covers(Segment.CHARLIE_ALICE):
            return transmit(pulse, eta_opt, rng), None
        resent, record = intercept_resend(pulse, Basis(basis, pulse.state.dim), rng, round_id=round_id)
        # the outcome here is (j_B + j_C) mod d, which Alice publishes anyway
        record = EveRecord(round_id=round_id, caused_disturbance=record.caused_disturbance)
        return transmit(resent, eta_opt, rng), record


def intercept_resend(
    photon: Pulse, basis: Basis, rng: np.random.Generator, round_id: int = -1
) -> Tuple[Pulse, EveRecord]:
    """
    Measure the pulse in `basis` and resend the collapsed eigenstate.

    Every photon of the resent pulse carries the collapsed state. A Z-basis
    outcome is kept as the learned shift.
    """
    if photon.is_empty:
        raise InvalidArgumentError("intercept_resend needs a non-empty pulse")
    result = measure(photon.state, basis, rng)
    record = EveRecord(
        round_id=round_id,
        learned_shift=result.outcome if basis.kind is BasisKind.Z else None,
        caused_disturbance=not photon.state.equals(result.collapsed),
    )
    return Pulse(photon.photon_count, result.collapsed, PulseOrigin.EVE), record


PNS_LOSS_ATOL = 1e-9


@lru_cache(maxsize=64)
def pns_forward_probability(mu: Optional[float], eta_opt: float, eve_channel_eta: float) -> float:
    """
    Share of split multi-photon pulses Eve passes on so that Charlie sees the
    honest line's yield.

    The honest line delivers a pulse with probability 1 - e^{-mu eta_opt}.
    Eve only passes n - 1 photons of pulses with n >= 2 through her own line,
    which delivers P(n >= 2) - sum_{n>=2} P(n) (1 - eta_e)^{n-1}. When that is
    not enough Eve forwards everything and the yield drops.

    Returns:
        Forwarding probability in [0, 1]; 1 for an ideal source
    """
    if not mu:
        return 1.0
    honest = -math.expm1(-mu * eta_opt)
    multi = -math.expm1(-mu) - mu * math.exp(-mu)
    loss = 1.0 - eve_channel_eta
    leak = 0.0
    if loss > PNS_LOSS_ATOL:
        leak = (math.exp(-mu * eve_channel_eta) - math.exp(-mu) - mu * math.exp(-mu) * loss) / loss
    reach = multi - leak
    if reach <= 0.0 or honest >= reach:
        return 1.0
    return honest / reach


def pns_attack(
    pulse: Pulse,
    eve_channel_eta: float,
    rng: np.random.Generator,
    round_id: int = -1,
    forward_probability: float = 1.0,
) -> Tuple[Pulse, EveRecord]:
    """
    Photon-number splitting on a faint pulse.

    Empty and single-photon pulses are blocked. From a multi-photon pulse Eve
    keeps one photon and measures it in Z_d. With probability
    `forward_probability` she sends the other n - 1 photons over her own line
    with transmission `eve_channel_eta`; otherwise she blocks them too.
    """
    if not 0.0 <= forward_probability <= 1.0:
        raise InvalidArgumentError(f"forward_probability must lie in [0, 1], got {forward_probability}")
    if pulse.photon_count <= 1:
        return Pulse(0, None, PulseOrigin.EVE), EveRecord(round_id=round_id)
    kept = measure(pulse.state, Basis(BasisKind.Z, pulse.state.dim), rng)
    record = EveRecord(round_id=round_id, learned_shift=kept.outcome)
    if forward_probability < 1.0 and rng.random() >= forward_probability:
        return Pulse(0, None, PulseOrigin.EVE), record
    remainder = Pulse(pulse.photon_count - 1, pulse.state, PulseOrigin.EVE)
    return transmit(remainder, eve_channel_eta, rng), record


def bell_measure(s: TwoQubitState, rng: np.random.Generator) -> Tuple[BellOutcome, TwoQubitState]:
    """Projective measurement onto the four Bell states."""
    outcomes = list(BELL_STATES)
    probs = np.array([abs(np.vdot(BELL_STATES[o].amplitudes, s.amplitudes)) ** 2 for o in outcomes])
    probs = probs / probs.sum()
    index = min(int(np.searchsorted(np.cumsum(probs), rng.random(), side="right")), len(outcomes) - 1)
    outcome = outcomes[index]
    return outcome, BELL_STATES[outcome]


def _teleport_onto_b(stored: QuditState, rng: np.random.Generator) -> Tuple[BellOutcome, QuditState]:
    """
    Bell-measure (A, T) of |T> (x) |psi->_AB and return the outcome plus the
    state left on photon B.
    """
    pair = BELL_STATES[BellOutcome.PSI_MINUS].amplitudes.reshape(2, 2)
    joint = np.einsum("t,ab->tab", stored.amplitudes, pair)
    outcomes = list(BELL_STATES)
    # Bell vectors are indexed (A, T) with A the high bit
    branches = [np.einsum("at,tab->b", BELL_STATES[o].amplitudes.reshape(2, 2).conj(), joint) for o in outcomes]
    probs = np.array([float(np.vdot(b, b).real) for b in branches])
    probs = probs / probs.sum()
    index = min(int(np.searchsorted(np.cumsum(probs), rng.random(), side="right")), len(outcomes) - 1)
    branch = branches[index]
    return outcomes[index], QuditState(branch / np.linalg.norm(branch))


def epr_attack_round(
    bob_output: QuditState, charlie: "CharlieChoice", rng: np.random.Generator, round_id: int = -1
) -> EprRound:
    """
    One round of the dishonest-server EPR attack (qubits only).

    The server stores Bob's photon T and sends Charlie photon B of |psi->_AB.
    If Charlie codes B and returns it, the server reads j_B from T in Z and
    j_C from a Bell measurement on (A, B), then publishes (j_B + j_C) mod 2.
    If Charlie measures B, the server Bell-measures (A, T); B is then left in
    one of T's images under I, sigma_z, sigma_x, i*sigma_y.

    Raises:
        UnsupportedStrategyError: If the photon is not a qubit
    """
    if bob_output.dim != 2:
        raise UnsupportedStrategyError(f"the EPR attack is defined for d = 2, got d = {bob_output.dim}")

    if charlie.is_message:
        pair = BELL_STATES[BellOutcome.PSI_MINUS]
        if charlie.shift:
            pair = pair.apply_local(SIGMA_X, qubit=1)
        j_b = measure(bob_output, Basis(BasisKind.Z, 2), rng).outcome
        outcome, _ = bell_measure(pair, rng)
        j_c = _CODING_FROM_BELL[outcome]
        record = EveRecord(round_id=round_id, learned_shift=j_b, bell_outcome=outcome)
        return EprRound(record=record, bell_outcome=outcome, alice_published=(j_b + j_c) % 2)

    outcome, photon_b = _teleport_onto_b(bob_output, rng)
    result = measure(photon_b, Basis(charlie.basis, 2), rng)
    record = EveRecord(
        round_id=round_id,
        caused_disturbance=not photon_b.equals(bob_output),
        bell_outcome=outcome,
    )
    return EprRound(record=record, bell_outcome=outcome, charlie_outcome=result.outcome)


def fake_initial_announcement(outcome: BellOutcome, decoy: bool) -> int:
    """
    Initial-state index the server announces to cover a check round.

    The table operation P maps T onto B. Bob's coding shift commutes with P up
    to a phase, while a decoy Hadamard conjugates it, so the announced initial
    state is H^dag P H |0> on decoy rounds and P |0> otherwise.
    """
    op = FAKE_PUBLICATION_TABLE[outcome]
    if decoy:
        op = hadamard(2).adjoint().compose(op).compose(hadamard(2))
    index = eigen_index(apply(op, basis_state(2, 0)), Basis(BasisKind.Z, 2))
    if index is None:
        raise UnsupportedStrategyError("fake publication does not map |0> onto a basis state")
    return index


def forget_decoy_rounds(records: Iterable[EveRecord], decoy_rounds: Set[int]) -> List[EveRecord]:
    """Drop learned values on rounds Bob announced as decoys."""
    out = []
    for record in records:
        if record.round_id in decoy_rounds and record.learned_shift is not None:
            record = EveRecord(
                round_id=record.round_id,
                caused_disturbance=record.caused_disturbance,
                bell_outcome=record.bell_outcome,
            )
        out.append(record)
    return out


def eve_information(session: "SessionResult", records: Sequence[EveRecord]) -> float:
    """Fraction of sifted key positions whose j_B Eve learned exactly."""
    key = session.key
    if len(key) == 0:
        return 0.0
    learned: Dict[int, Set[int]] = {}
    for record in records:
        if record.learned_shift is not None:
            learned.setdefault(record.round_id, set()).add(record.learned_shift)
    hits = sum(1 for pos, value in zip(key.positions, key.bob_key) if value in learned.get(pos, ()))
    return hits / len(key)
