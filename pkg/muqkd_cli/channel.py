"""
Physical layer: photon sources, fibre loss, detectors and photon-number checks

A faint-laser source emits n photons with Poisson probability
P(n, mu) = mu^n e^{-mu} / n!. All photons of one pulse share the same
polarization state. Loss removes photons independently; a detector with
efficiency eta_d clicks with probability 1 - (1 - eta_d)^n. There are no dark
counts, so an empty pulse never clicks.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidArgumentError, require
from .qudit import QuditState

logger = logging.getLogger(__name__)


class PulseOrigin(Enum):
    SERVER = "server"
    EVE = "eve"


@dataclass(frozen=True)
class Pulse:
    """A light signal: photon number plus the state shared by its photons."""

    photon_count: int
    state: Optional[QuditState] = None
    origin_tag: PulseOrigin = PulseOrigin.SERVER

    def __post_init__(self):
        if self.photon_count < 0:
            raise InvalidArgumentError(f"photon_count must be >= 0, got {self.photon_count}")
        if (self.photon_count > 0) != (self.state is not None):
            raise InvalidArgumentError("a pulse carries a state if and only if it holds photons")

    @property
    def is_empty(self) -> bool:
        return self.photon_count == 0

    def with_count(self, n: int) -> "Pulse":
        """Same pulse with `n` photons left (state dropped when n = 0)."""
        return replace(self, photon_count=n, state=self.state if n > 0 else None)

    def with_state(self, state: QuditState) -> "Pulse":
        require(not self.is_empty, "cannot set the state of an empty pulse")
        return replace(self, state=state)


@dataclass(frozen=True)
class ChannelConfig:
    """
    Source and line parameters.

    Attributes:
        mu: Mean photon number of a faint-laser source; None means an ideal
            single-photon source
        eta_opt: Fibre transmission efficiency
        eta_d: Detector efficiency
    """

    mu: Optional[float] = None
    eta_opt: float = 1.0
    eta_d: float = 1.0

    def __post_init__(self):
        if self.mu is not None and not (self.mu >= 0.0 and math.isfinite(self.mu)):
            raise InvalidArgumentError(f"mu must be a finite number >= 0, got {self.mu}")
        for name in ("eta_opt", "eta_d"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value}")

    @property
    def ideal_source(self) -> bool:
        return self.mu is None


@dataclass
class MultiPhotonStats:
    """Tally of sampled pulses by photon number."""

    sampled: int = 0
    empty: int = 0
    single: int = 0
    multi: int = 0

    def record(self, photon_count: int) -> None:
        self.sampled += 1
        if photon_count == 0:
            self.empty += 1
        elif photon_count == 1:
            self.single += 1
        else:
            self.multi += 1

    @property
    def nonempty(self) -> int:
        return self.single + self.multi

    @property
    def multi_fraction(self) -> Optional[float]:
        """multi / (single + multi), or None when nothing non-empty was sampled."""
        if self.nonempty == 0:
            return None
        return self.multi / self.nonempty


def poisson_pmf(n: int, mu: float) -> float:
    """P(n, mu) = mu^n e^{-mu} / n!"""
    if n < 0 or mu < 0:
        raise InvalidArgumentError(f"poisson_pmf needs n >= 0 and mu >= 0, got n={n}, mu={mu}")
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mu) - mu - math.lgamma(n + 1))


def multi_photon_given_nonempty(mu: float) -> float:
    """
    Probability that a non-empty pulse holds more than one photon.

    Exact value (1 - (1 + mu) e^{-mu}) / (1 - e^{-mu}); for small mu it is
    close to mu / 2 (see `multi_photon_approximation`).

    Raises:
        InvalidArgumentError: If mu <= 0
    """
    if not mu > 0:
        raise InvalidArgumentError(f"mu must be > 0, got {mu}")
    nonempty = -math.expm1(-mu)
    return (nonempty - mu * math.exp(-mu)) / nonempty


def multi_photon_approximation(mu: float) -> float:
    return mu / 2.0


def emit_pulse(cfg: ChannelConfig, state: QuditState, rng: np.random.Generator) -> Pulse:
    """Emit one pulse carrying `state` from the configured source."""
    if cfg.ideal_source:
        n = 1
    else:
        n = int(rng.poisson(cfg.mu))
    return Pulse(photon_count=n, state=state if n > 0 else None)


def transmit(p: Pulse, eta_opt: float, rng: np.random.Generator) -> Pulse:
    """Pass `p` through a line where each photon survives with probability eta_opt."""
    if p.is_empty or eta_opt >= 1.0:
        return p
    if eta_opt <= 0.0:
        return p.with_count(0)
    return p.with_count(int(rng.binomial(p.photon_count, eta_opt)))


def click(photon_count: int, eta_d: float, rng: np.random.Generator) -> bool:
    """Threshold detector on `photon_count` photons: click with probability 1 - (1 - eta_d)^n."""
    if photon_count <= 0 or eta_d <= 0.0:
        return False
    if eta_d >= 1.0:
        return True
    return bool(rng.random() < 1.0 - (1.0 - eta_d) ** photon_count)


def detect(p: Pulse, eta_d: float, rng: np.random.Generator) -> bool:
    """Click / no-click for pulse `p`; an empty pulse never clicks."""
    return click(p.photon_count, eta_d, rng)


class PhotonNumberMonitor:
    """
    Random sampling of pulses with an ideal photon-number-resolving check.

    Sampled pulses are destroyed by the check and must not continue through
    the protocol.
    """

    def __init__(self, fraction: float):
        if not 0.0 < fraction <= 1.0:
            raise InvalidArgumentError(f"sampling fraction must lie in (0, 1], got {fraction}")
        self.fraction = fraction
        self.stats = MultiPhotonStats()

    def inspect(self, pulse: Pulse, rng: np.random.Generator) -> bool:
        """Sample `pulse` with probability `fraction`; True means it was consumed."""
        if rng.random() >= self.fraction:
            return False
        self.stats.record(pulse.photon_count)
        return True


def pns_sample_check(pulses: Iterable[Pulse], fraction: float, rng: np.random.Generator) -> MultiPhotonStats:
    """Sample a `fraction` of `pulses` and tally them by photon number."""
    monitor = PhotonNumberMonitor(fraction)
    for pulse in pulses:
        monitor.inspect(pulse, rng)
    logger.debug("photon-number check: %s", monitor.stats)
    return monitor.stats


def multi_photon_alarm(stats: MultiPhotonStats, mu: Optional[float], factor: float) -> bool:
    """
    True when the sampled multi-photon fraction exceeds `factor` times what the
    source should produce. An ideal single-photon source should produce none,
    so any multi-photon sample raises the alarm.
    """
    observed = stats.multi_fraction
    if observed is None:
        return False
    expected = multi_photon_given_nonempty(mu) if mu else 0.0
    return observed > factor * expected
