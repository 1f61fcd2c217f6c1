"""
Scenario execution: trials, parameter sweeps and the photon-number table
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Callable, Dict, List, Optional, Sequence

from .channel import multi_photon_approximation, multi_photon_given_nonempty, poisson_pmf
from .config import ExperimentConfig, parse_config, read_entries
from .errors import ConfigError, InvalidArgumentError
from .metrics import SessionMetrics, useful_check_probability
from .output import Row
from .protocol import run_session
from .validation import EXPERIMENT_SCHEMA

logger = logging.getLogger(__name__)

Progress = Callable[[int], None]


def run_trial(config: ExperimentConfig, trial: int) -> SessionMetrics:
    """Run trial `trial` of `config` and return its metrics."""
    result = run_session(config.protocol, config.channel, config.adversary, seed=config.seed, trial=trial)
    return result.metrics


def run_trials(config: ExperimentConfig, workers: int = 1, progress: Optional[Progress] = None) -> List[SessionMetrics]:
    """
    Run every trial of `config`, optionally across a process pool.

    Returns:
        Metrics ordered by trial index regardless of completion order
    """
    if workers < 1:
        raise InvalidArgumentError(f"workers must be >= 1, got {workers}")
    advance = progress or (lambda n: None)

    if workers == 1 or config.trials == 1:
        out = []
        for trial in range(config.trials):
            out.append(run_trial(config, trial))
            advance(1)
        return out

    results: Dict[int, SessionMetrics] = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(run_trial, config, trial): trial for trial in range(config.trials)}
        for future in as_completed(futures):
            trial = futures[future]
            results[trial] = future.result()
            logger.debug("trial %d finished", trial)
            advance(1)
    return [results[trial] for trial in range(config.trials)]


def simulate_rows(config: ExperimentConfig, workers: int = 1, progress: Optional[Progress] = None) -> List[Row]:
    rows = []
    for trial, metrics in enumerate(run_trials(config, workers, progress)):
        rows.append({"trial": trial, "seed": config.seed, **metrics.as_dict()})
    return rows


def _analytic_columns(entries, key: str, value: str) -> Row:
    """Columns that need no simulation, for values the protocol rejects."""
    try:
        number = float(value)
    except ValueError:
        return {}
    row: Row = {}
    if key == "p_d" and 0.0 <= number <= 1.0:
        p_cz = float(entries["p_cz"].value) if "p_cz" in entries else number
        row["p_eu_expected"] = useful_check_probability(number, p_cz)
    elif key == "mu" and number > 0:
        row["multi_given_nonempty"] = multi_photon_given_nonempty(number)
    return row


def sweep_rows(
    text: str,
    key: str,
    values: Sequence[str],
    seed: Optional[int] = None,
    workers: int = 1,
    progress: Optional[Progress] = None,
) -> List[Row]:
    """
    Run the configuration once per value of `key`.

    Values the configuration rejects produce a single row with the error
    message and the analytic columns that do not need a simulation.

    Raises:
        ConfigError: If `key` is not a configuration key or the base text is invalid
    """
    if key not in EXPERIMENT_SCHEMA.known_fields:
        raise ConfigError(f"cannot sweep unknown key {key!r}", key=key)
    entries = read_entries(text)
    base_overrides = {"seed": seed} if seed is not None else {}

    rows = []
    for value in values:
        overrides = {**base_overrides, key: value}
        try:
            config = parse_config(text, overrides)
        except ConfigError as e:
            logger.warning("sweep %s = %s rejected: %s", key, value, e.reason)
            row = {"key": key, "value": value, "seed": seed, "error": str(e)}
            row.update(_analytic_columns(entries, key, value))
            rows.append(row)
            if progress:
                progress(1)
            continue
        for trial, metrics in enumerate(run_trials(config, workers)):
            rows.append({"key": key, "value": value, "trial": trial, "seed": config.seed, **metrics.as_dict()})
        if progress:
            progress(1)
    return rows


def poisson_rows(mus: Sequence[float]) -> List[Row]:
    """Photon-number statistics of a faint source for each mean photon number."""
    rows = []
    for mu in mus:
        if not mu > 0:
            raise InvalidArgumentError(f"mu must be > 0, got {mu}")
        p_empty = poisson_pmf(0, mu)
        p_single = poisson_pmf(1, mu)
        rows.append(
            {
                "mu": mu,
                "p_empty": p_empty,
                "p_single": p_single,
                "p_multi": 1.0 - p_empty - p_single,
                "p_nonempty": -math.expm1(-mu),
                "multi_given_nonempty": multi_photon_given_nonempty(mu),
                "multi_approximation": multi_photon_approximation(mu),
            }
        )
    return rows
