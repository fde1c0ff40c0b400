"""Python access to the Prism simulator core.

Configs are plain dicts with the same keys as the prism_sim JSON files.
"""

import json

from . import _prism
from ._prism import (
    ConfigError,
    ContractViolation,
    StrategyFault,
    bitcoin_crossover,
    bitcoin_fbar,
    bitcoin_thruput_bound,
    chain_growth,
    confirm_depth,
    csv_columns,
    curve,
    curve_ids,
    ghost_balancing,
    ghost_fbar,
    ghost_thruput_bound,
    prism_thruput,
    skellam_abs_mean,
    tradeoff,
)


def simulate(config, strategy=None, params=None):
    """Run a config (every grid cell and repetition); list of row dicts."""
    doc = dict(config)
    if strategy is not None:
        doc["strategy"] = strategy
    if params is not None:
        doc["params"] = dict(params)
    return _prism.run_rows(json.dumps(doc))


def simulate_csv(config):
    return _prism.run_csv(json.dumps(dict(config)))


def baseline_csv(config, protocol):
    return _prism.baseline_csv(json.dumps(dict(config)), protocol)


__all__ = [
    "ConfigError",
    "ContractViolation",
    "StrategyFault",
    "baseline_csv",
    "bitcoin_crossover",
    "bitcoin_fbar",
    "bitcoin_thruput_bound",
    "chain_growth",
    "confirm_depth",
    "csv_columns",
    "curve",
    "curve_ids",
    "ghost_balancing",
    "ghost_fbar",
    "ghost_thruput_bound",
    "prism_thruput",
    "simulate",
    "simulate_csv",
    "skellam_abs_mean",
    "tradeoff",
]
