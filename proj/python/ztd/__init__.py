"""Trust-threshold POMDP simulation and meta-learning."""

import json as _json

from ._core import (
    PomdpConfig,
    Scenario,
    ValidationError,
    ZtdError,
    adapt,
    belief_update,
    config_digest,
    exact_value,
    mc_value_estimate,
    optimal_threshold,
    run_cli,
    sample_scaled_beta,
    simplex_project,
    spearman_correlation,
    spsa_gradient,
    train,
)


def load_config(path):
    """Validated config as a dict, with defaults filled in."""
    from ._core import config_json

    return _json.loads(config_json(str(path)))


__all__ = [
    "PomdpConfig",
    "Scenario",
    "ValidationError",
    "ZtdError",
    "adapt",
    "belief_update",
    "config_digest",
    "exact_value",
    "load_config",
    "mc_value_estimate",
    "optimal_threshold",
    "run_cli",
    "sample_scaled_beta",
    "simplex_project",
    "spearman_correlation",
    "spsa_gradient",
    "train",
]
