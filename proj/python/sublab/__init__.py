"""Python access to the sublab core."""

import json as _json

from ._core import (
    BernsteinFunction,
    DomainError,
    fit_exponent,
    limit_sum,
    make_family,
    rates as _core_rates,
    run_experiment,
    sample_increments,
    simulate,
    theoretical_exponent,
    transport_cost,
    validate_laplace,
)


def rates(config):
    """Run a rates experiment; `config` is a dict or a JSON string."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_core_rates(text))

__all__ = [
    "BernsteinFunction",
    "DomainError",
    "fit_exponent",
    "limit_sum",
    "make_family",
    "rates",
    "run_experiment",
    "sample_increments",
    "simulate",
    "theoretical_exponent",
    "transport_cost",
    "validate_laplace",
]
