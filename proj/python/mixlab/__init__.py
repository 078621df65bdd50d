"""Exact mixing computations for random walks on finite groups."""

import json as _json

from . import _core
from ._core import (
    Walk,
    __version__,
    classify_trend,
    exp_sum_eval,
    exp_sum_mixing,
    experiment_heisenberg,
    experiment_randomized,
    growth_profile,
    hellinger_distance,
    lambda_tau,
    minimal_A,
    product_flat_hellinger,
    product_hellinger,
    run,
    theorem_tn,
    tv_distance,
)


def verify(suites=(), fixtures=(), max_step=64, seed=42):
    """Run the check battery and return the parsed report."""
    return _json.loads(_core.verify_all(list(suites), list(fixtures), max_step, seed))


__all__ = [
    "Walk",
    "__version__",
    "classify_trend",
    "exp_sum_eval",
    "exp_sum_mixing",
    "experiment_heisenberg",
    "experiment_randomized",
    "growth_profile",
    "hellinger_distance",
    "lambda_tau",
    "minimal_A",
    "product_flat_hellinger",
    "product_hellinger",
    "run",
    "theorem_tn",
    "tv_distance",
    "verify",
]
