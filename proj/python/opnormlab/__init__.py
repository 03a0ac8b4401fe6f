"""Python interface to the opnorm-lab C++ core."""

import json

from . import _core
from ._core import (
    ArgumentError,
    ConfigError,
    DataError,
    InvariantError,
    ParamMatrixFamily,
    ReplicationError,
    ValidationError,
    covering_number,
    dudley_integral,
    entropy_radii,
    estimate_location,
    estimate_max_rank,
    family_from_arrays,
    gamma_upper,
    gen_innovations,
    ma_filter_geometric,
    operator_norm,
    orlicz_norm_estimate,
    pairwise_distances,
    product_gamma,
    psi_threshold,
    reference_ffm,
    sigma_hat,
    singular_values,
    tail_bound_value,
    theorem_bound,
    top_singular_sum,
)


def run_experiment(config):
    """Run a Monte Carlo experiment described by a config dict.

    Returns the result as a dict; the table is under ``"csv"``.
    """
    return json.loads(_core.run_experiment_json(json.dumps(config)))

