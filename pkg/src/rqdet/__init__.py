"""Recurrence determinism for interval maps, with an exact odometer oracle."""

from .dynamics import (
    Logistic,
    OdometerExtension,
    Tent,
    eval_map,
    odometer_extension_eval,
    parse_map,
    symbolic_trajectory,
    trajectory,
)
from .experiments import (
    Budget,
    classify,
    combinatorial_rdet_bounds,
    epsilon_sweep,
    four_fifths_report,
    theorem_example_report,
)
from .intervals import (
    INF,
    IntervalSystem,
    RationalInterval,
    build_custom,
    build_ternary,
    build_theorem3,
    count_N,
    count_N_circ,
    diam_m,
    dist_m,
    ell_lambda,
    epsilon_t,
    interval_of,
    pair_counts,
    validate,
)
from .odometer import Word, word_add, word_in_cylinder, word_prefix
from .rqa import (
    asymptotic_profile,
    correlation_sum,
    rdet,
    recurrence_matrix,
    rqa_det,
    symbolic_recurrence,
)

__version__ = "0.1.0"
