"""Entropy computations for nonstationary subshifts of finite type.

A shift is described by a :class:`MatrixSequenceSpec`, a finite table of 0-1
transition matrices plus a pattern that says which matrix sits at each
index.  On top of it the package computes exact word counts, topological
entropy traces, the nonstationary Parry measure sequence and its metric
entropy, and runs brute-force oracles against all of these.
"""

from .bundled import bundled_spec, bundled_specs
from .errors import (
    ConvergenceError,
    EnumerationCapError,
    FiniteShiftError,
    HorizonError,
    NSFTError,
    PrimitivityError,
    SpecParseError,
    UndecidableError,
)
from .metent import (
    ConditionReport,
    check_maximizer_mass,
    check_maximizer_positivity,
    check_primitivity_growth,
    check_uniform_primitivity,
    lambda_lower_bound_trace,
    metent_grid,
    metent_trace,
    partition_entropy_closed,
    partition_entropy_direct,
)
from .oracles import OracleResult, oracle_product_entropy, oracle_stationary_parry, oracle_word_counts
from .parry import (
    ParryChain,
    cylinder_measure,
    cylinder_measure_closed,
    lambda_block,
    parry_frames,
    sample_path,
    verify_invariance,
    w_tail,
)
from .spec_model import (
    KRule,
    MatrixSequenceSpec,
    ab_spec,
    constant_spec,
    kronecker_product,
    load_spec,
    parse_spec,
    periodic_spec,
    primitivity_profile,
    shift_spec,
    validate,
)
from .topent import EntropyTrace, bowen_distance, metric_dk, topent_trace, verify_separated_spanning
from .word_counts import block_product, enumerate_words, m_eps, n_tilde, word_count

__version__ = "0.1.0"
