"""Exact workbench for one-dimensional stochastic cellular automata."""

from .core import (
    Alphabet,
    AlphabetMismatch,
    BudgetExceeded,
    CylinderDist,
    InsufficientContext,
    Neighborhood,
    PeriodicConfig,
    RandomSeq,
    Sca,
    ScaError,
    Word,
    apply_deterministic,
    apply_explicit,
    iter_dist,
    iter_dist_bruteforce,
    iterate_explicit,
    measure_distance_lb,
    nondet_window,
    one_step_dist,
    radius,
    sample_trajectory,
)
from .transform import (
    RescaleParams,
    TrimMap,
    check_projection,
    check_restriction,
    compose_trims,
    project,
    rescale,
    restrict,
)
from .equivalence import (
    Coupling,
    EqualityVerdict,
    build_coupling,
    lift_to_noise,
    nondet_equal,
    one_step_equal,
    uniformity_check,
    verify_coupling,
)
from .simulation import (
    SimFlavor,
    SimWitness,
    is_deterministic,
    is_noisy_bounded,
    pf_gate,
    prime_factors,
    search_simulation,
    verify_witness,
)
from .constructions import (
    blank_noise_coupling,
    blank_noise_pair,
    parity_sca,
    pca_embed,
    rand_symbol_map,
)
from .universal import UniversalLayout, encode_into_universal, universal_pca

__version__ = "0.1.0"
