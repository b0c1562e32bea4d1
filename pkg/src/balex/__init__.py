"""Balanced exchange of indivisible-object bundles under trichotomous preferences.

Library surface: domain types and validation (model), unambiguous bundle
comparison and individual rationality (responsive), cycle algebra (cycles),
exact constrained assignment (optimize), the individually rational priority
mechanism (mechanism), property auditors (audits), named benchmark
profiles (fixtures) and seeded random markets (generate).
"""

from .audits import (
    BlockWitness,
    ManipulationWitness,
    ObviousManipulationWitness,
    check_obvious_manipulability,
    check_strategy_proofness,
    check_truncation_proofness,
    efficient_ir_set,
    enumerate_matchings,
    find_efficient_core_matching,
    unambiguously_efficient,
    unambiguously_in_weak_core,
    welfare_vector,
)
from .cycles import (
    Cycle,
    CycleEffect,
    apply_cycle,
    classify_cycle,
    decompose,
    distance,
    find_cir_pareto_improving_cycle,
    reverse_cycle,
)
from .fixtures import FIXTURE_NAMES, Fixture, load_fixture
from .generate import random_market
from .mechanism import (
    MechanismInvariantError,
    MechanismTrace,
    RoundState,
    non_improvable_set,
    run_ir_priority,
    serial_refine,
    trace_to_json,
)
from .model import (
    DomainSpec,
    Instance,
    MarginalPreference,
    Matching,
    NotTrichotomousError,
    TrichotomousPreference,
    ValidationError,
    classify_domain,
    domain_membership,
    load_market,
    market_from_json,
    market_to_json,
    matching_from_json,
    matching_to_json,
    to_trichotomous,
    trichotomous_profile,
    validate_instance,
    validate_matching,
)
from .optimize import (
    EnumerationLimitError,
    InfeasibleError,
    WelfareConstraints,
    brute_force_max,
    feasible,
    max_attractive,
    network_dump,
)
from .responsive import (
    BundleComparison,
    ResponsiveExtension,
    build_punishing_extension,
    cir_trichotomous,
    cir_violation,
    compare_unambiguous,
    exists_strict_preference,
    is_component_wise_IR,
    random_extension,
    strict_witness_extension,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
