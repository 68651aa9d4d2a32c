"""Fair reassignment of new apartments to owners of old ones, with balanced payments."""

from recondiv.envy import (
    build_envy_graphs,
    check_permutation_condition,
    ef_payments,
    envy_report,
    exhaustive_min_macc_assignment,
    is_ef_able,
    min_max_envy_payments,
)
from recondiv.errors import (
    DomainError,
    InstanceFormatError,
    NoManipulationError,
    NotEFAbleError,
    ParameterError,
    PreconditionError,
    RecondivError,
)
from recondiv.graphs import (
    DenseDigraph,
    has_positive_cycle,
    max_cost_paths_from_all,
    max_mean_cycle,
    max_weight_perfect_matching,
)
from recondiv.model import (
    SURVEY_CHARACTERISTICS,
    Additive,
    Allocation,
    CharacteristicSpace,
    DirectMatrix,
    Instance,
    Multiplicative,
    apply_endowment_adjustment,
    direct,
    improvement,
    normalize_multiplicative,
    to_exact,
    validate,
    value,
)
from recondiv.proportionality import (
    decide_prop_able,
    disproportionality_report,
    min_disprop_payments,
    minimum_disproportionality_mechanism,
    utilitarian_assignment,
)

__all__ = [
    "build_envy_graphs",
    "check_permutation_condition",
    "ef_payments",
    "envy_report",
    "exhaustive_min_macc_assignment",
    "is_ef_able",
    "min_max_envy_payments",
    "DomainError",
    "InstanceFormatError",
    "NoManipulationError",
    "NotEFAbleError",
    "ParameterError",
    "PreconditionError",
    "RecondivError",
    "DenseDigraph",
    "has_positive_cycle",
    "max_cost_paths_from_all",
    "max_mean_cycle",
    "max_weight_perfect_matching",
    "SURVEY_CHARACTERISTICS",
    "Additive",
    "Allocation",
    "CharacteristicSpace",
    "DirectMatrix",
    "Instance",
    "Multiplicative",
    "apply_endowment_adjustment",
    "direct",
    "improvement",
    "normalize_multiplicative",
    "to_exact",
    "validate",
    "value",
    "decide_prop_able",
    "disproportionality_report",
    "min_disprop_payments",
    "minimum_disproportionality_mechanism",
    "utilitarian_assignment",
]

__version__ = "0.1.0"
