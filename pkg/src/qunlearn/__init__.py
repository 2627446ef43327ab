"""qunlearn: generalized-measurement simulation and measurement unlearning.

Simulates POVMs / Kraus-operator measurements on small-dimension systems
and synthesizes corrective measurement sequences that restore unitary
conditional evolution at the maximum achievable probability.
"""

__version__ = "0.1.0"

from .errors import (
    CompletenessError,
    DomainError,
    NotContractionError,
    NotPsdError,
    QunlearnError,
    ShapeError,
    TreeStructureError,
    UnrecoverableBranchError,
    ZeroProbabilityBranchError,
)
from .povm import (
    DensityOperator,
    KrausOperator,
    Povm,
    UnitaryWitness,
    complement_kraus,
    outcome_probability,
    post_measurement_state,
    sample_outcome,
    unitary_witness,
    validate_povm,
)
from .recovery import (
    BoundReport,
    FilterTrace,
    OracleReport,
    RecoveryPlan,
    binary_recovery_probability,
    multi_outcome_recovery_probability,
    partial_filter_iterate,
    partial_filter_limit,
    partial_filter_step,
    procrustean_plan,
    success_bound,
    verify_bound_bruteforce,
)
from .tree import (
    LeafSummary,
    TreeNode,
    attach_at,
    attach_povm,
    leaf_probabilities,
    root_node,
    summarize_leaves,
    validate_tree,
)
from .teleport import (
    TeleportOutcome,
    TeleportScenario,
    alice_basis,
    effective_kraus,
    recovery_probability,
    run_protocol,
)

__all__ = [name for name in dir() if not name.startswith("_")]
