"""Exact revelation games between an unaware decision maker and a more aware expert.

Awareness levels are partitions of a finite ground state-space; all payoffs
are :class:`fractions.Fraction`.  The main entry points are re-exported here.
"""

from .contracts import (
    ValueConstraint,
    constrained_optimum,
    enumerate_contracts,
    is_pareto_optimal,
    pareto_frontier,
)
from .errors import (
    IncompatibleReportsError,
    InstanceFormatError,
    InstanceTooLargeError,
    InvalidSequenceError,
    RevelationError,
    SpaceMismatchError,
    SpaceValidationError,
)
from .fixtures import example1, example2
from .game import (
    GameTree,
    GreedyStrategy,
    MyopicStrategy,
    RevelationSequence,
    Strategy,
    TieBreak,
    Transcript,
    awareness_rent,
    best_response_dp,
    best_response_witness,
    best_responses,
    check_strategy_properties,
    effective_equivalence,
    make_myopic_strategy,
    myopic_frontier,
    play,
    reachable_sequences,
)
from .mechanisms import (
    MechanismKind,
    MechanismOutcome,
    audit_mechanism,
    compare_mechanisms,
    join_reports,
    mech_dm,
    mech_expert,
)
from .oracle import InstanceSpec, corpus, random_instance, strong_myopic_check, verify_instance
from .serialization import instance_digest, load_instance, save_instance
from .spaces import (
    CanonicalForm,
    Contract,
    Instance,
    Partition,
    RefinementMap,
    StateSpace,
    canonical_form,
    check_refinement,
    coarsen,
    enumerate_partitions_between,
    expected_value,
    lift_contract,
    partition_refines,
    validate_space,
)

__version__ = "0.1.0"
