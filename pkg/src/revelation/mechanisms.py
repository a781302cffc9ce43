"""Direct mechanisms over reported awareness, and ex-post audits of them.

A mechanism maps a pair of comparable reports (decision maker, expert) to a
contract on the finer of the two spaces.  Two boundary mechanisms are built
here: the decision-maker-optimal one, which replays the myopic game with the
expert-favourable tie-break, and the expert-optimal one, which maximises the
expert's payoff subject to the decision maker doing no worse than his own
optimum under his report.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .contracts import ValueConstraint, constrained_optimum, is_pareto_optimal, payoff_table
from .errors import IncompatibleReportsError
from .game import MyopicStrategy, RevelationSequence, TieBreak, best_response_witness
from .spaces import (
    Contract,
    Instance,
    Partition,
    StateSpace,
    canonical_contract,
    expected_value,
    lift_contract,
    partition_refines,
)

__all__ = [
    "MechanismKind",
    "MechanismOutcome",
    "AuditReport",
    "ComparisonReport",
    "comparable",
    "join_partition",
    "join_reports",
    "dm_optimum_value",
    "mech_dm",
    "mech_expert",
    "naive_mechanism",
    "mechanism_for",
    "audit_mechanism",
    "compare_mechanisms",
]

Mechanism = Callable[[Instance, Partition, Partition], "MechanismOutcome"]


class MechanismKind(str, enum.Enum):
    DM_OPTIMAL = "dm_optimal"
    EXPERT_OPTIMAL = "expert_optimal"


@dataclass(frozen=True)
class MechanismOutcome:
    report_d: Partition
    report_e: Partition
    join: Partition
    join_space: StateSpace
    contract: Contract
    value_d: Fraction
    value_e: Fraction
    sequence: RevelationSequence | None = None


def comparable(p: Partition, q: Partition) -> bool:
    return partition_refines(p, q) or partition_refines(q, p)


def join_partition(p_d: Partition, p_e: Partition) -> Partition:
    """The finer of two comparable reports."""
    if partition_refines(p_d, p_e):
        return p_e
    if partition_refines(p_e, p_d):
        return p_d
    raise IncompatibleReportsError(f"reports {p_d} and {p_e} are not comparable")


def join_reports(instance: Instance, p_d: Partition, p_e: Partition) -> StateSpace:
    return instance.space(join_partition(p_d, p_e))


def dm_optimum_value(instance: Instance, p: Partition) -> Fraction:
    """Best payoff the decision maker can secure alone with awareness ``p``."""
    return max(row[1] for row in payoff_table(instance.space(p)))


def _outcome(instance, p_d, p_e, join, contract, sequence=None) -> MechanismOutcome:
    space = instance.space(join)
    return MechanismOutcome(
        p_d, p_e, join, space, contract,
        expected_value(space, contract, "d"), expected_value(space, contract, "e"),
        sequence,
    )


def mech_dm(instance: Instance, p_d: Partition, p_e: Partition) -> MechanismOutcome:
    """Decision-maker-optimal mechanism.

    When the expert's report refines the decision maker's, the myopic game
    (expert-favourable ties) is played from ``p_d`` and the expert's best
    response of type ``p_e`` decides the contract, choosing a fully revealing
    best response.  Otherwise the decision maker's own first-round proposal
    on ``p_d`` is implemented.
    """
    join = join_partition(p_d, p_e)
    if join == p_e:
        seq, proposals = best_response_witness(instance, TieBreak.EXPERT_MAX, p_e, root=p_d)
        contract = proposals[-1]
        if seq.final != join:
            contract = lift_contract(contract, instance.projection(seq.final, join))
        return _outcome(instance, p_d, p_e, join, contract, seq)
    space = instance.space(p_d)
    row = MyopicStrategy(TieBreak.EXPERT_MAX).respond(space, None)
    return _outcome(instance, p_d, p_e, join, Contract.from_indices(space, row[0]))


def mech_expert(instance: Instance, p_d: Partition, p_e: Partition) -> MechanismOutcome:
    """Expert-optimal mechanism.

    On the joint space, maximise the expert's payoff subject to the decision
    maker getting at least his stand-alone optimum under ``p_d``; among those
    optima take the one best for the decision maker.
    """
    join = join_partition(p_d, p_e)
    space = instance.space(join)
    floor = dm_optimum_value(instance, p_d)
    ties = constrained_optimum(space, "e", [ValueConstraint("d", floor)])

    def key(c: Contract):
        return (-expected_value(space, c, "d"), canonical_contract(c), c.indices())

    return _outcome(instance, p_d, p_e, join, min(ties, key=key))


def naive_mechanism(instance: Instance, p_d: Partition, p_e: Partition) -> MechanismOutcome:
    """Implements the decision maker's unconstrained optimum on the joint space.

    Not incentive compatible for the expert; kept as an audit reference.
    """
    join = join_partition(p_d, p_e)
    space = instance.space(join)
    row = MyopicStrategy(TieBreak.EXPERT_MIN).respond(space, None)
    return _outcome(instance, p_d, p_e, join, Contract.from_indices(space, row[0]))


def mechanism_for(kind: MechanismKind | str) -> Mechanism:
    kind = MechanismKind(kind)
    return mech_dm if kind is MechanismKind.DM_OPTIMAL else mech_expert


@dataclass
class AuditReport:
    ir: bool
    ic_d: bool
    ic_e: bool
    po: bool
    pairs: int
    witnesses: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.ir and self.ic_d and self.ic_e and self.po


def _outcome_table(instance: Instance, mechanism: Mechanism) -> dict[tuple[Partition, Partition], MechanismOutcome]:
    types = instance.interval()
    return {
        (d, e): mechanism(instance, d, e)
        for d in types
        for e in types
        if comparable(d, e)
    }


def audit_mechanism(
    instance: Instance,
    kind: MechanismKind | str | None = None,
    mechanism: Mechanism | None = None,
) -> AuditReport:
    """Check IR, truthful reporting for both players, and Pareto optimality on every report pair.

    Types range over the partitions between the decision maker's awareness
    and the ground space.  A misreport is any strictly coarser partition in
    that range that is still comparable with the other player's report.
    """
    if mechanism is None:
        mechanism = mechanism_for(kind)
    table = _outcome_table(instance, mechanism)
    ir = ic_d = ic_e = po = True
    witnesses: list[dict] = []
    floors = {d: dm_optimum_value(instance, d) for d in instance.interval()}
    for (d, e), out in table.items():
        if out.value_d < floors[d]:
            ir = False
            witnesses.append({"check": "ir", "report_d": d, "report_e": e,
                              "value_d": out.value_d, "floor": floors[d]})
        if not is_pareto_optimal(out.join_space, out.contract):
            po = False
            witnesses.append({"check": "po", "report_d": d, "report_e": e, "contract": out.contract})
        for (d2, e2), alt in table.items():
            if e2 == e and d2 != d and partition_refines(d2, d) and alt.value_d > out.value_d:
                ic_d = False
                witnesses.append({"check": "ic_d", "true_d": d, "report_e": e, "misreport": d2,
                                  "truthful": out.value_d, "deviation": alt.value_d})
            if d2 == d and e2 != e and partition_refines(e2, e) and alt.value_e > out.value_e:
                ic_e = False
                witnesses.append({"check": "ic_e", "report_d": d, "true_e": e, "misreport": e2,
                                  "truthful": out.value_e, "deviation": alt.value_e})
    return AuditReport(ir, ic_d, ic_e, po, len(table), witnesses)


@dataclass
class ComparisonReport:
    rows: list[dict]
    violations: list[dict]

    @property
    def ok(self) -> bool:
        return not self.violations


def compare_mechanisms(instance: Instance) -> ComparisonReport:
    """Pointwise comparison of the two boundary mechanisms on every report pair."""
    md = _outcome_table(instance, mech_dm)
    me = _outcome_table(instance, mech_expert)
    rows, violations = [], []
    for key, a in md.items():
        b = me[key]
        row = {"report_d": key[0], "report_e": key[1],
               "dm_optimal": (a.value_d, a.value_e), "expert_optimal": (b.value_d, b.value_e)}
        rows.append(row)
        if a.value_d < b.value_d or b.value_e < a.value_e:
            violations.append(row)
    return ComparisonReport(rows, violations)
