"""Exhaustive search over the finite contract set of a state-space.

A space with ``k`` states and ``m`` actions has ``m**k`` contracts.  The payoff
pair of every contract is computed once per space and cached, so repeated
argmax queries at different thresholds only compare exact rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InstanceTooLargeError
from .spaces import Contract, Player, StateSpace, _check_player, as_fraction, expected_value

__all__ = [
    "DEFAULT_CONTRACT_CAP",
    "ValueConstraint",
    "PayoffPoint",
    "contract_count",
    "payoff_table",
    "enumerate_contracts",
    "contract_values",
    "constrained_optimum",
    "pareto_frontier",
    "is_pareto_optimal",
]

DEFAULT_CONTRACT_CAP = 10**6


@dataclass(frozen=True)
class ValueConstraint:
    """Require ``player``'s expected value to be at least ``threshold``."""

    player: Player
    threshold: Fraction

    def __post_init__(self):
        _check_player(self.player)
        object.__setattr__(self, "threshold", as_fraction(self.threshold))


@dataclass(frozen=True)
class PayoffPoint:
    contract: Contract
    value_d: Fraction
    value_e: Fraction


def contract_count(s: StateSpace) -> int:
    return len(s.actions) ** len(s.states)


def payoff_table(
    s: StateSpace, cap: int = DEFAULT_CONTRACT_CAP
) -> list[tuple[tuple[int, ...], Fraction, Fraction]]:
    """``(action indices, V_d, V_e)`` for every contract, in lexicographic order."""
    n = contract_count(s)
    if n > cap:
        raise InstanceTooLargeError(
            f"{len(s.actions)}^{len(s.states)} = {n} contracts exceeds the cap of {cap}"
        )
    table = s._cache.get("payoffs")
    if table is None:
        wd, we = s.weights("d"), s.weights("e")
        table = [((), Fraction(0), Fraction(0))]
        for i in range(len(s.states)):
            row_d, row_e = wd[i], we[i]
            table = [
                (idx + (j,), vd + row_d[j], ve + row_e[j])
                for idx, vd, ve in table
                for j in range(len(s.actions))
            ]
        s._cache["payoffs"] = table
    return table


def enumerate_contracts(s: StateSpace, cap: int = DEFAULT_CONTRACT_CAP) -> list[Contract]:
    return [Contract.from_indices(s, idx) for idx, _, _ in payoff_table(s, cap)]


def contract_values(s: StateSpace, c: Contract) -> tuple[Fraction, Fraction]:
    return expected_value(s, c, "d"), expected_value(s, c, "e")


def _feasible_rows(s: StateSpace, constraints: Iterable[ValueConstraint], cap: int):
    constraints = list(constraints)
    for row in payoff_table(s, cap):
        if all(row[1 if k.player == "d" else 2] >= k.threshold for k in constraints):
            yield row


def constrained_optimum(
    s: StateSpace,
    objective: Player,
    constraints: Sequence[ValueConstraint] = (),
    cap: int = DEFAULT_CONTRACT_CAP,
) -> list[Contract]:
    """Every contract maximising ``objective``'s value subject to ``constraints``.

    The full tie set is returned in enumeration order; it is empty only when
    no contract satisfies the constraints.
    """
    _check_player(objective)
    pos = 1 if objective == "d" else 2
    best: Fraction | None = None
    winners: list[tuple[int, ...]] = []
    for row in _feasible_rows(s, constraints, cap):
        v = row[pos]
        if best is None or v > best:
            best, winners = v, [row[0]]
        elif v == best:
            winners.append(row[0])
    return [Contract.from_indices(s, idx) for idx in winners]


def pareto_frontier(s: StateSpace, cap: int = DEFAULT_CONTRACT_CAP) -> list[PayoffPoint]:
    """Contracts not Pareto-dominated by any other contract on ``s``."""
    table = payoff_table(s, cap)
    order = sorted(range(len(table)), key=lambda k: (-table[k][1], -table[k][2]))
    keep = set()
    best_above: Fraction | None = None  # max V_e among strictly higher V_d
    k = 0
    while k < len(order):
        vd = table[order[k]][1]
        group = []
        while k < len(order) and table[order[k]][1] == vd:
            group.append(order[k])
            k += 1
        top_e = table[group[0]][2]
        if best_above is None or top_e > best_above:
            keep.update(g for g in group if table[g][2] == top_e)
            best_above = top_e
    return [
        PayoffPoint(Contract.from_indices(s, table[k][0]), table[k][1], table[k][2])
        for k in sorted(keep)
    ]


def is_pareto_optimal(s: StateSpace, c: Contract, cap: int = DEFAULT_CONTRACT_CAP) -> bool:
    vd, ve = contract_values(s, c)
    for _, od, oe in payoff_table(s, cap):
        if od >= vd and oe >= ve and (od > vd or oe > ve):
            return False
    return True
