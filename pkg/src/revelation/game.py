"""The dynamic revelation game between a decision maker and a more aware expert.

Play starts at the decision maker's partition.  Each round he proposes a
contract measurable with respect to what he currently knows; the expert then
either stops or reveals a strictly finer partition (bounded by her own
awareness).  The last proposal is implemented.

Strategies see the sequence of revealed *spaces* and their own earlier
proposals, never the ground partition, so their output can depend only on
what has been revealed.  The myopic family proposes, at each round, the
decision maker's best contract among those giving the expert at least what the
previous proposal gave her.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .contracts import DEFAULT_CONTRACT_CAP, payoff_table
from .errors import InstanceTooLargeError, InvalidSequenceError
from .spaces import (
    CanonicalForm,
    Contract,
    Instance,
    Partition,
    StateSpace,
    canonical_contract,
    canonical_form,
    expected_value,
    partition_refines,
    strictly_refines,
)

__all__ = [
    "DEFAULT_CHAIN_CAP",
    "TieBreak",
    "RevelationSequence",
    "Strategy",
    "MyopicStrategy",
    "GreedyStrategy",
    "Transcript",
    "StrategyReport",
    "GameTree",
    "Node",
    "myopic_frontier",
    "make_myopic_strategy",
    "select",
    "evaluate",
    "best_responses",
    "best_response_dp",
    "best_response_witness",
    "check_strategy_properties",
    "play",
    "outcome_sets",
    "effective_equivalence",
    "reachable_sequences",
    "awareness_rent",
    "dm_unconstrained_choice",
]

DEFAULT_CHAIN_CAP = 200_000


class TieBreak(str, enum.Enum):
    """How to pick one contract from a tie set of decision-maker optima.

    ``EXPERT_MIN`` gives the expert as little as possible (the decision
    maker's pointwise best robust strategy); ``EXPERT_MAX`` gives her as much
    as possible (the strategy behind the decision-maker-optimal mechanism).
    Remaining ties fall back to the label-free contract encoding, then to
    state order.
    """

    EXPERT_MIN = "expert-min"
    EXPERT_MAX = "expert-max"


def select(space: StateSpace, rows: Sequence[tuple], tb: TieBreak) -> tuple:
    """Pick one ``(indices, V_d, V_e)`` row from a nonempty tie set."""
    if not rows:
        raise ValueError("cannot select from an empty tie set")
    sign = 1 if TieBreak(tb) is TieBreak.EXPERT_MIN else -1
    target = min(sign * r[2] for r in rows)
    rows = [r for r in rows if sign * r[2] == target]
    if len(rows) == 1:
        return rows[0]
    return min(
        rows,
        key=lambda r: (canonical_contract(Contract.from_indices(space, r[0])), r[0]),
    )


def _frontier_rows(space: StateSpace, reservation: Fraction | None, cap: int) -> list[tuple]:
    best: Fraction | None = None
    out: list[tuple] = []
    for row in payoff_table(space, cap):
        if reservation is not None and row[2] < reservation:
            continue
        if best is None or row[1] > best:
            best, out = row[1], [row]
        elif row[1] == best:
            out.append(row)
    return out


def myopic_frontier(
    space: StateSpace, reservation: Fraction | None, cap: int = DEFAULT_CONTRACT_CAP
) -> list[Contract]:
    """Decision-maker optima subject to the expert getting at least ``reservation``.

    ``reservation=None`` is the unconstrained first-round problem.
    """
    return [Contract.from_indices(space, r[0]) for r in _frontier_rows(space, reservation, cap)]


@dataclass(frozen=True)
class RevelationSequence:
    """A strictly refining chain of partitions, starting at the root awareness."""

    chain: tuple[Partition, ...]

    def __post_init__(self):
        object.__setattr__(self, "chain", tuple(self.chain))
        if not self.chain:
            raise InvalidSequenceError("a revelation sequence needs at least one partition")
        for a, b in zip(self.chain, self.chain[1:]):
            if not strictly_refines(a, b):
                raise InvalidSequenceError(f"{b} does not strictly refine {a}")

    def __len__(self) -> int:
        return len(self.chain)

    def __iter__(self) -> Iterator[Partition]:
        return iter(self.chain)

    def __getitem__(self, k):
        return self.chain[k]

    @property
    def final(self) -> Partition:
        return self.chain[-1]

    def extends(self, other: RevelationSequence) -> bool:
        """True when ``other`` is a (not necessarily proper) prefix of this sequence."""
        return self.chain[: len(other.chain)] == other.chain

    def __str__(self) -> str:
        return " -> ".join(str(p) for p in self.chain)


class Strategy:
    """A decision-maker strategy.

    Subclasses implement :meth:`propose`, which receives the spaces revealed so
    far (root first) and the contracts already proposed on all but the last of
    them, and returns the contract for the last space.
    """

    name = "strategy"

    def propose(self, spaces: Sequence[StateSpace], proposals: Sequence[Contract]) -> Contract:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class MyopicStrategy(Strategy):
    """Myopically optimal strategy with a fixed tie-break."""

    def __init__(self, tiebreak: TieBreak = TieBreak.EXPERT_MIN, cap: int = DEFAULT_CONTRACT_CAP):
        self.tiebreak = TieBreak(tiebreak)
        self.cap = cap

    @property
    def name(self) -> str:
        return f"myopic[{self.tiebreak.value}]"

    def respond(self, space: StateSpace, reservation: Fraction | None) -> tuple:
        """``(indices, V_d, V_e)`` of the proposal on ``space`` at ``reservation``."""
        key = ("myopic", self.tiebreak, reservation)
        row = space._cache.get(key)
        if row is None:
            rows = _frontier_rows(space, reservation, self.cap)
            row = space._cache[key] = select(space, rows, self.tiebreak)
        return row

    def propose(self, spaces, proposals):
        reservation = None
        if len(spaces) > 1:
            reservation = expected_value(spaces[-2], proposals[-1], "e")
        return Contract.from_indices(spaces[-1], self.respond(spaces[-1], reservation)[0])

    def __repr__(self) -> str:
        return f"MyopicStrategy({self.tiebreak.value!r})"


class GreedyStrategy(Strategy):
    """Always proposes the unconstrained decision-maker optimum.

    It ignores every earlier proposal, so the expert's payoff can fall as she
    reveals more; kept as the standard example of a strategy that breaks
    incentive compatibility.
    """

    name = "greedy"

    def __init__(self, tiebreak: TieBreak = TieBreak.EXPERT_MIN):
        self._inner = MyopicStrategy(tiebreak)

    def propose(self, spaces, proposals):
        return Contract.from_indices(spaces[-1], self._inner.respond(spaces[-1], None)[0])


def make_myopic_strategy(tb: TieBreak | str = TieBreak.EXPERT_MIN) -> MyopicStrategy:
    return MyopicStrategy(TieBreak(tb))


def _as_sequence(seq) -> RevelationSequence:
    return seq if isinstance(seq, RevelationSequence) else RevelationSequence(tuple(seq))


def _check_rooted(instance: Instance, seq: RevelationSequence, root: Partition | None = None) -> None:
    root = instance.root if root is None else root
    if seq[0] != root:
        raise InvalidSequenceError(f"sequence starts at {seq[0]}, not at the root {root}")


def evaluate(instance: Instance, strategy: Strategy, sequence) -> list[Contract]:
    """Proposals of ``strategy`` along ``sequence``, one per revealed partition."""
    seq = _as_sequence(sequence)
    spaces: list[StateSpace] = []
    proposals: list[Contract] = []
    for p in seq:
        spaces.append(instance.space(p))
        proposals.append(strategy.propose(spaces, proposals))
    return proposals


@dataclass(frozen=True)
class Node:
    """One revelation history inside a :class:`GameTree`."""

    chain: tuple[Partition, ...]
    contract: Contract
    value_d: Fraction
    value_e: Fraction

    @property
    def final(self) -> Partition:
        return self.chain[-1]

    @property
    def sequence(self) -> RevelationSequence:
        return RevelationSequence(self.chain)


class GameTree:
    """Every revelation history from ``root`` with the strategy's proposals.

    Histories are generated depth first, successors in partition order, so
    iteration order is deterministic.  Expert types range over the partitions
    between ``root`` and the ground space.
    """

    def __init__(
        self,
        instance: Instance,
        strategy: Strategy,
        root: Partition | None = None,
        cap: int = DEFAULT_CHAIN_CAP,
    ):
        self.instance = instance
        self.strategy = strategy
        self.root = instance.root if root is None else root
        if not partition_refines(instance.root, self.root):
            raise InvalidSequenceError(f"tree root {self.root} is coarser than the instance root")
        self.types = instance.interval(self.root)
        self.nodes: dict[tuple[Partition, ...], Node] = {}
        self._build(cap)
        self._br: dict[Partition, list[Node]] = {}

    def _build(self, cap: int) -> None:
        inst, strat = self.instance, self.strategy
        stack = [((self.root,), [inst.space(self.root)], [])]
        while stack:
            chain, spaces, proposals = stack.pop()
            c = strat.propose(spaces, proposals)
            space = spaces[-1]
            self.nodes[chain] = Node(chain, c, expected_value(space, c, "d"), expected_value(space, c, "e"))
            if len(self.nodes) > cap:
                raise InstanceTooLargeError(f"more than {cap} revelation histories")
            nxt = proposals + [c]
            for q in reversed(inst.successors(chain[-1])):
                stack.append((chain + (q,), spaces + [inst.space(q)], nxt))

    def __iter__(self) -> Iterator[Node]:
        return iter(self.nodes.values())

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, sequence) -> Node:
        chain = tuple(_as_sequence(sequence).chain)
        try:
            return self.nodes[chain]
        except KeyError:
            raise InvalidSequenceError(f"sequence not in the game tree: {chain}") from None

    def proposals(self, sequence) -> list[Contract]:
        chain = tuple(_as_sequence(sequence).chain)
        return [self.nodes[chain[: k + 1]].contract for k in range(len(chain))]

    def parent(self, node: Node) -> Node | None:
        return self.nodes.get(node.chain[:-1]) if len(node.chain) > 1 else None

    def feasible(self, expert: Partition) -> list[Node]:
        """Histories available to an expert whose awareness is ``expert``."""
        return [n for n in self if partition_refines(n.final, expert)]

    def best_responses(self, expert: Partition) -> list[Node]:
        hit = self._br.get(expert)
        if hit is None:
            cands = self.feasible(expert)
            top = max(n.value_e for n in cands)
            hit = self._br[expert] = [n for n in cands if n.value_e == top]
        return hit

    def best_value(self, expert: Partition) -> Fraction:
        return self.best_responses(expert)[0].value_e

    def all_best_responses(self) -> dict[Partition, list[Node]]:
        return {p: self.best_responses(p) for p in self.types}

    def reachable(self) -> list[Node]:
        """Histories that are a prefix (weakly) of some best response of some type."""
        keep: set[tuple[Partition, ...]] = set()
        for brs in self.all_best_responses().values():
            for n in brs:
                keep.update(n.chain[: k + 1] for k in range(len(n.chain)))
        return [n for n in self if n.chain in keep]

    def extensions(self, node: Node) -> list[Node]:
        k = len(node.chain)
        return [n for n in self if n.chain[:k] == node.chain]


def best_responses(
    instance: Instance,
    strategy: Strategy,
    expert_partition: Partition,
    up_to_equivalence: bool = True,
    cap: int = DEFAULT_CHAIN_CAP,
) -> list[RevelationSequence]:
    """The expert's payoff-maximising revelation sequences, by exhaustive search.

    With ``up_to_equivalence`` sequences whose spaces agree up to relabelling
    are reported once (first in tree order).
    """
    if not partition_refines(instance.root, expert_partition):
        raise InvalidSequenceError(f"expert type {expert_partition} is coarser than the root")
    tree = GameTree(instance, strategy, cap=cap)
    out, seen = [], set()
    for n in tree.best_responses(expert_partition):
        if up_to_equivalence:
            key = tuple(canonical_form(instance.space(p)) for p in n.chain)
            if key in seen:
                continue
            seen.add(key)
        out.append(n.sequence)
    return out


def _dp_table(instance: Instance, strategy: MyopicStrategy, expert: Partition):
    memo: dict = {}

    def best(p: Partition, r: Fraction | None) -> tuple[Fraction, bool]:
        key = (p, r)
        hit = memo.get(key)
        if hit is None:
            _, _, ve = strategy.respond(instance.space(p), r)
            hit = (ve, p == expert)
            for q in instance.successors(p):
                if partition_refines(q, expert):
                    cand = best(q, ve)
                    if cand > hit:
                        hit = cand
            memo[key] = hit
        return hit

    return best


def _myopic(tb) -> MyopicStrategy:
    return tb if isinstance(tb, MyopicStrategy) else MyopicStrategy(TieBreak(tb))


def best_response_dp(
    instance: Instance,
    tb: TieBreak | str | MyopicStrategy,
    expert_partition: Partition,
    root: Partition | None = None,
) -> Fraction:
    """The expert's best attainable payoff against a myopic strategy.

    Memoised recursion over (current partition, reservation value); a myopic
    proposal depends on nothing else, so this needs no chain enumeration.
    """
    root = instance.root if root is None else root
    if not partition_refines(root, expert_partition):
        raise InvalidSequenceError(f"expert type {expert_partition} is coarser than {root}")
    return _dp_table(instance, _myopic(tb), expert_partition)(root, None)[0]


def best_response_witness(
    instance: Instance,
    tb: TieBreak | str | MyopicStrategy,
    expert_partition: Partition,
    root: Partition | None = None,
) -> tuple[RevelationSequence, list[Contract]]:
    """One best response against a myopic strategy, preferring full revelation.

    Among payoff-maximising sequences, one that ends at ``expert_partition``
    is chosen whenever one exists; the sequence and its proposals are returned.
    """
    strategy = _myopic(tb)
    root = instance.root if root is None else root
    if not partition_refines(root, expert_partition):
        raise InvalidSequenceError(f"expert type {expert_partition} is coarser than {root}")
    best = _dp_table(instance, strategy, expert_partition)
    chain, proposals = [root], []
    r: Fraction | None = None
    target = best(root, None)
    while True:
        p = chain[-1]
        space = instance.space(p)
        idx, _, ve = strategy.respond(space, r)
        proposals.append(Contract.from_indices(space, idx))
        if (ve, p == expert_partition) == target:
            break
        for q in instance.successors(p):
            if partition_refines(q, expert_partition) and best(q, ve) == target:
                chain.append(q)
                break
        else:  # pragma: no cover - the memo guarantees a continuation
            raise AssertionError("best-response reconstruction lost its target")
        r = ve
    return RevelationSequence(tuple(chain)), proposals


@dataclass
class StrategyReport:
    ic: bool
    fully_revealing: bool
    vd_monotone: bool
    witnesses: list[dict] = field(default_factory=list)


def check_strategy_properties(
    instance: Instance, strategy: Strategy, tree: GameTree | None = None
) -> StrategyReport:
    """Exhaustively test incentive compatibility, full revelation and V_d monotonicity.

    ``ic`` (resp. ``vd_monotone``) holds when the expert's (resp. decision
    maker's) payoff never falls along any history; ``fully_revealing`` when
    every expert type has a best response ending at her own awareness.
    """
    tree = GameTree(instance, strategy) if tree is None else tree
    ic = vd = True
    witnesses: list[dict] = []
    for n in tree:
        par = tree.parent(n)
        if par is None:
            continue
        if n.value_e < par.value_e:
            if ic:
                witnesses.append(
                    {"check": "ic", "sequence": n.sequence, "before": par.value_e, "after": n.value_e}
                )
            ic = False
        if n.value_d < par.value_d:
            if vd:
                witnesses.append(
                    {"check": "vd_monotone", "sequence": n.sequence, "before": par.value_d, "after": n.value_d}
                )
            vd = False
    full = True
    for p in tree.types:
        if not any(n.final == p for n in tree.best_responses(p)):
            if full:
                witnesses.append({"check": "fully_revealing", "type": p, "best_value": tree.best_value(p)})
            full = False
    return StrategyReport(ic, full, vd, witnesses)


@dataclass(frozen=True)
class Transcript:
    sequence: RevelationSequence
    proposals: tuple[Contract, ...]
    final_contract: Contract
    payoff_d: Fraction
    payoff_e: Fraction
    rent: Fraction


def dm_unconstrained_choice(space: StateSpace) -> Contract:
    """The decision maker's own optimum on ``space``, least favourable to the expert among ties."""
    row = MyopicStrategy(TieBreak.EXPERT_MIN).respond(space, None)
    return Contract.from_indices(space, row[0])


def _rent(instance: Instance, payoff_e: Fraction, expert: Partition) -> Fraction:
    space = instance.space(expert)
    return payoff_e - expected_value(space, dm_unconstrained_choice(space), "e")


def play(
    instance: Instance,
    strategy: Strategy,
    expert_sequence,
    expert_partition: Partition | None = None,
) -> Transcript:
    """Run ``strategy`` against a fixed revelation sequence.

    The rent is measured against ``expert_partition`` (default: the last
    revealed partition).
    """
    seq = _as_sequence(expert_sequence)
    _check_rooted(instance, seq)
    if expert_partition is not None and not partition_refines(seq.final, expert_partition):
        raise InvalidSequenceError(f"{expert_partition} cannot have revealed {seq.final}")
    proposals = evaluate(instance, strategy, seq)
    final = proposals[-1]
    space = instance.space(seq.final)
    vd, ve = expected_value(space, final, "d"), expected_value(space, final, "e")
    rent = _rent(instance, ve, seq.final if expert_partition is None else expert_partition)
    return Transcript(seq, tuple(proposals), final, vd, ve, rent)


def awareness_rent(t: Transcript, instance: Instance, expert_partition: Partition | None = None) -> Fraction:
    """Expert payoff in ``t`` minus what a fully aware decision maker would leave her.

    The benchmark is the decision maker's unconstrained optimum on the
    expert's space (default: the last revealed partition), ties broken
    against the expert.
    """
    expert = t.sequence.final if expert_partition is None else expert_partition
    return _rent(instance, t.payoff_e, expert)


def outcome_sets(
    instance: Instance, strategy: Strategy, tree: GameTree | None = None
) -> dict[Partition, frozenset[tuple[Fraction, Fraction, CanonicalForm]]]:
    """Per expert type, the set of (V_d, V_e, final space up to relabelling) over best responses."""
    tree = GameTree(instance, strategy) if tree is None else tree
    return {
        p: frozenset(
            (n.value_d, n.value_e, canonical_form(instance.space(n.final))) for n in brs
        )
        for p, brs in tree.all_best_responses().items()
    }


def effective_equivalence(instance: Instance, s1: Strategy, s2: Strategy) -> bool:
    """True when both strategies induce the same outcome set for every expert type."""
    return outcome_sets(instance, s1) == outcome_sets(instance, s2)


def reachable_sequences(instance: Instance, strategy: Strategy) -> list[RevelationSequence]:
    return [n.sequence for n in GameTree(instance, strategy).reachable()]
