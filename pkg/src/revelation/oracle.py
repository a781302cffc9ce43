"""Seeded random instances and an exhaustive verification harness.

:func:`verify_instance` runs every property check on one instance and
returns a :class:`VerificationReport`; each failed check carries witnesses
(sequence or report pair plus the offending values) that can be replayed
with the public functions of :mod:`revelation.game` and
:mod:`revelation.mechanisms`.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

from .contracts import enumerate_contracts, payoff_table
from .game import (
    GameTree,
    MyopicStrategy,
    Node,
    Strategy,
    TieBreak,
    best_response_dp,
    check_strategy_properties,
)
from .mechanisms import MechanismKind, audit_mechanism, compare_mechanisms, mech_dm
from .spaces import (
    Instance,
    Partition,
    StateSpace,
    as_fraction,
    expected_value,
    lift_contract,
    partition_refines,
    set_partitions,
)

__all__ = [
    "InstanceSpec",
    "CheckResult",
    "VerificationReport",
    "random_instance",
    "corpus",
    "verify_instance",
    "strong_myopic_violations",
    "strong_myopic_check",
    "deviation_worst_case",
]

MIN_STATES, MAX_STATES = 2, 6
MIN_ACTIONS, MAX_ACTIONS = 2, 5


@dataclass(frozen=True)
class InstanceSpec:
    """Recipe for a random instance; the same recipe always yields the same instance."""

    seed: int
    n_states: int = 3
    n_actions: int = 3
    value_grid: tuple = tuple(range(7))
    dm_partition: Union[Partition, Sequence[Sequence[str]], str] = "trivial"
    max_weight: int = 4

    def check(self) -> None:
        if not MIN_STATES <= self.n_states <= MAX_STATES:
            raise ValueError(f"bounds: n_states must be in {MIN_STATES}..{MAX_STATES}, got {self.n_states}")
        if not MIN_ACTIONS <= self.n_actions <= MAX_ACTIONS:
            raise ValueError(f"bounds: n_actions must be in {MIN_ACTIONS}..{MAX_ACTIONS}, got {self.n_actions}")
        if not self.value_grid:
            raise ValueError("bounds: value_grid is empty")
        if self.max_weight < 1:
            raise ValueError("bounds: max_weight must be positive")


def random_instance(spec: InstanceSpec) -> Instance:
    """Draw an instance from ``spec`` using only ``random.Random(spec.seed)``.

    Probabilities are normalised integer weights in ``1..max_weight``;
    payoffs are drawn from ``value_grid``.
    """
    spec.check()
    rng = random.Random(spec.seed)
    grid = [as_fraction(v) for v in spec.value_grid]
    states = tuple(f"s{k + 1}" for k in range(spec.n_states))
    actions = tuple(string.ascii_lowercase[: spec.n_actions])
    weights = [rng.randint(1, spec.max_weight) for _ in states]
    total = sum(weights)
    prob = tuple(Fraction(w, total) for w in weights)
    util_d = tuple(tuple(rng.choice(grid) for _ in actions) for _ in states)
    util_e = tuple(tuple(rng.choice(grid) for _ in actions) for _ in states)
    ground = StateSpace(states, actions, prob, util_d, util_e)
    if isinstance(spec.dm_partition, Partition):
        dm = Partition.from_blocks(states, spec.dm_partition.blocks)
    elif spec.dm_partition == "trivial":
        dm = Partition.trivial(states)
    elif isinstance(spec.dm_partition, str):
        raise ValueError(f"unknown dm_partition {spec.dm_partition!r}")
    else:
        dm = Partition.from_blocks(states, spec.dm_partition)
    return Instance(ground, dm)


def corpus(
    n: int = 200, max_states: int = 4, max_actions: int = 3, grid: Sequence[int] = range(7)
) -> list[tuple[InstanceSpec, Instance]]:
    """The standard property-test corpus.

    Sizes cycle through ``2..max_states`` states and ``2..max_actions``
    actions.  Every fifth instance with at least three states gets a
    nontrivial decision-maker partition drawn from the same seed.
    """
    out = []
    state_sizes = range(MIN_STATES, max_states + 1)
    action_sizes = range(MIN_ACTIONS, max_actions + 1)
    for k in range(n):
        n_s = state_sizes[k % len(state_sizes)]
        n_a = action_sizes[(k // len(state_sizes)) % len(action_sizes)]
        dm: object = "trivial"
        if k % 5 == 4 and n_s >= 3:
            names = [f"s{i + 1}" for i in range(n_s)]
            options = [p for p in set_partitions(names) if 1 < len(p) < n_s]
            dm = random.Random(10_000 + k).choice(options)
        spec = InstanceSpec(seed=k, n_states=n_s, n_actions=n_a, value_grid=tuple(grid), dm_partition=dm)
        out.append((spec, random_instance(spec)))
    return out


@dataclass
class CheckResult:
    name: str
    passed: bool
    checked: int = 0
    witnesses: list[dict] = field(default_factory=list)


@dataclass
class VerificationReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def _result(name: str, checked: int, witnesses: list[dict], limit: int = 10) -> CheckResult:
    return CheckResult(name, not witnesses, checked, witnesses[:limit])


def _bar_ve(tree: GameTree, final: Partition) -> Fraction | None:
    """Best payoff any strictly less aware expert type can secure."""
    vals = [tree.best_value(t) for t in tree.types if t != final and partition_refines(t, final)]
    return max(vals) if vals else None


def _strong_points(tree: GameTree) -> list[Node]:
    # best responses of every type, plus each type's best history ending exactly at it
    points: dict = {}
    for brs in tree.all_best_responses().values():
        for n in brs:
            points[n.chain] = n
    for t in tree.types:
        ending = [n for n in tree if n.final == t]
        top = max(n.value_e for n in ending)
        for n in ending:
            if n.value_e == top:
                points[n.chain] = n
    return [n for n in tree if n.chain in points]


def strong_myopic_violations(
    instance: Instance, strategy: Strategy, tree: GameTree | None = None
) -> list[dict]:
    """Histories where the proposal is not a decision-maker optimum under the strong constraint.

    The strong constraint asks the expert to receive at least the best payoff
    any strictly less aware type could guarantee herself.  Checked at every
    best response, and at each type's best history among those ending exactly
    at that type.
    """
    tree = GameTree(instance, strategy) if tree is None else tree
    out = []
    for n in _strong_points(tree):
        space = instance.space(n.final)
        bar = _bar_ve(tree, n.final) if len(n.chain) > 1 else None
        feasible = [r for r in payoff_table(space) if bar is None or r[2] >= bar]
        best = max((r[1] for r in feasible), default=None)
        if (bar is not None and n.value_e < bar) or best is None or n.value_d != best:
            out.append({"sequence": n.sequence, "bound": bar, "value_d": n.value_d,
                        "value_e": n.value_e, "best_feasible_d": best})
    return out


def strong_myopic_check(instance: Instance, strategy: Strategy, tree: GameTree | None = None) -> bool:
    return not strong_myopic_violations(instance, strategy, tree)


def deviation_worst_case(
    instance: Instance, strategy: MyopicStrategy, node: Node, contract_row: tuple
) -> Fraction:
    """Lowest decision-maker payoff over all histories extending ``node``.

    The deviation proposes ``contract_row`` at ``node`` and plays myopically
    afterwards; every extension counts, best response or not.
    """
    memo: dict = {}

    def worst(p: Partition, vd: Fraction, ve: Fraction) -> Fraction:
        lo = vd
        for q in instance.successors(p):
            key = (q, ve)
            if key not in memo:
                _, qd, qe = strategy.respond(instance.space(q), ve)
                memo[key] = worst(q, qd, qe)
            lo = min(lo, memo[key])
        return lo

    return worst(node.final, contract_row[1], contract_row[2])


def _check_lift(instance: Instance) -> CheckResult:
    witnesses, checked = [], 0
    types = instance.interval()
    for p in types:
        coarse = instance.space(p)
        contracts = enumerate_contracts(coarse)
        for q in types:
            if not partition_refines(p, q):
                continue
            fine = instance.space(q)
            proj = instance.projection(p, q)
            for c in contracts:
                lifted = lift_contract(c, proj)
                checked += 1
                for player in ("d", "e"):
                    a, b = expected_value(coarse, c, player), expected_value(fine, lifted, player)
                    if a != b:
                        witnesses.append({"coarse": p, "fine": q, "contract": str(c),
                                          "player": player, "coarse_value": a, "fine_value": b})
    return _result("lift_invariance", checked, witnesses)


def _check_robustness(instance, strategy: MyopicStrategy, tree: GameTree, rng: random.Random,
                      samples: int) -> tuple[CheckResult, CheckResult, CheckResult]:
    tag = strategy.tiebreak.value
    brs = [n for lst in tree.all_best_responses().values() for n in lst]
    floor_w, single_w, multi_w = [], [], []
    n_single = n_multi = 0
    reach = tree.reachable()
    for node in reach:
        ext = [b for b in brs if b.chain[: len(node.chain)] == node.chain]
        worst_br = min(b.value_d for b in ext)
        if worst_br < node.value_d:
            floor_w.append({"sequence": node.sequence, "value_d": node.value_d, "worst_best_response": worst_br})
        parent = tree.parent(node)
        reservation = None if parent is None else parent.value_e
        space = instance.space(node.final)
        alternatives = []
        for row in payoff_table(space):
            if reservation is not None and row[2] < reservation:
                continue
            n_single += 1
            if row[1] > node.value_d:
                single_w.append({"sequence": node.sequence, "reservation": reservation,
                                 "alternative": row[0], "alt_value_d": row[1], "value_d": node.value_d})
            if row[0] != node.contract.indices():
                alternatives.append(row)
        for row in rng.sample(alternatives, min(samples, len(alternatives))):
            n_multi += 1
            dev = deviation_worst_case(instance, strategy, node, row)
            if dev > worst_br:
                multi_w.append({"sequence": node.sequence, "deviation": row[0],
                                "deviation_worst": dev, "myopic_worst": worst_br})
    return (
        _result(f"robust_floor[{tag}]", len(reach), floor_w),
        _result(f"single_step_deviation[{tag}]", n_single, single_w),
        _result(f"sampled_deviations[{tag}]", n_multi, multi_w),
    )


def verify_instance(instance: Instance, seed: int = 0, deviation_samples: int = 4) -> VerificationReport:
    """Run the full property suite on one instance.

    ``seed`` only drives which multi-step deviations are sampled.
    """
    rng = random.Random(seed)
    checks = [_check_lift(instance)]
    trees = {}
    for tb in TieBreak:
        strategy = MyopicStrategy(tb)
        tree = trees[tb] = GameTree(instance, strategy)
        rep = check_strategy_properties(instance, strategy, tree)
        for name in ("ic", "fully_revealing", "vd_monotone"):
            w = [x for x in rep.witnesses if x.get("check") == name]
            if not getattr(rep, name) and not w:
                w = [{"check": name}]
            checks.append(_result(f"{name}[{tb.value}]", len(tree), w))
        dp_w = []
        for p in tree.types:
            brute, fast = tree.best_value(p), best_response_dp(instance, strategy, p)
            if brute != fast:
                dp_w.append({"type": p, "brute_force": brute, "dp": fast})
        checks.append(_result(f"dp_matches_brute_force[{tb.value}]", len(tree.types), dp_w))
        checks.append(_result(f"strong_myopic[{tb.value}]", len(tree),
                              strong_myopic_violations(instance, strategy, tree)))
        checks.extend(_check_robustness(instance, strategy, tree, rng, deviation_samples))

    lo, hi = trees[TieBreak.EXPERT_MIN], trees[TieBreak.EXPERT_MAX]
    cor_w, seen = [], set()
    for node in lo.reachable() + hi.reachable():
        if node.chain in seen:
            continue
        seen.add(node.chain)
        a, b = lo.nodes[node.chain].value_d, hi.nodes[node.chain].value_d
        if a < b:
            cor_w.append({"sequence": node.sequence, "expert_min_d": a, "expert_max_d": b})
    checks.append(_result("expert_min_dominates", len(seen), cor_w))

    for kind in MechanismKind:
        rep = audit_mechanism(instance, kind)
        for name in ("ir", "ic_d", "ic_e", "po"):
            w = [x for x in rep.witnesses if x["check"] == name]
            checks.append(_result(f"{kind.value}.{name}", rep.pairs, w))
    cmp = compare_mechanisms(instance)
    checks.append(_result("mechanism_dominance", len(cmp.rows), cmp.violations))

    md_w = []
    for p in hi.types:
        out = mech_dm(instance, instance.root, p)
        full = [n for n in hi.best_responses(p) if n.final == p]
        if not full or (out.value_d, out.value_e) != (full[0].value_d, full[0].value_e):
            md_w.append({"type": p, "mechanism": (out.value_d, out.value_e),
                         "game": (full[0].value_d, full[0].value_e) if full else None})
    checks.append(_result("dm_mechanism_matches_game", len(hi.types), md_w))
    return VerificationReport(checks)
