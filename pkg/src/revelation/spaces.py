"""Hypothetical state-spaces, partitions of a ground space, and refinement.

Every awareness level in this package is a partition of one finite ground
space.  Coarsening a ground space along a partition yields the state-space an
agent with that awareness works with: block probabilities are sums, and block
utilities are probability-weighted averages, so that any contract measurable
with respect to the coarse space keeps its expected value when lifted back to
the finer one.

All numbers are :class:`fractions.Fraction`; floats are rejected.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Literal, Mapping, Sequence, Union

from .errors import SpaceMismatchError, SpaceValidationError

__all__ = [
    "Player",
    "PLAYERS",
    "as_fraction",
    "StateSpace",
    "Partition",
    "RefinementMap",
    "RefinementCheck",
    "Contract",
    "CanonicalForm",
    "Instance",
    "validate_space",
    "expected_value",
    "coarsen",
    "check_refinement",
    "lift_contract",
    "canonical_form",
    "canonical_contract",
    "partition_refines",
    "strictly_refines",
    "enumerate_partitions_between",
    "set_partitions",
]

Player = Literal["d", "e"]
PLAYERS: tuple[Player, Player] = ("d", "e")

RationalLike = Union[int, str, Fraction]


def as_fraction(value: RationalLike) -> Fraction:
    """Convert ``value`` to an exact :class:`Fraction`.

    Accepts ints, Fractions and strings of the form ``"n"``, ``"-n"`` or
    ``"n/d"``.  Floats (and bools) are refused so nothing inexact leaks in.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"refusing inexact or boolean value {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        num, sep, den = text.partition("/")
        try:
            if sep:
                if not den.strip().isdigit():
                    raise ValueError
                return Fraction(int(num), int(den))
            return Fraction(int(num))
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"not a rational literal: {value!r}") from None
    raise TypeError(f"cannot interpret {value!r} as a rational")


def _check_player(player: str) -> None:
    if player not in PLAYERS:
        raise ValueError(f"player must be 'd' or 'e', got {player!r}")


@dataclass(frozen=True)
class StateSpace:
    """A finite hypothetical state-space: states, a prior, and two payoff tables.

    ``prob[i]`` is the probability of ``states[i]``; ``util_d[i][j]`` and
    ``util_e[i][j]`` are the decision maker's and the expert's payoffs when
    action ``actions[j]`` is taken in ``states[i]``.  A ``None`` entry marks a
    missing utility; :func:`validate_space` reports it.

    Construction does not validate, so malformed spaces can be inspected;
    everything downstream assumes :func:`validate_space` returned no errors.
    """

    states: tuple[str, ...]
    actions: tuple[str, ...]
    prob: tuple[Fraction, ...]
    util_d: tuple[tuple[Fraction | None, ...], ...]
    util_e: tuple[tuple[Fraction | None, ...], ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_tables(
        cls,
        states: Sequence[str],
        actions: Sequence[str],
        prob: Mapping[str, RationalLike] | Sequence[RationalLike],
        util_d: Mapping[str, Sequence[RationalLike] | Mapping[str, RationalLike]],
        util_e: Mapping[str, Sequence[RationalLike] | Mapping[str, RationalLike]],
    ) -> StateSpace:
        """Build a space from per-state rows.

        Rows may be sequences aligned with ``actions`` or mappings from action
        name to value.  Missing states or actions become ``None`` entries.
        """
        states = tuple(states)
        actions = tuple(actions)
        if isinstance(prob, Mapping):
            probs = tuple(as_fraction(prob[s]) if s in prob else Fraction(0) for s in states)
        else:
            probs = tuple(as_fraction(p) for p in prob)

        def table(rows):
            out = []
            for s in states:
                row = rows.get(s)
                if row is None:
                    out.append((None,) * len(actions))
                elif isinstance(row, Mapping):
                    out.append(tuple(as_fraction(row[a]) if a in row else None for a in actions))
                else:
                    vals = [as_fraction(v) for v in row]
                    vals += [None] * (len(actions) - len(vals))
                    out.append(tuple(vals[: len(actions)]))
            return tuple(out)

        return cls(states, actions, probs, table(util_d), table(util_e))

    def __hash__(self) -> int:
        h = self._cache.get("hash")
        if h is None:
            h = hash((self.states, self.actions, self.prob, self.util_d, self.util_e))
            self._cache["hash"] = h
        return h

    def __len__(self) -> int:
        return len(self.states)

    def index(self, state: str) -> int:
        idx = self._cache.get("index")
        if idx is None:
            idx = self._cache["index"] = {s: i for i, s in enumerate(self.states)}
        try:
            return idx[state]
        except KeyError:
            raise KeyError(f"unknown state {state!r}") from None

    def action_index(self, action: str) -> int:
        idx = self._cache.get("action_index")
        if idx is None:
            idx = self._cache["action_index"] = {a: j for j, a in enumerate(self.actions)}
        try:
            return idx[action]
        except KeyError:
            raise KeyError(f"unknown action {action!r}") from None

    def probability(self, state: str) -> Fraction:
        return self.prob[self.index(state)]

    def table(self, player: Player) -> tuple[tuple[Fraction | None, ...], ...]:
        _check_player(player)
        return self.util_d if player == "d" else self.util_e

    def utility(self, player: Player, state: str, action: str) -> Fraction:
        return self.table(player)[self.index(state)][self.action_index(action)]

    def weights(self, player: Player) -> tuple[tuple[Fraction, ...], ...]:
        """``prob(w) * util(w, a)`` for every state and action, cached."""
        key = ("weights", player)
        w = self._cache.get(key)
        if w is None:
            w = tuple(
                tuple(p * u for u in row) for p, row in zip(self.prob, self.table(player))
            )
            self._cache[key] = w
        return w

    def relabeled(self, mapping: Mapping[str, str]) -> StateSpace:
        """The same space with states renamed by ``mapping`` (unmapped names kept)."""
        return StateSpace(
            tuple(mapping.get(s, s) for s in self.states),
            self.actions,
            self.prob,
            self.util_d,
            self.util_e,
        )

    def reordered(self, order: Sequence[str]) -> StateSpace:
        """The same space with its states listed in ``order``."""
        idx = [self.index(s) for s in order]
        if sorted(idx) != list(range(len(self.states))):
            raise ValueError("order must be a permutation of the states")
        return StateSpace(
            tuple(self.states[i] for i in idx),
            self.actions,
            tuple(self.prob[i] for i in idx),
            tuple(self.util_d[i] for i in idx),
            tuple(self.util_e[i] for i in idx),
        )


def validate_space(s: StateSpace) -> list[str]:
    """Every violated well-formedness rule of ``s``; an empty list means valid."""
    errors: list[str] = []
    for kind, names in (("state", s.states), ("action", s.actions)):
        seen: set[str] = set()
        for name in names:
            if name in seen:
                errors.append(f"duplicate {kind} identifier {name!r}")
            seen.add(name)
    if not s.states:
        errors.append("space has no states")
    if not s.actions:
        errors.append("space has no actions")
    if len(s.prob) != len(s.states):
        errors.append(f"{len(s.prob)} probabilities given for {len(s.states)} states")
    for state, p in zip(s.states, s.prob):
        if p == 0:
            errors.append(f"state {state} has zero probability")
        elif p < 0:
            errors.append(f"state {state} has negative probability {p}")
    total = sum(s.prob, Fraction(0))
    if total != 1:
        errors.append(f"probabilities sum to {total}")
    for player, rows in (("d", s.util_d), ("e", s.util_e)):
        if len(rows) != len(s.states):
            errors.append(f"u_{player} has {len(rows)} rows for {len(s.states)} states")
        for state, row in zip(s.states, rows):
            if len(row) != len(s.actions):
                errors.append(f"u_{player}({state}) has {len(row)} entries for {len(s.actions)} actions")
            for action, u in zip(s.actions, row):
                if u is None:
                    errors.append(f"missing utility entry u_{player}({state}, {action})")
    return errors


def _require_valid(s: StateSpace) -> None:
    errors = validate_space(s)
    if errors:
        raise SpaceValidationError(errors)


@dataclass(frozen=True)
class Contract:
    """A state-contingent plan: one action per state of ``space``."""

    space: StateSpace
    choice: tuple[str, ...]

    def __post_init__(self):
        if len(self.choice) != len(self.space.states):
            raise SpaceMismatchError(
                f"contract has {len(self.choice)} entries for {len(self.space.states)} states"
            )
        bad = [a for a in self.choice if a not in self.space.actions]
        if bad:
            raise SpaceMismatchError(f"unknown actions in contract: {bad}")

    @classmethod
    def constant(cls, space: StateSpace, action: str) -> Contract:
        return cls(space, (action,) * len(space.states))

    @classmethod
    def from_mapping(cls, space: StateSpace, mapping: Mapping[str, str]) -> Contract:
        missing = [s for s in space.states if s not in mapping]
        if missing:
            raise SpaceMismatchError(f"contract leaves states {missing} unassigned")
        return cls(space, tuple(mapping[s] for s in space.states))

    @classmethod
    def from_indices(cls, space: StateSpace, indices: Sequence[int]) -> Contract:
        return cls(space, tuple(space.actions[j] for j in indices))

    def indices(self) -> tuple[int, ...]:
        return tuple(self.space.action_index(a) for a in self.choice)

    def __getitem__(self, state: str) -> str:
        return self.choice[self.space.index(state)]

    def as_dict(self) -> dict[str, str]:
        return dict(zip(self.space.states, self.choice))

    def __str__(self) -> str:
        return ", ".join(f"{s}->{a}" for s, a in zip(self.space.states, self.choice))


def expected_value(s: StateSpace, c: Contract, player: Player) -> Fraction:
    """Exact expected payoff of contract ``c`` to ``player`` under ``s``."""
    if c.space is not s and c.space != s:
        raise SpaceMismatchError("contract is defined on a different state-space")
    w = s.weights(player)
    return sum((w[i][j] for i, j in enumerate(c.indices())), Fraction(0))


@dataclass(frozen=True)
class Partition:
    """A partition of ``ground`` into nonempty disjoint blocks.

    Blocks are normalised: states inside a block follow ground order and
    blocks are ordered by their first state, so equal partitions compare equal.
    Use :meth:`from_blocks` to build one from arbitrary input.
    """

    ground: tuple[str, ...]
    blocks: tuple[tuple[str, ...], ...]

    @classmethod
    def from_blocks(cls, ground: Sequence[str], blocks: Iterable[Iterable[str]]) -> Partition:
        ground = tuple(ground)
        pos = {s: i for i, s in enumerate(ground)}
        raw = [list(b) for b in blocks]
        errors = []
        seen: dict[str, int] = {}
        for k, block in enumerate(raw):
            if not block:
                errors.append(f"block {k} is empty")
            for st in block:
                if st not in pos:
                    errors.append(f"unknown state {st!r} in block {k}")
                elif st in seen:
                    errors.append(f"state {st!r} appears in more than one block")
                else:
                    seen[st] = k
        missing = [st for st in ground if st not in seen]
        if missing:
            errors.append(f"states {missing} are not covered")
        if errors:
            raise SpaceValidationError(errors)
        norm = sorted(
            (tuple(sorted(set(b), key=pos.__getitem__)) for b in raw),
            key=lambda b: pos[b[0]],
        )
        return cls(ground, tuple(norm))

    @classmethod
    def trivial(cls, ground: Sequence[str]) -> Partition:
        ground = tuple(ground)
        return cls(ground, (ground,))

    @classmethod
    def singletons(cls, ground: Sequence[str]) -> Partition:
        ground = tuple(ground)
        return cls(ground, tuple((s,) for s in ground))

    def __len__(self) -> int:
        return len(self.blocks)

    def block_of(self, state: str) -> tuple[str, ...]:
        for b in self.blocks:
            if state in b:
                return b
        raise KeyError(f"unknown state {state!r}")

    def sort_key(self) -> tuple:
        pos = {s: i for i, s in enumerate(self.ground)}
        return (len(self.blocks), tuple(tuple(pos[s] for s in b) for b in self.blocks))

    @staticmethod
    def label(block: Sequence[str]) -> str:
        """Name of the coarse state standing for ``block``."""
        if len(block) == 1:
            return block[0]
        return "{" + ",".join(block) + "}"

    def labels(self) -> tuple[str, ...]:
        return tuple(self.label(b) for b in self.blocks)

    def __str__(self) -> str:
        return "{" + " | ".join(",".join(b) for b in self.blocks) + "}"


def partition_refines(p1: Partition, p2: Partition) -> bool:
    """True when ``p2`` refines ``p1``: each block of ``p2`` sits inside a block of ``p1``."""
    if set(p1.ground) != set(p2.ground):
        raise SpaceMismatchError("partitions are over different ground sets")
    owner = {}
    for k, b in enumerate(p1.blocks):
        for s in b:
            owner[s] = k
    return all(len({owner[s] for s in b}) == 1 for b in p2.blocks)


def strictly_refines(p1: Partition, p2: Partition) -> bool:
    """``p2`` refines ``p1`` and differs from it."""
    return len(p2.blocks) > len(p1.blocks) and partition_refines(p1, p2)


def set_partitions(items: Sequence) -> Iterator[list[list]]:
    """Yield every set partition of ``items`` (Bell-number many)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in set_partitions(rest):
        for k in range(len(smaller)):
            yield smaller[:k] + [[first] + smaller[k]] + smaller[k + 1 :]
        yield [[first]] + smaller


def enumerate_partitions_between(p_coarse: Partition, p_fine: Partition) -> list[Partition]:
    """All partitions refining ``p_coarse`` and refined by ``p_fine``, both ends included.

    Ordered by block count, then by the ground indices of the blocks.
    """
    if not partition_refines(p_coarse, p_fine):
        raise ValueError(f"{p_fine} does not refine {p_coarse}")
    per_block = []
    for outer in p_coarse.blocks:
        inner = [b for b in p_fine.blocks if b[0] in outer]
        per_block.append(
            [[sum(group, ()) for group in sp] for sp in set_partitions(inner)]
        )
    out = {
        Partition.from_blocks(p_fine.ground, itertools.chain.from_iterable(combo))
        for combo in itertools.product(*per_block)
    }
    return sorted(out, key=Partition.sort_key)


@dataclass(frozen=True)
class RefinementMap:
    """A surjection from the states of ``source`` (fine) onto ``target`` (coarse).

    ``assignment[i]`` is the target state that ``source.states[i]`` maps to.
    """

    source: StateSpace
    target: StateSpace
    assignment: tuple[str, ...]

    @classmethod
    def from_mapping(
        cls, source: StateSpace, target: StateSpace, mapping: Mapping[str, str]
    ) -> RefinementMap:
        return cls(source, target, tuple(mapping[s] for s in source.states))

    def __call__(self, state: str) -> str:
        return self.assignment[self.source.index(state)]

    def preimage(self, coarse_state: str) -> tuple[str, ...]:
        return tuple(s for s, t in zip(self.source.states, self.assignment) if t == coarse_state)


@dataclass(frozen=True)
class RefinementCheck:
    """Outcome of :func:`check_refinement`; truthy iff the map is a valid refinement."""

    ok: bool
    reasons: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def check_refinement(coarse: StateSpace, fine: StateSpace, q: RefinementMap) -> RefinementCheck:
    """Check that ``q`` exhibits ``fine`` as a refinement of ``coarse``.

    Requires ``q`` to be surjective, block probabilities to add up exactly,
    and each coarse utility to equal the conditional expectation of the fine
    utilities over its preimage, for both players and every action.
    """
    reasons: list[str] = []
    if q.source != fine or q.target != coarse:
        return RefinementCheck(False, ("map does not go from the fine space to the coarse space",))
    if coarse.actions != fine.actions:
        return RefinementCheck(False, ("spaces have different action lists",))
    unknown = sorted(set(q.assignment) - set(coarse.states))
    if unknown:
        return RefinementCheck(False, (f"map sends states to unknown targets {unknown}",))
    for w in coarse.states:
        pre = [fine.index(s) for s in q.preimage(w)]
        if not pre:
            reasons.append(f"map is not surjective: nothing maps to {w}")
            continue
        pw = coarse.probability(w)
        mass = sum((fine.prob[i] for i in pre), Fraction(0))
        if mass != pw:
            reasons.append(f"probability fails at {w}: preimage mass {mass}, coarse probability {pw}")
            continue
        ci = coarse.index(w)
        for player in PLAYERS:
            fw = fine.weights(player)
            row = coarse.table(player)[ci]
            for j, a in enumerate(coarse.actions):
                expect = sum((fw[i][j] for i in pre), Fraction(0)) / pw
                if row[j] != expect:
                    reasons.append(
                        f"utility aggregation fails at ({w}, {a}) for {player}: "
                        f"expected {expect}, got {row[j]}"
                    )
    return RefinementCheck(not reasons, tuple(reasons))


def coarsen(ground: StateSpace, p: Partition) -> tuple[StateSpace, RefinementMap]:
    """View ``ground`` through partition ``p``.

    Each block becomes one state whose probability is the block's mass and
    whose utilities are the conditional averages over the block.  Singleton
    blocks keep their ground name, so the singleton partition maps by identity.
    """
    if set(p.ground) != set(ground.states) or len(p.ground) != len(ground.states):
        raise SpaceMismatchError("partition is not over this space's states")
    n_act = len(ground.actions)
    labels, probs, rows_d, rows_e = [], [], [], []
    wd, we = ground.weights("d"), ground.weights("e")
    assign = {}
    for block in p.blocks:
        idx = [ground.index(s) for s in block]
        mass = sum((ground.prob[i] for i in idx), Fraction(0))
        label = Partition.label(block)
        labels.append(label)
        probs.append(mass)
        rows_d.append(tuple(sum((wd[i][j] for i in idx), Fraction(0)) / mass for j in range(n_act)))
        rows_e.append(tuple(sum((we[i][j] for i in idx), Fraction(0)) / mass for j in range(n_act)))
        for s in block:
            assign[s] = label
    space = StateSpace(tuple(labels), ground.actions, tuple(probs), tuple(rows_d), tuple(rows_e))
    return space, RefinementMap.from_mapping(ground, space, assign)


def lift_contract(c: Contract, q: RefinementMap) -> Contract:
    """Re-express coarse contract ``c`` on the fine side of ``q``."""
    if c.space is not q.target and c.space != q.target:
        raise SpaceMismatchError("contract does not live on the map's coarse space")
    return Contract(q.source, tuple(c[t] for t in q.assignment))


@dataclass(frozen=True, order=True)
class CanonicalForm:
    """Label-free encoding of a state-space.

    ``rows`` holds one ``(prob, util_d row, util_e row)`` triple per state,
    sorted, so two spaces share a form exactly when some bijection of states
    preserves probabilities and both payoff tables.
    """

    actions: tuple[str, ...]
    rows: tuple[tuple[Fraction, tuple[Fraction, ...], tuple[Fraction, ...]], ...]

    def encode(self) -> str:
        def q(x: Fraction) -> str:
            return f"{x.numerator}/{x.denominator}"

        parts = [
            q(p) + ":" + ",".join(map(q, rd)) + ":" + ",".join(map(q, re_))
            for p, rd, re_ in self.rows
        ]
        return "actions=" + ",".join(self.actions) + ";" + ";".join(parts)


def _state_keys(s: StateSpace) -> list[tuple]:
    keys = s._cache.get("state_keys")
    if keys is None:
        keys = s._cache["state_keys"] = [
            (p, rd, re_) for p, rd, re_ in zip(s.prob, s.util_d, s.util_e)
        ]
    return keys


def canonical_form(s: StateSpace) -> CanonicalForm:
    form = s._cache.get("canonical")
    if form is None:
        form = s._cache["canonical"] = CanonicalForm(s.actions, tuple(sorted(_state_keys(s))))
    return form


def canonical_contract(c: Contract) -> tuple:
    """Label-free sort key for a contract: sorted (state payoff row, action index) pairs."""
    keys = _state_keys(c.space)
    return tuple(sorted(zip(keys, c.indices())))


@dataclass(eq=False)
class Instance:
    """A ground space (the expert's full awareness) plus the decision maker's partition.

    ``partitions`` holds optional named awareness levels; the names ``"full"``
    and ``"dm"`` always resolve to the singleton partition and the decision
    maker's own partition.  Coarsened spaces are cached per partition, so the
    same partition always yields the same :class:`StateSpace` object.
    """

    ground: StateSpace
    dm_partition: Partition | None = None
    partitions: dict[str, Partition] = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        _require_valid(self.ground)
        if self.dm_partition is None:
            self.dm_partition = Partition.trivial(self.ground.states)
        for name, p in [("dm_partition", self.dm_partition), *self.partitions.items()]:
            if tuple(p.ground) != self.ground.states:
                raise SpaceValidationError([f"partition {name} is not over the ground states"])

    @property
    def root(self) -> Partition:
        return self.dm_partition

    @property
    def top(self) -> Partition:
        return Partition.singletons(self.ground.states)

    def partition(self, blocks: Iterable[Iterable[str]]) -> Partition:
        return Partition.from_blocks(self.ground.states, blocks)

    def named(self, name: str) -> Partition:
        if name == "full":
            return self.top
        if name == "dm":
            return self.root
        try:
            return self.partitions[name]
        except KeyError:
            known = ", ".join(["full", "dm", *self.partitions])
            raise KeyError(f"unknown partition {name!r} (known: {known})") from None

    def _coarse(self, p: Partition) -> tuple[StateSpace, RefinementMap]:
        store = self._cache.setdefault("coarse", {})
        hit = store.get(p)
        if hit is None:
            if p == self.top:
                # identity coarsening; reuse the ground object itself
                hit = (self.ground, RefinementMap(self.ground, self.ground, self.ground.states))
            else:
                hit = coarsen(self.ground, p)
            store[p] = hit
        return hit

    def space(self, p: Partition) -> StateSpace:
        """The coarsened space of awareness level ``p`` (cached)."""
        return self._coarse(p)[0]

    def refinement(self, p: Partition) -> RefinementMap:
        """Map from the ground space onto :meth:`space` of ``p``."""
        return self._coarse(p)[1]

    def projection(self, coarse: Partition, fine: Partition) -> RefinementMap:
        """Map from the space of ``fine`` onto the space of ``coarse``."""
        if not partition_refines(coarse, fine):
            raise ValueError(f"{fine} does not refine {coarse}")
        src, tgt = self.space(fine), self.space(coarse)
        mapping = {Partition.label(b): Partition.label(coarse.block_of(b[0])) for b in fine.blocks}
        return RefinementMap.from_mapping(src, tgt, mapping)

    def interval(self, low: Partition | None = None, high: Partition | None = None) -> list[Partition]:
        """Partitions between ``low`` (default: root) and ``high`` (default: top)."""
        low = self.root if low is None else low
        high = self.top if high is None else high
        store = self._cache.setdefault("interval", {})
        key = (low, high)
        if key not in store:
            store[key] = enumerate_partitions_between(low, high)
        return store[key]

    def successors(self, p: Partition) -> list[Partition]:
        """Partitions of the full interval that strictly refine ``p``."""
        store = self._cache.setdefault("succ", {})
        if p not in store:
            store[p] = [q for q in self.interval() if strictly_refines(p, q)]
        return store[p]

    def relabeled(self, mapping: Mapping[str, str], order: Sequence[str] | None = None) -> Instance:
        """The same instance with ground states renamed (and optionally re-listed)."""
        ground = self.ground.relabeled(mapping)
        if order is not None:
            ground = ground.reordered(order)

        def move(p: Partition) -> Partition:
            return Partition.from_blocks(ground.states, [[mapping.get(s, s) for s in b] for b in p.blocks])

        return Instance(ground, move(self.dm_partition), {k: move(v) for k, v in self.partitions.items()})
