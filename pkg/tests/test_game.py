from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import brute
from strategies import fset, small_instances
from revelation.errors import InstanceTooLargeError, InvalidSequenceError
from revelation.game import (
    GameTree,
    GreedyStrategy,
    MyopicStrategy,
    RevelationSequence,
    Strategy,
    TieBreak,
    awareness_rent,
    best_response_dp,
    best_response_witness,
    best_responses,
    check_strategy_properties,
    effective_equivalence,
    evaluate,
    make_myopic_strategy,
    myopic_frontier,
    play,
    reachable_sequences,
)
from revelation.spaces import Contract, Instance, StateSpace, expected_value

MIN, MAX = TieBreak.EXPERT_MIN, TieBreak.EXPERT_MAX


class RelabelingStrategy(Strategy):
    """Runs ``inner`` on renamed, reversed copies of every space and maps answers back."""

    def __init__(self, inner: Strategy):
        self.inner = inner

    @staticmethod
    def _rename(space: StateSpace):
        mapping = {w: f"z{k}" for k, w in enumerate(space.states)}
        moved = space.relabeled(mapping).reordered(list(reversed([mapping[w] for w in space.states])))
        return moved, mapping

    def propose(self, spaces, proposals):
        renamed = [self._rename(s) for s in spaces]
        moved = [
            Contract.from_mapping(renamed[k][0], {renamed[k][1][w]: a for w, a in c.as_dict().items()})
            for k, c in enumerate(proposals)
        ]
        c = self.inner.propose([r[0] for r in renamed], moved)
        back = {v: w for w, v in renamed[-1][1].items()}
        return Contract.from_mapping(spaces[-1], {back[z]: a for z, a in c.as_dict().items()})


# ---------------------------------------------------------------- sequences


def test_sequence_must_refine_strictly(ex2):
    with pytest.raises(InvalidSequenceError):
        RevelationSequence((ex2.root, ex2.root))
    with pytest.raises(InvalidSequenceError):
        RevelationSequence((ex2.top, ex2.root))
    with pytest.raises(InvalidSequenceError):
        RevelationSequence(())


def test_sequence_must_start_at_root(ex2):
    with pytest.raises(InvalidSequenceError):
        play(ex2, make_myopic_strategy(), [ex2.named("P'"), ex2.top])


def test_sequence_extension_is_weak(ex2):
    long = RevelationSequence((ex2.root, ex2.named("P'"), ex2.top))
    short = RevelationSequence((ex2.root,))
    assert long.extends(short) and long.extends(long) and not short.extends(long)


# ---------------------------------------------------------------- myopic frontier


def _vals(space, c):
    return expected_value(space, c, "d"), expected_value(space, c, "e")


def test_myopic_frontier_examples(ex2):
    s0 = ex2.space(ex2.root)
    [c] = myopic_frontier(s0, None)
    assert c.choice == ("a",) and _vals(s0, c) == (2, 1)
    sp = ex2.space(ex2.named("P'"))
    [c] = myopic_frontier(sp, F(1))
    assert c.as_dict() == {"omega": "a", "{nu,upsilon}": "b"} and _vals(sp, c) == (F(7, 3), F(5, 3))
    g = ex2.ground
    [c] = myopic_frontier(g, F(5, 3))
    assert c.as_dict() == {"omega": "a", "nu": "b", "upsilon": "d"} and _vals(g, c) == (F(8, 3), 2)
    [c] = myopic_frontier(g, F(1))
    assert c.as_dict() == {"omega": "a", "nu": "b", "upsilon": "c"} and _vals(g, c) == (3, F(4, 3))


def test_tiebreak_picks_opposite_ends():
    s = StateSpace.from_tables("x", "ab", ["1"], {"x": [1, 1]}, {"x": [0, 5]})
    assert MyopicStrategy(MIN).respond(s, None)[2] == 0
    assert MyopicStrategy(MAX).respond(s, None)[2] == 5


def test_example2_proposals(ex2):
    strat = make_myopic_strategy(MIN)
    assert [c.choice for c in evaluate(ex2, strat, [ex2.root])] == [("a",)]
    props = evaluate(ex2, strat, [ex2.root, ex2.named("P'"), ex2.top])
    assert [c.choice for c in props] == [("a",), ("a", "b"), ("a", "b", "d")]


def test_example1_proposals(ex1):
    props = evaluate(ex1, make_myopic_strategy(MIN), [ex1.root, ex1.top])
    assert props[0].choice == ("b",)
    assert props[1].as_dict() == {"omega": "b", "nu": "c"}


# ---------------------------------------------------------------- best responses


def test_best_responses_example2(ex2):
    strat = make_myopic_strategy(MIN)
    brs = best_responses(ex2, strat, ex2.top)
    assert RevelationSequence((ex2.root, ex2.named("P'"), ex2.top)) in brs
    tree = GameTree(ex2, strat)
    assert tree.best_value(ex2.top) == 2
    assert all(n.value_e <= 2 for n in tree)
    assert tree.node([ex2.root, ex2.top]).value_e == F(4, 3)
    pp = ex2.named("P'")
    assert tree.best_value(pp) == F(5, 3)
    assert [n.chain for n in tree.best_responses(pp)] == [(ex2.root, pp)]


def test_best_responses_example1(ex1):
    strat = make_myopic_strategy(MIN)
    assert best_responses(ex1, strat, ex1.top) == [RevelationSequence((ex1.root, ex1.top))]
    assert GameTree(ex1, strat).best_value(ex1.top) == 3


def test_best_responses_require_a_finer_type(ex2):
    coarse = ex2.named("P'")
    inst = Instance(ex2.ground, coarse)
    with pytest.raises(InvalidSequenceError):
        best_responses(inst, make_myopic_strategy(), ex2.root)


def test_chain_cap(ex2):
    with pytest.raises(InstanceTooLargeError):
        GameTree(ex2, make_myopic_strategy(), cap=3)


def test_dp_examples(ex1, ex2):
    assert best_response_dp(ex2, MIN, ex2.top) == 2
    assert best_response_dp(ex2, MIN, ex2.named("P'")) == F(5, 3)
    assert best_response_dp(ex1, MIN, ex1.top) == 3


@settings(max_examples=30, deadline=None)
@given(small_instances(), st.sampled_from([MIN, MAX]))
def test_best_value_matches_naive_chain_search(inst, tb):
    raw = brute.raw_from_space(inst.ground)
    pick = min if tb is MIN else max
    tree = GameTree(inst, MyopicStrategy(tb))
    for p in inst.interval():
        want = brute.best_value_e(raw, fset(inst.root), fset(p), pick)
        assert tree.best_value(p) == want
        assert best_response_dp(inst, tb, p) == want


@settings(max_examples=30, deadline=None)
@given(small_instances(), st.sampled_from([MIN, MAX]))
def test_tree_values_match_naive_myopic_play(inst, tb):
    raw = brute.raw_from_space(inst.ground)
    pick = min if tb is MIN else max
    for node in GameTree(inst, MyopicStrategy(tb)):
        naive = brute.myopic_values(raw, [fset(p) for p in node.chain], pick)
        assert (node.value_d, node.value_e) == naive[-1]


@settings(max_examples=30, deadline=None)
@given(small_instances(), st.sampled_from([MIN, MAX]))
def test_witness_replays_to_dp_value(inst, tb):
    strat = MyopicStrategy(tb)
    tree = GameTree(inst, strat)
    for p in inst.interval():
        seq, proposals = best_response_witness(inst, strat, p)
        assert seq.final == p  # full revelation is always among the best responses
        assert evaluate(inst, strat, seq) == proposals
        t = play(inst, strat, seq, expert_partition=p)
        assert t.payoff_e == best_response_dp(inst, strat, p) == tree.best_value(p)


# ---------------------------------------------------------------- strategy properties


@pytest.mark.parametrize("tb", [MIN, MAX])
def test_myopic_properties_on_examples(ex1, ex2, tb):
    for inst in (ex1, ex2):
        rep = check_strategy_properties(inst, make_myopic_strategy(tb))
        assert (rep.ic, rep.fully_revealing, rep.vd_monotone) == (True, True, True)


def test_greedy_breaks_ic(ex1):
    rep = check_strategy_properties(ex1, GreedyStrategy())
    assert not rep.ic and not rep.fully_revealing
    [w] = [w for w in rep.witnesses if w["check"] == "ic"]
    assert (w["before"], w["after"]) == (2, 1)


@settings(max_examples=30, deadline=None)
@given(small_instances(), st.sampled_from([MIN, MAX]))
def test_myopic_values_never_fall_along_a_chain(inst, tb):
    tree = GameTree(inst, MyopicStrategy(tb))
    for n in tree:
        par = tree.parent(n)
        if par is not None:
            assert n.value_d >= par.value_d and n.value_e >= par.value_e


# ---------------------------------------------------------------- play and rent


def test_play_example2(ex2):
    strat = make_myopic_strategy(MIN)
    t = play(ex2, strat, [ex2.root, ex2.named("P'"), ex2.top])
    assert (t.payoff_d, t.payoff_e, t.rent) == (F(8, 3), 2, F(2, 3))
    assert t.final_contract == t.proposals[-1]
    assert awareness_rent(t, ex2) == F(2, 3)
    t0 = play(ex2, strat, [ex2.root])
    assert (t0.payoff_d, t0.payoff_e) == (2, 1)


def test_play_example1(ex1):
    t = play(ex1, make_myopic_strategy(MIN), [ex1.root, ex1.top])
    assert (t.payoff_d, t.payoff_e) == (4, 3)
    assert awareness_rent(t, ex1) == 2


def test_rent_zero_when_interests_align():
    # the decision maker's coarse optimum is already his ground optimum
    s = StateSpace.from_tables("xy", "ab", ["1/2", "1/2"], {"x": [1, 0], "y": [1, 0]}, {"x": [1, 0], "y": [1, 0]})
    inst = Instance(s)
    t = play(inst, make_myopic_strategy(), [inst.root])
    assert awareness_rent(t, inst, inst.top) == 0


def test_play_rejects_coarser_expert(ex2):
    with pytest.raises(InvalidSequenceError):
        play(ex2, make_myopic_strategy(), [ex2.root, ex2.top], expert_partition=ex2.named("P'"))


# ---------------------------------------------------------------- equivalence and reachability


def test_effective_equivalence_examples(ex1, ex2):
    m = make_myopic_strategy(MIN)
    assert effective_equivalence(ex2, m, m)
    assert not effective_equivalence(ex1, m, GreedyStrategy())
    assert effective_equivalence(ex2, m, RelabelingStrategy(make_myopic_strategy(MIN)))


@settings(max_examples=25, deadline=None)
@given(small_instances(), st.sampled_from([MIN, MAX]))
def test_strategy_is_label_invariant(inst, tb):
    assert effective_equivalence(inst, MyopicStrategy(tb), RelabelingStrategy(MyopicStrategy(tb)))


@settings(max_examples=25, deadline=None)
@given(small_instances(), st.randoms(use_true_random=False))
def test_outcomes_invariant_under_ground_relabeling(inst, rnd):
    names = [f"g{k}" for k in range(len(inst.ground.states))]
    rnd.shuffle(names)
    mapping = dict(zip(inst.ground.states, names))
    other = inst.relabeled(mapping, order=sorted(names))
    a, b = GameTree(inst, MyopicStrategy()), GameTree(other, MyopicStrategy())
    for p in inst.interval():
        q = other.partition([[mapping[s] for s in blk] for blk in p.blocks])
        assert a.best_value(p) == b.best_value(q)


def test_reachable_examples(ex1, ex2):
    m = make_myopic_strategy(MIN)
    r2 = reachable_sequences(ex2, m)
    assert RevelationSequence((ex2.root, ex2.named("P'"))) in r2
    assert RevelationSequence((ex2.root,)) in r2
    r1 = reachable_sequences(ex1, m)
    assert RevelationSequence((ex1.root,)) in r1
    assert RevelationSequence((ex1.root, ex1.top)) in r1
