"""The two worked instances used throughout the tests and docs.

``example1`` is the two-state, three-action legislation story: the expert sees
both states, the decision maker sees neither.  ``example2`` has three states
and four actions, where revealing in two steps beats revealing everything at
once; it also names the intermediate partition ``"P'"``.
"""

from __future__ import annotations

from .spaces import Instance, Partition, StateSpace


def example1() -> Instance:
    states = ("omega", "nu")
    ground = StateSpace.from_tables(
        states,
        ("a", "b", "c"),
        {"omega": "1/2", "nu": "1/2"},
        {"omega": [0, 6, 0], "nu": [4, 0, 2]},
        {"omega": [0, 2, 4], "nu": [0, 2, 4]},
    )
    return Instance(ground, Partition.trivial(states))


def example2() -> Instance:
    states = ("omega", "nu", "upsilon")
    ground = StateSpace.from_tables(
        states,
        ("a", "b", "c", "d"),
        {s: "1/3" for s in states},
        {"omega": [2, 0, 0, 0], "nu": [2, 3, 0, 0], "upsilon": [2, 2, 4, 3]},
        {"omega": [1, 2, 0, 0], "nu": [1, 2, 1, 0], "upsilon": [1, 2, 1, 3]},
    )
    p_prime = Partition.from_blocks(states, [["omega"], ["nu", "upsilon"]])
    return Instance(ground, Partition.trivial(states), {"P'": p_prime})
