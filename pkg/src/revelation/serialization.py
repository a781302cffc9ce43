"""JSON instance files and machine-readable reports.

An instance file is a JSON object::

    {
      "format": "revelation-instance/1",
      "states": ["omega", "nu"],
      "actions": ["a", "b", "c"],
      "prob": ["1/2", "1/2"],
      "u_d": {"omega": ["0", "6", "0"], "nu": ["4", "0", "2"]},
      "u_e": {"omega": ["0", "2", "4"], "nu": ["0", "2", "4"]},
      "dm_partition": [["omega", "nu"]],
      "partitions": {"P'": [["omega"], ["nu"]]}
    }

``prob`` may also be an object keyed by state.  A utility row is either a list
aligned with ``actions`` or an object keyed by action.  Numbers are rational
strings (``"3"``, ``"-3"``, ``"7/3"``); bare JSON integers are accepted,
floats are not.  ``dm_partition`` defaults to a single block and
``partitions`` is optional.

Reports written with :func:`to_jsonable` render every rational as ``"n/d"``.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .errors import InstanceFormatError, SpaceValidationError
from .game import RevelationSequence
from .spaces import Contract, Instance, Partition, StateSpace, as_fraction, validate_space

__all__ = [
    "INSTANCE_FORMAT",
    "REPORT_SCHEMA",
    "parse_instance",
    "loads_instance",
    "load_instance",
    "instance_to_dict",
    "dumps_instance",
    "save_instance",
    "instance_digest",
    "rational_str",
    "to_jsonable",
]

INSTANCE_FORMAT = "revelation-instance/1"
REPORT_SCHEMA = "revelation-report/1"

_INVARIANTS = (
    ("given for", "shape"),
    ("sum to", "sum"),
    ("probability", "positivity"),
    ("missing utility", "totality"),
    ("duplicate", "uniqueness"),
)


def _invariant(message: str) -> str:
    for needle, name in _INVARIANTS:
        if needle in message:
            return name
    return "shape"


def _rational(value: Any, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise InstanceFormatError(where, f"expected a rational string, got {value!r}")
    try:
        return as_fraction(value)
    except ValueError as exc:
        raise InstanceFormatError(where, str(exc)) from None


def _names(data: dict, key: str) -> list[str]:
    value = data.get(key)
    if not isinstance(value, list) or not value or not all(isinstance(v, str) for v in value):
        raise InstanceFormatError(key, "expected a nonempty list of names")
    return value


def _rows(data: dict, key: str, states: list[str], actions: list[str]) -> dict[str, dict[str, Fraction]]:
    table = data.get(key)
    if isinstance(table, list):
        if len(table) != len(states):
            raise InstanceFormatError(key, f"{len(table)} rows for {len(states)} states")
        table = dict(zip(states, table))
    if not isinstance(table, dict):
        raise InstanceFormatError(key, "expected an object keyed by state")
    out: dict[str, dict[str, Fraction]] = {}
    for state, row in table.items():
        where = f"{key}.{state}"
        if state not in states:
            raise InstanceFormatError(where, f"unknown state {state!r}")
        if isinstance(row, list):
            if len(row) != len(actions):
                raise InstanceFormatError(where, f"{len(row)} entries for {len(actions)} actions")
            row = dict(zip(actions, row))
        if not isinstance(row, dict):
            raise InstanceFormatError(where, "expected a list or an object keyed by action")
        for action in row:
            if action not in actions:
                raise InstanceFormatError(f"{where}.{action}", f"unknown action {action!r}")
        out[state] = {a: _rational(v, f"{where}.{a}") for a, v in row.items()}
    return out


def _blocks(value: Any, where: str) -> list[list[str]]:
    if not isinstance(value, list) or not all(
        isinstance(b, list) and all(isinstance(s, str) for s in b) for b in value
    ):
        raise InstanceFormatError(where, "expected a list of lists of state names")
    return value


def _partition(states: list[str], value: Any, where: str) -> Partition:
    try:
        return Partition.from_blocks(states, _blocks(value, where))
    except SpaceValidationError as exc:
        raise InstanceFormatError(where, str(exc)) from None


def parse_instance(data: Any) -> Instance:
    """Build a validated :class:`Instance` from decoded JSON.

    Raises :class:`InstanceFormatError` for structural problems (naming the
    field) and :class:`SpaceValidationError` when the space breaks an
    invariant; each validation message is prefixed with the invariant's name.
    """
    if not isinstance(data, dict):
        raise InstanceFormatError("top level", "expected a JSON object")
    fmt = data.get("format", INSTANCE_FORMAT)
    if fmt != INSTANCE_FORMAT:
        raise InstanceFormatError("format", f"unsupported format {fmt!r}")
    unknown = set(data) - {"format", "states", "actions", "prob", "u_d", "u_e", "dm_partition", "partitions"}
    if unknown:
        raise InstanceFormatError(sorted(unknown)[0], "unknown field")
    states, actions = _names(data, "states"), _names(data, "actions")

    prob = data.get("prob")
    if isinstance(prob, dict):
        for state in prob:
            if state not in states:
                raise InstanceFormatError(f"prob.{state}", f"unknown state {state!r}")
        probs = [_rational(prob[s], f"prob.{s}") if s in prob else Fraction(0) for s in states]
    elif isinstance(prob, list):
        if len(prob) != len(states):
            raise InstanceFormatError("prob", f"{len(prob)} probabilities for {len(states)} states")
        probs = [_rational(v, f"prob[{k}]") for k, v in enumerate(prob)]
    else:
        raise InstanceFormatError("prob", "expected a list or an object keyed by state")

    ground = StateSpace.from_tables(
        states, actions, probs,
        _rows(data, "u_d", states, actions), _rows(data, "u_e", states, actions),
    )
    errors = validate_space(ground)
    if errors:
        raise SpaceValidationError([f"{_invariant(m)}: {m}" for m in errors])

    dm = None
    if data.get("dm_partition") is not None:
        dm = _partition(states, data["dm_partition"], "dm_partition")
    named = data.get("partitions") or {}
    if not isinstance(named, dict):
        raise InstanceFormatError("partitions", "expected an object of named partitions")
    partitions = {}
    for name, blocks in named.items():
        if name in ("full", "dm"):
            raise InstanceFormatError(f"partitions.{name}", "name is reserved")
        partitions[name] = _partition(states, blocks, f"partitions.{name}")
    return Instance(ground, dm, partitions)


def loads_instance(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return parse_instance(data)


def load_instance(path: str | Path) -> Instance:
    return loads_instance(Path(path).read_text(encoding="utf-8"))


def rational_str(x: Fraction) -> str:
    """Always ``"n/d"``, even for integers."""
    return f"{x.numerator}/{x.denominator}"


def _blocks_out(p: Partition) -> list[list[str]]:
    return [list(b) for b in p.blocks]


def instance_to_dict(instance: Instance) -> dict:
    g = instance.ground
    return {
        "format": INSTANCE_FORMAT,
        "states": list(g.states),
        "actions": list(g.actions),
        "prob": [str(p) for p in g.prob],
        "u_d": {s: [str(u) for u in row] for s, row in zip(g.states, g.util_d)},
        "u_e": {s: [str(u) for u in row] for s, row in zip(g.states, g.util_e)},
        "dm_partition": _blocks_out(instance.root),
        "partitions": {name: _blocks_out(p) for name, p in sorted(instance.partitions.items())},
    }


def dumps_instance(instance: Instance) -> str:
    """Human-editable JSON: one line per field, one line per utility row."""
    data = instance_to_dict(instance)

    def inline(v) -> str:
        return json.dumps(v, ensure_ascii=False)

    lines = []
    for key, value in data.items():
        if isinstance(value, dict) and value:
            body = ",\n".join(f"    {inline(k)}: {inline(v)}" for k, v in value.items())
            lines.append(f"  {inline(key)}: {{\n{body}\n  }}")
        else:
            lines.append(f"  {inline(key)}: {inline(value)}")
    return "{\n" + ",\n".join(lines) + "\n}\n"


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(dumps_instance(instance), encoding="utf-8")


def instance_digest(instance: Instance) -> str:
    """SHA-256 of the normalised serialisation; stable across runs and formatting."""
    blob = json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def to_jsonable(obj: Any) -> Any:
    """Convert library objects to plain JSON values without ever producing a float."""
    if isinstance(obj, float):
        raise TypeError(f"refusing to serialise float {obj!r}")
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, Fraction):
        return rational_str(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Partition):
        return _blocks_out(obj)
    if isinstance(obj, RevelationSequence):
        return [_blocks_out(p) for p in obj.chain]
    if isinstance(obj, Contract):
        return obj.as_dict()
    if isinstance(obj, StateSpace):
        return {"states": list(obj.states)}
    if isinstance(obj, dict):
        return {k if isinstance(k, str) else str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted((to_jsonable(v) for v in obj), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not f.name.startswith("_")}
    raise TypeError(f"cannot serialise {type(obj).__name__}")
