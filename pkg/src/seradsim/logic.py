"""Ternary signal values and gate evaluation.

X models a metastable or unknown level. It propagates pessimistically
except where another input logically masks it (AND with 0, OR with 1,
majority decided without the X vote).
"""

from __future__ import annotations

from enum import IntEnum


class LogicValue(IntEnum):
    L0 = 0
    L1 = 1
    X = 2

    def __str__(self) -> str:  # VCD spelling
        return {LogicValue.L0: "0", LogicValue.L1: "1", LogicValue.X: "x"}[self]


L0 = LogicValue.L0
L1 = LogicValue.L1
X = LogicValue.X

GATE_KINDS = ("INV", "BUF", "AND2", "OR2", "XOR2", "NAND2", "NOR2", "MAJ3", "CELEM2")

ARITY = {
    "INV": 1,
    "BUF": 1,
    "AND2": 2,
    "OR2": 2,
    "XOR2": 2,
    "NAND2": 2,
    "NOR2": 2,
    "MAJ3": 3,
    "CELEM2": 2,
}


class ArityMismatch(Exception):
    pass


def _not(a: LogicValue) -> LogicValue:
    if a is X:
        return X
    return L1 if a is L0 else L0


def _and(a: LogicValue, b: LogicValue) -> LogicValue:
    if a is L0 or b is L0:
        return L0
    if a is X or b is X:
        return X
    return L1


def _or(a: LogicValue, b: LogicValue) -> LogicValue:
    if a is L1 or b is L1:
        return L1
    if a is X or b is X:
        return X
    return L0


def _xor(a: LogicValue, b: LogicValue) -> LogicValue:
    if a is X or b is X:
        return X
    return L1 if a != b else L0


def _maj3(a: LogicValue, b: LogicValue, c: LogicValue) -> LogicValue:
    n1 = sum(1 for v in (a, b, c) if v is L1)
    n0 = sum(1 for v in (a, b, c) if v is L0)
    if n1 >= 2:
        return L1
    if n0 >= 2:
        return L0
    return X


def eval_gate(kind: str, inputs: list[LogicValue], prev_output: LogicValue = X) -> LogicValue:
    """Truth-table result with X pessimism.

    CELEM2 is stateful: the output moves to the common input value when both
    inputs agree (on a non-X value), otherwise it holds `prev_output`.
    """
    if kind not in ARITY:
        raise ArityMismatch(f"unknown gate kind {kind!r}")
    if len(inputs) != ARITY[kind]:
        raise ArityMismatch(f"{kind} expects {ARITY[kind]} inputs, got {len(inputs)}")
    if kind == "INV":
        return _not(inputs[0])
    if kind == "BUF":
        return inputs[0]
    if kind == "AND2":
        return _and(inputs[0], inputs[1])
    if kind == "OR2":
        return _or(inputs[0], inputs[1])
    if kind == "XOR2":
        return _xor(inputs[0], inputs[1])
    if kind == "NAND2":
        return _not(_and(inputs[0], inputs[1]))
    if kind == "NOR2":
        return _not(_or(inputs[0], inputs[1]))
    if kind == "MAJ3":
        return _maj3(inputs[0], inputs[1], inputs[2])
    # CELEM2
    if inputs[0] == inputs[1]:
        return inputs[0]
    return prev_output
