"""Netlist data model: signals, gates, latches, delay lines and the special
control/EDL elements, plus structural validation.

A netlist is immutable once validated and may be shared between parallel
simulations; all runtime state lives in the engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .logic import ARITY, GATE_KINDS, LogicValue


class ValidationError(Exception):
    def __init__(self, rule: str, entity: str, message: str = ""):
        self.rule = rule
        self.entity = entity
        super().__init__(f"[{rule}] {entity}: {message}" if message else f"[{rule}] {entity}")


@dataclass(frozen=True)
class Gate:
    id: str
    kind: str
    inputs: tuple[str, ...]
    output: str
    prop_delay: int
    inertial_threshold: int
    hardened: bool = False
    fall_delay: int | None = None  # optional asymmetric fall; None = prop_delay


@dataclass(frozen=True)
class DiceLatch:
    """Level-sensitive latch whose stored state is immune to injected upsets.

    Transparent while clk is high. At the close edge the state freezes to d,
    provided d was stable over (clk-rise, clk-fall + hold_time]; a transition
    inside that window, or a transparency window shorter than min_pulse,
    leaves the state at X.
    """

    id: str
    d: str
    q: str
    clk: str
    hold_time: int
    min_pulse: int
    prop_delay: int = 10
    init: LogicValue = LogicValue.L0


@dataclass(frozen=True)
class DelayLine:
    """Pure transport delay, asymmetric rise/fall, no pulse filtering."""

    id: str
    input: str
    output: str
    rise_delay: int
    fall_delay: int


@dataclass(frozen=True)
class Flop:
    """Edge-triggered flip-flop for the synchronous comparison variants."""

    id: str
    d: str
    q: str
    clk: str
    setup: int
    hold: int
    prop_delay: int
    init: LogicValue = LogicValue.L0


@dataclass(frozen=True)
class ClockGen:
    id: str
    output: str
    period: int
    high: int
    start: int


@dataclass(frozen=True)
class QFlop:
    """Sampling element with a metastability filter and dual-rail outputs.

    While sample is low both outputs are low. After sample rises exactly one
    of err/corr eventually rises: immediately (+prop_delay) when the input
    was stable around the sampling edge, or after a random resolution delay
    when the input moved inside the setup/hold window. Outputs are hardened.
    """

    id: str
    d: str
    sample: str
    err: str
    corr: str
    setup: int
    hold: int
    prop_delay: int
    meta_mean: int = 50


@dataclass(frozen=True)
class CtrlCone:
    """One next-state equation of the handshake controller, evaluated as a
    single inertial element (the fast simulation style; the gate-level style
    decomposes the same equation into primitive gates)."""

    id: str
    eq: str  # rreq | lack | clk | z
    output: str
    rst: str
    lreq: str
    rack: str
    err: str
    corr: str
    done: str
    rreq_fb: str
    lack_fb: str
    clk_fb: str
    z_fb: str
    z_slow: str
    prop_delay: int


@dataclass(frozen=True)
class Shaper:
    """Rising-edge pulse former: a 0->1 step on the input becomes a bounded
    pulse on the output (delivery conditioning for the held dual-rail
    decision signals)."""

    id: str
    input: str
    output: str
    delay: int
    width: int
    hardened: bool = True


@dataclass(frozen=True)
class DoneGen:
    """Completion timer: output rises `rise` after clk rises and falls
    `fall` after the decision input rises (asymmetric delay line behavior
    keyed to the sample outcome)."""

    id: str
    clk: str
    decision: str
    output: str
    rise: int
    fall: int


@dataclass(frozen=True)
class EdlBlock:
    """Lumped error-detecting logic for one latch bank.

    Watches the data inputs of the bank during the filtering window
    (clk-rise .. clk-fall + hold + tail) and produces the held dual-rail
    err/corr decision at clk-fall + decision_delay, with a randomized
    resolution when a watched edge lands inside the sampling window.
    """

    id: str
    clk: str
    err: str
    corr: str
    watch: tuple[str, ...]
    hold: int
    tail: int
    decision_delay: int
    meta_window: int
    meta_mean: int
    q_reset_delay: int


Element = (
    Gate | DiceLatch | DelayLine | Flop | ClockGen | QFlop | CtrlCone | Shaper | DoneGen | EdlBlock
)


@dataclass(frozen=True)
class Stage:
    name: str
    latches: tuple[str, ...]
    cone: tuple[str, ...]


class Netlist:
    def __init__(self) -> None:
        self.signals: list[str] = []
        self._sigset: set[str] = set()
        self.elements: list[Element] = []
        self._ids: set[str] = set()
        self.stages: list[Stage] = []
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self.tags: dict[str, str] = {}  # signal -> node category (comb, ctrl, edl, ...)

    def signal(self, name: str) -> str:
        if name not in self._sigset:
            self._sigset.add(name)
            self.signals.append(name)
        return name

    def add(self, el: Element) -> Element:
        if el.id in self._ids:
            raise ValidationError("unique-id", el.id, "duplicate element id")
        self._ids.add(el.id)
        self.elements.append(el)
        return el

    def tag(self, signal: str, category: str) -> None:
        self.tags[signal] = category

    def tagged(self, *categories: str) -> list[str]:
        return [s for s in self.signals if self.tags.get(s) in categories]

    def element_by_id(self, eid: str) -> Element:
        for el in self.elements:
            if el.id == eid:
                return el
        raise KeyError(eid)

    # --- structure helpers -------------------------------------------------

    def driven_signals(self, el: Element) -> Iterable[str]:
        if isinstance(el, Gate):
            yield el.output
        elif isinstance(el, DiceLatch):
            yield el.q
        elif isinstance(el, DelayLine):
            yield el.output
        elif isinstance(el, Flop):
            yield el.q
        elif isinstance(el, ClockGen):
            yield el.output
        elif isinstance(el, QFlop):
            yield el.err
            yield el.corr
        elif isinstance(el, CtrlCone):
            yield el.output
        elif isinstance(el, Shaper):
            yield el.output
        elif isinstance(el, DoneGen):
            yield el.output
        elif isinstance(el, EdlBlock):
            yield el.err
            yield el.corr

    def consumed_signals(self, el: Element) -> Iterable[str]:
        if isinstance(el, Gate):
            yield from el.inputs
        elif isinstance(el, DiceLatch):
            yield el.d
            yield el.clk
        elif isinstance(el, DelayLine):
            yield el.input
        elif isinstance(el, Flop):
            yield el.d
            yield el.clk
        elif isinstance(el, QFlop):
            yield el.d
            yield el.sample
        elif isinstance(el, CtrlCone):
            yield from (el.rst, el.lreq, el.rack, el.err, el.corr, el.done,
                        el.rreq_fb, el.lack_fb, el.clk_fb, el.z_fb, el.z_slow)
        elif isinstance(el, Shaper):
            yield el.input
        elif isinstance(el, DoneGen):
            yield el.clk
            yield el.decision
        elif isinstance(el, EdlBlock):
            yield el.clk
            yield from el.watch

    def driver_of(self) -> dict[str, Element]:
        out: dict[str, Element] = {}
        for el in self.elements:
            for s in self.driven_signals(el):
                out[s] = el
        return out

    def validate(self) -> "Netlist":
        drivers: dict[str, str] = {}
        for el in self.elements:
            if isinstance(el, Gate):
                if el.kind not in GATE_KINDS:
                    raise ValidationError("gate-kind", el.id, f"unknown kind {el.kind}")
                if len(el.inputs) != ARITY[el.kind]:
                    raise ValidationError("arity", el.id, f"{el.kind} needs {ARITY[el.kind]} inputs")
                if el.prop_delay < 1:
                    raise ValidationError("delay", el.id, "prop_delay must be >= 1 ps")
                if el.inertial_threshold > el.prop_delay:
                    raise ValidationError("inertial", el.id, "inertial_threshold > prop_delay")
            for s in self.driven_signals(el):
                if s in drivers:
                    raise ValidationError("single-driver", s, f"driven by {drivers[s]} and {el.id}")
                drivers[s] = el.id
            for s in list(self.driven_signals(el)) + list(self.consumed_signals(el)):
                if s not in self._sigset:
                    raise ValidationError("undeclared-signal", s, f"used by {el.id}")
        for s in self.inputs:
            if s in drivers:
                raise ValidationError("single-driver", s, "primary input also driven internally")
        for s in self.signals:
            if s not in drivers and s not in self.inputs:
                raise ValidationError("undriven", s, "no driver and not a primary input")
        self._check_gate_acyclic()
        for st in self.stages:
            for lid in st.latches + st.cone:
                if lid not in self._ids:
                    raise ValidationError("stage-ref", st.name, f"unknown element {lid}")
        return self

    def _check_gate_acyclic(self) -> None:
        # combinational cycles are those closed through gates alone; any
        # feedback must pass a delay line or sequential element
        gate_out: dict[str, Gate] = {}
        for el in self.elements:
            if isinstance(el, Gate):
                gate_out[el.output] = el
        WHITE, GREY, BLACK = 0, 1, 2
        color = {g.id: WHITE for g in gate_out.values()}
        for root in gate_out.values():
            if color[root.id] != WHITE:
                continue
            stack: list[tuple[Gate, int]] = [(root, 0)]
            color[root.id] = GREY
            while stack:
                g, i = stack[-1]
                if i >= len(g.inputs):
                    color[g.id] = BLACK
                    stack.pop()
                    continue
                stack[-1] = (g, i + 1)
                up = gate_out.get(g.inputs[i])
                if up is None:
                    continue
                if color[up.id] == GREY:
                    raise ValidationError("acyclic", g.inputs[i], "combinational cycle through gates")
                if color[up.id] == WHITE:
                    color[up.id] = GREY
                    stack.append((up, 0))
