"""Line-oriented netlist text format.

Core line types:

    signal <name>
    input <name>  |  output <name>
    gate <id> kind=<KIND> in=<s1>[,<s2>,<s3>] out=<s> delay=<ps> inertial=<ps> [fall=<ps>] [hardened]
    latch <id> d=<s> q=<s> clk=<s> hold=<ps> minpulse=<ps> [pd=<ps>] [init=<0|1|x>]
    dline <id> in=<s> out=<s> rise=<ps> fall=<ps>
    stage <name> latches=<id,...> cone=<id,...>

Extended line types for the sequential/control elements the hardened
pipelines need (flop, clock, qflop, cone, shaper, donegen, edl, tag); the
exact grammar is this module. `#` starts a comment; the parser rejects
unknown line types and unknown keys.
"""

from __future__ import annotations

from .circuit import (
    ClockGen,
    CtrlCone,
    DelayLine,
    DiceLatch,
    DoneGen,
    EdlBlock,
    Flop,
    Gate,
    Netlist,
    QFlop,
    Shaper,
    Stage,
)
from .logic import L0, L1, X, LogicValue


class ParseError(Exception):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


_INIT = {"0": L0, "1": L1, "x": X}
_INIT_STR = {L0: "0", L1: "1", X: "x"}


def _kv(tokens: list[str], line_no: int, flags: set[str] = frozenset()) -> tuple[dict, set]:
    kv: dict[str, str] = {}
    got_flags: set[str] = set()
    for tok in tokens:
        if tok in flags:
            got_flags.add(tok)
            continue
        if "=" not in tok:
            raise ParseError(line_no, f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        if k in kv:
            raise ParseError(line_no, f"duplicate key {k!r}")
        kv[k] = v
    return kv, got_flags


def _need(kv: dict, keys: list[str], line_no: int, kind: str) -> None:
    for k in keys:
        if k not in kv:
            raise ParseError(line_no, f"{kind} line missing key {k!r}")
    extra = set(kv) - set(keys)
    if extra:
        raise ParseError(line_no, f"unknown keys on {kind} line: {sorted(extra)}")


def _int(kv: dict, key: str, line_no: int) -> int:
    try:
        return int(kv[key])
    except ValueError:
        raise ParseError(line_no, f"{key}={kv[key]!r} is not an integer") from None


def parse_netlist(text: str) -> Netlist:
    nl = Netlist()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind, rest = tokens[0], tokens[1:]
        if kind == "signal":
            if len(rest) != 1:
                raise ParseError(line_no, "signal line takes one name")
            nl.signal(rest[0])
        elif kind in ("input", "output"):
            if len(rest) != 1:
                raise ParseError(line_no, f"{kind} line takes one name")
            nl.signal(rest[0])
            (nl.inputs if kind == "input" else nl.outputs).append(rest[0])
        elif kind == "gate":
            gid, kv, flags = rest[0], *_kv(rest[1:], line_no, {"hardened"})
            keys = ["kind", "in", "out", "delay", "inertial"]
            opt = [k for k in ("fall",) if k in kv]
            _need(kv, keys + opt, line_no, "gate")
            nl.add(Gate(
                id=gid, kind=kv["kind"], inputs=tuple(kv["in"].split(",")),
                output=kv["out"], prop_delay=_int(kv, "delay", line_no),
                inertial_threshold=_int(kv, "inertial", line_no),
                hardened="hardened" in flags,
                fall_delay=_int(kv, "fall", line_no) if "fall" in kv else None,
            ))
        elif kind == "latch":
            lid, kv, _ = rest[0], *_kv(rest[1:], line_no)
            keys = ["d", "q", "clk", "hold", "minpulse"]
            opt = [k for k in ("pd", "init") if k in kv]
            _need(kv, keys + opt, line_no, "latch")
            nl.add(DiceLatch(
                id=lid, d=kv["d"], q=kv["q"], clk=kv["clk"],
                hold_time=_int(kv, "hold", line_no), min_pulse=_int(kv, "minpulse", line_no),
                prop_delay=_int(kv, "pd", line_no) if "pd" in kv else 10,
                init=_INIT.get(kv.get("init", "0"), L0),
            ))
        elif kind == "dline":
            did, kv, _ = rest[0], *_kv(rest[1:], line_no)
            _need(kv, ["in", "out", "rise", "fall"], line_no, "dline")
            nl.add(DelayLine(
                id=did, input=kv["in"], output=kv["out"],
                rise_delay=_int(kv, "rise", line_no), fall_delay=_int(kv, "fall", line_no),
            ))
        elif kind == "flop":
            fid, kv, _ = rest[0], *_kv(rest[1:], line_no)
            keys = ["d", "q", "clk", "setup", "hold", "pd"]
            opt = [k for k in ("init",) if k in kv]
            _need(kv, keys + opt, line_no, "flop")
            nl.add(Flop(
                id=fid, d=kv["d"], q=kv["q"], clk=kv["clk"],
                setup=_int(kv, "setup", line_no), hold=_int(kv, "hold", line_no),
                prop_delay=_int(kv, "pd", line_no),
                init=_INIT.get(kv.get("init", "0"), L0),
            ))
        elif kind == "clock":
            cid, kv, _ = rest[0], *_kv(rest[1:], line_no)
            _need(kv, ["out", "period", "high", "start"], line_no, "clock")
            nl.add(ClockGen(
                id=cid, output=kv["out"], period=_int(kv, "period", line_no),
                high=_int(kv, "high", line_no), start=_int(kv, "start", line_no),
            ))
        elif kind == "qflop":
            qid, kv, _ = rest[0], *_kv(rest[1:], line_no)
            keys = ["d", "sample", "err", "corr", "setup", "hold", "pd"]
            opt = [k for k in ("metamean",) if k in kv]
            _need(kv, keys + opt, line_no, "qflop")
            nl.add(QFlop(
                id=qid, d=kv["d"], sample=kv["sample"], err=kv["err"], corr=kv["corr"],
                setup=_int(kv, "setup", line_no), hold=_int(kv, "hold", line_no),
                prop_delay=_int(kv, "pd", line_no),
                meta_mean=_int(kv, "metamean", line_no) if "metamean" in kv else 50,
            ))
        elif kind == "cone":
            cid, kv, _ = rest[0], *_kv(rest[1:], line_no)
            keys = ["eq", "out", "rst", "lreq", "rack", "err", "corr", "done",
                    "rfb", "lfb", "cfb", "zfb", "zslow", "delay"]
            _need(kv, keys, line_no, "cone")
            if kv["eq"] not in ("rreq", "lack", "clk", "z"):
                raise ParseError(line_no, f"unknown cone eq {kv['eq']!r}")
            nl.add(CtrlCone(
                id=cid, eq=kv["eq"], output=kv["out"], rst=kv["rst"],
                lreq=kv["lreq"], rack=kv["rack"], err=kv["err"], corr=kv["corr"],
                done=kv["done"], rreq_fb=kv["rfb"], lack_fb=kv["lfb"],
                clk_fb=kv["cfb"], z_fb=kv["zfb"], z_slow=kv["zslow"],
                prop_delay=_int(kv, "delay", line_no),
            ))
        elif kind == "shaper":
            sid, kv, flags = rest[0], *_kv(rest[1:], line_no, {"soft"})
            _need(kv, ["in", "out", "delay", "width"], line_no, "shaper")
            nl.add(Shaper(
                id=sid, input=kv["in"], output=kv["out"],
                delay=_int(kv, "delay", line_no), width=_int(kv, "width", line_no),
                hardened="soft" not in flags,
            ))
        elif kind == "donegen":
            did, kv, _ = rest[0], *_kv(rest[1:], line_no)
            _need(kv, ["clk", "dec", "out", "rise", "fall"], line_no, "donegen")
            nl.add(DoneGen(
                id=did, clk=kv["clk"], decision=kv["dec"], output=kv["out"],
                rise=_int(kv, "rise", line_no), fall=_int(kv, "fall", line_no),
            ))
        elif kind == "edl":
            eid, kv, _ = rest[0], *_kv(rest[1:], line_no)
            keys = ["clk", "err", "corr", "watch", "hold", "tail", "decision",
                    "metawin", "metamean", "qreset"]
            _need(kv, keys, line_no, "edl")
            nl.add(EdlBlock(
                id=eid, clk=kv["clk"], err=kv["err"], corr=kv["corr"],
                watch=tuple(kv["watch"].split(",")),
                hold=_int(kv, "hold", line_no), tail=_int(kv, "tail", line_no),
                decision_delay=_int(kv, "decision", line_no),
                meta_window=_int(kv, "metawin", line_no),
                meta_mean=_int(kv, "metamean", line_no),
                q_reset_delay=_int(kv, "qreset", line_no),
            ))
        elif kind == "stage":
            sname, kv, _ = rest[0], *_kv(rest[1:], line_no)
            _need(kv, ["latches", "cone"], line_no, "stage")
            nl.stages.append(Stage(
                name=sname, latches=tuple(kv["latches"].split(",")),
                cone=tuple(x for x in kv["cone"].split(",") if x),
            ))
        elif kind == "tag":
            if len(rest) != 2:
                raise ParseError(line_no, "tag line takes <signal> <category>")
            nl.tag(rest[0], rest[1])
        else:
            raise ParseError(line_no, f"unknown line type {kind!r}")
    return nl.validate()


def serialize_netlist(nl: Netlist) -> str:
    out: list[str] = []
    declared = set(nl.inputs) | set(nl.outputs)
    for s in nl.signals:
        if s not in declared:
            out.append(f"signal {s}")
    for s in nl.inputs:
        out.append(f"input {s}")
    for s in nl.outputs:
        out.append(f"output {s}")
    for el in nl.elements:
        if isinstance(el, Gate):
            line = (f"gate {el.id} kind={el.kind} in={','.join(el.inputs)} out={el.output} "
                    f"delay={el.prop_delay} inertial={el.inertial_threshold}")
            if el.fall_delay is not None:
                line += f" fall={el.fall_delay}"
            if el.hardened:
                line += " hardened"
            out.append(line)
        elif isinstance(el, DiceLatch):
            out.append(f"latch {el.id} d={el.d} q={el.q} clk={el.clk} hold={el.hold_time} "
                       f"minpulse={el.min_pulse} pd={el.prop_delay} init={_INIT_STR[el.init]}")
        elif isinstance(el, DelayLine):
            out.append(f"dline {el.id} in={el.input} out={el.output} "
                       f"rise={el.rise_delay} fall={el.fall_delay}")
        elif isinstance(el, Flop):
            out.append(f"flop {el.id} d={el.d} q={el.q} clk={el.clk} setup={el.setup} "
                       f"hold={el.hold} pd={el.prop_delay} init={_INIT_STR[el.init]}")
        elif isinstance(el, ClockGen):
            out.append(f"clock {el.id} out={el.output} period={el.period} "
                       f"high={el.high} start={el.start}")
        elif isinstance(el, QFlop):
            out.append(f"qflop {el.id} d={el.d} sample={el.sample} err={el.err} corr={el.corr} "
                       f"setup={el.setup} hold={el.hold} pd={el.prop_delay} metamean={el.meta_mean}")
        elif isinstance(el, CtrlCone):
            out.append(f"cone {el.id} eq={el.eq} out={el.output} rst={el.rst} lreq={el.lreq} "
                       f"rack={el.rack} err={el.err} corr={el.corr} done={el.done} "
                       f"rfb={el.rreq_fb} lfb={el.lack_fb} cfb={el.clk_fb} zfb={el.z_fb} "
                       f"zslow={el.z_slow} delay={el.prop_delay}")
        elif isinstance(el, Shaper):
            line = (f"shaper {el.id} in={el.input} out={el.output} "
                    f"delay={el.delay} width={el.width}")
            if not el.hardened:
                line += " soft"
            out.append(line)
        elif isinstance(el, DoneGen):
            out.append(f"donegen {el.id} clk={el.clk} dec={el.decision} out={el.output} "
                       f"rise={el.rise} fall={el.fall}")
        elif isinstance(el, EdlBlock):
            out.append(f"edl {el.id} clk={el.clk} err={el.err} corr={el.corr} "
                       f"watch={','.join(el.watch)} hold={el.hold} tail={el.tail} "
                       f"decision={el.decision_delay} metawin={el.meta_window} "
                       f"metamean={el.meta_mean} qreset={el.q_reset_delay}")
    for st in nl.stages:
        out.append(f"stage {st.name} latches={','.join(st.latches)} cone={','.join(st.cone)}")
    for s in nl.signals:
        if s in nl.tags:
            out.append(f"tag {s} {nl.tags[s]}")
    return "\n".join(out) + "\n"
