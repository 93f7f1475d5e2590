"""The four comparison pipelines built from one stage-level specification:
unhardened synchronous, TMR, glitch-filter, and the self-timed re-sampling
design (SERAD), plus the unit-area and switching-activity estimators.

All builders consume the same StageSpec so comparisons are apples-to-apples;
fault-free, the four variants compute identical token sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuit import ClockGen, DelayLine, DiceLatch, Flop, Gate, Netlist, Stage
from .control import build_controller
from .edl import build_edl
from .logic import L0
from .timing import BuildError, BuildParams, TimingConfig, inter_stage_dline

SYNC_MARGIN = 20  # clock slack over the worst stage delay
CONE_GATE_DELAY = 30
CONE_GATE_INERTIAL = 8
FF_SETUP = 8
FF_HOLD = 4
FF_PD = 12


@dataclass(frozen=True)
class StageSpec:
    """Logical description of the pipeline under test."""

    bits: int = 8
    n_stages: int = 4
    cone: str = "mix"  # identity | invert | mix


@dataclass
class BuildInfo:
    netlist: Netlist
    variant: str
    spec: StageSpec
    cfg: TimingConfig
    bp: BuildParams
    data_in: tuple[str, ...]
    out: tuple[str, ...]
    clk_signals: tuple[str, ...]
    # self-timed ports
    rst: str | None = None
    lreq_in: str | None = None
    ack_out: str | None = None
    req_out: str | None = None
    sink_ack: str | None = None
    dline_len: int | None = None
    # clocked ports
    period: int | None = None
    clk_start: int | None = None


def _emit_cone(nl: Netlist, prefix: str, src: list[str], dst: list[str],
               kind: str) -> tuple[list[str], int]:
    """Emit the combinational logic between two banks; returns gate ids and
    the worst path delay."""
    b = len(src)
    gates: list[str] = []

    def g(gid: str, gk: str, ins: tuple[str, ...], out: str) -> str:
        nl.signal(out)
        nl.add(Gate(gid, gk, ins, out, CONE_GATE_DELAY, CONE_GATE_INERTIAL))
        nl.tag(out, "comb")
        gates.append(gid)
        return out

    if kind == "identity":
        for j in range(b):
            g(f"{prefix}.b{j}", "BUF", (src[j],), dst[j])
        return gates, CONE_GATE_DELAY
    if kind == "invert":
        for j in range(b):
            g(f"{prefix}.n{j}", "INV", (src[j],), dst[j])
        return gates, CONE_GATE_DELAY
    if kind == "mix":
        for j in range(b):
            t = g(f"{prefix}.x{j}", "XOR2", (src[j], src[(j + 1) % b]), f"{prefix}.t{j}")
            mk = "AND2" if j % 2 == 0 else "OR2"
            u = g(f"{prefix}.m{j}", mk, (t, src[(j + 2) % b]), f"{prefix}.u{j}")
            g(f"{prefix}.z{j}", "XOR2", (u, src[(j + 3) % b]), dst[j])
        return gates, 3 * CONE_GATE_DELAY
    raise BuildError(f"unknown cone kind {kind!r}")


def _data_ports(nl: Netlist, spec: StageSpec) -> list[str]:
    di = [nl.signal(f"in{j}") for j in range(spec.bits)]
    nl.inputs.extend(di)
    for s in di:
        nl.tag(s, "pi")
    return di


def build_serad(spec: StageSpec, cfg: TimingConfig, bp: BuildParams = BuildParams(),
                style: str = "fast") -> BuildInfo:
    """Self-timed pipeline: latch banks, per-stage handshake controllers
    (token controller at stage 1), detection logic on every bank, and
    matched delay lines between controllers."""
    nl = Netlist()
    n, b = spec.n_stages, spec.bits
    rst = nl.signal("rst")
    lreq_in = nl.signal("lreq_in")
    sink_ack = nl.signal("sink_ack")
    nl.inputs += [rst, lreq_in, sink_ack]
    data_in = _data_ports(nl, spec)

    dline_len = inter_stage_dline(cfg, bp)
    d_nets: list[list[str]] = [
        data_in if i == 0 else [nl.signal(f"s{i + 1}.d{j}") for j in range(b)]
        for i in range(n)
    ]
    q_nets = [[nl.signal(f"s{i + 1}.q{j}") for j in range(b)] for i in range(n)]

    # per-stage verdict rails exist before controllers reference them
    rails = [(nl.signal(f"edl{i + 1}.err"), nl.signal(f"edl{i + 1}.corr")) for i in range(n)]
    clks: list[str] = []
    req_pre: list[str] = []  # request output of each stage, pre delay-line
    ack_of: list[str] = []  # acknowledge output of each stage (to its left)
    lreq_nets = [lreq_in] + [nl.signal(f"lreq{i + 2}") for i in range(n - 1)]

    ports = []
    for i in range(n):
        role = "token" if i == 0 else "normal"
        right_ack = nl.signal(f"rack{i + 1}")
        p = build_controller(
            nl, f"ctl{i + 1}", role=role, rst=rst,
            left_req=lreq_nets[i], right_ack=right_ack,
            err_rail=rails[i][0], corr_rail=rails[i][1],
            cfg=cfg, bp=bp, style=style)
        ports.append((p, right_ack))
        clks.append(p.clk)
        req_pre.append(p.req_out)
        ack_of.append(p.ack_out)

    # channel wiring: request through the matched line, acknowledge direct
    for i in range(n - 1):
        nl.add(DelayLine(f"dl{i + 1}", req_pre[i], lreq_nets[i + 1], dline_len, dline_len))
        nl.add(DelayLine(f"aw{i + 1}", ack_of[i + 1], ports[i][1], 1, 1))
    nl.add(DelayLine(f"aw{n}", sink_ack, ports[n - 1][1], 1, 1))
    req_out = nl.signal("req_out")
    nl.add(DelayLine("reqw", req_pre[n - 1], req_out, 1, 1))

    stages: list[Stage] = []
    worst = 0
    for i in range(n):
        for j in range(b):
            lid = f"L{i + 1}_{j}"
            nl.add(DiceLatch(lid, d=d_nets[i][j], q=q_nets[i][j], clk=clks[i],
                             hold_time=cfg.dice_hold, min_pulse=cfg.phi,
                             prop_delay=cfg.latch_pd, init=L0))
            nl.tag(q_nets[i][j], "latch")
        cone_ids: list[str] = []
        if i < n - 1:
            cone_ids, path = _emit_cone(nl, f"k{i + 1}", q_nets[i], d_nets[i + 1], spec.cone)
            worst = max(worst, path)
        build_edl(nl, f"edl{i + 1}", clk=clks[i], watch=tuple(d_nets[i]),
                  cfg=cfg, bp=bp, style=style if style == "gates" else "fast")
        stages.append(Stage(f"s{i + 1}", tuple(f"L{i + 1}_{j}" for j in range(b)),
                            tuple(cone_ids)))
    nl.stages = stages
    if worst + cfg.latch_pd > cfg.Delta:
        raise BuildError(f"cone path {worst}+latch {cfg.latch_pd} exceeds Delta {cfg.Delta}")

    nl.outputs += q_nets[n - 1] + [req_out, ack_of[0]]
    nl.validate()
    return BuildInfo(
        netlist=nl, variant="serad", spec=spec, cfg=cfg, bp=bp,
        data_in=tuple(data_in), out=tuple(q_nets[n - 1]), clk_signals=tuple(clks),
        rst=rst, lreq_in=lreq_in, ack_out=ack_of[0], req_out=req_out,
        sink_ack=sink_ack, dline_len=dline_len,
    )


def sync_period(cfg: TimingConfig) -> int:
    return cfg.Delta + SYNC_MARGIN


def _clocked_common(spec: StageSpec, cfg: TimingConfig, period: int):
    nl = Netlist()
    clk = nl.signal("clk")
    nl.add(ClockGen("ck", clk, period=period, high=period // 2, start=period))
    data_in = _data_ports(nl, spec)
    return nl, clk, data_in


def _ff_bank(nl: Netlist, name: str, d: list[str], q: list[str], clk: str) -> list[str]:
    ids = []
    for j, (dj, qj) in enumerate(zip(d, q)):
        fid = f"{name}_{j}"
        nl.add(Flop(fid, d=dj, q=qj, clk=clk, setup=FF_SETUP, hold=FF_HOLD,
                    prop_delay=FF_PD, init=L0))
        nl.tag(qj, "ff")
        ids.append(fid)
    return ids


def build_sync(spec: StageSpec, cfg: TimingConfig, bp: BuildParams = BuildParams()) -> BuildInfo:
    """Unhardened clocked pipeline, the comparison baseline."""
    period = sync_period(cfg)
    nl, clk, data_in = _clocked_common(spec, cfg, period)
    n, b = spec.n_stages, spec.bits
    d_nets = [data_in] + [[nl.signal(f"s{i + 2}.d{j}") for j in range(b)] for i in range(n - 1)]
    q_nets = [[nl.signal(f"s{i + 1}.q{j}") for j in range(b)] for i in range(n)]
    stages = []
    for i in range(n):
        ids = _ff_bank(nl, f"F{i + 1}", d_nets[i], q_nets[i], clk)
        cone_ids: list[str] = []
        if i < n - 1:
            cone_ids, _ = _emit_cone(nl, f"k{i + 1}", q_nets[i], d_nets[i + 1], spec.cone)
        stages.append(Stage(f"s{i + 1}", tuple(ids), tuple(cone_ids)))
    nl.stages = stages
    nl.outputs += q_nets[n - 1]
    nl.validate()
    return BuildInfo(netlist=nl, variant="sync", spec=spec, cfg=cfg, bp=bp,
                     data_in=tuple(data_in), out=tuple(q_nets[n - 1]),
                     clk_signals=(clk,), period=period, clk_start=period)


def build_tmr(spec: StageSpec, cfg: TimingConfig, bp: BuildParams = BuildParams()) -> BuildInfo:
    """Triplicated logic and state with hardened per-bit majority voters
    between stages; any single transient is outvoted."""
    period = sync_period(cfg)
    nl, clk, data_in = _clocked_common(spec, cfg, period)
    n, b = spec.n_stages, spec.bits
    voted = [data_in]  # stage inputs, shared across copies
    stages = []
    for i in range(n):
        copy_q = []
        lids: list[str] = []
        for c in range(3):
            q = [nl.signal(f"c{c}.s{i + 1}.q{j}") for j in range(b)]
            lids += _ff_bank(nl, f"F{c}_{i + 1}", voted[i], q, clk)
            copy_q.append(q)
        v = []
        for j in range(b):
            out = nl.signal(f"v{i + 1}.{j}")
            nl.add(Gate(f"V{i + 1}_{j}", "MAJ3",
                        (copy_q[0][j], copy_q[1][j], copy_q[2][j]), out,
                        prop_delay=10, inertial_threshold=10, hardened=True))
            nl.tag(out, "voter")
            v.append(out)
        cone_ids: list[str] = []
        if i < n - 1:
            nxt = [nl.signal(f"s{i + 2}.d{j}") for j in range(b)]
            cone_ids, _ = _emit_cone(nl, f"k{i + 1}", v, nxt, spec.cone)
            voted.append(nxt)
        stages.append(Stage(f"s{i + 1}", tuple(lids), tuple(cone_ids)))
        last_v = v
    nl.stages = stages
    nl.outputs += last_v
    nl.validate()
    return BuildInfo(netlist=nl, variant="tmr", spec=spec, cfg=cfg, bp=bp,
                     data_in=tuple(data_in), out=tuple(last_v),
                     clk_signals=(clk,), period=period, clk_start=period)


def build_glitch_filter(spec: StageSpec, cfg: TimingConfig,
                        bp: BuildParams = BuildParams()) -> BuildInfo:
    """Clocked pipeline with a pulse-rejecting element in front of every
    flop: transients no wider than tau die in the filter, at the price of
    2*tau added latency per stage and a slower clock."""
    period = sync_period(cfg) + 2 * cfg.tau
    nl, clk, data_in = _clocked_common(spec, cfg, period)
    n, b = spec.n_stages, spec.bits
    d_nets = [data_in] + [[nl.signal(f"s{i + 2}.d{j}") for j in range(b)] for i in range(n - 1)]
    q_nets = [[nl.signal(f"s{i + 1}.q{j}") for j in range(b)] for i in range(n)]
    stages = []
    for i in range(n):
        filt = []
        for j in range(b):
            fo = nl.signal(f"gf{i + 1}.{j}")
            nl.add(Gate(f"GF{i + 1}_{j}", "BUF", (d_nets[i][j],), fo,
                        prop_delay=2 * cfg.tau, inertial_threshold=cfg.tau,
                        hardened=True))
            nl.tag(fo, "filter")
            filt.append(fo)
        ids = _ff_bank(nl, f"F{i + 1}", filt, q_nets[i], clk)
        cone_ids: list[str] = []
        if i < n - 1:
            cone_ids, _ = _emit_cone(nl, f"k{i + 1}", q_nets[i], d_nets[i + 1], spec.cone)
        stages.append(Stage(f"s{i + 1}", tuple(ids), tuple(cone_ids)))
    nl.stages = stages
    nl.outputs += q_nets[n - 1]
    nl.validate()
    return BuildInfo(netlist=nl, variant="gf", spec=spec, cfg=cfg, bp=bp,
                     data_in=tuple(data_in), out=tuple(q_nets[n - 1]),
                     clk_signals=(clk,), period=period, clk_start=period)


BUILDERS = {
    "serad": build_serad,
    "sync": build_sync,
    "tmr": build_tmr,
    "gf": build_glitch_filter,
}


# --- cost estimators ---------------------------------------------------------

# unit-cell areas; hardened gates are charged 10x for their sizing
_GATE_AREA = {"INV": 1, "BUF": 1, "AND2": 2, "OR2": 2, "XOR2": 2,
              "NAND2": 2, "NOR2": 2, "MAJ3": 3, "CELEM2": 3}
_CONE_AREA = {"rreq": 20, "lack": 20, "clk": 24, "z": 14}
HARDENED_FACTOR = 10


@dataclass(frozen=True)
class AreaReport:
    comb_area: int
    seq_area: int
    total_area: int

    def as_dict(self) -> dict:
        return {"comb": self.comb_area, "seq": self.seq_area, "total": self.total_area}


def estimate_area(nl: Netlist) -> AreaReport:
    """Deterministic unit-area sums: combinational vs sequential/storage."""
    from .circuit import (CtrlCone, DelayLine, DiceLatch, DoneGen, EdlBlock,
                          Flop, Gate, QFlop, Shaper)
    comb = 0
    seq = 0
    for el in nl.elements:
        if isinstance(el, Gate):
            a = _GATE_AREA[el.kind]
            if el.hardened:
                a *= HARDENED_FACTOR
            comb += a
        elif isinstance(el, CtrlCone):
            comb += _CONE_AREA[el.eq]
        elif isinstance(el, DelayLine):
            comb += 2
        elif isinstance(el, Shaper):
            comb += 4
        elif isinstance(el, DoneGen):
            comb += 4
        elif isinstance(el, DiceLatch):
            seq += 12
        elif isinstance(el, Flop):
            seq += 10
        elif isinstance(el, QFlop):
            seq += 30
        elif isinstance(el, EdlBlock):
            comb += 7 * len(el.watch) + 10
            seq += 30  # the sampler inside the lumped block
    return AreaReport(comb, seq, comb + seq)


@dataclass(frozen=True)
class PowerReport:
    comb_toggles: int
    seq_toggles: int
    clock_toggles: int
    duration: int
    weighted: int  # toggles x (1 + fanout), clock nets excluded

    @property
    def data_rate(self) -> float:
        return (self.comb_toggles + self.seq_toggles) / max(1, self.duration)

    def as_dict(self) -> dict:
        return {"comb": self.comb_toggles, "seq": self.seq_toggles,
                "clock": self.clock_toggles, "duration": self.duration,
                "weighted": self.weighted}


def estimate_activity_power(nl: Netlist, counts: dict[str, int], duration: int,
                            clk_signals: tuple[str, ...]) -> PowerReport:
    """Toggle-count activity model over a completed run. Clock nets are
    tallied separately; the weighted sum scales each data toggle by the
    signal's fanout."""
    fanout: dict[str, int] = {s: 0 for s in nl.signals}
    for el in nl.elements:
        for s in nl.consumed_signals(el):
            fanout[s] = fanout.get(s, 0) + 1
    seq_sigs = {s for s in nl.signals if nl.tags.get(s) in ("latch", "ff")}
    d_pins = set()
    for el in nl.elements:
        if isinstance(el, (DiceLatch, Flop)):
            d_pins.add(el.d)
    clocks = set(clk_signals)
    comb = seq = clk_t = weighted = 0
    for s, c in counts.items():
        if c == 0:
            continue
        if s in clocks:
            clk_t += c
            continue
        if s in seq_sigs or s in d_pins:
            seq += c
        else:
            comb += c
        weighted += c * (1 + fanout.get(s, 0))
    return PowerReport(comb, seq, clk_t, duration, weighted)
