"""Handshake controller: burst-mode next-state equations, the functional
single-step model, and netlist builders for the fast (compound-cone) and
gate-level (dual-rail merged) realizations.

A stage machine waits for its input burst (request and acknowledge levels
matching the current phase), raises the stage clock for one window width,
waits for the dual-rail verdict, then either re-opens the latches (error)
or commits by toggling the request to the next stage and the acknowledge to
the previous one. A phase bit z selects the burst polarity:

    Rreq = rst * (~Corr*~Lack + Done*~Lack + z*~Lack + z*Corr*~Done)
    Lack = rst * (~Corr*Lack  + Done*Lack  + ~z*Lack + ~z*Corr*~Done)
    clk  = rst * (Err*~Done + clk*~Done + z*~Lreq*~Rack*~Done
                  + Lreq*Rack*~Done*~z)
    z    = rst * (~z*Corr*~Done + z*~Corr + z*Done)

The verdict rails reach the equations as bounded pulses (edge conditioned),
and the phase bit feeds the request/ack cones through a deliberately slower
wire than the clock cone, which closes the commit races; both choices are
mirrored by the functional evaluation order below.

Out of reset the machine settles with Rreq high: it emits a request, which
is the token-controller behavior (an initial token on reset). A normal
stage is the same structure with its left/right ports transposed, so its
reset burst is an acknowledge instead; the token controller additionally
senses its acknowledge input inverted, aligning its burst parity with the
extra reset request it produced.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .circuit import CtrlCone, DelayLine, DoneGen, Gate, Netlist, Shaper
from .logic import L0, L1, LogicValue
from .timing import (
    BuildError,
    BuildParams,
    TimingConfig,
    corr_pulse_width,
    done_fall,
    done_rise,
)


class FundamentalModeViolation(Exception):
    """A new input burst arrived before the equations could settle."""


@dataclass(frozen=True)
class CtrlInputs:
    rst: bool
    Lreq: bool
    Rack: bool
    Err: bool
    Corr: bool
    Done: bool


@dataclass(frozen=True)
class CtrlState:
    Rreq: bool
    Lack: bool
    clk: bool
    z: bool
    burst_state: int = 0


def _eq_rreq(s, i) -> bool:
    return i.rst and (((not i.Corr) and not s.Lack) or (i.Done and not s.Lack)
                      or (s.z and not s.Lack) or (s.z and i.Corr and not i.Done))


def _eq_lack(s, i) -> bool:
    return i.rst and (((not i.Corr) and s.Lack) or (i.Done and s.Lack)
                      or ((not s.z) and s.Lack) or ((not s.z) and i.Corr and not i.Done))


def _eq_clk(s, i) -> bool:
    return i.rst and ((i.Err and not i.Done) or (s.clk and not i.Done)
                      or (s.z and (not i.Lreq) and (not i.Rack) and not i.Done)
                      or (i.Lreq and i.Rack and (not i.Done) and not s.z))


def _eq_z(s, i) -> bool:
    return i.rst and (((not s.z) and i.Corr and not i.Done)
                      or (s.z and not i.Corr) or (s.z and i.Done))


def _burst_state(s: CtrlState, i: CtrlInputs) -> int:
    if not i.rst:
        return 0
    half = 5 if s.z else 0
    if s.clk:
        return (2 if (i.Err or i.Corr) else 3) + half
    if i.Done:
        return 4 + half
    return 1 + half


def ctrl_next(state: CtrlState, inputs: CtrlInputs, max_iter: int = 16) -> CtrlState:
    """Settle the equations for one input burst.

    Evaluation order mirrors the realized feedback delays: the request/ack
    cones read the pre-burst phase bit (slow feedback), the phase bit updates
    next, the clock cone reads the updated bit (fast feedback), then the
    verdict pulses expire and everything settles.
    """
    s1 = replace(
        state,
        Rreq=_eq_rreq(state, inputs),
        Lack=_eq_lack(state, inputs),
    )
    s2 = replace(s1, z=_eq_z(state, inputs))
    s3 = replace(s2, clk=_eq_clk(s2, inputs))
    quiet = replace(inputs, Err=False, Corr=False)
    cur = s3
    for _ in range(max_iter):
        nxt = replace(
            cur,
            Rreq=_eq_rreq(cur, quiet),
            Lack=_eq_lack(cur, quiet),
            clk=_eq_clk(cur, quiet),
            z=_eq_z(cur, quiet),
        )
        if nxt == cur:
            return replace(cur, burst_state=_burst_state(cur, quiet))
        cur = nxt
    raise FundamentalModeViolation(f"no fixed point from {state} under {inputs}")


RESET_STATE = CtrlState(Rreq=False, Lack=False, clk=False, z=False, burst_state=0)


# --- structural builders -----------------------------------------------------

@dataclass(frozen=True)
class ControllerPorts:
    """Signals a built controller exposes to its stage."""

    clk: str  # merged stage clock
    req_out: str  # request to the next stage (pre delay-line)
    ack_out: str  # acknowledge to the previous stage
    err_in: str  # held verdict rails the EDL must drive
    corr_in: str
    internal: tuple[str, ...]  # injectable internal nodes (gate style only)


def _machine_cones(
    nl: Netlist,
    p: str,
    *,
    rst: str,
    port_a: str,
    port_b: str,
    err_rail: str,
    corr_rail: str,
    cfg: TimingConfig,
    bp: BuildParams,
    rack_inverted: bool,
) -> tuple[str, str, str]:
    """Compound-cone machine: port_a is the request-role input, port_b the
    acknowledge-role input. Returns (clk, req_role_out, ack_role_out)."""
    s = lambda n: nl.signal(f"{p}.{n}")
    rreq_o, lack_o, clk_o, z_o = s("rreq_o"), s("lack_o"), s("clk_o"), s("z_o")
    rreq_m, lack_m, clk_m, z_m = s("rreq"), s("lack"), s("clk"), s("z")
    rfb, lfb, cfb, zfb, zslow = s("rfb"), s("lfb"), s("cfb"), s("zfb"), s("zslow")
    err_p, corr_p, dec = s("err_p"), s("corr_p"), s("dec")
    done = s("done")

    width = corr_pulse_width(cfg, bp)
    nl.add(Shaper(f"{p}.shape_err", err_rail, err_p, bp.shaper_delay, width))
    nl.add(Shaper(f"{p}.shape_corr", corr_rail, corr_p, bp.shaper_delay, width))
    nl.add(Gate(f"{p}.dec_or", "OR2", (err_rail, corr_rail), dec, bp.dec_or, 1))
    nl.add(DoneGen(f"{p}.done", clk_m, dec, done, done_rise(cfg, bp), done_fall(cfg, bp)))

    rack_eff = port_b
    if rack_inverted:
        rack_eff = s("rack_n")
        nl.add(Gate(f"{p}.rack_inv", "INV", (port_b,), rack_eff, 1, 1))

    common = dict(rst=rst, lreq=port_a, rack=rack_eff, err=err_p, corr=corr_p,
                  done=done, rreq_fb=rfb, lack_fb=lfb, clk_fb=cfb, z_fb=zfb, z_slow=zslow)
    nl.add(CtrlCone(f"{p}.c_rreq", "rreq", rreq_o, prop_delay=bp.cone_rl, **common))
    nl.add(CtrlCone(f"{p}.c_lack", "lack", lack_o, prop_delay=bp.cone_rl, **common))
    nl.add(CtrlCone(f"{p}.c_clk", "clk", clk_o, prop_delay=bp.cone_clk, **common))
    nl.add(CtrlCone(f"{p}.c_z", "z", z_o, prop_delay=bp.cone_z, **common))

    # output guards (single-rail fast style: sized buffers) and feedback taps
    nl.add(Gate(f"{p}.g_clk", "BUF", (clk_o,), clk_m, bp.guard, bp.guard, hardened=True))
    nl.add(Gate(f"{p}.g_rreq", "BUF", (rreq_o,), rreq_m, bp.guard, bp.guard, hardened=True))
    nl.add(Gate(f"{p}.g_lack", "BUF", (lack_o,), lack_m, bp.guard, bp.guard, hardened=True))
    nl.add(Gate(f"{p}.g_z", "BUF", (z_o,), z_m, bp.z_guard, bp.z_guard, hardened=True))
    nl.add(DelayLine(f"{p}.w_rfb", rreq_m, rfb, bp.fb, bp.fb))
    nl.add(DelayLine(f"{p}.w_lfb", lack_m, lfb, bp.fb, bp.fb))
    nl.add(DelayLine(f"{p}.w_cfb", clk_m, cfb, bp.fb, bp.fb))
    nl.add(DelayLine(f"{p}.w_zfb", z_m, zfb, bp.fb, bp.fb))
    nl.add(DelayLine(f"{p}.w_zslow", z_m, zslow, bp.fb_slow, bp.fb_slow))

    for sig in (rreq_o, lack_o, clk_o, z_o, rreq_m, lack_m, clk_m, z_m,
                rfb, lfb, cfb, zfb, zslow, err_p, corr_p, dec, done):
        nl.tag(sig, "ctrl")
    return clk_m, rreq_m, lack_m


def build_controller(
    nl: Netlist,
    prefix: str,
    *,
    role: str,  # "token" | "normal"
    rst: str,
    left_req: str,
    right_ack: str,
    err_rail: str,
    corr_rail: str,
    cfg: TimingConfig,
    bp: BuildParams,
    style: str = "fast",
) -> ControllerPorts:
    """Emit one stage controller.

    A normal stage is the mirrored machine: the same cone structure with the
    request and acknowledge roles transposed, which makes its reset burst an
    acknowledge to the previous stage. The token controller keeps the printed
    orientation (reset burst = request) and senses its acknowledge inverted.
    """
    if role not in ("token", "normal"):
        raise BuildError(f"unknown controller role {role!r}")
    build = _machine_cones if style == "fast" else _machine_gates
    if role == "token":
        clk, req_out, ack_out = build(
            nl, prefix, rst=rst, port_a=left_req, port_b=right_ack,
            err_rail=err_rail, corr_rail=corr_rail, cfg=cfg, bp=bp, rack_inverted=True)
    else:
        # mirror: port roles transposed; machine "rreq" output acts as the ack
        clk, ack_out, req_out = build(
            nl, prefix, rst=rst, port_a=right_ack, port_b=left_req,
            err_rail=err_rail, corr_rail=corr_rail, cfg=cfg, bp=bp, rack_inverted=False)
    internal = tuple(s for s in nl.signals if s.startswith(prefix + ".r1.")
                     or s.startswith(prefix + ".r2."))
    return ControllerPorts(clk, req_out, ack_out, err_rail, corr_rail, internal)


def _machine_gates(
    nl: Netlist,
    p: str,
    *,
    rst: str,
    port_a: str,
    port_b: str,
    err_rail: str,
    corr_rail: str,
    cfg: TimingConfig,
    bp: BuildParams,
    rack_inverted: bool,
) -> tuple[str, str, str]:
    """Gate-level dual-rail machine with merged outputs.

    The feedback loops are cut: both rails are pure combinational cones over
    the shared inputs and the merged state wires, and every pair of redundant
    outputs (including the phase bit) passes through a hardened merge cell,
    so a transient in either rail can neither corrupt stored state nor reach
    an output.
    """
    s = lambda n: nl.signal(f"{p}.{n}")
    err_p, corr_p, dec, done = s("err_p"), s("corr_p"), s("dec"), s("done")
    width = corr_pulse_width(cfg, bp)
    nl.add(Shaper(f"{p}.shape_err", err_rail, err_p, bp.shaper_delay, width))
    nl.add(Shaper(f"{p}.shape_corr", corr_rail, corr_p, bp.shaper_delay, width))
    nl.add(Gate(f"{p}.dec_or", "OR2", (err_rail, corr_rail), dec, bp.dec_or, 1, hardened=True))

    rreq_m, lack_m, clk_m, z_m = s("rreq"), s("lack"), s("clk"), s("z")
    nl.add(DoneGen(f"{p}.done", clk_m, dec, done, done_rise(cfg, bp), done_fall(cfg, bp)))
    rfb, lfb, cfb, zfb, zslow = s("rfb"), s("lfb"), s("cfb"), s("zfb"), s("zslow")
    nl.add(DelayLine(f"{p}.w_rfb", rreq_m, rfb, bp.fb, bp.fb))
    nl.add(DelayLine(f"{p}.w_lfb", lack_m, lfb, bp.fb, bp.fb))
    nl.add(DelayLine(f"{p}.w_cfb", clk_m, cfb, bp.fb, bp.fb))
    nl.add(DelayLine(f"{p}.w_zfb", z_m, zfb, bp.fb, bp.fb))
    nl.add(DelayLine(f"{p}.w_zslow", z_m, zslow, bp.fb_slow, bp.fb_slow))

    rail_outs = []
    for rail in ("r1", "r2"):
        r = f"{p}.{rail}"
        rs = lambda n: nl.signal(f"{r}.{n}")
        # per-rail branch wires for the handshake inputs (the campaign can
        # strike one branch without touching the other rail)
        a_in, b_in = rs("lreq"), rs("rack")
        nl.add(DelayLine(f"{r}.w_a", port_a, a_in, 1, 1))
        nl.add(DelayLine(f"{r}.w_b", port_b, b_in, 1, 1))

        def g(gid: str, kind: str, ins: tuple[str, ...], out: str,
              delay: int = 3, thresh: int | None = None, fall: int | None = None) -> str:
            nl.add(Gate(f"{r}.{gid}", kind, ins, out,
                        delay, thresh if thresh is not None else min(delay, 3),
                        fall_delay=fall))
            return out

        n_corr = g("i_corr", "INV", (corr_p,), rs("n_corr"), 1, 1)
        n_done = g("i_done", "INV", (done,), rs("n_done"), 1, 1)
        n_a = g("i_a", "INV", (a_in,), rs("n_lreq"), 1, 1)
        n_b = g("i_b", "INV", (b_in,), rs("n_rack"), 1, 1)
        n_z = g("i_z", "INV", (zfb,), rs("n_z"), 1, 1)
        n_zs = g("i_zs", "INV", (zslow,), rs("n_zslow"), 1, 1)
        n_lack = g("i_lack", "INV", (lfb,), rs("n_lack"), 1, 1)

        # request cone
        r1 = g("t_r1", "AND2", (n_corr, n_lack), rs("t_r1"))
        r2 = g("t_r2", "AND2", (done, n_lack), rs("t_r2"))
        r3 = g("t_r3", "AND2", (zslow, n_lack), rs("t_r3"))
        r4a = g("t_r4a", "AND2", (zslow, corr_p), rs("t_r4a"))
        r4 = g("t_r4", "AND2", (r4a, n_done), rs("t_r4"))
        ro1 = g("o_r1", "OR2", (r1, r2), rs("o_r1"), 2, 2)
        ro2 = g("o_r2", "OR2", (r3, r4), rs("o_r2"), 2, 2)
        rreq_r = g("rreq", "AND2", (rst, nl.signal(rs("o_r"))), rs("rreq_r"), 1, 1)
        nl.add(Gate(f"{r}.o_rr", "OR2", (ro1, ro2), rs("o_r"), 2, 2))

        # ack cone
        l1 = g("t_l1", "AND2", (n_corr, lfb), rs("t_l1"))
        l2 = g("t_l2", "AND2", (done, lfb), rs("t_l2"))
        l3 = g("t_l3", "AND2", (n_zs, lfb), rs("t_l3"))
        l4a = g("t_l4a", "AND2", (n_zs, corr_p), rs("t_l4a"))
        l4 = g("t_l4", "AND2", (l4a, n_done), rs("t_l4"))
        lo1 = g("o_l1", "OR2", (l1, l2), rs("o_l1"), 2, 2)
        lo2 = g("o_l2", "OR2", (l3, l4), rs("o_l2"), 2, 2)
        lack_r = g("lack", "AND2", (rst, nl.signal(rs("o_l"))), rs("lack_r"), 1, 1)
        nl.add(Gate(f"{r}.o_ll", "OR2", (lo1, lo2), rs("o_l"), 2, 2))

        # clock cone; the self-hold term gate is slow and swallows the
        # commit-transient its own feedback would otherwise latch
        c1 = g("t_c1", "AND2", (err_p, n_done), rs("t_c1"))
        c2 = g("t_c2", "AND2", (cfb, n_done), rs("t_c2"), 8, 8)
        c3a = g("t_c3a", "AND2", (zfb, n_done), rs("t_c3a"))
        c3b = g("t_c3b", "AND2", (n_a, (b_in if rack_inverted else n_b)), rs("t_c3b"))
        c3 = g("t_c3", "AND2", (c3a, c3b), rs("t_c3"))
        c4a = g("t_c4a", "AND2", (a_in, (n_b if rack_inverted else b_in)), rs("t_c4a"))
        c4b = g("t_c4b", "AND2", (n_done, n_z), rs("t_c4b"))
        c4 = g("t_c4", "AND2", (c4a, c4b), rs("t_c4"))
        co1 = g("o_c1", "OR2", (c1, c2), rs("o_c1"), 2, 2)
        co2 = g("o_c2", "OR2", (c3, c4), rs("o_c2"), 2, 2)
        clk_r = g("clk", "AND2", (rst, nl.signal(rs("o_c"))), rs("clk_r"), 1, 1)
        nl.add(Gate(f"{r}.o_cc", "OR2", (co1, co2), rs("o_c"), 2, 2))

        # phase cone
        z1a = g("t_z1a", "AND2", (n_z, corr_p), rs("t_z1a"))
        z1 = g("t_z1", "AND2", (z1a, n_done), rs("t_z1"))
        z2 = g("t_z2", "AND2", (zfb, n_corr), rs("t_z2"))
        z3 = g("t_z3", "AND2", (zfb, done), rs("t_z3"))
        zo1 = g("o_z1", "OR2", (z1, z2), rs("o_z1"), 2, 2)
        z_r = g("z", "AND2", (rst, nl.signal(rs("o_z"))), rs("z_r"), 1, 1)
        nl.add(Gate(f"{r}.o_zz", "OR2", (zo1, z3), rs("o_z"), 2, 2))

        rail_outs.append((clk_r, rreq_r, lack_r, z_r))

    (c1k, r1q, l1a, z1v), (c2k, r2q, l2a, z2v) = rail_outs
    nl.add(Gate(f"{p}.g_clk", "CELEM2", (c1k, c2k), clk_m, bp.guard, bp.guard, hardened=True))
    nl.add(Gate(f"{p}.g_rreq", "CELEM2", (r1q, r2q), rreq_m, bp.guard, bp.guard, hardened=True))
    nl.add(Gate(f"{p}.g_lack", "CELEM2", (l1a, l2a), lack_m, bp.guard, bp.guard, hardened=True))
    nl.add(Gate(f"{p}.g_z", "CELEM2", (z1v, z2v), z_m, bp.z_guard, bp.z_guard, hardened=True))

    for sig in nl.signals:
        if sig.startswith(p + "."):
            nl.tag(sig, nl.tags.get(sig, "ctrl"))
    return clk_m, rreq_m, lack_m
