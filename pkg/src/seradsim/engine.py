"""Runtime binding of a netlist to the event kernel.

The engine compiles every element into event-driven closures: gates use an
inertial delay model (pending output events of opposite polarity within the
gate's threshold cancel, swallowing narrow pulses), delay lines are pure
transport, latches and flops implement their capture-window semantics, and
the control/EDL elements follow the handshake protocol timing.

One engine instance per simulation; the netlist itself is never mutated.
"""

from __future__ import annotations

import random
from typing import Callable

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
)
from .kernel import SimStats, Simulator, Time
from .logic import L0, L1, X, LogicValue, eval_gate


class UnknownNode(Exception):
    pass


_INV = {0: 1, 1: 0, 2: 2}


class Engine:
    def __init__(
        self,
        netlist: Netlist,
        *,
        rng: random.Random | None = None,
        trace: bool = False,
        trace_signals: set[str] | None = None,
        hardened_immune_width: int = 0,
    ) -> None:
        self.netlist = netlist
        self.sim = Simulator()
        self.rng = rng or random.Random(0)
        self.hardened_immune_width = hardened_immune_width

        self.index = {name: i for i, name in enumerate(netlist.signals)}
        n = len(netlist.signals)
        self.values: list[int] = [0] * n
        # what the driving element believes it drives; an injected force can
        # diverge `values` from this, and the restore returns to it
        self.driven: list[int] = [0] * n
        self.counts: list[int] = [0] * n  # transitions per signal
        self.last_change: list[int] = [0] * n
        self.subs: list[list[Callable[[], None]]] = [[] for _ in range(n)]
        self.trace_enabled = trace
        self.trace_filter = (
            None if trace_signals is None else {self.index[s] for s in trace_signals}
        )
        self.trace: list[tuple[Time, int, int]] = []
        self.hardened_nodes: set[int] = set()
        self._forced: dict[int, int] = {}  # node -> generation at force time

        self._compile()

    # --- signal plumbing ---------------------------------------------------

    def val(self, name: str) -> LogicValue:
        return LogicValue(self.values[self.index[name]])

    def _set(self, idx: int, v: int) -> None:
        if self.values[idx] == v:
            return
        self.values[idx] = v
        self.counts[idx] += 1
        self.last_change[idx] = self.sim.now
        if self.trace_enabled and (self.trace_filter is None or idx in self.trace_filter):
            self.trace.append((self.sim.now, idx, v))
        for cb in self.subs[idx]:
            cb()

    def _drive(self, idx: int, v: int) -> None:
        self.driven[idx] = v
        self._set(idx, v)

    def set_input(self, name: str, v: LogicValue) -> None:
        self._drive(self.index[name], int(v))

    def on_change(self, name: str, cb: Callable[[], None]) -> None:
        self.subs[self.index[name]].append(cb)

    def run(self, until: Time, watchdog: Time = 0) -> SimStats:
        return self.sim.run(until, watchdog)

    # --- fault injection -----------------------------------------------------

    def inject(self, node: str, start: Time, width: Time) -> None:
        """Force `node` to its inverted value at `start`, restoring it at
        start+width unless a legitimate driver event wrote it meanwhile."""
        if node not in self.index:
            raise UnknownNode(node)
        if width < 1:
            raise ValueError("pulse width must be >= 1 ps")
        idx = self.index[node]
        if idx in self.hardened_nodes and width <= self.hardened_immune_width:
            return  # sized element: bounded transients at its output die out

        def strike() -> None:
            forced = _INV[self.values[idx]]
            if forced == self.values[idx]:
                return
            self._set(idx, forced)

            def restore() -> None:
                # the driver wins: return to whatever it currently drives
                # (driver events during the pulse already overwrote us)
                self._set(idx, self.driven[idx])

            self.sim.schedule(start + width, restore)

        self.sim.schedule(start, strike)

    # --- compilation ---------------------------------------------------------

    def _compile(self) -> None:
        for el in self.netlist.elements:
            if isinstance(el, Gate):
                self._compile_gate(el)
            elif isinstance(el, DelayLine):
                self._compile_dline(el)
            elif isinstance(el, DiceLatch):
                self._compile_latch(el)
            elif isinstance(el, Flop):
                self._compile_flop(el)
            elif isinstance(el, ClockGen):
                self._compile_clock(el)
            elif isinstance(el, QFlop):
                self._compile_qflop(el)
            elif isinstance(el, CtrlCone):
                self._compile_cone(el)
            elif isinstance(el, Shaper):
                self._compile_shaper(el)
            elif isinstance(el, DoneGen):
                self._compile_donegen(el)
            elif isinstance(el, EdlBlock):
                self._compile_edl(el)
        # initial values
        for el in self.netlist.elements:
            if isinstance(el, (DiceLatch, Flop)):
                self.values[self.index[el.q]] = int(el.init)
                self.driven[self.index[el.q]] = int(el.init)

    def start(self) -> None:
        """Schedule the initial evaluation pass; call once before run()."""
        for react in self._initial:
            self.sim.schedule(0, react)

    _initial: list[Callable[[], None]]

    def _add_initial(self, cb: Callable[[], None]) -> None:
        if not hasattr(self, "_initial"):
            self._initial = []
        self._initial.append(cb)

    def _inertial_output(self, out_idx: int, delay: int, thresh: int):
        """Shared inertial-output machinery; returns a `drive(target)` fn."""
        sim = self.sim
        pending: list[tuple[Time, int, int] | None] = [None]  # (time, value, event_id)

        def drive(target: int) -> None:
            p = pending[0]
            committed = p[1] if p is not None else self.driven[out_idx]
            if target == committed:
                return
            t = sim.now + delay
            if p is not None:
                if t - p[0] <= thresh:
                    sim.cancel(p[2])
                    pending[0] = None  # pulse swallowed
                    return
                # wide pulse: let the pending edge fire, schedule the new one

            def fire(t=t, v=target) -> None:
                if pending[0] is not None and pending[0][0] == t and pending[0][1] == v:
                    pending[0] = None
                    self._drive(out_idx, v)

            eid = sim.schedule(t, fire)
            pending[0] = (t, target, eid)

        return drive

    def _compile_gate(self, g: Gate) -> None:
        out = self.index[g.output]
        ins = [self.index[s] for s in g.inputs]
        if g.hardened:
            self.hardened_nodes.add(out)
        values = self.values
        kind = g.kind
        rise = g.prop_delay
        fall = g.fall_delay if g.fall_delay is not None else g.prop_delay
        if rise == fall:
            drive = self._inertial_output(out, rise, g.inertial_threshold)

            def react() -> None:
                v = eval_gate(kind, [LogicValue(values[i]) for i in ins],
                              LogicValue(self.driven[out]))
                drive(int(v))
        else:
            # per-direction delay; shared pending slot keeps inertial behavior
            sim = self.sim
            pending: list[tuple[Time, int, int] | None] = [None]
            thresh = g.inertial_threshold

            def react() -> None:
                v = int(eval_gate(kind, [LogicValue(values[i]) for i in ins],
                                  LogicValue(self.driven[out])))
                p = pending[0]
                committed = p[1] if p is not None else self.driven[out]
                if v == committed:
                    return
                t = sim.now + (rise if v == 1 else fall)
                if p is not None and t - p[0] <= thresh:
                    sim.cancel(p[2])
                    pending[0] = None
                    return

                def fire(t=t, v=v) -> None:
                    if pending[0] is not None and pending[0][0] == t and pending[0][1] == v:
                        pending[0] = None
                        self._drive(out, v)

                eid = sim.schedule(t, fire)
                pending[0] = (t, v, eid)

        for i in set(ins):
            self.subs[i].append(react)
        self._add_initial(react)

    def _compile_dline(self, d: DelayLine) -> None:
        src = self.index[d.input]
        out = self.index[d.output]
        sim = self.sim
        values = self.values

        def react() -> None:
            v = values[src]
            delay = d.rise_delay if v == 1 else d.fall_delay
            sim.schedule(sim.now + delay, lambda v=v: self._drive(out, v))

        self.subs[src].append(react)
        self._add_initial(react)

    def _compile_latch(self, lt: DiceLatch) -> None:
        d_i = self.index[lt.d]
        q_i = self.index[lt.q]
        clk_i = self.index[lt.clk]
        sim = self.sim
        values = self.values
        # open_t: transparency start, or -1; close_t: last close edge, or -1
        st = {"open_t": -1, "close_t": -1, "violation": False}

        def on_d() -> None:
            if st["open_t"] >= 0:
                st["violation"] = True  # moved inside (open, close]
                v = values[d_i]
                sim.schedule(sim.now + lt.prop_delay, lambda v=v: self._drive(q_i, v))
            elif st["close_t"] >= 0 and sim.now <= st["close_t"] + lt.hold_time:
                st["violation"] = True  # moved inside the hold window

        def finalize(close_t: Time, captured: int, short: bool) -> None:
            if st["close_t"] != close_t:
                return  # reopened meanwhile (re-sample)
            self._drive(q_i, 2 if (st["violation"] or short) else captured)

        def on_clk() -> None:
            v = values[clk_i]
            if v == 1:
                st["open_t"] = sim.now
                st["close_t"] = -1
                st["violation"] = False
                dv = values[d_i]
                sim.schedule(sim.now + lt.prop_delay, lambda dv=dv: self._drive(q_i, dv))
            elif v == 0 and st["open_t"] >= 0:
                close_t = sim.now
                short = (close_t - st["open_t"]) < lt.min_pulse
                captured = values[d_i]
                st["open_t"] = -1
                st["close_t"] = close_t
                sim.schedule(
                    close_t + lt.hold_time,
                    lambda close_t=close_t, captured=captured, short=short: finalize(
                        close_t, captured, short
                    ),
                )

        self.subs[d_i].append(on_d)
        self.subs[clk_i].append(on_clk)

    def _compile_flop(self, f: Flop) -> None:
        d_i = self.index[f.d]
        q_i = self.index[f.q]
        clk_i = self.index[f.clk]
        sim = self.sim
        values = self.values
        last_clk_rise = [-(10**9)]

        def on_clk() -> None:
            if values[clk_i] != 1:
                return
            t = sim.now
            last_clk_rise[0] = t
            stable_since = self.last_change[d_i]
            v = values[d_i]
            if stable_since > t - f.setup:
                v = 2  # setup violation
            sim.schedule(t + f.prop_delay, lambda v=v: self._drive(q_i, v))

        def on_d() -> None:
            t = sim.now
            if 0 < t - last_clk_rise[0] <= f.hold:
                sim.schedule(t + f.prop_delay, lambda: self._drive(q_i, 2))

        self.subs[clk_i].append(on_clk)
        self.subs[d_i].append(on_d)

    def _compile_clock(self, c: ClockGen) -> None:
        out = self.index[c.output]
        sim = self.sim

        def rise() -> None:
            self._drive(out, 1)
            sim.schedule(sim.now + c.high, fall)

        def fall() -> None:
            self._drive(out, 0)
            sim.schedule(sim.now + (c.period - c.high), rise)

        self._add_initial(lambda: sim.schedule(c.start, rise))

    def _compile_qflop(self, q: QFlop) -> None:
        d_i = self.index[q.d]
        s_i = self.index[q.sample]
        e_i = self.index[q.err]
        c_i = self.index[q.corr]
        self.hardened_nodes.add(e_i)
        self.hardened_nodes.add(c_i)
        sim = self.sim
        values = self.values
        st = {"sample_t": -1, "pending": None, "decided": False}

        def assert_rail(rail: int) -> None:
            self._drive(rail, 1)

        def decide_meta() -> None:
            rail = e_i if self.rng.random() < 0.5 else c_i
            extra = max(1, int(round(self.rng.expovariate(1.0 / q.meta_mean))))
            st["pending"] = sim.schedule(sim.now + q.prop_delay + extra, lambda: assert_rail(rail))

        def on_sample() -> None:
            t = sim.now
            if values[s_i] == 1:
                st["sample_t"] = t
                st["decided"] = False
                moved_recently = self.last_change[d_i] > t - q.setup
                v = values[d_i]
                if moved_recently or v == 2:
                    decide_meta()
                else:
                    rail = e_i if v == 1 else c_i
                    st["pending"] = sim.schedule(t + q.prop_delay, lambda: assert_rail(rail))
                st["decided"] = True
            else:
                st["sample_t"] = -1
                sim.schedule(t + 4, lambda: (self._drive(e_i, 0), self._drive(c_i, 0)))

        def on_d() -> None:
            t = sim.now
            s = st["sample_t"]
            if s >= 0 and 0 < t - s <= q.hold and st["pending"] is not None:
                if sim.cancel(st["pending"]):
                    decide_meta()

        self.subs[s_i].append(on_sample)
        self.subs[d_i].append(on_d)

    def _compile_cone(self, c: CtrlCone) -> None:
        idx = self.index
        rst, lreq, rack = idx[c.rst], idx[c.lreq], idx[c.rack]
        err, corr, done = idx[c.err], idx[c.corr], idx[c.done]
        rfb, lfb, cfb, zfb, zsl = (
            idx[c.rreq_fb], idx[c.lack_fb], idx[c.clk_fb], idx[c.z_fb], idx[c.z_slow],
        )
        out = idx[c.output]
        values = self.values
        eq = c.eq

        def f() -> int:
            if values[rst] != 1:
                return 0
            C, D = values[corr], values[done]
            if eq == "rreq":
                nL = 1 - values[lfb] if values[lfb] != 2 else 0
                z = values[zsl]
                return 1 if (((1 - C) and nL) or (D and nL) or (z and nL)
                             or (z and C and (1 - D))) else 0
            if eq == "lack":
                L = values[lfb]
                nz = 1 - values[zsl] if values[zsl] != 2 else 0
                return 1 if (((1 - C) and L) or (D and L) or (nz and L)
                             or (nz and C and (1 - D))) else 0
            if eq == "clk":
                E = values[err]
                nD = 1 - D if D != 2 else 0
                z = values[zfb]
                lq, ra = values[lreq], values[rack]
                return 1 if ((E and nD) or (values[cfb] and nD)
                             or (z and (1 - lq) and (1 - ra) and nD)
                             or (lq and ra and nD and (1 - z))) else 0
            # z: phase bit, set/cleared by the commit burst, held otherwise
            z = values[zfb]
            nD = 1 - D if D != 2 else 0
            return 1 if (((1 - z) and C and nD) or (z and (1 - C)) or (z and D)) else 0

        drive = self._inertial_output(out, c.prop_delay, c.prop_delay)

        def react() -> None:
            drive(f())

        deps = {rst, err, corr, done, rfb, lfb, cfb, zfb, zsl, lreq, rack}
        for i in deps:
            self.subs[i].append(react)
        self._add_initial(react)

    def _compile_shaper(self, s: Shaper) -> None:
        src = self.index[s.input]
        out = self.index[s.output]
        if s.hardened:
            self.hardened_nodes.add(out)
        sim = self.sim
        values = self.values

        def react() -> None:
            if values[src] == 1:
                sim.schedule(sim.now + s.delay, lambda: self._drive(out, 1))
                sim.schedule(sim.now + s.delay + s.width, lambda: self._drive(out, 0))

        self.subs[src].append(react)

    def _compile_donegen(self, d: DoneGen) -> None:
        clk = self.index[d.clk]
        dec = self.index[d.decision]
        out = self.index[d.output]
        sim = self.sim
        values = self.values

        def on_clk() -> None:
            if values[clk] == 1:
                sim.schedule(sim.now + d.rise, lambda: self._drive(out, 1))

        def on_dec() -> None:
            if values[dec] == 1:
                sim.schedule(sim.now + d.fall, lambda: self._drive(out, 0))

        self.subs[clk].append(on_clk)
        self.subs[dec].append(on_dec)

    def _compile_edl(self, e: EdlBlock) -> None:
        clk = self.index[e.clk]
        err = self.index[e.err]
        corr = self.index[e.corr]
        watch = [self.index[s] for s in e.watch]
        self.hardened_nodes.add(err)
        self.hardened_nodes.add(corr)
        sim = self.sim
        values = self.values
        st = {"open_t": -1, "close_t": -1, "flag": False, "last_edge": -(10**9)}

        def on_watch() -> None:
            t = sim.now
            st["last_edge"] = t
            if st["open_t"] >= 0:
                st["flag"] = True
            elif st["close_t"] >= 0 and t <= st["close_t"] + e.hold + e.tail:
                st["flag"] = True

        def decide(close_t: Time) -> None:
            if st["close_t"] != close_t:
                return  # stale (a newer window opened meanwhile)
            flagged = st["flag"]
            edge_gap = abs(st["last_edge"] - (close_t + e.hold + e.tail))
            meta = edge_gap <= e.meta_window
            if meta:
                rail = err if self.rng.random() < 0.5 else corr
                extra = max(1, int(round(self.rng.expovariate(1.0 / e.meta_mean))))
                sim.schedule(sim.now + extra, lambda: self._drive(rail, 1))
            else:
                self._drive(err if flagged else corr, 1)

        def on_clk() -> None:
            t = sim.now
            if values[clk] == 1:
                st["open_t"] = t
                st["close_t"] = -1
                st["flag"] = False
                sim.schedule(t + e.q_reset_delay, lambda: (self._drive(err, 0), self._drive(corr, 0)))
            else:
                if st["open_t"] < 0:
                    return
                st["open_t"] = -1
                st["close_t"] = t
                sim.schedule(t + e.decision_delay, lambda t=t: decide(t))

        for i in watch:
            self.subs[i].append(on_watch)
        self.subs[clk].append(on_clk)
