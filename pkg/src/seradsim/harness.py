"""Test-bench environments: reset/source/sink processes for the self-timed
pipeline and the clocked variants, plus the one-call run helpers that every
higher layer (campaigns, CLI, tests) goes through.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .engine import Engine
from .kernel import SimStats, Time
from .logic import L0, L1, X, LogicValue
from .variants import BuildInfo
from .timing import min_cycle_time

RESET_SETTLE = 200  # quiet time before reset release, on top of Delta
SOURCE_FIRST_LAG = 60  # reset release -> first token; lets the reset acks land
SOURCE_LAG = 5  # ack observed -> next token presented
SINK_LAG = 5  # token consumed -> acknowledge toggled


@dataclass
class RunResult:
    tokens: list[int | None]  # all sink captures; None marks an X bit
    times: list[Time]
    stats: SimStats
    counts: dict[str, int]
    final_time: Time

    @property
    def payload(self) -> list[int | None]:
        """Output tokens excluding the reset-state priming token (self-timed)
        or the pipeline-fill captures (clocked); harnesses pre-slice, so this
        is just `tokens`."""
        return self.tokens


def _bits_of(value: int, bits: int) -> list[LogicValue]:
    return [L1 if (value >> j) & 1 else L0 for j in range(bits)]


def _read_word(engine: Engine, nets: tuple[str, ...]) -> int | None:
    word = 0
    for j, s in enumerate(nets):
        v = engine.val(s)
        if v is X:
            return None
        if v is L1:
            word |= 1 << j
    return word


def attach_serad_env(engine: Engine, info: BuildInfo, stimulus: list[int]):
    """Reset release, eager token source, always-ready sink.

    The pipeline emits one priming token from its reset state before the
    stimulus tokens; the sink records it separately.
    """
    sim = engine.sim
    t_rst = info.cfg.Delta + RESET_SETTLE
    captured: list[int | None] = []
    times: list[Time] = []

    engine.set_input(info.rst, L0)
    sim.schedule(t_rst, lambda: engine.set_input(info.rst, L1))
    # the sink starts ready: its reset acknowledge, like any normal stage's
    sim.schedule(t_rst + 3, lambda: engine.set_input(info.sink_ack, L1))

    state = {"sent": 0}

    def present() -> None:
        k = state["sent"]
        if k >= len(stimulus):
            return
        state["sent"] = k + 1
        for j, v in enumerate(_bits_of(stimulus[k], info.spec.bits)):
            engine.set_input(info.data_in[j], v)
        engine.set_input(info.lreq_in, L1 if engine.val(info.lreq_in) is L0 else L0)

    def on_ack() -> None:
        sim.schedule(sim.now + SOURCE_LAG, present)

    engine.on_change(info.ack_out, on_ack)
    sim.schedule(t_rst + SOURCE_FIRST_LAG, present)

    def on_req() -> None:
        captured.append(_read_word(engine, info.out))
        times.append(sim.now)
        sim.progress()
        sim.schedule(
            sim.now + SINK_LAG,
            lambda: engine.set_input(
                info.sink_ack, L1 if engine.val(info.sink_ack) is L0 else L0),
        )

    engine.on_change(info.req_out, on_req)
    return captured, times


def attach_clocked_env(engine: Engine, info: BuildInfo, stimulus: list[int]):
    """Clocked source and sink: a token enters every cycle; the sink samples
    the output bank after every capture edge."""
    sim = engine.sim
    # data presented this long before its capture edge; the glitch-filter
    # variant needs the 2*tau filter transport covered as well
    lead = 40 + (2 * info.cfg.tau if info.variant == "gf" else 0)
    captured: list[int | None] = []
    times: list[Time] = []

    for k, tok in enumerate(stimulus):
        at = info.clk_start + k * info.period - lead
        def drive(tok=tok) -> None:
            for j, v in enumerate(_bits_of(tok, info.spec.bits)):
                engine.set_input(info.data_in[j], v)
        sim.schedule(at, drive)

    total_edges = len(stimulus) + info.spec.n_stages + 1
    from .variants import FF_PD

    # read after the bank (and, for TMR, its voters) settles, well before
    # the following cone activity reaches the next D pins
    read_lag = FF_PD + 14
    for k in range(total_edges):
        at = info.clk_start + k * info.period + read_lag
        def read(at=at) -> None:
            captured.append(_read_word(engine, info.out))
            times.append(sim.now)
            sim.progress()
        sim.schedule(at, read)
    return captured, times


def run_pipeline(
    info: BuildInfo,
    stimulus: list[int],
    *,
    seed: int = 1,
    inject: tuple[str, Time, Time] | None = None,
    trace: bool = False,
    trace_signals: set[str] | None = None,
    extra_time: Time = 0,
) -> RunResult:
    """Build an engine, attach the proper environment, optionally schedule
    one transient injection, and run to completion."""
    rng = random.Random(f"run:{seed}")
    engine = Engine(info.netlist, rng=rng, trace=trace, trace_signals=trace_signals,
                    hardened_immune_width=info.cfg.sigma)
    if info.variant == "serad":
        captured, times = attach_serad_env(engine, info, stimulus)
        period = min_cycle_time(info.cfg, info.bp)
        horizon = (info.cfg.Delta + RESET_SETTLE + extra_time
                   + (len(stimulus) + info.spec.n_stages + 2) * period)
        drop = 1  # reset-state priming token
    else:
        captured, times = attach_clocked_env(engine, info, stimulus)
        horizon = info.clk_start + (len(stimulus) + info.spec.n_stages + 2) * info.period
        horizon += extra_time
        drop = info.spec.n_stages - 1  # pipeline-fill captures
    if inject is not None:
        node, start, width = inject
        engine.inject(node, start, width)
    engine.start()
    watchdog = 100 * (min_cycle_time(info.cfg, info.bp) if info.variant == "serad"
                      else info.period)
    stats = engine.run(horizon, watchdog=watchdog)
    counts = {s: engine.counts[i] for i, s in enumerate(info.netlist.signals)}
    tokens = captured[drop:drop + len(stimulus)]
    complete = len(captured) >= drop + len(stimulus)
    if not complete:
        stats = SimStats(stats.events_processed, stats.final_time, True)
    return RunResult(tokens, times[drop:drop + len(stimulus)], stats, counts,
                     stats.final_time)
