"""Error detecting logic for one latch bank.

Structure: one transition detector per data bit (XOR against a delayed copy
of itself), a per-bit flag cell that remembers a detector pulse while the
window signal is high, a flag-merge tree, and a sampler with dual-rail
err/corr outputs that is immune to strikes and converts marginal inputs
into a randomized but safe resolution delay.

Two builder styles: `fast` emits a single lumped block with identical
external timing; `gates` emits the full structure so faults can be injected
inside the detection path.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .circuit import DelayLine, EdlBlock, Gate, Netlist, QFlop
from .timing import BuildError, BuildParams, TimingConfig, edl_decision_delay


@dataclass(frozen=True)
class EdlPorts:
    err: str
    corr: str
    internal: tuple[str, ...]


def build_edl(
    nl: Netlist,
    prefix: str,
    *,
    clk: str,
    watch: tuple[str, ...],
    cfg: TimingConfig,
    bp: BuildParams,
    style: str = "fast",
) -> EdlPorts:
    if style == "fast":
        return _build_lumped(nl, prefix, clk, watch, cfg, bp)
    return _build_gates(nl, prefix, clk, watch, cfg, bp)


def _build_lumped(nl, prefix, clk, watch, cfg, bp) -> EdlPorts:
    err = nl.signal(f"{prefix}.err")
    corr = nl.signal(f"{prefix}.corr")
    nl.add(EdlBlock(
        id=prefix, clk=clk, err=err, corr=corr, watch=tuple(watch),
        hold=cfg.dice_hold, tail=cfg.x_pw,
        decision_delay=edl_decision_delay(cfg),
        meta_window=bp.meta_window, meta_mean=bp.meta_mean,
        q_reset_delay=bp.q_reset_delay,
    ))
    nl.tag(err, "edl")
    nl.tag(corr, "edl")
    return EdlPorts(err, corr, ())


def _build_gates(nl, prefix, clk, watch, cfg, bp) -> EdlPorts:
    s = lambda n: nl.signal(f"{prefix}.{n}")
    if cfg.comp_r < 2 or cfg.comp_f < 2 or cfg.su < 2:
        raise BuildError("comp_r/comp_f/su too small for the gate-level detection path")

    # window signal: clk through the asymmetric compensation line, ORed with
    # the inverted-sample guard so flags hold until the sampler is done
    y = s("y")
    nl.add(DelayLine(f"{prefix}.comp", clk, y, cfg.comp_r - 1, cfg.comp_f - 1))
    inv_y = s("y_n")
    nl.add(Gate(f"{prefix}.i_y", "INV", (y,), inv_y, 1, 1))
    sample = s("sample")
    nl.add(DelayLine(f"{prefix}.w_sample", inv_y, sample, cfg.su, 3))
    sample_n = s("sample_n")
    nl.add(Gate(f"{prefix}.i_s", "INV", (sample,), sample_n, 1, 1))
    sbar = s("sbar")
    nl.add(DelayLine(f"{prefix}.w_sbar", sample_n, sbar, 3, max(1, cfg.h - 1)))
    w = s("w")
    nl.add(Gate(f"{prefix}.or_w", "OR2", (y, sbar), w, 1, 1))

    flags: list[str] = []
    for j, d in enumerate(watch):
        dd = s(f"dd{j}")
        nl.add(DelayLine(f"{prefix}.dl{j}", d, dd, cfg.dp, cfg.dp))
        x = s(f"x{j}")
        nl.add(Gate(f"{prefix}.det{j}", "XOR2", (d, dd), x, cfg.xor_pd, 1))
        f = s(f"flag{j}")
        nl.add(Gate(f"{prefix}.cel{j}", "CELEM2", (x, w), f,
                    cfg.c_pullup, 1, fall_delay=cfg.c_pulldown))
        flags.append(f)

    # flag-merge tree
    level = 0
    while len(flags) > 1:
        nxt: list[str] = []
        for k in range(0, len(flags) - 1, 2):
            o = s(f"or{level}_{k // 2}")
            nl.add(Gate(f"{prefix}.or{level}_{k // 2}", "OR2",
                        (flags[k], flags[k + 1]), o, bp.edl_or_level, 1))
            nxt.append(o)
        if len(flags) % 2:
            nxt.append(flags[-1])
        flags = nxt
        level += 1
    any_flag = flags[0]

    err = s("err")
    corr = s("corr")
    nl.add(QFlop(prefix + ".qf", d=any_flag, sample=sample, err=err, corr=corr,
                 setup=cfg.q_setup, hold=cfg.q_hold, prop_delay=cfg.q_pd,
                 meta_mean=bp.meta_mean))

    internal = tuple(sig for sig in nl.signals
                     if sig.startswith(prefix + ".") and sig not in (err, corr))
    for sig in internal + (err, corr):
        nl.tag(sig, "edl")
    return EdlPorts(err, corr, internal)


def qflop_sample(
    input_history: list[tuple[int, int]],
    sample_rise: int,
    *,
    setup: int,
    hold: int,
    prop_delay: int,
    meta_mean: int,
    rng: random.Random,
) -> tuple[str, int]:
    """Single-shot sampler model: given the (time, value) history of the
    input, return which rail rises and when.

    Stable input through [sample_rise - setup, sample_rise + hold] decides
    immediately at sample_rise + prop_delay; an edge inside the window picks
    a fair-coin rail after an extra exponential resolution delay. Both rails
    stay low until the decision asserts.
    """
    window_lo = sample_rise - setup
    window_hi = sample_rise + hold
    value = 0
    marginal = False
    for t, v in input_history:
        if t <= sample_rise:
            value = v
        if window_lo < t <= window_hi:
            marginal = True
    if marginal or value == 2:
        which = "Err" if rng.random() < 0.5 else "Corr"
        extra = max(1, int(round(rng.expovariate(1.0 / meta_mean))))
        return which, sample_rise + prop_delay + extra
    return ("Err" if value == 1 else "Corr"), sample_rise + prop_delay
