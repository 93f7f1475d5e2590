"""Delay bookkeeping: every timing symbol of the hardened-pipeline design,
the constraint checker, and the throughput/penalty oracles.

Derived quantities: sigma = max(phi, tau) is the filtering-window width and
delta = Delta - sigma is the nominal inter-controller delay-line length.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

Time = int


class InvalidTiming(Exception):
    pass


@dataclass(frozen=True)
class TimingConfig:
    tau: Time  # max SET pulse width that is detected and mitigated
    phi: Time  # min transparency pulse width the storage latch needs
    Delta: Time  # worst-case stage logic delay, incl. one latch
    y: Time  # extra close/re-open overhead beyond one window width
    dice_hold: Time  # latch hold time
    xor_pd: Time  # detector gate propagation delay
    x_pw: Time  # detector output pulse width
    c_pullup: Time  # error-flag cell rising delay
    c_pulldown: Time  # error-flag cell falling delay
    or_tree: Time  # flag-merge tree delay
    q_setup: Time  # sampler setup time
    q_hold: Time  # sampler hold time
    comp_r: Time  # window compensation line, rising delay
    comp_f: Time  # window compensation line, falling delay
    su: Time  # sample-line delay (window close to sample rise)
    h: Time  # sample to sample_bar delay (flag reset guard)
    no_overlap: Time  # configured non-overlap budget between adjacent clocks
    q_pd: Time  # sampler decision delay (sample rise to rail rise)
    ctrl: Time  # budget: decision to next stage's clock rise, delay line excluded
    dp: Time  # detector reference-delay element
    latch_pd: Time  # latch D-to-Q delay, folded into Delta
    sigma: Time = 0  # derived: max(phi, tau)
    delta: Time = 0  # derived: Delta - sigma


# fields the user supplies; sigma/delta always recomputed
_BASE_FIELDS = [f.name for f in fields(TimingConfig) if f.name not in ("sigma", "delta")]


def derive(**kw: Time) -> TimingConfig:
    """Populate sigma and delta from the base fields."""
    cfg = TimingConfig(**{k: kw[k] for k in _BASE_FIELDS})
    sigma = max(cfg.phi, cfg.tau)
    if cfg.Delta <= sigma:
        raise InvalidTiming(f"Delta ({cfg.Delta}) must exceed sigma ({sigma})")
    return replace(cfg, sigma=sigma, delta=cfg.Delta - sigma)


def rederive(cfg: TimingConfig, **overrides: Time) -> TimingConfig:
    base = {k: getattr(cfg, k) for k in _BASE_FIELDS}
    base.update(overrides)
    return derive(**base)


@dataclass(frozen=True)
class Violation:
    constraint: str  # EQ1..EQ6, SIGMA, DELTA
    lhs: Time
    rhs: Time
    message: str
    severity: str = "fail"  # fail | warn


def check_constraints(cfg: TimingConfig, eq_tolerance: Time = 0) -> list[Violation]:
    """Evaluate the design inequalities; an empty list means all satisfied.

    The two matched-path constraints are equalities (checked within
    eq_tolerance); the sampler hold constraint is warn-level, being a
    sign-off check rather than a synthesis one.
    """
    v: list[Violation] = []
    if cfg.sigma != max(cfg.phi, cfg.tau):
        v.append(Violation("SIGMA", cfg.sigma, max(cfg.phi, cfg.tau), "sigma != max(phi, tau)"))
    if cfg.delta != cfg.Delta - cfg.sigma:
        v.append(Violation("DELTA", cfg.delta, cfg.Delta - cfg.sigma, "delta != Delta - sigma"))
    if not cfg.x_pw >= cfg.c_pullup:
        v.append(Violation("EQ1", cfg.x_pw, cfg.c_pullup,
                           "detector pulse narrower than flag-cell pullup"))
    if abs(cfg.comp_r - (cfg.xor_pd + cfg.x_pw)) > eq_tolerance:
        v.append(Violation("EQ2", cfg.comp_r, cfg.xor_pd + cfg.x_pw,
                           "window rise compensation not matched to detector path"))
    if abs(cfg.comp_f - (cfg.xor_pd + cfg.x_pw + cfg.dice_hold)) > eq_tolerance:
        v.append(Violation("EQ3", cfg.comp_f, cfg.xor_pd + cfg.x_pw + cfg.dice_hold,
                           "window fall compensation not matched to detector+hold path"))
    if not cfg.su >= cfg.c_pullup + cfg.or_tree + cfg.q_setup:
        v.append(Violation("EQ4", cfg.su, cfg.c_pullup + cfg.or_tree + cfg.q_setup,
                           "sample rises before flags can reach the sampler"))
    if not cfg.q_hold <= cfg.h + cfg.c_pulldown + cfg.or_tree:
        v.append(Violation("EQ5", cfg.q_hold, cfg.h + cfg.c_pulldown + cfg.or_tree,
                           "flags may reset inside the sampler hold window", severity="warn"))
    mno = min_no_overlap(cfg)
    if not cfg.no_overlap >= mno:
        v.append(Violation("EQ6", cfg.no_overlap, mno,
                           "non-overlap budget below the control response bound"))
    return v


def min_no_overlap(cfg: TimingConfig) -> Time:
    """Lower bound on the non-overlap period between adjacent stage clocks."""
    return cfg.comp_r + cfg.su + cfg.q_pd + cfg.ctrl


@dataclass(frozen=True)
class BuildParams:
    """Structural constants of the controller/EDL realization (ps).

    These are implementation parameters, not part of the timing contract;
    the derived helpers below tie them to the TimingConfig so that measured
    pipeline behavior matches the closed-form oracles exactly.
    """

    cone_rl: Time = 12  # request/ack equation cone delay
    cone_clk: Time = 18  # clock equation cone delay
    cone_z: Time = 6  # phase-bit equation cone delay
    guard: Time = 14  # output guard (merge) element delay
    z_guard: Time = 8  # phase-bit merge element delay
    fb: Time = 2  # feedback wire transport
    fb_slow: Time = 16  # phase-bit feedback into the request/ack cones
    dec_or: Time = 3  # err|corr merge gate delay
    shaper_delay: Time = 1  # decision pulse former lead delay
    q_reset_delay: Time = 4  # sample fall to rail reset
    meta_window: Time = 1  # boundary straddle width treated as marginal
    meta_mean: Time = 50  # mean of the random resolution delay
    bundle_margin: Time = 4  # data-before-window slack
    dline_min: Time = 2  # shortest allowed inter-stage delay line
    edl_or_level: Time = 4  # per-level delay of the structural flag tree


class BuildError(Exception):
    pass


def edl_decision_delay(cfg: TimingConfig) -> Time:
    """Clock fall to decision-rail rise."""
    return cfg.comp_f + cfg.su + cfg.q_pd


def done_rise(cfg: TimingConfig, bp: BuildParams) -> Time:
    dr = cfg.sigma - bp.cone_clk - bp.guard
    if dr < 1:
        raise BuildError(f"sigma ({cfg.sigma}) too small for the clock loop "
                         f"({bp.cone_clk + bp.guard})")
    return dr


def done_fall(cfg: TimingConfig, bp: BuildParams) -> Time:
    """Decision-merge rise to completion fall, sized so that the close to
    re-open time is exactly sigma + y."""
    df = cfg.sigma + cfg.y - edl_decision_delay(cfg) - bp.dec_or - bp.cone_clk - bp.guard
    if df < 1:
        raise BuildError(
            f"sigma+y ({cfg.sigma + cfg.y}) cannot cover the decision path "
            f"({edl_decision_delay(cfg) + bp.dec_or + bp.cone_clk + bp.guard})")
    return df


def corr_pulse_width(cfg: TimingConfig, bp: BuildParams) -> Time:
    """Decision pulse width at the controller rails.

    The pulse must still be high when the completion fall commits the
    request/ack toggles and until their own feedback latches the new levels,
    but it must expire before the phase-bit's feedback loop closes a second
    time, since the phase cone is a toggle cell: a pulse outliving its loop
    makes the bit fall back.
    """
    lo = bp.cone_rl + bp.fb + 1  # commit cones have latched their toggles
    hi = bp.cone_z + bp.z_guard + bp.fb + bp.cone_z - 1  # phase self-kill fires
    if hi - lo < 2:
        raise BuildError("phase-bit loop too fast for the commit feedback; "
                         "raise z_guard or lower cone_rl")
    if bp.cone_z + bp.z_guard + bp.fb >= bp.cone_clk:
        raise BuildError("phase feedback must reach the clock cone before it "
                         "re-fires; raise cone_clk")
    after_fall = lo + (hi - lo) // 2
    return bp.dec_or + done_fall(cfg, bp) + after_fall - bp.shaper_delay


def ctrl_lag(cfg: TimingConfig, bp: BuildParams) -> Time:
    """Commit chain: clock fall to the neighbor-visible req/ack toggle."""
    return edl_decision_delay(cfg) + bp.dec_or + done_fall(cfg, bp) + bp.cone_rl + bp.guard


def burst_lag(bp: BuildParams) -> Time:
    """Input burst completion to the merged clock rise."""
    return bp.cone_clk + bp.guard


def stage_forward_lag(cfg: TimingConfig, bp: BuildParams) -> Time:
    """Clock rise at stage i to clock rise at stage i+1, excluding the
    inter-stage delay line."""
    return cfg.sigma + ctrl_lag(cfg, bp) + burst_lag(bp)


def inter_stage_dline(cfg: TimingConfig, bp: BuildParams) -> Time:
    """Delay-line length between controllers: sized so the data always beats
    the next window, but never below the floor (control overhead hidden in
    the large-Delta regime, exposed otherwise)."""
    need = cfg.Delta + bp.bundle_margin - stage_forward_lag(cfg, bp)
    return max(need, bp.dline_min)


def min_cycle_time(cfg: TimingConfig, bp: BuildParams = BuildParams()) -> Time:
    """Steady-state no-error period per token.

    The acknowledge loop wraps two full capture-to-commit chains around one
    delay line (plus the ack wire and the token controller's sense inverter);
    with the line sized by `inter_stage_dline` the period collapses to the
    stage logic delay plus one commit overhead in the large-Delta regime.
    """
    fwd = stage_forward_lag(cfg, bp) + inter_stage_dline(cfg, bp)
    back = stage_forward_lag(cfg, bp) + 2
    return fwd + back


def error_penalty(cfg: TimingConfig) -> Time:
    """Extra completion time per re-sample: one additional window width plus
    the close/re-open overhead on top of the nominal window."""
    return 2 * cfg.sigma + cfg.y


# --- serialization -----------------------------------------------------------

def to_text(cfg: TimingConfig) -> str:
    lines = [f"{k}={getattr(cfg, k)}" for k in _BASE_FIELDS]
    return "\n".join(lines) + "\n"


def from_text(text: str) -> TimingConfig:
    kv: dict[str, int] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidTiming(f"line {ln}: expected key=value")
        k, v = line.split("=", 1)
        k = k.strip()
        if k in ("sigma", "delta"):
            continue  # derived; ignore if present
        if k not in _BASE_FIELDS:
            raise InvalidTiming(f"line {ln}: unknown timing key {k!r}")
        try:
            kv[k] = int(v.strip())
        except ValueError:
            raise InvalidTiming(f"line {ln}: {k} is not an integer") from None
    missing = [k for k in _BASE_FIELDS if k not in kv]
    if missing:
        raise InvalidTiming(f"missing timing keys: {missing}")
    return derive(**kv)


def default_config() -> TimingConfig:
    """The shipped preset. These are implementation defaults chosen to satisfy
    every constraint with small slacks; they are not measured silicon data."""
    return derive(
        tau=100, phi=60, Delta=1000, y=30,
        dice_hold=14, xor_pd=5, x_pw=12, c_pullup=10, c_pulldown=8,
        or_tree=12, q_setup=8, q_hold=6, comp_r=17, comp_f=31,
        su=32, h=10, no_overlap=150, q_pd=15, ctrl=80, dp=12, latch_pd=10,
    )
