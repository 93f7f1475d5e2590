"""Value-change-dump emission and a minimal re-parser used to verify that
emitted files load losslessly."""

from __future__ import annotations

from .kernel import Time

_ID_CHARS = "".join(chr(c) for c in range(33, 127))


def _short_id(n: int) -> str:
    out = []
    while True:
        out.append(_ID_CHARS[n % len(_ID_CHARS)])
        n //= len(_ID_CHARS)
        if n == 0:
            break
    return "".join(out)


def write_vcd(path: str, signals: list[str], changes: list[tuple[Time, str, str]],
              initial: dict[str, str] | None = None) -> None:
    """Write a standard single-bit-wire dump.

    `changes` carries (time, signal, value) records with values in {0,1,x};
    `initial` gives time-zero values for the $dumpvars block (default x).
    """
    ids = {s: _short_id(i) for i, s in enumerate(signals)}
    lines = ["$timescale 1ps $end", "$scope module top $end"]
    for s in signals:
        lines.append(f"$var wire 1 {ids[s]} {s} $end")
    lines.append("$upscope $end")
    lines.append("$enddefinitions $end")
    lines.append("$dumpvars")
    init = initial or {}
    for s in signals:
        lines.append(f"{init.get(s, 'x')}{ids[s]}")
    lines.append("$end")
    cur_t: Time | None = None
    for t, sig, v in changes:
        if t != cur_t:
            lines.append(f"#{t}")
            cur_t = t
        lines.append(f"{v}{ids[sig]}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def parse_vcd(path: str) -> tuple[list[str], dict[str, str], list[tuple[Time, str, str]]]:
    """Minimal reader for files produced by write_vcd: returns (signals,
    initial values, change records)."""
    names: dict[str, str] = {}
    order: list[str] = []
    initial: dict[str, str] = {}
    changes: list[tuple[Time, str, str]] = []
    now: Time = 0
    in_dumpvars = False
    with open(path, encoding="utf-8") as f:
        for raw in f:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("$var"):
                parts = line.split()
                names[parts[3]] = parts[4]
                order.append(parts[4])
            elif line == "$dumpvars":
                in_dumpvars = True
            elif line == "$end":
                in_dumpvars = False
            elif line.startswith("$"):
                continue
            elif line.startswith("#"):
                now = int(line[1:])
            elif line[0] in "01x":
                sig = names[line[1:]]
                if in_dumpvars:
                    initial[sig] = line[0]
                else:
                    changes.append((now, sig, line[0]))
    return order, initial, changes
