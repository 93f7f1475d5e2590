"""Canonical report writing: sorted-key JSON so identical inputs produce
byte-identical files, plus the comparison tables."""

from __future__ import annotations

import json
from typing import Any


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, separators=(",", ": ")) + "\n"


def write_report(data: Any, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(canonical_json(data))


def area_table(rows: dict[str, dict]) -> str:
    """Rows keyed by variant with comb/seq/total entries; baseline = sync."""
    base = rows.get("sync", {}).get("total", 0)
    out = ["variant,comb,seq,total,increase_pct"]
    for name in sorted(rows):
        r = rows[name]
        inc = 0.0 if not base else 100.0 * (r["total"] - base) / base
        out.append(f"{name},{r['comb']},{r['seq']},{r['total']},{inc:.1f}")
    return "\n".join(out) + "\n"


def power_table(rows: dict[str, dict]) -> str:
    out = ["variant,comb_toggles,seq_toggles,clock_toggles,duration_ps,weighted"]
    for name in sorted(rows):
        r = rows[name]
        out.append(f"{name},{r['comb']},{r['seq']},{r['clock']},{r['duration']},{r['weighted']}")
    return "\n".join(out) + "\n"
