"""Serialization: NDJSON field snapshots and event logs, CSV tables.

Field snapshot format: one header object, then one object per row:

    {"domain": {...}, "windings": {"p": .., "q": ..}, "field_time": ..,
     "coords": "ballistic-invariant"}
    {"y": -2, "anchor": 3, "steps": [[-1.25, "K"], [0.5, "A"]], ...}

Step coordinates are the ballistic invariants (kink: x - t, antikink: x + t;
equal to positions for fields at time zero), which makes the round trip
bit-exact for snapshots taken at any time.  Floats are written with 17
significant digits, which reconstructs the exact double.
"""

from __future__ import annotations

import json

import numpy as np

from .domain import Torus, Window
from .heightfield import HeightField, Row


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def dump_field(field: HeightField) -> str:
    if isinstance(field.domain, Torus):
        dom = {"torus": {"M": field.domain.M, "N": field.domain.N}}
    else:
        w = field.domain
        dom = {"window": {"a": w.a, "b": w.b, "c": w.c, "d": w.d,
                          "horizontal_margin": w.horizontal_margin,
                          "vertical_buffer": w.vertical_buffer}}
    header = ('{"domain": %s, "windings": {"p": %d, "q": %d}, '
              '"field_time": %s, "coords": "ballistic-invariant"}'
              % (json.dumps(dom, sort_keys=True), field.winding_p,
                 field.winding_q, _fmt(field.field_time)))
    lines = [header]
    for y in sorted(field.rows):
        row = field.rows[y]
        items = sorted([(float(v), "K") for v in row.kinks]
                       + [(float(v), "A") for v in row.antikinks])
        steps = ", ".join(f'[{_fmt(x)}, "{s}"]' for x, s in items)
        lines.append('{"y": %d, "anchor": %d, "steps": [%s]}'
                     % (y, row.anchor, steps))
    return "\n".join(lines) + "\n"


def load_field(text: str) -> HeightField:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = json.loads(lines[0])
    dom_spec = header["domain"]
    if "torus" in dom_spec:
        domain = Torus(dom_spec["torus"]["M"], dom_spec["torus"]["N"])
    else:
        w = dom_spec["window"]
        domain = Window(w["a"], w["b"], w["c"], w["d"],
                        w["horizontal_margin"], w["vertical_buffer"])
    rows = {}
    for ln in lines[1:]:
        obj = json.loads(ln)
        ks = [x for x, s in obj["steps"] if s == "K"]
        as_ = [x for x, s in obj["steps"] if s == "A"]
        rows[int(obj["y"])] = Row(np.asarray(sorted(ks), dtype=np.float64),
                                  np.asarray(sorted(as_), dtype=np.float64),
                                  int(obj["anchor"]))
    return HeightField(domain, rows, float(header["field_time"]),
                       int(header["windings"]["p"]), int(header["windings"]["q"]))


def dump_events(traj) -> str:
    """Event log as NDJSON ordered by (t, y, x)."""
    lines = []
    for ev in traj.event_log():
        lines.append('{"t": %s, "kind": "%s", "x": %s, "y": %d, "effective": %s}'
                     % (_fmt(ev["t"]), ev["kind"], _fmt(ev["x"]), ev["y"],
                        "true" if ev["effective"] else "false"))
    return "\n".join(lines) + ("\n" if lines else "")


def write_csv(path, header, rows):
    """CSV with %.17g floats; byte-identical across reruns of the same data."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for v in row:
                if isinstance(v, (int, np.integer)):
                    cells.append(str(int(v)))
                elif isinstance(v, (float, np.floating)):
                    cells.append(_fmt(v))
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")
