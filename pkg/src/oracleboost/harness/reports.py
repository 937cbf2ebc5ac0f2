"""Report serialization.

JSON reports are the report dictionary with sorted keys. CSV reports hold
one header line and one data line; nested dictionaries are flattened into
dotted column names (``config.n``, ``violations.bad<=2m``) and lists are
written as JSON text. Both carry ``schema_version``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from typing import Iterable


def flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in d.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flatten(value, name + "."))
        elif isinstance(value, (list, tuple)):
            out[name] = json.dumps(list(value))
        else:
            out[name] = "" if value is None else value
    return out


def to_json(d: dict) -> str:
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def to_csv(rows: Iterable[dict]) -> str:
    rows = [flatten(r) for r in rows]
    buf = io.StringIO()
    if not rows:
        return ""
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def render(d: dict, fmt: str) -> str:
    return to_json(d) if fmt == "json" else to_csv([d])


def traces_jsonl(traces) -> str:
    """One line per reduction iteration, tagged with the run index and true distance."""
    lines = []
    for run, dist, trace in traces:
        for rec in trace.records:
            row = {"run": run, "distance": dist, "k": trace.k, **asdict(rec)}
            lines.append(json.dumps(row, sort_keys=True))
        final = {
            "run": run,
            "distance": dist,
            "k": trace.k,
            "final": True,
            "decision": trace.decision,
            "iterations": trace.iterations,
            "base_ell": trace.base_ell,
            "base_size": trace.base_size,
            "bits": trace.bits,
        }
        lines.append(json.dumps(final, sort_keys=True))
    return "".join(line + "\n" for line in lines)
