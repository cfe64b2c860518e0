"""Flat report records: typed schemas, writers and readers.

Two formats are supported.  ``csv`` files start with a ``#`` metadata line,
then a header row; reals are written with 17 significant digits so every
value round-trips exactly.  ``jsonl`` files start with a metadata object
followed by one object per record.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

SCHEMA_VERSION = 1
UNITS = "all scores and deltas in raw model units (dimensionless)"
FORMATS = ("csv", "jsonl")

AUDIT_SCHEMA = (
    ("scenario", str),
    ("flavor", str),
    ("mode", str),
    ("x", str),
    ("y", str),
    ("z", str),
    ("eps", float),
    ("status", str),
    ("alpha", float),
    ("rate_beta", float),
    ("predicted_delta", float),
    ("realized_delta", float),
    ("relative_residual", float),
    ("pairwise", str),
    ("fully_pairwise", str),
    ("individual_score_y", str),
    ("individual_score_z", str),
    ("individual_probability", str),
    ("assumption", str),
    ("note", str),
)

TRACE_SCHEMA = (
    ("step", int),
    ("x", str),
    ("chosen", str),
    ("rejected", str),
    ("score_chosen_before", float),
    ("score_rejected_before", float),
    ("chosen_delta", float),
    ("rejected_delta", float),
    ("pairwise_delta", float),
    ("alpha", float),
    ("pred_pairwise", bool),
    ("pred_individual_chosen", bool),
    ("pred_individual_rejected", bool),
    ("pred_fully_pairwise", bool),
    ("verdict_pairwise", str),
    ("verdict_individual_chosen", str),
    ("verdict_individual_rejected", str),
    ("verdict_fully_pairwise", str),
    ("verdict_probability", str),
)

SCHEMAS = {"audit": AUDIT_SCHEMA, "trace": TRACE_SCHEMA}


def _fmt(value, typ) -> str:
    if value is None:
        return ""
    if typ is float:
        return format(float(value), ".17g")
    if typ is bool:
        return "true" if value else "false"
    if typ is int:
        return str(int(value))
    return str(value)


def _parse(text: str, typ):
    if text == "" and typ is not str:
        return None
    if typ is float:
        return float(text)
    if typ is int:
        return int(text)
    if typ is bool:
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean {text!r}")
        return text == "true"
    return text


def _meta(schema_name: str, note: str) -> dict:
    meta = {"schema": schema_name, "schema_version": SCHEMA_VERSION, "units": UNITS}
    if note:
        meta["note"] = note
    return meta


def render_report(records, schema_name: str = "audit", fmt: str = "csv", note: str = "") -> str:
    """Serialize records to text with a deterministic field order."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    schema = SCHEMAS[schema_name]
    meta = _meta(schema_name, note)
    buf = io.StringIO()
    if fmt == "csv":
        buf.write("# " + " ".join(f"{k}={json.dumps(v)}" for k, v in meta.items()) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([name for name, _ in schema])
        for rec in records:
            writer.writerow([_fmt(rec.get(name), typ) for name, typ in schema])
    else:
        buf.write(json.dumps({**meta, "fields": [name for name, _ in schema]}) + "\n")
        for rec in records:
            row = {}
            for name, typ in schema:
                v = rec.get(name)
                row[name] = None if v is None else typ(v)
            buf.write(json.dumps(row, allow_nan=True) + "\n")
    return buf.getvalue()


def emit_report(records, path, schema_name: str = "audit", fmt: str = "csv", note: str = "") -> Path:
    path = Path(path)
    text = render_report(records, schema_name, fmt, note)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc}") from exc
    return path


def parse_report_text(text: str, fmt: str = "csv") -> tuple[dict, list[dict]]:
    lines = text.splitlines()
    if fmt == "jsonl":
        meta = json.loads(lines[0])
        schema = SCHEMAS[meta["schema"]]
        records = []
        for line in lines[1:]:
            if not line.strip():
                continue
            raw = json.loads(line)
            records.append({name: (None if raw.get(name) is None else typ(raw[name])) for name, typ in schema})
        return meta, records
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            for part in _split_meta(line[1:].strip()):
                k, _, v = part.partition("=")
                meta[k] = json.loads(v)
        else:
            body.append(line)
    schema = SCHEMAS[meta.get("schema", "audit")]
    reader = csv.reader(body)
    header = next(reader, None)
    names = [name for name, _ in schema]
    if header != names:
        raise ValueError(f"unexpected header {header}")
    records = [{name: _parse(cell, typ) for (name, typ), cell in zip(schema, row)} for row in reader]
    return meta, records


def _split_meta(text: str):
    # key=<json value> pairs separated by spaces; values may contain spaces inside quotes
    parts, cur, in_str, esc = [], "", False, False
    for ch in text:
        if in_str:
            cur += ch
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
            cur += ch
        elif ch == " ":
            if cur:
                parts.append(cur)
            cur = ""
        else:
            cur += ch
    if cur:
        parts.append(cur)
    return parts


def parse_report(path, fmt: str | None = None) -> tuple[dict, list[dict]]:
    path = Path(path)
    fmt = fmt or ("jsonl" if path.suffix == ".jsonl" else "csv")
    return parse_report_text(path.read_text(), fmt)


def audit_records(report) -> list[dict]:
    """Flatten an AuditReport into summary records (one per eps rung for ladders)."""
    x, y, z = report.triple
    assumption_names = ("max_comparison", "negative_cross_partial")
    assumption = ""
    for name in assumption_names:
        a = report.assumptions.get(name)
        if a is not None:
            assumption = f"{name}:{a['status'] if isinstance(a, dict) else a.status}"
    base = {
        "scenario": report.scenario,
        "flavor": report.flavor,
        "mode": report.mode,
        "x": x,
        "y": y,
        "z": z,
        "eps": report.eps,
        "status": report.status,
        "alpha": report.alpha,
        "rate_beta": report.rate_beta,
        "predicted_delta": report.predicted_delta,
        "realized_delta": report.realized_delta,
        "relative_residual": report.relative_residual,
        "assumption": assumption,
        "note": report.details.get("link") or "; ".join(report.details.get("reasons", [])),
    }
    for k, v in report.verdicts.items():
        base[k] = v.value
    if report.flavor == "global_ladder" and "sequence" in report.details:
        seq = report.details["sequence"]
        out = []
        for eps, s in zip(report.details["ladder"], seq[1:]):
            rec = dict(base, eps=eps, realized_delta=s - seq[0], predicted_delta=None, relative_residual=None)
            out.append(rec)
        return out or [base]
    return [base]
