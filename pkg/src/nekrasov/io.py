"""Result documents and deterministic CSV/JSON output.

A document has a ``header`` (the wall-clock timestamp, excluded from the
payload hash) and a body holding the schema tag, artifact version,
command, resolved configuration and payload.  Identical configurations
produce identical bodies and identical CSV bytes.
"""

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__

__all__ = ["SCHEMA_VERSION", "ResultDocument", "format_float", "csv_text", "write_csv", "write_outputs"]

SCHEMA_VERSION = 1


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass(frozen=True, eq=False)
class ResultDocument:
    command: str
    config: dict
    payload: dict
    version: str = f"v{__version__}"
    schema: str = ""
    schema_version: int = SCHEMA_VERSION
    header: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.schema:
            object.__setattr__(self, "schema", f"nekrasov-waves/{self.command}")
        if "timestamp" not in self.header:
            stamp = datetime.now(timezone.utc).replace(microsecond=0).isoformat()
            object.__setattr__(self, "header", {**self.header, "timestamp": stamp})

    def body(self):
        return {
            "schema": self.schema,
            "schema_version": self.schema_version,
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "payload": self.payload,
        }

    def payload_hash(self):
        return hashlib.sha256(_canonical(self.body()).encode()).hexdigest()

    def to_json(self):
        doc = {"header": {**self.header, "payload_sha256": self.payload_hash()}, **self.body()}
        return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        header = {k: v for k, v in d["header"].items() if k != "payload_sha256"}
        doc = cls(
            command=d["command"],
            config=d["config"],
            payload=d["payload"],
            version=d["version"],
            schema=d["schema"],
            schema_version=d["schema_version"],
            header=header,
        )
        stored = d["header"].get("payload_sha256")
        if stored is not None and stored != doc.payload_hash():
            raise ValueError("payload hash mismatch")
        return doc

    def __eq__(self, other):
        if not isinstance(other, ResultDocument):
            return NotImplemented
        return self.header == other.header and _canonical(self.body()) == _canonical(other.body())

    def validate(self):
        """Check the schema tag and required payload tables."""
        if self.schema != f"nekrasov-waves/{self.command}" or self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unexpected schema {self.schema} v{self.schema_version}")
        for name in REQUIRED.get(self.command, ()):
            if name not in self.payload:
                raise ValueError(f"payload lacks {name!r}")
        _canonical(self.body())
        return True


REQUIRED = {
    "spectrum": ("spectrum",),
    "series": ("terms", "constants", "residual_sweep", "slope"),
    "branching": ("roots", "equivalence"),
    "continue": ("branch", "termination"),
    "verify": ("checks", "passed"),
}


def format_float(x):
    """17 significant digits, enough to round-trip any double."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return f"{x:.17g}"


def csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_float(v) if isinstance(v, (int, float)) else v for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows):
    Path(path).write_bytes(csv_text(columns, rows).encode())


def write_outputs(doc, out_dir, tables, formats):
    """Write ``tables`` ({stem: (columns, rows)}) as CSV and ``doc`` as JSON.

    Returns the list of written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        for stem, (columns, rows) in tables.items():
            p = out / f"{stem}.csv"
            write_csv(p, columns, rows)
            written.append(p)
    if "json" in formats:
        p = out / f"{doc.command}.json"
        p.write_text(doc.to_json())
        written.append(p)
    return written
