"""Experiment configs, run records and result files.

JSON files carry a schema version, the config and a build id next to the
payload.  CSV files start with ``#`` comment lines holding the same metadata,
then a header row and the data rows; :func:`read_csv_rows` skips the
comments.  Floats are written with 17 significant digits so every value
survives a write/read cycle exactly.
"""

from __future__ import annotations

import csv
import io
import json
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._jit import backend
from .errors import ContractViolation
from .io import format_float

SCHEMA_VERSION = 1
FORMATS = ("json", "csv")


def build_id() -> str:
    return f"pottslab-{__version__}+{backend()}-py{platform.python_version()}-numpy{np.__version__}"


def _plain(x):
    """Recursively convert numpy scalars/arrays and tuples to JSON types."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.integer, bool, np.bool_)):
        return x.item() if isinstance(x, np.generic) else x
    if isinstance(x, np.floating):
        return float(x)
    return x


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: dict
    master_seed: int = 0
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ContractViolation(f"format must be one of {FORMATS}")
        object.__setattr__(self, "params", _plain(dict(self.params)))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(d["command"], d["params"], int(d["master_seed"]), d.get("out"), d.get("format", "json"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class RunRecord:
    config: ExperimentConfig
    payload: dict | list = field(default_factory=dict)
    replica_seeds: list = field(default_factory=list)
    started: float = field(default_factory=time.time)
    finished: float | None = None
    columns: list | None = None  # CSV column order; inferred from rows if None
    build: str = field(default_factory=build_id)

    def finish(self, payload) -> "RunRecord":
        self.payload = payload
        self.finished = time.time()
        return self

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "build": self.build,
            "config": self.config.to_dict(),
            "started": self.started,
            "finished": self.finished,
            "replica_seeds": _plain(self.replica_seeds),
            "payload": _plain(self.payload),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ContractViolation(f"unsupported schema version {d.get('schema_version')!r}")
        return cls(
            ExperimentConfig.from_dict(d["config"]),
            d["payload"],
            d["replica_seeds"],
            d["started"],
            d["finished"],
            build=d["build"],
        )


def _rows(record: RunRecord) -> list[dict]:
    p = record.payload
    if isinstance(p, dict):
        p = p.get("rows", [p])
    return [_plain(r) for r in p]


def _cell(v) -> str:
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, list):
        return json.dumps(v)
    return str(v)


def render(record: RunRecord, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt != "csv":
        raise ContractViolation(f"format must be one of {FORMATS}")
    rows = _rows(record)
    cols = list(record.columns) if record.columns else (list(rows[0]) if rows else [])
    buf = io.StringIO()
    buf.write(f"# schema_version: {SCHEMA_VERSION}\n")
    buf.write(f"# build: {record.build}\n")
    buf.write(f"# config: {record.config.to_json()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c, "")) for c in cols])
    return buf.getvalue()


def emit_results(record: RunRecord, fmt: str | None = None, path=None, stream=None) -> str:
    """Serialize ``record`` and write it to ``path`` (or ``stream``).

    Returns the rendered text.  An unwritable path raises ``OSError``.
    """
    fmt = fmt or record.config.format
    text = render(record, fmt)
    path = path if path is not None else record.config.out
    if path is not None:
        Path(path).write_text(text)
    elif stream is not None:
        stream.write(text)
    return text


def read_json_record(path) -> RunRecord:
    return RunRecord.from_dict(json.loads(Path(path).read_text()))


def read_csv_rows(source) -> tuple[dict, list[dict]]:
    """(metadata, rows) from a CSV result file; numeric cells become floats."""
    text = Path(source).read_text() if not isinstance(source, io.StringIO) else source.getvalue()
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        else:
            body.append(line)
    rows = []
    for r in csv.DictReader(body):
        rows.append({k: _parse_cell(v) for k, v in r.items()})
    if "config" in meta:
        meta["config"] = json.loads(meta["config"])
    return meta, rows


def _parse_cell(v: str):
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v
