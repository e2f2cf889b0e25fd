"""Serialization: the diagnostics CSV, state snapshots and run manifests.

CSV columns are ``t`` followed by the record's columns in the order
:func:`~wavelattice.diagnostics.make_record` produces them: the base scalars,
tails, phi_tilde, layers, bands, below-masses, concentration fractions and
finally the tracked shells ``shell_xi_pow_<n>``.  Each value is reduced over
directions (the maximum, or the minimum for concentration fractions) and
written with 17 significant digits, so a float survives the round trip
exactly.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .config import ModelConfig, config_from_mapping
from .diagnostics import DiagnosticsRecord
from .lattice import canonical
from .state import FullState, ShellState

FLOAT_FORMAT = "%.17g"


def _fmt(x: float) -> str:
    return FLOAT_FORMAT % x


def series_header(record: DiagnosticsRecord) -> list[str]:
    return ["t", *record.values]


class SeriesWriter:
    """Streams records to a CSV file, flushing after every row."""

    def __init__(self, stream: IO[str]):
        self._stream = stream
        self._writer = csv.writer(stream, lineterminator="\n")
        self._header: list[str] | None = None

    def write_header(self, header: Sequence[str]) -> None:
        self._header = list(header)
        self._writer.writerow(self._header)

    def write(self, record: DiagnosticsRecord) -> None:
        red = record.reduced()
        if self._header is None:
            self.write_header(series_header(red))
        elif self._header[1:] != list(red.values):
            raise ValueError("record columns differ from the header")
        self._writer.writerow([_fmt(red.t), *(_fmt(v[0]) for v in red.values.values())])
        self._stream.flush()


def emit_series(records: Iterable[DiagnosticsRecord], header: Sequence[str] | None = None) -> str:
    """CSV text for ``records``; with no records, only ``header`` (or ``t``) is written."""
    buf = io.StringIO()
    writer = SeriesWriter(buf)
    records = list(records)
    if not records:
        writer.write_header(header or ["t"])
    for rec in records:
        writer.write(rec)
    return buf.getvalue()


def parse_series(text: str) -> list[DiagnosticsRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return []
    header = rows[0]
    if not header or header[0] != "t":
        raise ValueError("series CSV must start with a 't' column")
    out = []
    for row in rows[1:]:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
        values = {name: np.array([float(x)]) for name, x in zip(header[1:], row[1:])}
        out.append(DiagnosticsRecord(float(row[0]), values))
    return out


def write_series(path: Path, records: Iterable[DiagnosticsRecord]) -> None:
    try:
        Path(path).write_text(emit_series(records))
    except OSError as exc:
        raise OSError(f"cannot write series to {path}: {exc}") from exc


def read_series(path: Path) -> list[DiagnosticsRecord]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read series from {path}: {exc}") from exc
    return parse_series(text)


# snapshots


def snapshot_dict(state: FullState) -> dict:
    dirs = []
    for angle, d in zip(state.angles, state.directions):
        shells = [{"m": r.m, "eta": r.eta, "amp": amp}
                  for r, amp in sorted(d.shells.items())]
        dirs.append({
            "angle": float(angle),
            "shells": shells,
            "condensate": d.condensate,
            "overflow_mass": d.overflow_mass,
            "overflow_energy": d.overflow_energy,
        })
    return {"xi": state.config.xi, "time": float(state.time), "directions": dirs}


def snapshot_json(state: FullState) -> str:
    return json.dumps(snapshot_dict(state), indent=1)


def state_from_snapshot(doc: dict, config: ModelConfig) -> FullState:
    """Rebuild a state; the grid level is the deepest level present."""
    xi = doc["xi"]
    if xi != config.xi:
        raise ValueError(f"snapshot xi={xi} does not match config xi={config.xi}")
    directions = []
    for d in doc["directions"]:
        shells = {canonical(xi, s["m"], s["eta"]): float(s["amp"]) for s in d["shells"]}
        directions.append(ShellState(shells, float(d["condensate"]),
                                     float(d["overflow_mass"]), float(d["overflow_energy"])))
    return FullState.from_directions(directions, config, time=float(doc["time"]))


def load_snapshot(text: str, config: ModelConfig) -> FullState:
    return state_from_snapshot(json.loads(text), config)


# manifests


@dataclass
class RunManifest:
    config: ModelConfig
    seed: int
    preset_name: str | None
    output_dir: str
    emitted_files: list[dict] = field(default_factory=list)
    status: str = "pending"

    def add(self, kind: str, path: Path | str) -> None:
        self.emitted_files.append({"kind": kind, "path": str(path)})

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "seed": self.seed,
            "preset_name": self.preset_name,
            "output_dir": self.output_dir,
            "emitted_files": list(self.emitted_files),
            "status": self.status,
        }

    def write(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def from_dict(cls, doc: dict) -> RunManifest:
        cfg = config_from_mapping(doc["config"])
        return cls(cfg, int(doc["seed"]), doc.get("preset_name"), doc["output_dir"],
                   list(doc.get("emitted_files", [])), doc.get("status", "pending"))


def is_manifest(doc: dict) -> bool:
    return isinstance(doc, dict) and isinstance(doc.get("config"), dict) and "seed" in doc
