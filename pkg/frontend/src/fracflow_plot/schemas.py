"""Readers and validators for the fracflow CSV schemas.

Every fracflow file carries `# key = value` provenance comments before a
fixed header row; the validators reject any file whose header deviates and
name the offending column.  Rendering never recomputes science: everything
drawn comes from these files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


class SchemaError(Exception):
    pass


SCHEMAS = {
    "trajectory": ["t", "node", "value"],
    "rates": ["level", "step", "error"],
    "sweep": ["alpha", "s", "max_linf", "pass"],
}


@dataclass
class CsvTable:
    meta: dict = field(default_factory=dict)
    columns: dict = field(default_factory=dict)

    def meta_float(self, key, default=None):
        if key not in self.meta:
            return default
        try:
            return float(self.meta[key])
        except ValueError:
            return default


def _check_header(header: list[str], expected: list[str], path) -> None:
    if len(header) != len(expected):
        raise SchemaError(
            f"{path}: expected columns {','.join(expected)}, got {','.join(header)}"
        )
    for got, want in zip(header, expected):
        if got != want:
            raise SchemaError(f"{path}: expected column {want!r}, got {got!r}")


def read_table(path, kind: str) -> CsvTable:
    expected = SCHEMAS[kind]
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: no such file")
    meta = {}
    header = None
    rows = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "=" in line:
                k, v = line[1:].split("=", 1)
                meta[k.strip()] = v.strip()
            continue
        cells = [c.strip() for c in line.split(",")]
        if header is None:
            _check_header(cells, expected, path)
            header = cells
            continue
        if len(cells) != len(header):
            raise SchemaError(f"{path}: row has {len(cells)} cells, header has {len(header)}")
        rows.append(cells)
    if header is None:
        raise SchemaError(f"{path}: empty file, expected header {','.join(expected)}")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    columns = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in rows]
        if name == "pass":
            columns[name] = [v == "true" for v in vals]
        else:
            try:
                columns[name] = [float(v) for v in vals]
            except ValueError as exc:
                raise SchemaError(f"{path}: column {name!r} has a non-numeric cell") from exc
    return CsvTable(meta=meta, columns=columns)
