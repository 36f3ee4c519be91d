"""
Result files: CSV tables with a schema header and JSON documents.

Every CSV starts with ``# schema-version: 1``. Extra ``# key: value`` comment lines may
follow with JSON encoded values. Floats are written with ``repr`` so identical runs give
byte-identical files.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import orjson

from ._errors import WavelabError

SCHEMA_VERSION = 1


class PersistError(WavelabError, ValueError):
    """Raised when a result file can't be read back.

    This covers:
    - A missing or unsupported schema version header
    - Rows whose width doesn't match the header
    """

    pass


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))

    return str(value)


def write_csv(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    meta: dict[str, Any] | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    buffer = io.StringIO()
    buffer.write(f"# schema-version: {SCHEMA_VERSION}\n")

    for key, value in (meta or {}).items():
        buffer.write(f"# {key}: {orjson.dumps(value, option=orjson.OPT_SERIALIZE_NUMPY).decode()}\n")

    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_cell(value) for value in row] for row in rows)

    path.write_text(buffer.getvalue())

    return path


def read_csv(path: str | Path) -> tuple[dict[str, Any], list[str], np.ndarray]:
    """Read a CSV written by :func:`write_csv`.

    Returns:
        The comment metadata, the column names and a float array of shape (rows, columns)
    """
    lines = Path(path).read_text().splitlines()

    if not lines or lines[0].strip() != f"# schema-version: {SCHEMA_VERSION}":
        raise PersistError(f"unsupported or missing schema header in {path}")

    meta: dict[str, Any] = {}
    index = 1
    while index < len(lines) and lines[index].startswith("#"):
        key, _, value = lines[index][1:].partition(":")
        meta[key.strip()] = orjson.loads(value.strip())
        index += 1

    reader = csv.reader(lines[index:])
    header = next(reader)
    rows = [row for row in reader if row]

    if any(len(row) != len(header) for row in rows):
        raise PersistError(f"ragged rows in {path}")

    data = np.array([[float(cell) for cell in row] for row in rows], dtype=float)

    return meta, header, data.reshape(len(rows), len(header))


def dumps(document: Any) -> bytes:
    return orjson.dumps(
        document,
        option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_SORT_KEYS,
    )


def write_json(path: str | Path, document: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(document))

    return path


def read_json(path: str | Path) -> Any:
    return orjson.loads(Path(path).read_bytes())
