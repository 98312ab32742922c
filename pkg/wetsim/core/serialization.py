"""
CSV and JSON codecs for fields and paths. Floats are written with 17 significant digits,
which round-trips float64 exactly.
"""
import csv
import io
import json
from typing import Iterable, List, Sequence, Union

import numpy as np

from wetsim.constants import SERIALIZATION_DIGITS
from wetsim.core.models import InterpolatedPath, LatticeField, PathKind


def format_float(value: float) -> str:
    return format(float(value), f".{SERIALIZATION_DIGITS}g")


def write_rows(header: Sequence[str], rows: Iterable[Sequence], comment: str = None) -> str:
    """
    Renders rows to CSV text. Floats are formatted with full precision, everything else with str().

    :param header: column names
    :param rows: row sequences
    :param comment: optional first line, written as '# comment'
    :return: CSV text
    """
    buffer = io.StringIO()
    if comment:
        buffer.write(f"# {comment}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(x) if isinstance(x, (float, np.floating)) else str(x) for x in row])
    return buffer.getvalue()


def read_rows(text: str) -> List[List[str]]:
    """Parses CSV text written by write_rows, skipping comment lines and the header"""
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.reader(lines))[1:]


def field_to_csv(field: LatticeField) -> str:
    return write_rows(["index", "value"], ((i + 1, float(v)) for i, v in enumerate(field.values)))


def field_from_csv(text: str) -> LatticeField:
    return LatticeField.from_values([float(row[1]) for row in read_rows(text)])


def path_to_csv(path: InterpolatedPath) -> str:
    return write_rows(["y", "value"], zip(map(float, path.grid), map(float, path.values)), comment=path.kind.value)


def path_from_csv(text: str) -> InterpolatedPath:
    first = text.splitlines()[0]
    kind = PathKind(first[2:]) if first.startswith("# ") else PathKind.AFFINE
    values = [float(row[1]) for row in read_rows(text)]
    return InterpolatedPath(resolution=len(values) - 1, values=values, kind=kind)


def to_json_record(obj: Union[LatticeField, InterpolatedPath]) -> str:
    """
    JSON record {n, values}; n is the site count for fields and the resolution for paths.

    :param obj: field or path
    :return: JSON text
    """
    n = obj.n if isinstance(obj, LatticeField) else obj.resolution
    record = {"n": n, "values": [float(v) for v in obj.values]}
    if isinstance(obj, InterpolatedPath):
        record["kind"] = obj.kind.value
    return json.dumps(record)


def from_json_record(text: str) -> Union[LatticeField, InterpolatedPath]:
    record = json.loads(text)
    if "kind" in record:
        return InterpolatedPath(resolution=record["n"], values=record["values"], kind=PathKind(record["kind"]))
    return LatticeField(n=record["n"], values=record["values"])
