"""Model documents, CSV and JSON artifacts."""
from __future__ import annotations

import io as _io
import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import SchemaError
from .exponents import LevyModel
from .jumps import jumps_from_dict
from .ladders import LadderExponent

SCHEMA_VERSION = 1


@lru_cache(maxsize=None)
def model_schema():
    text = resources.files("expfunctional").joinpath("schema/model.schema.json").read_text()
    return json.loads(text)


def validate(doc):
    try:
        jsonschema.validate(doc, model_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise SchemaError(f"{where}: {exc.message}") from None


def parse_document(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    validate(doc)
    return doc


def model_from_document(doc):
    """LevyModel, or LadderExponent when the document carries a ``role``."""
    if "role" in doc:
        return LadderExponent(doc["role"], float(doc["kill"]), float(doc["drift"]),
                              jumps_from_dict(doc["jumps"]))
    return LevyModel.from_dict(doc)


def load_model(path):
    return model_from_document(parse_document(Path(path).read_text()))


def canonical(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"))


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def csv_text(header: dict, columns, rows) -> str:
    buf = _io.StringIO()
    for k in sorted(header):
        buf.write(f"# {k}: {header[k]}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def json_text(header: dict, body: dict) -> str:
    return json.dumps(jsonable({"header": header, **body}), sort_keys=True, indent=1) + "\n"


def read_csv(path_or_text):
    """(header, columns, array) from a CSV artifact."""
    text = str(path_or_text)
    if "\n" not in text:
        text = Path(text).read_text()
    header, lines = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            header[k] = v
        elif line:
            lines.append(line)
    cols = lines[0].split(",")
    data = [[_parse(x) for x in ln.split(",")] for ln in lines[1:]]
    return header, cols, np.array(data, dtype=float) if data else np.empty((0, len(cols)))


def _parse(x):
    return {"true": 1.0, "false": 0.0}.get(x, x)
