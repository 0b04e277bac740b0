"""JSON records for experiment runs.

A record is one object with keys schema_version, name, parameters, seed,
results and wall_time. Floats are written with 17 significant digits so a
record read back compares bit-for-bit with a fresh run.
"""

import csv
import io
import json
import math
import os
import tempfile

import numpy as np

SCHEMA_VERSION = 1
RECORD_KEYS = ("schema_version", "name", "parameters", "seed", "results", "wall_time")
OUTPUT_DIR_ENV = "GLUSKIN_OUTPUT_DIR"


def _float(x):
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def plain(obj):
    """Convert numpy scalars/arrays and dataclass-like values to JSON types."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return plain(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2, _level=0):
    """JSON text with floats at 17 significant digits."""
    obj = plain(obj) if _level == 0 else obj
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _float(obj)
    return json.dumps(obj)


def make_record(name, parameters, seed, results, wall_time):
    return {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "parameters": plain(parameters),
        "seed": plain(seed),
        "results": plain(results),
        "wall_time": None if wall_time is None else float(wall_time),
    }


def experiment_record_json(rec, parameters=None):
    """Record dict for an experiments.ExperimentRecord."""
    params = dict(rec.parameters)
    params["constants"] = rec.constants.to_dict()
    if parameters:
        params.update(parameters)
    return make_record(rec.name, params, rec.seed, rec.results(), rec.wall_time)


def atomic_write(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_record(path, record):
    missing = [k for k in RECORD_KEYS if k not in record]
    if missing:
        raise ValueError(f"record is missing keys {missing}")
    atomic_write(path, dumps(record) + "\n")


def read_record(path):
    with open(path) as fh:
        record = json.load(fh)
    if record.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {record.get('schema_version')!r}")
    missing = [k for k in RECORD_KEYS if k not in record]
    if missing:
        raise ValueError(f"record is missing keys {missing}")
    return record


def csv_text(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_float(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
    return buf.getvalue()


def write_csv(path, rows, columns):
    atomic_write(path, csv_text(rows, columns))


def default_output_dir():
    return os.environ.get(OUTPUT_DIR_ENV, ".")
