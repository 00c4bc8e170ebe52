import csv
import hashlib
import json
import os
from typing import Iterable, List, Sequence


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False, default=_default)


def pretty_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False, default=_default)


def _default(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def config_hash(data) -> str:
    """Short stable digest of a resolved config, echoed into every CSV row."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()[:16]


def fmt_float(x: float) -> str:
    # repr round-trips exactly
    return repr(float(x))


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    return path


def write_json(path: str, data) -> str:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w") as f:
        f.write(pretty_json(data))
        f.write("\n")
    return path


def read_csv_rows(path: str) -> List[List[str]]:
    with open(path, "r", newline="") as f:
        return [row for row in csv.reader(f)]
