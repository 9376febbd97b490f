"""Deterministic report emission: canonical JSON, fixed-format CSV, hashes.

Byte-identical reruns are a contract, not a nicety — the whole point of the
laboratory is that a number in a report can be traced to a config and
reproduced. So: keys sorted, floats via repr (shortest round-trip), 17
significant digits in CSV, no timestamps, no locale, and every report
carries the sha256 of its canonicalized config plus the package version."""

import hashlib
import json

import numpy as np

ARTIFACT_VERSION = "0.1.0"


def _sanitize(obj):
    """Recursively convert numpy scalars/arrays and dataclass-ish objects
    into plain Python so json sees only one representation of each value."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if hasattr(obj, "to_json"):
        return _sanitize(obj.to_json())
    raise TypeError(f"cannot canonicalize {type(obj).__name__} for a report")


def canonical_json(obj):
    """One serialization per value: sorted keys, repr floats, LF-terminated.

    Non-finite floats are emitted as JSON strings ("nan", "inf", "-inf")
    rather than bare tokens, so the output stays standard JSON and still
    round-trips deterministically."""
    def encode_special(o):
        if isinstance(o, float) and (o != o or o in (float("inf"), float("-inf"))):
            return repr(o)
        return o

    def walk(o):
        if isinstance(o, dict):
            return {k: walk(v) for k, v in o.items()}
        if isinstance(o, list):
            return [walk(v) for v in o]
        return encode_special(o)

    return json.dumps(walk(_sanitize(obj)), sort_keys=True, allow_nan=False,
                      separators=(",", ": "), indent=1) + "\n"


def config_hash(config):
    """sha256 of the canonicalized config — the report's provenance key."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def report_envelope(config, payload):
    """Wrap a command's payload with version and config hash (no clock)."""
    return {"artifact_version": ARTIFACT_VERSION,
            "config_hash": config_hash(config),
            "config": _sanitize(config),
            "report": _sanitize(payload)}


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(canonical_json(obj))


def format_cell(v):
    """CSV cell: 17 significant digits for floats, plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    """Plain-comma CSV with a fixed numeric format and LF line endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(v) for v in row) + "\n")
