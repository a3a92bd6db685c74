"""Experiment configuration: JSON files with CLI overrides.

Every reproducible run is a single JSON file; command-line `--set key=value`
pairs override individual (possibly nested, dot-separated) fields.  Values
are parsed as JSON when possible, otherwise kept as strings.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .correspondence import Correspondence, compose, deleted_covering, map_graph, mobius_correspondence
from .errors import UsageError
from .families import composed_covering_pair, family_correspondence, family_involution
from .rational import MobiusMap, RationalMap


def load_config(path: str | None, overrides=()) -> dict:
    cfg = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except FileNotFoundError as exc:
            raise UsageError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config root must be a JSON object")
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"override must look like key=value: {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise UsageError(f"cannot override through non-object field {part!r}")
        node[parts[-1]] = value
    return cfg


def require(cfg: dict, key: str):
    if key not in cfg:
        raise UsageError(f"config field {key!r} is required")
    return cfg[key]


def build_correspondence(spec) -> Correspondence:
    """Correspondence from its config description.

    kinds: family_a {a}; covering {map}; covering_pair {R, S};
    map_graph {map, orientation}; mobius {matrix: [[a,b],[c,d]]};
    compose {factors: [spec...]} (last factor applied first);
    explicit {data: Correspondence JSON}.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise UsageError("correspondence spec must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "family_a":
        return family_correspondence(_complex_field(require(spec, "a")))
    if kind == "covering":
        return deleted_covering(RationalMap.from_json(require(spec, "map")))
    if kind == "covering_pair":
        return composed_covering_pair(
            RationalMap.from_json(require(spec, "R")),
            RationalMap.from_json(require(spec, "S")),
        )
    if kind == "map_graph":
        orientation = spec.get("orientation", "forward")
        if orientation not in ("forward", "backward"):
            raise UsageError("orientation must be forward or backward")
        return map_graph(
            RationalMap.from_json(require(spec, "map")),
            backward=orientation == "backward",
        )
    if kind == "mobius":
        (a, b), (c, d) = require(spec, "matrix")
        return mobius_correspondence(
            MobiusMap(_complex_field(a), _complex_field(b), _complex_field(c), _complex_field(d))
        )
    if kind == "compose":
        factors = [build_correspondence(s) for s in require(spec, "factors")]
        if not factors:
            raise UsageError("compose needs at least one factor")
        out = factors[-1]
        for f in reversed(factors[:-1]):
            out = compose(f, out)
        return out
    if kind == "explicit":
        return Correspondence.from_json(require(spec, "data"))
    raise UsageError(f"unknown correspondence kind {kind!r}")


def _complex_field(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(v[0], v[1])
    raise UsageError(f"expected a number or [re, im] pair, got {v!r}")


def thread_count() -> int:
    raw = os.environ.get("CORRDYN_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError(f"CORRDYN_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


def write_text(path: str, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_json(path: str, data) -> None:
    write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_bytes(path: str, data: bytes):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)
