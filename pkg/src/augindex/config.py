"""Declarative system descriptions (YAML or dict) and their validation.

Example::

    name: sg2
    arithmetic: {mode: quadratic, d: 3}
    cell_model: attractor
    maps:
      - {ratio: 1/2, translation: [0, 0]}
      - {ratio: 1/2, translation: [1/2, 0]}
      - {ratio: 1/2, translation: [1/4, √3/4]}
    region: [[0, 0], [1, 0], [1/2, √3/2]]
    pcf: true

A map is either ``ratio`` with an optional orthogonal matrix ``orthogonal``
or a full ``linear`` matrix; numbers are exact strings unless the mode is
``float``.
"""
from __future__ import annotations

import hashlib
import json

import yaml

from .errors import InvalidInput, InvalidParameter
from .ifs import Arithmetic, ContractionSystem, ContractiveMap, attach_pcf

KNOWN_KEYS = {"name", "dimension", "arithmetic", "cell_model", "maps", "region", "pcf", "weights",
              "params", "graph", "description"}


def load_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise InvalidInput(f"{path}: not valid YAML ({exc.__class__.__name__})") from exc
    if not isinstance(data, dict):
        raise InvalidInput(f"{path}: expected a mapping at top level")
    return data


def _num(arith: Arithmetic, v):
    if isinstance(v, float) and arith.exact:
        raise InvalidParameter(f"float {v!r} in an exact configuration; quote it as a string")
    return arith.coerce(str(v) if not isinstance(v, (int, float)) else v)


def system_from_config(cfg: dict) -> ContractionSystem:
    unknown = set(cfg) - KNOWN_KEYS
    if unknown:
        raise InvalidInput(f"unknown configuration keys: {sorted(unknown)}")
    ar = cfg.get("arithmetic", {"mode": "rational"})
    if isinstance(ar, str):
        ar = {"mode": ar}
    arith = Arithmetic(ar.get("mode", "rational"), ar.get("d"), float(ar.get("eps", 1e-12)))
    maps_cfg = cfg.get("maps")
    if not maps_cfg:
        raise InvalidInput("configuration has no maps")
    dim = cfg.get("dimension") or len(maps_cfg[0]["translation"])
    eps = None if arith.exact else arith.eps
    maps = []
    for i, m in enumerate(maps_cfg, start=1):
        t = [_num(arith, v) for v in m["translation"]]
        if len(t) != dim:
            raise InvalidInput(f"map {i}: translation has {len(t)} entries, dimension is {dim}")
        if "linear" in m:
            A = [[_num(arith, v) for v in row] for row in m["linear"]]
        elif "ratio" in m:
            r = _num(arith, m["ratio"])
            O = m.get("orthogonal")
            if O is None:
                O = [[1 if i2 == j else 0 for j in range(dim)] for i2 in range(dim)]
            A = [[r * _num(arith, v) for v in row] for row in O]
        else:
            raise InvalidInput(f"map {i}: give 'ratio' or 'linear'")
        err = m.get("translation_error")
        maps.append(ContractiveMap.similitude(A, t, [_num(arith, e) for e in err] if err else None, eps))
    region = [[_num(arith, v) for v in p] for p in cfg["region"]]
    sys = ContractionSystem(maps, region, arith, cfg.get("cell_model", "attractor"), cfg.get("name", "system"))
    if cfg.get("pcf"):
        attach_pcf(sys)
    return sys


def config_hash(payload) -> str:
    """Stable short hash of a JSON-serializable payload (used as cache key and CSV column)."""
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
