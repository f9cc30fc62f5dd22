"""Text configuration for systems of full-duplex pairs.

A configuration is a YAML (or JSON) mapping::

    total_bw: 300000          # Hz
    n0: 1.0e-6                # W/Hz
    tc: 1.0e-3                # s
    eps: 1.0e-3               # dB
    defaults: {mu: 0.1, p_max: 5, q_min: 20}
    pairs:
      - {z: 1, theta: 0.1, weights: [0.05, 0.05], video: [Bus, Coastguard]}
      - z: 2
        theta_1: 0.07
        theta_2: 0.07
        w1: 0.3
        w2: 0.3
        quality_1: {a: 5.6218, b: 10.0016}
        video_2: Akiyo

Per-pair values may be given per user (``theta_1``/``theta_2``), as a
two-element list (``theta: [.., ..]``) or as one scalar shared by both users.
The same goes for ``weights``/``w1``/``w2``, ``mu``, ``p_max``, ``q_min`` and
``video``. Explicit ``quality_i`` mappings override video presets.
:func:`normalize` rewrites all of this into one canonical per-user form, which
is also what scenario sweeps address with dotted paths such as
``pairs.0.theta_1``.
"""
from __future__ import annotations

import copy
import json
from pathlib import Path

import yaml

from .ec_model import ChannelModel
from .errors import DomainError
from .fd_problem import PairSpec, SystemSpec
from .quality import QualityModel, preset

SYSTEM_DEFAULTS = {"n0": 1e-6, "tc": 1e-3, "eps": 1e-3}
PAIR_DEFAULTS = {"mu": 0.1, "p_max": 5.0, "q_min": 20.0, "quadrature_order": 10, "deterministic": False}
_PER_USER = {"theta": ("theta_1", "theta_2"), "weights": ("w1", "w2"), "mu": ("mu_1", "mu_2"),
             "p_max": ("p1_max", "p2_max"), "q_min": ("q_min_1", "q_min_2"),
             "video": ("video_1", "video_2")}


def load(path) -> dict:
    """Read a YAML or JSON configuration file into a plain mapping."""
    path = Path(path)
    text = path.read_text()
    data = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise DomainError(f"{path}: top level must be a mapping")
    return data


def _num(value, key):
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise DomainError(f"{key}: expected a number, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DomainError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _split(pair: dict, key: str, defaults: dict, where: str) -> dict:
    u1, u2 = _PER_USER[key]
    out = {}
    if key in pair:
        val = pair[key]
        pair_vals = list(val) if isinstance(val, (list, tuple)) else [val, val]
        if len(pair_vals) != 2:
            raise DomainError(f"{where}.{key}: expected one value or two, got {val!r}")
        out[u1], out[u2] = pair_vals
    for u in (u1, u2):
        if u in pair:
            out[u] = pair[u]
        elif u not in out and key in defaults:
            out[u] = defaults[key]
    return out


def normalize(cfg: dict) -> dict:
    """Canonical copy of ``cfg`` with every per-user value spelled out."""
    cfg = copy.deepcopy(cfg)
    if "pairs" not in cfg or not cfg["pairs"]:
        raise DomainError("configuration needs a non-empty 'pairs' list")
    if "total_bw" not in cfg:
        raise DomainError("configuration needs 'total_bw' (Hz)")
    defaults = {**PAIR_DEFAULTS, **cfg.get("defaults", {})}
    out = {"total_bw": _num(cfg["total_bw"], "total_bw")}
    for key, val in SYSTEM_DEFAULTS.items():
        out[key] = _num(cfg.get(key, val), key)
    pairs = []
    for k, raw in enumerate(cfg["pairs"]):
        where = f"pairs.{k}"
        if not isinstance(raw, dict):
            raise DomainError(f"{where}: expected a mapping")
        pair = {"z": _num(raw.get("z", raw.get("mean_gain", 1.0)), f"{where}.z")}
        for key in _PER_USER:
            pair.update(_split(raw, key, defaults, where))
        for i in (1, 2):
            q = raw.get(f"quality_{i}")
            if q is not None:
                pair[f"quality_{i}"] = {"a": q["a"], "b": q["b"]}
                if "q_min" in q:
                    pair[f"q_min_{i}"] = q["q_min"]
            elif f"video_{i}" not in pair:
                raise DomainError(f"{where}: user {i} needs a video preset or explicit quality coefficients")
        pair["quadrature_order"] = int(raw.get("quadrature_order", defaults["quadrature_order"]))
        pair["deterministic"] = bool(raw.get("deterministic", defaults["deterministic"]))
        pairs.append(pair)
    out["pairs"] = pairs
    if "solver" in cfg:
        out["solver"] = copy.deepcopy(cfg["solver"])
    return out


def _quality(pair: dict, i: int, where: str) -> QualityModel:
    q_min = _num(pair.get(f"q_min_{i}", PAIR_DEFAULTS["q_min"]), f"{where}.q_min_{i}")
    explicit = pair.get(f"quality_{i}")
    if explicit is not None:
        return QualityModel(_num(explicit["a"], f"{where}.quality_{i}.a"),
                            _num(explicit["b"], f"{where}.quality_{i}.b"), q_min)
    return preset(str(pair[f"video_{i}"]), q_min)


def to_spec(cfg: dict) -> SystemSpec:
    """Build a :class:`SystemSpec` from a raw or normalized configuration."""
    cfg = normalize(cfg)
    pairs = []
    for k, p in enumerate(cfg["pairs"]):
        where = f"pairs.{k}"
        for key in ("theta_1", "theta_2", "w1", "w2"):
            if key not in p:
                raise DomainError(f"{where}: missing {key}")
        pairs.append(PairSpec(
            theta_1=_num(p["theta_1"], f"{where}.theta_1"), theta_2=_num(p["theta_2"], f"{where}.theta_2"),
            quality_1=_quality(p, 1, where), quality_2=_quality(p, 2, where),
            channel=ChannelModel(p["z"], p["quadrature_order"], p["deterministic"]),
            w1=_num(p["w1"], f"{where}.w1"), w2=_num(p["w2"], f"{where}.w2"),
            mu_1=_num(p["mu_1"], f"{where}.mu_1"), mu_2=_num(p["mu_2"], f"{where}.mu_2"),
            p1_max=_num(p["p1_max"], f"{where}.p1_max"), p2_max=_num(p["p2_max"], f"{where}.p2_max"),
        ))
    return SystemSpec(pairs, cfg["total_bw"], cfg["n0"], cfg["tc"], cfg["eps"])


def set_path(cfg: dict, path: str, value) -> None:
    """Assign ``value`` at a dotted ``path`` (list indices as integers)."""
    keys = path.split(".")
    node = cfg
    for key in keys[:-1]:
        node = node[int(key)] if isinstance(node, list) else node[key]
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        if last not in node:
            raise DomainError(f"unknown configuration path {path!r}")
        node[last] = value


def get_path(cfg: dict, path: str):
    node = cfg
    for key in path.split("."):
        node = node[int(key)] if isinstance(node, list) else node[key]
    return node

