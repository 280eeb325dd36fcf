"""Versioned JSON containers for trained models.

Arrays travel as base64 little-endian float64 payloads, so files are
self-describing and byte-identical across re-runs with the same seed.
"""

from __future__ import annotations

import json

import numpy as np

from . import fileio
from .actions import ActionScorerModel
from .bnn import NormalizationStats, PosteriorSamples
from .mlp import MlpArchitecture

BNN_FORMAT = "bnn-posterior-v1"
ACTION_FORMAT = "action-scorer-v1"


def _arch_to_dict(arch: MlpArchitecture) -> dict:
    return {
        "input_dim": arch.input_dim,
        "hidden_sizes": list(arch.hidden_sizes),
        "output_dim": arch.output_dim,
    }


def _arch_from_dict(d: dict) -> MlpArchitecture:
    return MlpArchitecture(int(d["input_dim"]), tuple(d["hidden_sizes"]), int(d["output_dim"]))


def _norm_to_dict(norm: NormalizationStats) -> dict:
    return {
        "input_mean": fileio.encode_array(norm.input_mean),
        "input_std": fileio.encode_array(norm.input_std),
        "output_mean": fileio.encode_array(norm.output_mean),
        "output_std": fileio.encode_array(norm.output_std),
    }


def _norm_from_dict(d: dict) -> NormalizationStats:
    return NormalizationStats(
        input_mean=fileio.decode_array(d["input_mean"]),
        input_std=fileio.decode_array(d["input_std"]),
        output_mean=fileio.decode_array(d["output_mean"]),
        output_std=fileio.decode_array(d["output_std"]),
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def save_bnn_model(path, ps: PosteriorSamples, train_config: dict, seed: int) -> None:
    payload = {
        "format": BNN_FORMAT,
        "seed": int(seed),
        "config": train_config,
        "architecture": _arch_to_dict(ps.architecture),
        "normalization": _norm_to_dict(ps.normalization),
        "samples": fileio.encode_array(ps.samples),
        "obs_sigma_samples": fileio.encode_array(ps.obs_sigma_samples),
        "diagnostics": _jsonable(ps.diagnostics),
    }
    fileio.atomic_write_text(path, fileio.canonical_json(payload) + "\n")


def load_bnn_model(path) -> tuple[PosteriorSamples, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != BNN_FORMAT:
        raise ValueError(f"{path}: unrecognized model format {payload.get('format')!r}")
    ps = PosteriorSamples(
        architecture=_arch_from_dict(payload["architecture"]),
        normalization=_norm_from_dict(payload["normalization"]),
        samples=fileio.decode_array(payload["samples"]),
        obs_sigma_samples=fileio.decode_array(payload["obs_sigma_samples"]),
        diagnostics=payload.get("diagnostics", {}),
    )
    meta = {"seed": payload.get("seed"), "config": payload.get("config")}
    return ps, meta


def save_action_model(
    path, model: ActionScorerModel, train_config: dict, seed: int,
    label_stats: dict | None = None,
) -> None:
    payload = {
        "format": ACTION_FORMAT,
        "seed": int(seed),
        "config": train_config,
        "architecture": _arch_to_dict(model.architecture),
        "normalization": _norm_to_dict(model.normalization),
        "weights": fileio.encode_array(model.weights),
        "label_stats": _jsonable(label_stats or {}),
    }
    fileio.atomic_write_text(path, fileio.canonical_json(payload) + "\n")


def load_action_model(path) -> tuple[ActionScorerModel, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != ACTION_FORMAT:
        raise ValueError(f"{path}: unrecognized model format {payload.get('format')!r}")
    model = ActionScorerModel(
        architecture=_arch_from_dict(payload["architecture"]),
        weights=fileio.decode_array(payload["weights"]),
        normalization=_norm_from_dict(payload["normalization"]),
    )
    meta = {
        "seed": payload.get("seed"),
        "config": payload.get("config"),
        "label_stats": payload.get("label_stats", {}),
    }
    return model, meta
