"""
Checkpoint container: a header (format version, dims, seed, class ids, dtype) and the
state dicts of all four networks in a fixed order, stored with ``torch.save``.
"""

import os
from dataclasses import asdict

import torch

from region_synth.data import ModelDims, resolve_dtype
from region_synth.errors import DataError, MalformedFileError
from region_synth.model.params import ModelParams, init_params

CHECKPOINT_VERSION = 1
_STATE_ORDER = ("generator", "discriminator", "seen_classifier", "unseen_classifier")


def save_checkpoint(path: str, params: ModelParams, dims: ModelDims, seed: int) -> None:
    seen_ids = [c for c in params.seen_classifier.class_ids if c >= 0]
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "dims": asdict(dims),
        "seed": seed,
        "seen_ids": seen_ids,
        "unseen_ids": list(params.unseen_classifier.class_ids),
        "dtype": str(params.generator.fc1.weight.dtype).removeprefix("torch."),
        "state": {name: getattr(params, name).state_dict() for name in _STATE_ORDER},
    }
    torch.save(payload, path)


def load_checkpoint(path: str) -> tuple[ModelParams, dict]:
    """Returns the restored parameters and the header."""
    if not os.path.exists(path):
        raise DataError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, weights_only=True)
    except Exception as e:
        raise MalformedFileError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise MalformedFileError(f"{path} has no checkpoint header")
    if payload["format_version"] != CHECKPOINT_VERSION:
        raise MalformedFileError(
            f"unknown checkpoint version {payload['format_version']} in {path}"
        )
    dims = ModelDims(**payload["dims"])
    params = init_params(
        dims,
        payload["seen_ids"],
        payload["unseen_ids"],
        seed=payload["seed"],
        dtype=resolve_dtype(payload["dtype"]),
    )
    try:
        for name in _STATE_ORDER:
            getattr(params, name).load_state_dict(payload["state"][name])
    except (KeyError, RuntimeError) as e:
        raise MalformedFileError(f"checkpoint {path} does not match its header: {e}") from e
    header = {k: v for k, v in payload.items() if k != "state"}
    return params, header
