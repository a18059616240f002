"""Run configuration: one JSON document per run, validated before any work."""

from __future__ import annotations

import json

import jsonschema

# Published schema for run configs.  Unknown keys are rejected at every
# level; per-source required keys are enforced procedurally for clearer
# messages.
RUN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["data", "model", "simplex", "loss", "train"],
    "properties": {
        "data": {
            "type": "object",
            "additionalProperties": False,
            "required": ["source"],
            "properties": {
                "source": {"enum": ["blobs", "idx", "csv"]},
                # blobs
                "num_classes": {"type": "integer", "minimum": 2},
                "dim": {"type": "integer", "minimum": 1},
                "samples_per_class": {
                    "anyOf": [
                        {"type": "integer", "minimum": 1},
                        {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    ]
                },
                "test_samples_per_class": {
                    "anyOf": [
                        {"type": "integer", "minimum": 1},
                        {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    ]
                },
                "spread": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                # idx
                "images": {"type": "string"},
                "labels": {"type": "string"},
                "test_images": {"type": "string"},
                "test_labels": {"type": "string"},
                # csv
                "path": {"type": "string"},
                "test_path": {"type": "string"},
                "label_column": {"anyOf": [{"type": "integer"}, {"type": "string"}]},
                # optional background source for the dsc_background loss
                "background": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["blobs", "csv"]},
                        "num_blobs": {"type": "integer", "minimum": 1},
                        "samples_per_blob": {"type": "integer", "minimum": 1},
                        "spread": {"type": "number", "exclusiveMinimum": 0},
                        "seed": {"type": "integer", "minimum": 0},
                        "path": {"type": "string"},
                    },
                },
            },
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["hidden", "feature_dim"],
            "properties": {
                "hidden": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "feature_dim": {"type": "integer", "minimum": 1},
                "dam": {"type": "boolean"},
                "dam_activations": {"type": "boolean"},
            },
        },
        "simplex": {
            "type": "object",
            "additionalProperties": False,
            "required": ["u"],
            "properties": {"u": {"type": "number", "exclusiveMinimum": 0}},
        },
        "loss": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["dsc", "dsc_background", "hinge", "fixed_softmax"]},
                "m": {"type": "number", "minimum": 0},
                "lambda": {"type": "number", "minimum": 0},
            },
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "required": ["epochs", "batch_size", "optimizer", "lr", "seed"],
            "properties": {
                "epochs": {"type": "integer", "minimum": 1},
                "batch_size": {"type": "integer", "minimum": 1},
                "optimizer": {"enum": ["sgd", "adam"]},
                "lr": {"type": "number", "minimum": 0},
                "momentum": {"type": "number", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "shuffle": {"type": "boolean"},
            },
        },
        "eval": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "open_set": {"type": "boolean"},
                "num_known": {"type": "integer", "minimum": 1},
                "trials": {"type": "integer", "minimum": 1},
                "test_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
    },
}

_SOURCE_REQUIRED = {
    "blobs": ["num_classes", "dim", "samples_per_class", "spread", "seed"],
    "idx": ["images", "labels"],
    "csv": ["path", "label_column"],
}


class ConfigError(ValueError):
    pass


def validate_run_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}") from exc

    data = cfg["data"]
    for key in _SOURCE_REQUIRED[data["source"]]:
        if key not in data:
            raise ConfigError(f"data source {data['source']!r} requires key {key!r}")

    bg = data.get("background")
    if bg is not None:
        required = ["num_blobs", "samples_per_blob", "spread", "seed"] if bg["kind"] == "blobs" else ["path"]
        for key in required:
            if key not in bg:
                raise ConfigError(f"background kind {bg['kind']!r} requires key {key!r}")

    if cfg["loss"]["kind"] == "dsc_background" and bg is None:
        raise ConfigError("loss kind dsc_background requires a data.background source")
    return cfg


def load_run_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return validate_run_config(cfg)
