"""Versioned JSON schemas for CLI outputs."""
from __future__ import annotations

import json
from importlib import resources

from jsonschema import Draft202012Validator
from referencing import Registry, Resource

_FILES = {
    "qcomparator.report/v1": "report.v1.json",
    "qcomparator.run/v1": "run.v1.json",
    "qcomparator.reproduce/v1": "reproduce.v1.json",
}


def load(name: str) -> dict:
    return json.loads(resources.files(__name__).joinpath(name).read_text(encoding="utf-8"))


def validator(schema_id: str) -> Draft202012Validator:
    """Validator for e.g. ``"qcomparator.run/v1"`` with cross-schema refs resolved."""
    schemas = {name: load(fname) for name, fname in _FILES.items()}
    registry = Registry().with_resources(
        (s["$id"], Resource.from_contents(s)) for s in schemas.values()
    )
    return Draft202012Validator(schemas[schema_id], registry=registry)


def validate(doc: dict) -> None:
    validator(doc["schema"]).validate(doc)
