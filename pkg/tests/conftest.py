from __future__ import annotations

import json
from pathlib import Path

import pytest

from shexbench.model import Iri
from shexbench.shexc import parse_shexc

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def manifest_doc() -> dict:
    return json.loads((FIXTURES / "manifest.json").read_text())


@pytest.fixture(scope="session")
def fixture_paths(manifest_doc) -> list[Path]:
    return [FIXTURES / entry["ground_truth_path"] for entry in manifest_doc["entries"]]


@pytest.fixture(scope="session")
def fixture_schemas(manifest_doc):
    """(class_uri, schema) for every bundled ground-truth file."""
    pairs = []
    for entry in manifest_doc["entries"]:
        text = (FIXTURES / entry["ground_truth_path"]).read_text()
        pairs.append((Iri(entry["class_uri"]), parse_shexc(text)))
    return pairs


@pytest.fixture(scope="session")
def museum_text() -> str:
    return (FIXTURES / "wes" / "museum.shex").read_text()


@pytest.fixture(scope="session")
def museum_schema(museum_text):
    return parse_shexc(museum_text)
