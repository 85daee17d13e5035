"""Shared fixtures: a small mixed corpus and an offline index bundle."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from raqe.config import SystemConfig, load_config
from raqe.index_store import Corpus, IndexBundle, build_indexes
from raqe.ingest import ingest_manifest

FIXTURE_DOCS = {
    "guide.md": (
        "internal",
        "markdown",
        "# Onboarding guide\n"
        "New analysts request system access by filing an access ticket with the "
        "service desk before their first week ends.\n"
        "Mandatory training modules must be completed within the first month of "
        "employment.\n",
    ),
    "policy.md": (
        "internal",
        "markdown",
        "# Travel expense policy\n"
        "Employees submit travel expenses through the reimbursement portal with "
        "receipts attached.\n"
        "- Flights above the economy fare class require prior approval.\n"
        "- Hotel bookings are capped at the regional nightly rate.\n",
    ),
    "fruits.txt": (
        "external",
        "plain",
        "Apples and oranges ripen in the orchard during late autumn when the "
        "nights turn cool and the harvest crews arrive.\n",
    ),
    "harbor.txt": (
        "external",
        "plain",
        "Cargo ships unload containers at the harbor terminal where cranes move "
        "steel boxes onto waiting freight trains.\n",
    ),
    "climate.txt": (
        "external",
        "plain",
        "Rainfall patterns shift across the coastal plains, bringing wet winters "
        "and long dry summers to the farming valleys.\n",
    ),
}


def write_fixture_corpus(root: Path) -> Path:
    """Write the five fixture documents plus a manifest; returns the manifest path."""
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, (source_kind, fmt, text) in FIXTURE_DOCS.items():
        (root / name).write_text(text, encoding="utf-8")
        entries.append(
            {"name": name, "source_kind": source_kind, "path": name, "format": fmt}
        )
    manifest = root / "manifest.json"
    manifest.write_text(json.dumps(entries, indent=2), encoding="utf-8")
    return manifest


@pytest.fixture(scope="session")
def fixture_manifest(tmp_path_factory) -> Path:
    return write_fixture_corpus(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def baseline_config() -> SystemConfig:
    return load_config()


@pytest.fixture(scope="session")
def fixture_bundle(fixture_manifest, baseline_config) -> IndexBundle:
    documents, chunks = ingest_manifest(fixture_manifest, baseline_config.ingestion)
    lexical, vectors = build_indexes(chunks, baseline_config.embedding)
    return IndexBundle(lexical=lexical, vectors=vectors, corpus=Corpus(documents, chunks))
