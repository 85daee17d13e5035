"""HTTP API surface: health, search, chat, chunk inspection, ingest."""

from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from raqe.index_store import Corpus, IndexBundle, build_indexes
from raqe.ingest import IngestionConfig, chunk_document, parse_document
from raqe.retrieval import SearchRequest, search
from raqe.service import create_app


@pytest.fixture(scope="module")
def client(fixture_bundle, baseline_config):
    app = create_app(baseline_config, fixture_bundle, allow_ingest=True)
    with TestClient(app) as test_client:
        yield test_client


class TestHealth:
    def test_ok(self, client, fixture_bundle):
        resp = client.get("/api/health")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"
        assert body["chunks"] == len(fixture_bundle.corpus)
        assert body["config_preset"] == "baseline"


class TestSearchEndpoint:
    def test_matches_direct_search(self, client, fixture_bundle, baseline_config):
        query = "travel expense receipts"
        resp = client.post("/api/search", json={"query": query, "top_k": 5})
        assert resp.status_code == 200
        api_hits = resp.json()["hits"]
        direct = search(
            SearchRequest(query=query, mode="hybrid", top_k=5, boosting=False),
            fixture_bundle,
            k_rrf=baseline_config.search.k_rrf,
        )
        assert [(h["doc_name"], h["chunk_id"]) for h in api_hits] == [
            (h.doc_name, h.chunk_id) for h in direct
        ]
        assert [h["final_score"] for h in api_hits] == [h.final_score for h in direct]

    def test_empty_query_is_400(self, client):
        resp = client.post("/api/search", json={"query": "   "})
        assert resp.status_code == 400
        assert resp.json()["code"] == "empty_query"

    def test_missing_body_field_is_400(self, client):
        resp = client.post("/api/search", json={})
        assert resp.status_code == 400
        assert resp.json()["code"] == "invalid_request"

    def test_mode_override(self, client):
        resp = client.post("/api/search", json={"query": "harbor", "mode": "text"})
        assert resp.status_code == 200
        for hit in resp.json()["hits"]:
            assert hit["vector_rank"] is None


class TestChatEndpoint:
    def test_answer_with_citations(self, client):
        resp = client.post(
            "/api/chat",
            json={"question": "How do new analysts request system access?"},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["citations"] == [{"doc_name": "guide.md", "chunk_id": 1}]
        assert body["dangling"] == []
        assert body["language"] == "en"
        assert set(body["timings_ms"]) == {
            "prepare_ms",
            "retrieve_ms",
            "rerank_ms",
            "generate_ms",
        }
        assert body["hits"][0]["doc_name"] == "guide.md"

    def test_empty_question_is_400(self, client):
        resp = client.post("/api/chat", json={"question": ""})
        assert resp.status_code == 400
        assert resp.json()["code"] == "empty_query"

    def test_boosting_flag_accepted(self, client):
        resp = client.post(
            "/api/chat",
            json={"question": "travel expenses", "boosting": True, "top_k": 3},
        )
        assert resp.status_code == 200


class TestChunkEndpoint:
    def test_found(self, client, fixture_bundle):
        resp = client.get("/api/chunk/guide.md/1")
        assert resp.status_code == 200
        body = resp.json()
        ref = fixture_bundle.corpus.ref_of("guide.md", 1)
        assert body["text"] == fixture_bundle.corpus.chunk_at(ref).text
        assert body["boost_weight"] == 2.0
        assert body["source_kind"] == "internal"

    def test_external_chunk(self, client):
        resp = client.get("/api/chunk/harbor.txt/1")
        assert resp.json()["boost_weight"] == 1.0
        assert resp.json()["source_kind"] == "external"

    def test_not_found(self, client):
        resp = client.get("/api/chunk/ghost.md/9")
        assert resp.status_code == 404
        assert resp.json()["code"] == "not_found"

    def test_doc_name_with_slash(self, baseline_config):
        cfg = IngestionConfig()
        doc = parse_document(
            b"nested path document body text", "dir/sub.md", "internal", cfg
        )
        chunks = chunk_document(doc, cfg)
        lexical, vectors = build_indexes(chunks, baseline_config.embedding)
        bundle = IndexBundle(
            lexical=lexical, vectors=vectors, corpus=Corpus([doc], chunks)
        )
        app = create_app(baseline_config, bundle)
        with TestClient(app) as client:
            resp = client.get("/api/chunk/dir/sub.md/1")
            assert resp.status_code == 200
            assert resp.json()["source_kind"] == "internal"


class TestIngestEndpoint:
    def test_disabled_flag(self, fixture_bundle, baseline_config):
        app = create_app(baseline_config, fixture_bundle, allow_ingest=False)
        with TestClient(app) as client:
            resp = client.post("/api/ingest", json={"manifest_path": "x.json"})
            assert resp.status_code == 403
            assert resp.json()["code"] == "ingest_disabled"

    def test_reingest_swaps_bundle(self, tmp_path, baseline_config, fixture_bundle):
        doc_path = tmp_path / "solo.txt"
        doc_path.write_text("a single tiny document about gardening tools")
        manifest = tmp_path / "manifest.json"
        manifest.write_text(
            json.dumps(
                [{"name": "solo.txt", "source_kind": "external", "path": "solo.txt"}]
            )
        )
        from dataclasses import replace

        cfg = replace(
            baseline_config,
            paths=replace(baseline_config.paths, index_dir=str(tmp_path / "idx")),
        )
        app = create_app(cfg, fixture_bundle, allow_ingest=True)
        with TestClient(app) as client:
            before = client.get("/api/health").json()["chunks"]
            assert before == len(fixture_bundle.corpus)
            resp = client.post("/api/ingest", json={"manifest_path": str(manifest)})
            assert resp.status_code == 200
            assert resp.json() == {"documents": 1, "chunks": 1}
            assert client.get("/api/health").json()["chunks"] == 1
