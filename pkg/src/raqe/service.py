"""HTTP service over the search and chat pipeline.

The service holds one immutable index bundle; reads need no locking. A
re-ingest builds a fresh bundle in a new directory and swaps the active
reference atomically under a writer lock. Errors are always JSON
{code, message} with a matching 4xx/5xx status.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path

import uvicorn
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import chatbot, retrieval
from .config import SystemConfig
from .errors import PersistenceError, RaqeError
from .index_store import Corpus, IndexBundle, build_indexes, load_indexes, save_indexes
from .ingest import ingest_manifest
from .retrieval import RetrievalHit, SearchRequest

GRACEFUL_SHUTDOWN_S = 10

_STATUS_BY_CODE = {
    "empty_query": 400,
    "config_error": 400,
    "not_indexed": 404,
    "persistence_error": 500,
}


class SearchBody(BaseModel):
    query: str
    mode: str | None = None
    top_k: int | None = None
    boosting: bool | None = None


class ChatBody(BaseModel):
    question: str
    mode: str | None = None
    top_k: int | None = None
    boosting: bool | None = None


class IngestBody(BaseModel):
    manifest_path: str


def hit_to_dict(hit: RetrievalHit) -> dict:
    return {
        "doc_name": hit.doc_name,
        "chunk_id": hit.chunk_id,
        "final_score": hit.final_score,
        "fused_score": hit.fused_score,
        "lexical_rank": hit.lexical_rank,
        "vector_rank": hit.vector_rank,
        "text": hit.text,
    }


def _error_response(code: str, message: str, status: int) -> JSONResponse:
    return JSONResponse({"code": code, "message": message}, status_code=status)


def create_app(
    cfg: SystemConfig, bundle: IndexBundle, allow_ingest: bool = True
) -> FastAPI:
    app = FastAPI(title="raqe", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    state = {"bundle": bundle, "cfg": cfg}
    ingest_lock = threading.Lock()

    @app.exception_handler(RaqeError)
    async def _raqe_error(_request: Request, exc: RaqeError):
        status = _STATUS_BY_CODE.get(exc.code, 500)
        return _error_response(exc.code, str(exc), status)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError):
        return _error_response("invalid_request", str(exc), 400)

    @app.exception_handler(ValueError)
    async def _value_error(_request: Request, exc: ValueError):
        return _error_response("invalid_request", str(exc), 400)

    def _request_from(body: SearchBody | ChatBody, query: str) -> SearchRequest:
        search_cfg = state["cfg"].search
        return SearchRequest(
            query=query,
            mode=body.mode if body.mode is not None else search_cfg.mode,
            top_k=body.top_k if body.top_k is not None else search_cfg.top_k,
            boosting=body.boosting if body.boosting is not None else search_cfg.boosting,
        )

    @app.get("/api/health")
    async def health():
        return {
            "status": "ok",
            "chunks": len(state["bundle"].corpus),
            "config_preset": state["cfg"].preset,
        }

    @app.post("/api/search")
    async def api_search(body: SearchBody):
        req = _request_from(body, body.query)
        cfg = state["cfg"]
        hits = retrieval.search(
            req,
            state["bundle"],
            k_rrf=cfg.search.k_rrf,
            branch_depth=cfg.search.branch_depth,
        )
        return {"hits": [hit_to_dict(h) for h in hits]}

    @app.post("/api/chat")
    async def api_chat(body: ChatBody):
        req = _request_from(body, body.question)
        cfg = state["cfg"]
        answer = chatbot.chat(
            body.question,
            state["bundle"],
            cfg.llm,
            mode=req.mode,
            top_k=req.top_k,
            boosting=req.boosting,
            k_rrf=cfg.search.k_rrf,
            branch_depth=cfg.search.branch_depth,
        )
        return {
            "answer": answer.answer_text,
            "citations": [
                {"doc_name": c.doc_name, "chunk_id": c.chunk_id}
                for c in answer.citations
            ],
            "dangling": [
                {"doc_name": c.doc_name, "chunk_id": c.chunk_id}
                for c in answer.citation_report.dangling
            ],
            "hits": [hit_to_dict(h) for h in answer.hits],
            "language": answer.language,
            "timings_ms": answer.timings,
        }

    @app.post("/api/ingest")
    async def api_ingest(body: IngestBody):
        if not allow_ingest:
            return _error_response("ingest_disabled", "ingestion API is disabled", 403)
        cfg = state["cfg"]
        with ingest_lock:
            documents, chunks = ingest_manifest(body.manifest_path, cfg.ingestion)
            lexical, vectors = build_indexes(chunks, cfg.embedding)
            new_bundle = IndexBundle(
                lexical=lexical, vectors=vectors, corpus=Corpus(documents, chunks)
            )
            new_dir = Path(cfg.paths.index_dir).with_name(
                Path(cfg.paths.index_dir).name + f"-{int(time.time() * 1000)}"
            )
            save_indexes(new_dir, lexical, vectors, new_bundle.corpus)
            state["bundle"] = new_bundle
        return {"documents": len(documents), "chunks": len(chunks)}

    @app.get("/api/chunk/{doc_name:path}/{chunk_id}")
    async def api_chunk(doc_name: str, chunk_id: int):
        corpus = state["bundle"].corpus
        ref = corpus.ref_of(doc_name, chunk_id)
        if ref is None:
            return _error_response(
                "not_found", f"chunk {doc_name}/{chunk_id} not found", 404
            )
        chunk = corpus.chunk_at(ref)
        source_kind = next(
            (d.source_kind for d in corpus.documents if d.doc_id == chunk.doc_id),
            "external",
        )
        return {
            "text": chunk.text,
            "boost_weight": chunk.boost_weight,
            "source_kind": source_kind,
        }

    return app


def serve(
    cfg: SystemConfig,
    host: str = "127.0.0.1",
    port: int = 8000,
    allow_ingest: bool = True,
) -> None:
    """Load the configured index and serve until terminated.

    In-flight requests get a 10-second grace period on shutdown.
    """
    index_dir = cfg.paths.index_dir
    try:
        bundle = load_indexes(index_dir)
    except PersistenceError as exc:
        raise PersistenceError(
            f"{exc} (run `raqe ingest --corpus <manifest> --out {index_dir}` first)"
        ) from exc
    app = create_app(cfg, bundle, allow_ingest=allow_ingest)
    uvicorn.run(
        app,
        host=host,
        port=port,
        log_level="warning",
        timeout_graceful_shutdown=GRACEFUL_SHUTDOWN_S,
    )


__all__ = ["create_app", "serve", "hit_to_dict"]
