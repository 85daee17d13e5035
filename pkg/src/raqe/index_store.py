"""Lexical and vector indexes over chunks, plus persistence.

The lexical side is an inverted index with BM25 statistics (k1=1.2, b=0.75,
nonnegative idf). The vector side is an exact-scan matrix of unit-norm
embeddings; vectors come either from a remote embeddings endpoint or from a
deterministic offline hash embedder (FNV-1a 64 token buckets), so the whole
engine runs without network access.

Chunk references are integer positions into the corpus chunk list; the same
refs key the postings, the length table and the vector matrix.

Indexes are immutable once built; rebuilding is the only update path.
"""

from __future__ import annotations

import json
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from .errors import (
    ConfigError,
    DuplicateChunkError,
    EmptyTextError,
    NotIndexedError,
    PersistenceError,
    ProviderError,
)
from .ingest import Chunk, Document, tokenize

BM25_K1 = 1.2
BM25_B = 0.75

EMBED_BATCH_SIZE = 64

KIND_REMOTE = "remote"
KIND_OFFLINE_HASH = "offline_hash"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    kind: str = KIND_OFFLINE_HASH
    endpoint_url: str = ""
    model_name: str = "offline-hash"
    dimension: int = 256
    api_key_env: str = "RAQE_EMBED_API_KEY"
    timeout_s: float = 60.0

    def __post_init__(self):
        if self.kind not in (KIND_REMOTE, KIND_OFFLINE_HASH):
            raise ConfigError(f"embedding.kind: unknown kind {self.kind!r}")
        if self.dimension <= 0:
            raise ConfigError("embedding.dimension: must be positive")
        if self.kind == KIND_REMOTE and not self.endpoint_url:
            raise ConfigError("embedding.endpoint_url: required for remote embedding")


@dataclass
class LexicalIndex:
    """Inverted index: postings per term, per-chunk lengths, corpus stats."""

    postings: dict[str, list[tuple[int, int]]]
    doc_freq: dict[str, int]
    chunk_len: list[int]
    avg_len: float
    n: int


@dataclass
class VectorIndex:
    """Unit-norm embedding matrix, one row per chunk ref."""

    matrix: np.ndarray
    dimension: int
    provider: EmbeddingProviderConfig


@dataclass
class Corpus:
    """Documents plus their chunks; resolves refs to chunks and boost weights."""

    documents: list[Document]
    chunks: list[Chunk]
    _ref_by_key: dict[tuple[str, int], int] = field(init=False, repr=False)

    def __post_init__(self):
        self._ref_by_key = {
            (c.doc_name, c.chunk_id): ref for ref, c in enumerate(self.chunks)
        }

    def __len__(self) -> int:
        return len(self.chunks)

    def chunk_at(self, ref: int) -> Chunk:
        if not 0 <= ref < len(self.chunks):
            raise NotIndexedError(f"chunk ref {ref} not in corpus of {len(self.chunks)}")
        return self.chunks[ref]

    def boost_of(self, ref: int) -> float:
        return self.chunk_at(ref).boost_weight

    def tie_key(self, ref: int) -> tuple[str, int]:
        chunk = self.chunk_at(ref)
        return (chunk.doc_name, chunk.chunk_id)

    def ref_of(self, doc_name: str, chunk_id: int) -> int | None:
        return self._ref_by_key.get((doc_name, chunk_id))


@dataclass
class IndexBundle:
    lexical: LexicalIndex
    vectors: VectorIndex
    corpus: Corpus


def fnv1a_64(text: str) -> int:
    """Stable 64-bit FNV-1a hash over the UTF-8 bytes of *text*."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _FNV_MASK
    return h


def _hash_embed(text: str, dimension: int) -> np.ndarray:
    counts = np.zeros(dimension, dtype=np.float64)
    for token in text.lower().split():
        counts[fnv1a_64(token) % dimension] += 1.0
    return counts


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise EmptyTextError("cannot normalize a zero embedding vector")
    return vec / norm


def _remote_embed(texts: list[str], cfg: EmbeddingProviderConfig) -> list[np.ndarray]:
    api_key = os.environ.get(cfg.api_key_env)
    if not api_key:
        raise ProviderError(f"environment variable {cfg.api_key_env} is not set")
    url = cfg.endpoint_url.rstrip("/") + "/v1/embeddings"
    try:
        resp = requests.post(
            url,
            json={"model": cfg.model_name, "input": texts},
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=cfg.timeout_s,
        )
    except requests.RequestException as exc:
        raise ProviderError(f"embeddings request failed: {exc}") from exc
    if not 200 <= resp.status_code < 300:
        raise ProviderError(
            f"embeddings endpoint returned {resp.status_code}", status=resp.status_code
        )
    try:
        data = resp.json()["data"]
        items = sorted(data, key=lambda item: item.get("index", 0))
        vectors = [np.asarray(item["embedding"], dtype=np.float64) for item in items]
    except (KeyError, TypeError, ValueError) as exc:
        raise ProviderError(f"malformed embeddings response: {exc}") from exc
    if len(vectors) != len(texts):
        raise ProviderError(
            f"embeddings response has {len(vectors)} vectors for {len(texts)} inputs"
        )
    for vec in vectors:
        if vec.shape != (cfg.dimension,):
            raise ProviderError(
                f"embedding dimension {vec.shape} does not match configured {cfg.dimension}"
            )
    return vectors


def embed_texts(texts: list[str], cfg: EmbeddingProviderConfig) -> list[np.ndarray]:
    """Embed *texts* in order, returning one unit-norm vector per text.

    Remote providers get a single HTTP request per call; the offline hash
    embedder buckets lowercased whitespace tokens by FNV-1a mod dimension.
    Whitespace-only texts count as empty.
    """
    for text in texts:
        if not text.strip():
            raise EmptyTextError("cannot embed an empty text")
    if cfg.kind == KIND_OFFLINE_HASH:
        return [_normalize(_hash_embed(t, cfg.dimension)) for t in texts]
    return [_normalize(v) for v in _remote_embed(texts, cfg)]


def bm25_idf(n: int, df: int) -> float:
    return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


def bm25_score(query_terms: list[str], chunk_ref: int, idx: LexicalIndex) -> float:
    """BM25 score of one chunk for the distinct lowercased query terms.

    Terms absent from the chunk or the corpus contribute nothing; duplicate
    query terms count once.
    """
    if not 0 <= chunk_ref < idx.n:
        raise NotIndexedError(f"chunk ref {chunk_ref} not in index of {idx.n}")
    length = idx.chunk_len[chunk_ref]
    score = 0.0
    for term in sorted({t.lower() for t in query_terms}):
        posting = idx.postings.get(term)
        if posting is None:
            continue
        tf = 0
        for ref, freq in posting:
            if ref == chunk_ref:
                tf = freq
                break
        if tf == 0:
            continue
        idf = bm25_idf(idx.n, idx.doc_freq[term])
        denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * length / idx.avg_len)
        score += idf * tf * (BM25_K1 + 1.0) / denom
    return score


def build_indexes(
    chunks: list[Chunk], cfg: EmbeddingProviderConfig
) -> tuple[LexicalIndex, VectorIndex]:
    """Build both indexes over *chunks*; refs are positions in the list."""
    if not chunks:
        raise ValueError("cannot build indexes over an empty chunk list")
    seen: set[tuple[str, int]] = set()
    for chunk in chunks:
        key = (chunk.doc_id, chunk.chunk_id)
        if key in seen:
            raise DuplicateChunkError(f"duplicate chunk {key[0]}/{key[1]}")
        seen.add(key)

    postings: dict[str, list[tuple[int, int]]] = {}
    doc_freq: dict[str, int] = {}
    chunk_len: list[int] = []
    for ref, chunk in enumerate(chunks):
        tokens = [t.lower() for t in tokenize(chunk.text)]
        chunk_len.append(len(tokens))
        for term, tf in sorted(Counter(tokens).items()):
            postings.setdefault(term, []).append((ref, tf))
            doc_freq[term] = doc_freq.get(term, 0) + 1
    n = len(chunks)
    lexical = LexicalIndex(
        postings=postings,
        doc_freq=doc_freq,
        chunk_len=chunk_len,
        avg_len=sum(chunk_len) / n,
        n=n,
    )

    rows: list[np.ndarray] = []
    texts = [c.text for c in chunks]
    for start in range(0, len(texts), EMBED_BATCH_SIZE):
        rows.extend(embed_texts(texts[start : start + EMBED_BATCH_SIZE], cfg))
    vectors = VectorIndex(
        matrix=np.vstack(rows), dimension=cfg.dimension, provider=cfg
    )
    return lexical, vectors


# ---------------------------------------------------------------------------
# Persistence: lexical.json / vectors.json / corpus.json, all UTF-8 JSON with
# sorted keys so identical indexes serialize identically.

_LEXICAL_FILE = "lexical.json"
_VECTORS_FILE = "vectors.json"
_CORPUS_FILE = "corpus.json"


def _dump(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=False), encoding="utf-8"
    )


def _load(path: Path) -> dict:
    if not path.is_file():
        raise PersistenceError(f"missing index file: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise PersistenceError(f"corrupt index file {path}: {exc}") from exc


def save_indexes(
    dir_path: str | Path,
    lexical: LexicalIndex,
    vectors: VectorIndex,
    corpus: Corpus,
) -> None:
    out = Path(dir_path)
    out.mkdir(parents=True, exist_ok=True)
    _dump(
        out / _LEXICAL_FILE,
        {
            "postings": {t: [[r, f] for r, f in p] for t, p in lexical.postings.items()},
            "doc_freq": lexical.doc_freq,
            "chunk_len": lexical.chunk_len,
            "avg_len": lexical.avg_len,
            "n": lexical.n,
        },
    )
    provider = vectors.provider
    _dump(
        out / _VECTORS_FILE,
        {
            "dimension": vectors.dimension,
            "provider": {
                "kind": provider.kind,
                "endpoint_url": provider.endpoint_url,
                "model_name": provider.model_name,
                "dimension": provider.dimension,
                "api_key_env": provider.api_key_env,
            },
            "vectors": [row.tolist() for row in vectors.matrix],
        },
    )
    _dump(
        out / _CORPUS_FILE,
        {
            "documents": [
                {
                    "doc_id": d.doc_id,
                    "name": d.name,
                    "source_kind": d.source_kind,
                    "text": d.text,
                    "format": d.format,
                    "metadata": d.metadata,
                }
                for d in corpus.documents
            ],
            "chunks": [
                {
                    "doc_id": c.doc_id,
                    "doc_name": c.doc_name,
                    "chunk_id": c.chunk_id,
                    "text": c.text,
                    "token_span": list(c.token_span),
                    "boost_weight": c.boost_weight,
                }
                for c in corpus.chunks
            ],
        },
    )


def load_indexes(dir_path: str | Path) -> IndexBundle:
    """Load the three index files; scores reproduce bit-for-bit after a round-trip."""
    base = Path(dir_path)
    lex_raw = _load(base / _LEXICAL_FILE)
    vec_raw = _load(base / _VECTORS_FILE)
    corp_raw = _load(base / _CORPUS_FILE)

    try:
        lexical = LexicalIndex(
            postings={
                t: [(int(r), int(f)) for r, f in p]
                for t, p in lex_raw["postings"].items()
            },
            doc_freq={t: int(v) for t, v in lex_raw["doc_freq"].items()},
            chunk_len=[int(v) for v in lex_raw["chunk_len"]],
            avg_len=float(lex_raw["avg_len"]),
            n=int(lex_raw["n"]),
        )
        provider = EmbeddingProviderConfig(
            kind=vec_raw["provider"]["kind"],
            endpoint_url=vec_raw["provider"]["endpoint_url"],
            model_name=vec_raw["provider"]["model_name"],
            dimension=int(vec_raw["provider"]["dimension"]),
            api_key_env=vec_raw["provider"]["api_key_env"],
        )
        vectors = VectorIndex(
            matrix=np.asarray(vec_raw["vectors"], dtype=np.float64),
            dimension=int(vec_raw["dimension"]),
            provider=provider,
        )
        documents = [
            Document(
                doc_id=d["doc_id"],
                name=d["name"],
                source_kind=d["source_kind"],
                text=d["text"],
                format=d["format"],
                metadata=d.get("metadata", {}),
            )
            for d in corp_raw["documents"]
        ]
        chunks = [
            Chunk(
                doc_id=c["doc_id"],
                doc_name=c["doc_name"],
                chunk_id=int(c["chunk_id"]),
                text=c["text"],
                token_span=(int(c["token_span"][0]), int(c["token_span"][1])),
                boost_weight=float(c["boost_weight"]),
            )
            for c in corp_raw["chunks"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise PersistenceError(f"corrupt index data under {base}: {exc}") from exc

    return IndexBundle(
        lexical=lexical, vectors=vectors, corpus=Corpus(documents, chunks)
    )
