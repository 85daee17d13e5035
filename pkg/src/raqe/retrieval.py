"""Text, vector and hybrid search with reciprocal rank fusion and boosting.

Both branches rank to a depth of max(50, 5 * top_k) candidates, hybrid mode
fuses them with RRF (score = sum of 1/(k + rank), k = 60 by default), and
single-branch modes are mapped through the same 1/(k + rank) transform so
boosting composes on one score scale. Boosting multiplies the fused score by
the chunk's boost weight. All orderings break ties by (doc_name, chunk_id)
ascending so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Hashable, Sequence

from .errors import EmptyQueryError, MalformedRankingError
from .index_store import Corpus, IndexBundle, LexicalIndex, VectorIndex, bm25_score, embed_texts
from .ingest import tokenize

MODE_TEXT = "text"
MODE_VECTOR = "vector"
MODE_HYBRID = "hybrid"
SEARCH_MODES = (MODE_TEXT, MODE_VECTOR, MODE_HYBRID)

DEFAULT_K_RRF = 60.0


def default_branch_depth(top_k: int) -> int:
    """Candidate depth per branch: fusion needs slack beyond top_k."""
    return max(50, 5 * top_k)


@dataclass(frozen=True)
class SearchRequest:
    query: str
    mode: str = MODE_HYBRID
    top_k: int = 10
    boosting: bool = False

    def __post_init__(self):
        if not self.query.strip():
            raise EmptyQueryError("query must be non-empty")
        if self.mode not in SEARCH_MODES:
            raise ValueError(f"unknown search mode: {self.mode!r}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")


@dataclass(frozen=True)
class RetrievalHit:
    chunk_ref: int
    doc_name: str
    chunk_id: int
    fused_score: float
    final_score: float
    text: str
    lexical_rank: int | None = None
    vector_rank: int | None = None


def text_search(
    query: str, depth: int, idx: LexicalIndex, corpus: Corpus
) -> list[tuple[int, float]]:
    """BM25 ranking: chunks with a positive score, best first, ties by (doc_name, chunk_id)."""
    terms = [t.lower() for t in tokenize(query)]
    candidates: set[int] = set()
    for term in set(terms):
        for ref, _tf in idx.postings.get(term, ()):
            candidates.add(ref)
    scored = [(ref, bm25_score(terms, ref, idx)) for ref in candidates]
    scored = [(ref, s) for ref, s in scored if s > 0.0]
    scored.sort(key=lambda pair: (-pair[1], corpus.tie_key(pair[0])))
    return scored[:depth]


def vector_search(
    query: str,
    depth: int,
    vectors: VectorIndex,
    corpus: Corpus,
) -> list[tuple[int, float]]:
    """Cosine ranking of every chunk against the embedded query."""
    query_vec = embed_texts([query], vectors.provider)[0]
    sims = vectors.matrix @ query_vec
    scored = [(ref, float(sims[ref])) for ref in range(len(sims))]
    scored.sort(key=lambda pair: (-pair[1], corpus.tie_key(pair[0])))
    return scored[:depth]


def rrf_fuse(
    list_a: Sequence[Hashable],
    list_b: Sequence[Hashable],
    k_rrf: float = DEFAULT_K_RRF,
    tie_key: Callable[[Hashable], object] | None = None,
) -> list[tuple[Hashable, float]]:
    """Reciprocal rank fusion of two rankings.

    Each item scores the sum of 1/(k_rrf + rank) over the lists containing it,
    ranks 1-based. Items missing from both lists are absent from the output.
    """
    if tie_key is None:
        tie_key = lambda ref: ref  # noqa: E731 - identity default
    scores: dict[Hashable, float] = {}
    for name, ranking in (("a", list_a), ("b", list_b)):
        seen: set[Hashable] = set()
        for rank, ref in enumerate(ranking, start=1):
            if ref in seen:
                raise MalformedRankingError(f"duplicate ref {ref!r} in ranking {name}")
            seen.add(ref)
            scores[ref] = scores.get(ref, 0.0) + 1.0 / (k_rrf + rank)
    fused = list(scores.items())
    fused.sort(key=lambda pair: (-pair[1], tie_key(pair[0])))
    return fused


def apply_boost(
    hits: list[RetrievalHit], corpus: Corpus, enabled: bool
) -> list[RetrievalHit]:
    """Multiply fused scores by boost weights (when enabled) and re-sort."""
    out = []
    for hit in hits:
        weight = corpus.boost_of(hit.chunk_ref) if enabled else 1.0
        out.append(replace(hit, final_score=hit.fused_score * weight))
    out.sort(key=lambda h: (-h.final_score, h.doc_name, h.chunk_id))
    return out


@dataclass
class BranchRankings:
    """Per-branch (ref, score) rankings; None when the branch did not run."""

    lexical: list[tuple[int, float]] | None = None
    vector: list[tuple[int, float]] | None = None


def run_branches(
    req: SearchRequest, bundle: IndexBundle, branch_depth: int | None = None
) -> BranchRankings:
    depth = branch_depth if branch_depth is not None else default_branch_depth(req.top_k)
    branches = BranchRankings()
    if req.mode in (MODE_TEXT, MODE_HYBRID):
        branches.lexical = text_search(req.query, depth, bundle.lexical, bundle.corpus)
    if req.mode in (MODE_VECTOR, MODE_HYBRID):
        branches.vector = vector_search(req.query, depth, bundle.vectors, bundle.corpus)
    return branches


def fuse_and_rank(
    req: SearchRequest,
    branches: BranchRankings,
    corpus: Corpus,
    k_rrf: float = DEFAULT_K_RRF,
) -> list[RetrievalHit]:
    """Fuse branch rankings, apply boosting, truncate to top_k."""
    lex_refs = [ref for ref, _ in branches.lexical] if branches.lexical is not None else []
    vec_refs = [ref for ref, _ in branches.vector] if branches.vector is not None else []
    if branches.lexical is not None and branches.vector is not None:
        fused = rrf_fuse(lex_refs, vec_refs, k_rrf, tie_key=corpus.tie_key)
    else:
        refs = lex_refs if branches.lexical is not None else vec_refs
        fused = [(ref, 1.0 / (k_rrf + rank)) for rank, ref in enumerate(refs, start=1)]

    lex_rank = {ref: i for i, ref in enumerate(lex_refs, start=1)}
    vec_rank = {ref: i for i, ref in enumerate(vec_refs, start=1)}
    hits = []
    for ref, score in fused:
        chunk = corpus.chunk_at(ref)
        hits.append(
            RetrievalHit(
                chunk_ref=ref,
                doc_name=chunk.doc_name,
                chunk_id=chunk.chunk_id,
                fused_score=score,
                final_score=score,
                text=chunk.text,
                lexical_rank=lex_rank.get(ref),
                vector_rank=vec_rank.get(ref),
            )
        )
    hits = apply_boost(hits, corpus, req.boosting)
    return hits[: req.top_k]


def search(
    req: SearchRequest,
    bundle: IndexBundle,
    k_rrf: float = DEFAULT_K_RRF,
    branch_depth: int | None = None,
) -> list[RetrievalHit]:
    """Execute the requested search mode end to end."""
    branches = run_branches(req, bundle, branch_depth)
    return fuse_and_rank(req, branches, bundle.corpus, k_rrf)
