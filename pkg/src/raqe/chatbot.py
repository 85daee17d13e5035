"""Query-to-answer orchestration: language, retrieval, prompt, LLM, citations.

The pipeline runs four timed stages — query preparation (language detection),
retrieval (both search branches), re-ranking (fusion plus boosting) and
answer generation (prompt assembly, LLM call, citation parsing). Answers cite
sources as ``*(doc_name/chunk_id)*``; every hit is serialized into the prompt
as a ``[doc_name/chunk_id] text`` context line so the citation grammar is
satisfiable by construction.

The offline stub LLM answers deterministically from the first context line,
which keeps the whole pipeline testable without network access.
"""

from __future__ import annotations

import os
import re
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import requests

from .errors import ConfigError, EmptyQueryError, LlmError
from .index_store import IndexBundle
from .language import detect_language
from .retrieval import (
    DEFAULT_K_RRF,
    RetrievalHit,
    SearchRequest,
    fuse_and_rank,
    run_branches,
)

LLM_REMOTE = "remote"
LLM_OFFLINE_STUB = "offline_stub"
LLM_OFFLINE_F1 = "offline_f1"
LLM_KINDS = (LLM_REMOTE, LLM_OFFLINE_STUB, LLM_OFFLINE_F1)

REFUSAL_SENTENCE = (
    "I cannot answer the question based on the provided context; "
    "the information is not present."
)

_INSTRUCTION_TEMPLATE = (
    "Write your answer in {language}. If you cannot answer the question based "
    "on the provided context, state that the information is not present, "
    "don't invent or hallucinate an answer and don't reference any sources. "
    "After each fact you state, provide the corresponding document name and "
    'chunk id from the appended sources in brackets and separated by "/". '
    'For example: "Apple was founded in 1976." *(apple.docx/1)*\n'
    "\n"
    "Don't combine sources but list each individual source separately if a "
    "fact contains multiple sources. E.g. *(apple.docx/1)*, *(apple.docx/2)*, "
    "etc.\n"
    "\n"
    "You must comply with the following sources format: "
    "*(<document_name_as_str>/<chunk_id_as_int>)*\n"
    "\n"
    "Before answering the question, lay out your full thought process and "
    "dissect the user question and its implications."
)

_CITATION_CANDIDATE_RE = re.compile(r"\*\(([^()]*)\)\*")
_CONTEXT_LABEL_RE = re.compile(r"^\[(.*?)/(\d+)\]")


@dataclass(frozen=True)
class LlmConfig:
    kind: str = LLM_OFFLINE_STUB
    endpoint_url: str = ""
    model_name: str = "gpt-4o"
    temperature: float = 0.0
    max_output_tokens: int = 1024
    api_key_env: str = "RAQE_LLM_API_KEY"
    timeout_s: float = 60.0
    allow_temperature_override: bool = False

    def __post_init__(self):
        if self.kind not in LLM_KINDS:
            raise ConfigError(f"llm.kind: unknown kind {self.kind!r}")
        if self.temperature != 0.0 and not self.allow_temperature_override:
            raise ConfigError(
                "llm.temperature: must be 0.0 (set allow_temperature_override to change it)"
            )
        if self.max_output_tokens <= 0:
            raise ConfigError("llm.max_output_tokens: must be positive")
        if self.kind == LLM_REMOTE and not self.endpoint_url:
            raise ConfigError("llm.endpoint_url: required for a remote LLM")


@dataclass(frozen=True)
class Citation:
    doc_name: str
    chunk_id: int


@dataclass
class CitationReport:
    valid: list[Citation] = field(default_factory=list)
    dangling: list[Citation] = field(default_factory=list)
    malformed: int = 0


@dataclass
class ChatAnswer:
    answer_text: str
    citations: list[Citation]
    hits: list[RetrievalHit]
    language: str
    timings: dict[str, float]
    citation_report: CitationReport


def build_prompt(question: str, language: str, hits: list[RetrievalHit]) -> str:
    """Assemble the generation prompt: question, instruction block, context block.

    Each hit becomes one `[doc_name/chunk_id] text` context line; inner
    whitespace of the chunk text is collapsed so the line discipline holds
    (the token sequence is unchanged).
    """
    context_lines = "\n".join(
        f"[{h.doc_name}/{h.chunk_id}] {' '.join(h.text.split())}" for h in hits
    )
    instruction = _INSTRUCTION_TEMPLATE.format(language=language)
    return (
        f"{question}\n"
        "\n"
        "<instruction>\n"
        "\n"
        f"{instruction}\n"
        "\n"
        "</instruction>\n"
        "\n"
        "<document_context>\n"
        f"{context_lines}\n"
        "</document_context>"
    )


def _context_lines(prompt: str) -> list[str]:
    try:
        _, _, tail = prompt.partition("<document_context>")
        body, _, _ = tail.partition("</document_context>")
    except ValueError:
        return []
    return [line for line in body.splitlines() if line.strip()]


def _stub_generate(prompt: str) -> str:
    lines = _context_lines(prompt)
    if not lines:
        return REFUSAL_SENTENCE
    first = lines[0]
    label = _CONTEXT_LABEL_RE.match(first)
    snippet = " ".join(first.split()[:30])
    if label is None:
        return f"Based on the context: {snippet}"
    return f"Based on the context: {snippet} *({label.group(1)}/{label.group(2)})*"


def _remote_generate(prompt: str, cfg: LlmConfig) -> str:
    api_key = os.environ.get(cfg.api_key_env)
    if not api_key:
        raise LlmError(f"environment variable {cfg.api_key_env} is not set")
    url = cfg.endpoint_url.rstrip("/") + "/v1/chat/completions"
    try:
        resp = requests.post(
            url,
            json={
                "model": cfg.model_name,
                "temperature": cfg.temperature,
                "messages": [{"role": "user", "content": prompt}],
                "max_tokens": cfg.max_output_tokens,
            },
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=cfg.timeout_s,
        )
    except requests.RequestException as exc:
        raise LlmError(f"chat-completions request failed: {exc}") from exc
    if not 200 <= resp.status_code < 300:
        raise LlmError(f"chat-completions endpoint returned {resp.status_code}")
    try:
        return resp.json()["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise LlmError(f"malformed chat-completions response: {exc}") from exc


def generate(prompt: str, cfg: LlmConfig) -> str:
    """Produce the raw answer text for *prompt*."""
    if cfg.kind == LLM_OFFLINE_STUB:
        return _stub_generate(prompt)
    if cfg.kind == LLM_REMOTE:
        return _remote_generate(prompt, cfg)
    raise ConfigError(f"llm.kind {cfg.kind!r} cannot generate answers")


def extract_citations_report(text: str) -> tuple[list[Citation], int]:
    """Parse ``*(name/id)*`` citations in order of appearance.

    The name is everything up to the last '/' inside the parentheses; the id
    must be a positive decimal integer. Returns (citations, malformed_count)
    where malformed counts candidates that looked like citations but failed
    those rules.
    """
    valid: list[Citation] = []
    malformed = 0
    for match in _CITATION_CANDIDATE_RE.finditer(text):
        name, sep, id_part = match.group(1).rpartition("/")
        if (
            not sep
            or not name
            or not id_part.isascii()
            or not id_part.isdigit()
            or int(id_part) < 1
        ):
            malformed += 1
            continue
        valid.append(Citation(doc_name=name, chunk_id=int(id_part)))
    return valid, malformed


def extract_citations(text: str) -> list[Citation]:
    """Citations in order of appearance, duplicates preserved."""
    return extract_citations_report(text)[0]


@contextmanager
def _stage(name: str, timings: dict[str, float]):
    start = time.perf_counter()
    try:
        yield
    except Exception as exc:
        exc.stage = name
        raise
    finally:
        timings[f"{name}_ms"] = (time.perf_counter() - start) * 1000.0


def chat(
    question: str,
    bundle: IndexBundle,
    llm_cfg: LlmConfig,
    mode: str = "hybrid",
    top_k: int = 10,
    boosting: bool = False,
    k_rrf: float = DEFAULT_K_RRF,
    branch_depth: int | None = None,
) -> ChatAnswer:
    """Answer *question* over the indexed corpus.

    Stage errors propagate with a ``stage`` attribute naming the failed stage.
    """
    if not question.strip():
        raise EmptyQueryError("question must be non-empty")
    timings: dict[str, float] = {}

    with _stage("prepare", timings):
        language = detect_language(question)
        req = SearchRequest(query=question, mode=mode, top_k=top_k, boosting=boosting)

    with _stage("retrieve", timings):
        branches = run_branches(req, bundle, branch_depth)

    with _stage("rerank", timings):
        hits = fuse_and_rank(req, branches, bundle.corpus, k_rrf)

    with _stage("generate", timings):
        prompt = build_prompt(question, language, hits)
        answer_text = generate(prompt, llm_cfg)
        citations, malformed = extract_citations_report(answer_text)
        known = {(h.doc_name, h.chunk_id) for h in hits}
        report = CitationReport(malformed=malformed)
        for citation in citations:
            if (citation.doc_name, citation.chunk_id) in known:
                report.valid.append(citation)
            else:
                report.dangling.append(citation)

    return ChatAnswer(
        answer_text=answer_text,
        citations=citations,
        hits=hits,
        language=language,
        timings=timings,
        citation_report=report,
    )
