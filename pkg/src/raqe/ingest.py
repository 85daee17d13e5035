"""Document parsing and overlap chunking.

Documents are UTF-8 plain text or markdown. A document is split into
fixed-stride token windows: window width ``max_chunk_size``, stride
``max_chunk_size - min_chunk_overlap``, so consecutive chunks share exactly
``min_chunk_overlap`` tokens. Tokens are maximal runs of non-whitespace
characters; chunk text is the original substring covering its tokens, so
inner whitespace survives verbatim.

Internal documents carry a 2.0 boost weight on every chunk, external ones 1.0.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DecodeError, EmptyDocumentError

INTERNAL = "internal"
EXTERNAL = "external"
SOURCE_KINDS = (INTERNAL, EXTERNAL)

FORMAT_PLAIN = "plain"
FORMAT_MARKDOWN = "markdown"

INTERNAL_BOOST = 2.0
EXTERNAL_BOOST = 1.0

_TOKEN_RE = re.compile(r"\S+")
_HEADING_RE = re.compile(r"^(#{1,6})\s+(.*)$")
_BULLET_RE = re.compile(r"^(\s*)-\s+(.*)$")
_TABLE_SEP_RE = re.compile(r"^\s*\|?[\s\-:|]+\|?\s*$")


@dataclass(frozen=True)
class IngestionConfig:
    """Chunking parameters. Grid values: size 256/512/1024/2048, overlap 32/64/128/256."""

    max_chunk_size: int = 512
    min_chunk_overlap: int = 64
    markdown_conversion: bool = False

    def __post_init__(self):
        if self.max_chunk_size <= 0:
            raise ConfigError("ingestion.max_chunk_size: must be positive")
        if self.min_chunk_overlap <= 0:
            raise ConfigError("ingestion.min_chunk_overlap: must be positive")
        if self.min_chunk_overlap >= self.max_chunk_size:
            raise ConfigError(
                "ingestion.min_chunk_overlap: must be smaller than max_chunk_size "
                f"({self.min_chunk_overlap} >= {self.max_chunk_size})"
            )


@dataclass(frozen=True)
class Document:
    doc_id: str
    name: str
    source_kind: str
    text: str
    format: str = FORMAT_PLAIN
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source_kind: {self.source_kind!r}")
        if not self.name:
            raise ValueError("document name must be non-empty")


@dataclass(frozen=True)
class Chunk:
    """One token window of a document. chunk_id is 1-based and contiguous per document."""

    doc_id: str
    doc_name: str
    chunk_id: int
    text: str
    token_span: tuple[int, int]
    boost_weight: float


def tokenize(text: str) -> list[str]:
    """Split into maximal runs of non-whitespace characters, in order."""
    return _TOKEN_RE.findall(text)


def token_spans(text: str) -> list[tuple[int, int]]:
    """Character [start, end) offsets of each token in *text*."""
    return [(m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def assign_boost(source_kind: str) -> float:
    """2.0 for internal sources, 1.0 for external ones."""
    if source_kind == INTERNAL:
        return INTERNAL_BOOST
    if source_kind == EXTERNAL:
        return EXTERNAL_BOOST
    raise ValueError(f"unknown source_kind: {source_kind!r}")


def looks_like_markdown(text: str, name: str = "") -> bool:
    """Heuristic: markdown file suffix, or heading/bullet/table markers in the text."""
    if name.lower().endswith((".md", ".markdown")):
        return True
    for line in text.split("\n"):
        if _HEADING_RE.match(line) or _BULLET_RE.match(line):
            return True
        if line.lstrip().startswith("|") and line.count("|") >= 2:
            return True
    return False


def strip_markdown(text: str) -> str:
    """Reduce markdown structure to plain prose.

    Headings become their text followed by a blank line, list dashes are
    dropped, table pipes become single spaces and separator rows vanish.
    """
    out: list[str] = []
    for line in text.split("\n"):
        heading = _HEADING_RE.match(line)
        if heading:
            out.append(heading.group(2).strip())
            out.append("")
            continue
        if "|" in line and _TABLE_SEP_RE.match(line):
            continue
        bullet = _BULLET_RE.match(line)
        if bullet:
            line = bullet.group(1) + bullet.group(2)
        if "|" in line:
            cells = [c.strip() for c in line.split("|")]
            line = " ".join(c for c in cells if c)
        out.append(line)
    return "\n".join(out)


def parse_document(
    raw: bytes,
    name: str,
    source_kind: str,
    cfg: IngestionConfig,
    declared_format: str | None = None,
    doc_id: str | None = None,
    metadata: dict[str, str] | None = None,
) -> Document:
    """Decode raw bytes into a Document, honouring the markdown-conversion flag.

    With ``markdown_conversion`` on, markdown input keeps its structural
    markers and format "markdown"; with it off, markers are stripped and the
    format is always "plain". *declared_format* (from a corpus manifest)
    overrides content sniffing. Whitespace-only input counts as empty.
    """
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError(f"document {name!r} is not valid UTF-8: {exc}") from exc
    if not text.strip():
        raise EmptyDocumentError(f"document {name!r} decoded to empty text")

    if declared_format is not None:
        if declared_format not in (FORMAT_PLAIN, FORMAT_MARKDOWN):
            raise ValueError(f"unknown format: {declared_format!r}")
        is_markdown = declared_format == FORMAT_MARKDOWN
    else:
        is_markdown = looks_like_markdown(text, name)

    if is_markdown and cfg.markdown_conversion:
        fmt = FORMAT_MARKDOWN
    elif is_markdown:
        text = strip_markdown(text)
        fmt = FORMAT_PLAIN
    else:
        fmt = FORMAT_PLAIN

    return Document(
        doc_id=doc_id or name,
        name=name,
        source_kind=source_kind,
        text=text,
        format=fmt,
        metadata=metadata or {},
    )


def chunk_document(doc: Document, cfg: IngestionConfig) -> list[Chunk]:
    """Split *doc* into overlapping token windows.

    Window i covers tokens [i*stride, i*stride + max_chunk_size), clipped to
    the document; a trailing window fully contained in its predecessor is not
    emitted. Empty documents yield an empty list.
    """
    spans = token_spans(doc.text)
    total = len(spans)
    if total == 0:
        return []

    width = cfg.max_chunk_size
    stride = width - cfg.min_chunk_overlap
    boost = assign_boost(doc.source_kind)

    chunks: list[Chunk] = []
    i = 0
    prev_end = 0
    while i * stride < total:
        start = i * stride
        end = min(start + width, total)
        if i > 0 and end <= prev_end:
            break
        chunks.append(
            Chunk(
                doc_id=doc.doc_id,
                doc_name=doc.name,
                chunk_id=i + 1,
                text=doc.text[spans[start][0] : spans[end - 1][1]],
                token_span=(start, end),
                boost_weight=boost,
            )
        )
        prev_end = end
        i += 1
    return chunks


def load_corpus_manifest(path: str | Path) -> list[dict]:
    """Read a corpus manifest: a JSON array of {name, source_kind, path, format}.

    Relative document paths resolve against the manifest's directory.
    """
    manifest_path = Path(path)
    entries = json.loads(manifest_path.read_text(encoding="utf-8"))
    if not isinstance(entries, list):
        raise ConfigError(f"{path}: manifest must be a JSON array")
    base = manifest_path.parent
    resolved = []
    for i, entry in enumerate(entries):
        missing = {"name", "source_kind", "path"} - set(entry)
        if missing:
            raise ConfigError(f"{path}: entry {i} missing fields {sorted(missing)}")
        if entry["source_kind"] not in SOURCE_KINDS:
            raise ConfigError(
                f"{path}: entry {i} has unknown source_kind {entry['source_kind']!r}"
            )
        doc_path = Path(entry["path"])
        resolved.append(
            {
                "name": entry["name"],
                "source_kind": entry["source_kind"],
                "path": doc_path if doc_path.is_absolute() else base / doc_path,
                "format": entry.get("format"),
            }
        )
    return resolved


def ingest_manifest(
    path: str | Path, cfg: IngestionConfig
) -> tuple[list[Document], list[Chunk]]:
    """Parse and chunk every document listed in the manifest at *path*."""
    documents: list[Document] = []
    chunks: list[Chunk] = []
    for entry in load_corpus_manifest(path):
        doc = parse_document(
            Path(entry["path"]).read_bytes(),
            name=entry["name"],
            source_kind=entry["source_kind"],
            cfg=cfg,
            declared_format=entry["format"],
            metadata={"path": str(entry["path"])},
        )
        documents.append(doc)
        chunks.extend(chunk_document(doc, cfg))
    return documents, chunks
