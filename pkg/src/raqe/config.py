"""System configuration: defaults, presets, file loading and overrides.

Configuration is a JSON object with sections ingestion / search / embedding /
llm / judge / paths, merged over preset defaults with CLI or HTTP overrides
taking highest precedence. Two presets ship: "baseline" (offline providers,
chunking 512/64, hybrid search, top_k 10, boosting off) and "rq-chatbot"
(boosting on plus the large remote embedding model).

Override keys may be nested ({"search": {"top_k": 20}}) or dotted
("search.top_k": 20); unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .chatbot import LLM_OFFLINE_F1, LLM_OFFLINE_STUB, LLM_REMOTE, LlmConfig
from .errors import ConfigError
from .index_store import KIND_REMOTE, EmbeddingProviderConfig
from .ingest import IngestionConfig
from .retrieval import SEARCH_MODES

PRESET_BASELINE = "baseline"
PRESET_RQ_CHATBOT = "rq-chatbot"


@dataclass(frozen=True)
class SearchConfig:
    mode: str = "hybrid"
    top_k: int = 10
    boosting: bool = False
    k_rrf: float = 60.0
    branch_depth: int | None = None

    def __post_init__(self):
        if self.mode not in SEARCH_MODES:
            raise ConfigError(f"search.mode: must be one of {SEARCH_MODES}")
        if self.top_k < 1:
            raise ConfigError("search.top_k: must be >= 1")
        if self.k_rrf <= 0:
            raise ConfigError("search.k_rrf: must be positive")
        if self.branch_depth is not None and self.branch_depth < 1:
            raise ConfigError("search.branch_depth: must be >= 1")


@dataclass(frozen=True)
class PathsConfig:
    index_dir: str = "index"
    corpus_manifest: str = "manifest.json"


@dataclass(frozen=True)
class SystemConfig:
    ingestion: IngestionConfig = field(default_factory=IngestionConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    embedding: EmbeddingProviderConfig = field(default_factory=EmbeddingProviderConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    judge: LlmConfig = field(default_factory=lambda: LlmConfig(kind=LLM_OFFLINE_F1))
    paths: PathsConfig = field(default_factory=PathsConfig)
    preset: str = PRESET_BASELINE

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "ingestion": IngestionConfig,
    "search": SearchConfig,
    "embedding": EmbeddingProviderConfig,
    "llm": LlmConfig,
    "judge": LlmConfig,
    "paths": PathsConfig,
}


def _preset_dict(name: str) -> dict:
    if name == PRESET_BASELINE:
        return {}
    if name == PRESET_RQ_CHATBOT:
        return {
            "search": {"boosting": True},
            "embedding": {
                "kind": KIND_REMOTE,
                "endpoint_url": "https://api.openai.com",
                "model_name": "text-embedding-3-large",
                "dimension": 3072,
                "api_key_env": "OPENAI_API_KEY",
            },
        }
    raise ConfigError(f"preset: unknown preset {name!r}")


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _expand_dotted(overrides: dict) -> dict:
    expanded: dict = {}
    for key, value in overrides.items():
        if isinstance(value, dict):
            value = _expand_dotted(value)
        parts = key.split(".")
        node = expanded
        for part in parts[:-1]:
            nxt = node.setdefault(part, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {key!r} conflicts with a scalar value")
            node = nxt
        last = parts[-1]
        if isinstance(value, dict) and isinstance(node.get(last), dict):
            node[last] = _merge(node[last], value)
        else:
            node[last] = value
    return expanded


def _build_section(name: str, cls, data: dict):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"{name}: unknown key {sorted(unknown)[0]!r}")
    return cls(**data)


def config_from_dict(data: dict) -> SystemConfig:
    """Build and validate a SystemConfig from a plain nested dict."""
    unknown = set(data) - set(_SECTIONS) - {"preset"}
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        kwargs[name] = _build_section(name, cls, data.get(name, {}))
    return SystemConfig(preset=data.get("preset", PRESET_BASELINE), **kwargs)


def load_config(
    path: str | Path | None = None,
    overrides: dict | None = None,
    preset: str | None = None,
) -> SystemConfig:
    """Resolve configuration: preset defaults <- config file <- overrides."""
    file_data: dict = {}
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8")
        file_data = json.loads(raw) if raw.strip() else {}
        if not isinstance(file_data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
    preset_name = preset or file_data.get("preset", PRESET_BASELINE)
    data = _merge(_preset_dict(preset_name), file_data)
    if overrides:
        data = _merge(data, _expand_dotted(overrides))
    data["preset"] = preset_name
    return config_from_dict(data)


def apply_overrides(cfg: SystemConfig, overrides: dict) -> SystemConfig:
    """Return a new SystemConfig with *overrides* merged onto *cfg*."""
    if not overrides:
        return cfg
    data = _merge(cfg.to_dict(), _expand_dotted(overrides))
    return config_from_dict(data)


def config_label(base: SystemConfig, cfg: SystemConfig) -> str:
    """Human-readable name for how *cfg* differs from *base* (ablation rows)."""
    parts: list[str] = []
    if (
        cfg.ingestion.max_chunk_size != base.ingestion.max_chunk_size
        or cfg.ingestion.min_chunk_overlap != base.ingestion.min_chunk_overlap
    ):
        parts.append(
            f"Chunking: {cfg.ingestion.max_chunk_size}/{cfg.ingestion.min_chunk_overlap}"
        )
    if cfg.ingestion.markdown_conversion != base.ingestion.markdown_conversion:
        parts.append("+Markdown" if cfg.ingestion.markdown_conversion else "-Markdown")
    if cfg.search.mode != base.search.mode:
        parts.append({"text": "Text Search", "vector": "Vector Search", "hybrid": "Hybrid Search"}[cfg.search.mode])
    if cfg.search.top_k != base.search.top_k:
        parts.append(f"Top-k: {cfg.search.top_k}")
    if cfg.search.boosting != base.search.boosting:
        parts.append("+Relevance Boosting" if cfg.search.boosting else "-Relevance Boosting")
    if cfg.embedding.model_name != base.embedding.model_name:
        parts.append(f"Embedding: {cfg.embedding.model_name}")
    if cfg.llm.model_name != base.llm.model_name:
        parts.append(f"LLM: {cfg.llm.model_name}")
    return ", ".join(parts) if parts else "Baseline"


__all__ = [
    "SystemConfig",
    "SearchConfig",
    "PathsConfig",
    "LlmConfig",
    "EmbeddingProviderConfig",
    "IngestionConfig",
    "load_config",
    "config_from_dict",
    "apply_overrides",
    "config_label",
    "PRESET_BASELINE",
    "PRESET_RQ_CHATBOT",
    "LLM_REMOTE",
    "LLM_OFFLINE_STUB",
    "LLM_OFFLINE_F1",
]
