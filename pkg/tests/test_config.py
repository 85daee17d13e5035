"""Configuration loading, presets and overrides."""

from __future__ import annotations

import json

import pytest

from raqe.config import apply_overrides, config_label, load_config
from raqe.errors import ConfigError


class TestDefaults:
    def test_baseline_values(self):
        cfg = load_config()
        assert cfg.preset == "baseline"
        assert cfg.ingestion.max_chunk_size == 512
        assert cfg.ingestion.min_chunk_overlap == 64
        assert cfg.ingestion.markdown_conversion is False
        assert cfg.search.mode == "hybrid"
        assert cfg.search.top_k == 10
        assert cfg.search.boosting is False
        assert cfg.embedding.kind == "offline_hash"
        assert cfg.llm.temperature == 0.0

    def test_empty_file_equals_defaults(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{}", encoding="utf-8")
        assert load_config(path) == load_config()

    def test_rq_chatbot_preset(self):
        cfg = load_config(preset="rq-chatbot")
        assert cfg.search.boosting is True
        assert cfg.search.mode == "hybrid"
        assert cfg.search.top_k == 10
        assert cfg.embedding.kind == "remote"
        assert cfg.embedding.model_name == "text-embedding-3-large"
        assert cfg.embedding.dimension == 3072

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            load_config(preset="turbo")


class TestOverrides:
    def test_single_override_leaves_rest_default(self):
        cfg = load_config(overrides={"search.top_k": 20})
        base = load_config()
        assert cfg.search.top_k == 20
        assert cfg.ingestion == base.ingestion
        assert cfg.search.mode == base.search.mode

    def test_nested_and_dotted_equivalent(self):
        dotted = load_config(overrides={"search.top_k": 5})
        nested = load_config(overrides={"search": {"top_k": 5}})
        assert dotted == nested

    def test_file_then_overrides_precedence(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"search": {"top_k": 5, "mode": "text"}}))
        cfg = load_config(path, overrides={"search.top_k": 20})
        assert cfg.search.top_k == 20
        assert cfg.search.mode == "text"

    def test_apply_overrides_returns_new_config(self):
        base = load_config()
        out = apply_overrides(base, {"search.boosting": True})
        assert out.search.boosting is True
        assert base.search.boosting is False


class TestValidation:
    def test_overlap_not_smaller_than_size(self):
        with pytest.raises(ConfigError) as err:
            load_config(
                overrides={
                    "ingestion.max_chunk_size": 512,
                    "ingestion.min_chunk_overlap": 512,
                }
            )
        assert "min_chunk_overlap" in str(err.value)

    def test_unknown_top_level_key(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"retrieval": {}}))
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "retrieval" in str(err.value)

    def test_unknown_section_key(self):
        with pytest.raises(ConfigError) as err:
            load_config(overrides={"search.wormholes": 1})
        assert "wormholes" in str(err.value)

    def test_bad_mode(self):
        with pytest.raises(ConfigError):
            load_config(overrides={"search.mode": "psychic"})

    def test_remote_embedding_requires_endpoint(self):
        with pytest.raises(ConfigError):
            load_config(overrides={"embedding.kind": "remote"})


class TestConfigLabel:
    def test_baseline(self):
        base = load_config()
        assert config_label(base, base) == "Baseline"

    def test_chunking_label(self):
        base = load_config()
        cfg = apply_overrides(base, {"ingestion.max_chunk_size": 1024,
                                     "ingestion.min_chunk_overlap": 128})
        assert config_label(base, cfg) == "Chunking: 1024/128"

    def test_markdown_label(self):
        base = load_config()
        cfg = apply_overrides(base, {"ingestion.markdown_conversion": True})
        assert config_label(base, cfg) == "+Markdown"

    def test_combined_label(self):
        base = load_config()
        cfg = apply_overrides(
            base, {"search.top_k": 5, "search.boosting": True}
        )
        assert config_label(base, cfg) == "Top-k: 5, +Relevance Boosting"
