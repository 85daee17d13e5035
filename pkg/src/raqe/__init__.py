"""Hybrid-search RAG engine with cited answers, evaluation harness and ablation runner."""

__version__ = "0.1.0"
