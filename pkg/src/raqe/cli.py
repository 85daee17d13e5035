"""Command-line entry point: ingest, search, chat, eval, ablate, serve.

Data goes to stdout, diagnostics (including the chat workflow trace) to
stderr. Exit codes: 0 success, 1 user error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from dataclasses import replace
from pathlib import Path

from . import __version__
from .chatbot import LLM_OFFLINE_F1, LLM_REMOTE, chat
from .config import SystemConfig, load_config
from .errors import RaqeError
from .evalharness import load_dataset, run_ablation, run_eval
from .index_store import Corpus, build_indexes, load_indexes, save_indexes
from .ingest import ingest_manifest
from .retrieval import SearchRequest, search
from .service import hit_to_dict, serve


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise UsageError(f"{self.prog}: {message}")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--preset", help="config preset name (baseline, rq-chatbot)")


def _add_search_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=["text", "vector", "hybrid"])
    parser.add_argument("--top-k", type=int, dest="top_k")
    boost = parser.add_mutually_exclusive_group()
    boost.add_argument("--boost", dest="boosting", action="store_true", default=None)
    boost.add_argument("--no-boost", dest="boosting", action="store_false")


def build_parser() -> _Parser:
    parser = _Parser(prog="raqe", description="hybrid-search RAG engine")
    parser.add_argument("--version", action="version", version=f"raqe {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("ingest", help="parse, chunk, embed and index a corpus")
    p.add_argument("--corpus", required=True, help="corpus manifest JSON")
    p.add_argument("--out", required=True, help="index output directory")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("search", help="query an index")
    p.add_argument("--query", required=True)
    p.add_argument("--index", required=True, help="index directory")
    _add_search_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("chat", help="ask questions against an index")
    p.add_argument("--index", required=True)
    p.add_argument("--question", help="ask one question and exit (default: read stdin)")
    _add_search_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_chat)

    p = sub.add_parser("eval", help="run the evaluation harness")
    p.add_argument("--dataset", required=True, help="JSONL eval dataset")
    p.add_argument("--index", required=True)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--judge", choices=["remote", "offline-f1"], default="offline-f1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report output directory")
    _add_search_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="run a configuration grid")
    p.add_argument("--grid", required=True, help="JSON grid of config overrides")
    p.add_argument("--dataset", required=True)
    p.add_argument("--corpus", help="corpus manifest (default: config paths.corpus_manifest)")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--judge", choices=["remote", "offline-f1"], default="offline-f1")
    p.add_argument("--out", help="report output directory")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--index", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--disable-ingest", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_serve)

    return parser


def _resolve_config(args: argparse.Namespace) -> SystemConfig:
    overrides: dict = {}
    for attr, key in (
        ("mode", "search.mode"),
        ("top_k", "search.top_k"),
        ("boosting", "search.boosting"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    return load_config(
        getattr(args, "config", None), overrides, getattr(args, "preset", None)
    )


def _judge_config(cfg: SystemConfig, choice: str):
    if choice == "offline-f1":
        return replace(cfg.judge, kind=LLM_OFFLINE_F1)
    return replace(cfg.judge, kind=LLM_REMOTE)


def _print_json(payload) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2))


def _cmd_ingest(args) -> int:
    cfg = _resolve_config(args)
    documents, chunks = ingest_manifest(args.corpus, cfg.ingestion)
    lexical, vectors = build_indexes(chunks, cfg.embedding)
    save_indexes(args.out, lexical, vectors, Corpus(documents, chunks))
    print(f"indexed {len(documents)} documents into {args.out}", file=sys.stderr)
    _print_json({"documents": len(documents), "chunks": len(chunks)})
    return 0


def _cmd_search(args) -> int:
    cfg = _resolve_config(args)
    bundle = load_indexes(args.index)
    req = SearchRequest(
        query=args.query,
        mode=cfg.search.mode,
        top_k=cfg.search.top_k,
        boosting=cfg.search.boosting,
    )
    hits = search(req, bundle, k_rrf=cfg.search.k_rrf, branch_depth=cfg.search.branch_depth)
    _print_json([hit_to_dict(h) for h in hits])
    return 0


def _answer_payload(answer) -> dict:
    return {
        "answer": answer.answer_text,
        "language": answer.language,
        "citations": [
            {"doc_name": c.doc_name, "chunk_id": c.chunk_id} for c in answer.citations
        ],
        "dangling": [
            {"doc_name": c.doc_name, "chunk_id": c.chunk_id}
            for c in answer.citation_report.dangling
        ],
        "hits": [hit_to_dict(h) for h in answer.hits],
    }


def _ask(question: str, bundle, cfg: SystemConfig) -> None:
    answer = chat(
        question,
        bundle,
        cfg.llm,
        mode=cfg.search.mode,
        top_k=cfg.search.top_k,
        boosting=cfg.search.boosting,
        k_rrf=cfg.search.k_rrf,
        branch_depth=cfg.search.branch_depth,
    )
    for stage in ("prepare", "retrieve", "rerank", "generate"):
        ms = answer.timings.get(f"{stage}_ms", 0.0)
        print(f"{stage}: {ms:.1f} ms", file=sys.stderr)
    _print_json(_answer_payload(answer))


def _cmd_chat(args) -> int:
    cfg = _resolve_config(args)
    bundle = load_indexes(args.index)
    if args.question is not None:
        _ask(args.question, bundle, cfg)
        return 0
    print("enter a question per line (EOF to quit)", file=sys.stderr)
    for line in sys.stdin:
        question = line.strip()
        if not question:
            continue
        _ask(question, bundle, cfg)
    return 0


def _cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    bundle = load_indexes(args.index)
    dataset = load_dataset(args.dataset)
    report = run_eval(
        dataset,
        bundle,
        cfg,
        judge_cfg=_judge_config(cfg, args.judge),
        n_runs=args.runs,
        seed=args.seed,
        out_dir=args.out,
    )
    _print_json(
        {
            "answer": {"mean": report.answer.mean, "std": report.answer.std,
                       "n_runs": report.answer.n_runs},
            "context": {"mean": report.context.mean, "std": report.context.std,
                        "n_runs": report.context.n_runs},
            "failures": len(report.failures),
        }
    )
    return 0


def _cmd_ablate(args) -> int:
    cfg = _resolve_config(args)
    grid = json.loads(Path(args.grid).read_text(encoding="utf-8"))
    dataset = load_dataset(args.dataset)
    manifest = args.corpus or cfg.paths.corpus_manifest
    report = run_ablation(
        grid,
        dataset,
        cfg,
        manifest,
        judge_cfg=_judge_config(cfg, args.judge),
        n_runs=args.runs,
        out_dir=args.out,
    )
    sys.stdout.write(report.to_markdown())
    return 0


def _cmd_serve(args) -> int:
    cfg = _resolve_config(args)
    cfg = replace(cfg, paths=replace(cfg.paths, index_dir=args.index))
    serve(cfg, host=args.host, port=args.port, allow_ingest=not args.disable_ingest)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except RaqeError as exc:
        stage = getattr(exc, "stage", None)
        prefix = f"error in stage {stage}: " if stage else "error: "
        print(prefix + str(exc), file=sys.stderr)
        return 1
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except Exception:
        traceback.print_exc(file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
