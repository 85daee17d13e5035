"""LLM-judge evaluation of answers and retrieval contexts, plus the ablation runner.

Each case is judged on two 0-5 metrics: answer correctness against a gold
answer and retrieval-context correctness against gold context. Judges are
either a remote chat-completions model or an offline stub that scores
5 * token-level F1, which keeps the harness hermetic. An evaluation consists
of n independent runs of the full chat pipeline; reports carry the mean of
per-run means and the sample (n-1) standard deviation.

The ablation runner sweeps configuration overrides over one corpus, rebuilding
indexes only when ingestion or embedding parameters change, and renders a
table with one row per configuration and the best value per column flagged.
"""

from __future__ import annotations

import csv
import json
import math
import re
import statistics
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import chatbot
from .chatbot import LLM_OFFLINE_F1, LLM_REMOTE, LlmConfig
from .config import SystemConfig, apply_overrides, config_label
from .errors import (
    ConfigError,
    CorrelationUndefinedError,
    EvalAbortedError,
    JudgeParseError,
)
from .index_store import Corpus, IndexBundle, build_indexes, save_indexes
from .ingest import ingest_manifest

MAX_FAILED_CASE_FRACTION = 0.2
DEFAULT_JUDGE_WORKERS = 4

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")

ANSWER_EVALUATION_STEPS = [
    "Check if the facts in 'Actual Output' contradict any facts in 'Expected Output'.",
    "DO NOT punish long and detailed answers if the 'Actual Output' is perfectly "
    "correct. Generally, more details in the 'Actual Output' are encouraged.",
    "If the 'Actual Output' misses details compared to the 'Expected Output' you "
    "should slightly penalize omission of detail.",
]

CONTEXT_EVALUATION_STEPS = [
    "Summarize the expected 'Context' and note the most important points.",
    "Compare the summary with the 'Retrieval Context' and check if the most "
    "important points are present.",
    "If the 'Retrieval Context' is missing important points compared to the "
    "'Context' you should penalize the response.",
    "If the 'Retrieval Context' contains irrelevant information, you should very "
    "slightly penalize the response.",
    "If the 'Retrieval Context' contains contradictory information, you should "
    "heavily penalize the response.",
]

_SCORE_INSTRUCTION = "Reply with a single number between 0 and 5 on the final line."


@dataclass(frozen=True)
class EvalCase:
    case_id: str
    question: str
    expected_output: str
    expected_context: tuple[str, ...] = ()
    source_kind_hint: str = "unknown"

    def __post_init__(self):
        if not self.question.strip():
            raise ValueError(f"case {self.case_id}: question must be non-empty")
        if not self.expected_output.strip():
            raise ValueError(f"case {self.case_id}: expected_output must be non-empty")


@dataclass
class EvalResult:
    case_id: str
    answer_score: float
    context_score: float
    judge_raw: str
    run_index: int


@dataclass
class RunSummary:
    metric: str
    mean: float
    std: float | None
    n_runs: int
    per_run: list[float]


@dataclass
class EvalReport:
    answer: RunSummary
    context: RunSummary
    results: list[EvalResult]
    failures: list[tuple[int, str, str]] = field(default_factory=list)


def load_dataset(path: str | Path) -> list[EvalCase]:
    """Read a JSONL dataset: one case per line.

    Fields: case_id, question, expected_output, expected_context (string or
    array of strings), optional source_kind_hint.
    """
    cases: list[EvalCase] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        context = raw.get("expected_context", [])
        if isinstance(context, str):
            context = [context]
        cases.append(
            EvalCase(
                case_id=str(raw["case_id"]),
                question=raw["question"],
                expected_output=raw["expected_output"],
                expected_context=tuple(context),
                source_kind_hint=raw.get("source_kind_hint", "unknown"),
            )
        )
    if not cases:
        raise ValueError(f"{path}: dataset is empty")
    return cases


def build_answer_judge_prompt(case: EvalCase, actual_output: str) -> str:
    steps = "\n".join(f"{i}. {s}" for i, s in enumerate(ANSWER_EVALUATION_STEPS, 1))
    return (
        "You are grading the correctness of an answer on a scale from 0 (worst) "
        "to 5 (best).\n"
        "\n"
        "Evaluation Steps:\n"
        f"{steps}\n"
        "\n"
        "Expected Output:\n"
        f"{case.expected_output}\n"
        "\n"
        "Actual Output:\n"
        f"{actual_output}\n"
        "\n"
        f"{_SCORE_INSTRUCTION}"
    )


def build_context_judge_prompt(case: EvalCase, retrieval_context: str) -> str:
    steps = "\n".join(f"{i}. {s}" for i, s in enumerate(CONTEXT_EVALUATION_STEPS, 1))
    expected = "\n".join(case.expected_context)
    return (
        "You are grading retrieved context on a scale from 0 (worst) to 5 (best).\n"
        "\n"
        "Evaluation Steps:\n"
        f"{steps}\n"
        "\n"
        "Context:\n"
        f"{expected}\n"
        "\n"
        "Retrieval Context:\n"
        f"{retrieval_context}\n"
        "\n"
        f"{_SCORE_INSTRUCTION}"
    )


def parse_judge_score(judge_output: str) -> float:
    """Take the last number in the text and clamp it into [0, 5]."""
    numbers = _NUMBER_RE.findall(judge_output)
    if not numbers:
        raise JudgeParseError(f"no numeric score in judge output: {judge_output!r}")
    return min(5.0, max(0.0, float(numbers[-1])))


def token_f1(expected: str, actual: str) -> float:
    """Bag-of-tokens F1 over lowercased whitespace tokens."""
    exp = Counter(expected.lower().split())
    act = Counter(actual.lower().split())
    if not exp and not act:
        return 1.0
    overlap = sum((exp & act).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(act.values())
    recall = overlap / sum(exp.values())
    return 2.0 * precision * recall / (precision + recall)


def _judge_remote(prompt: str, cfg: LlmConfig) -> tuple[float, str]:
    raw = chatbot.generate(prompt, cfg)
    try:
        return parse_judge_score(raw), raw
    except JudgeParseError:
        raw = chatbot.generate(prompt, cfg)
        return parse_judge_score(raw), raw


def judge_case(
    case: EvalCase,
    actual_output: str,
    retrieval_context: str,
    judge_cfg: LlmConfig,
    run_index: int = 0,
) -> EvalResult:
    """Score one case on both metrics.

    The offline_f1 judge scores 5 * token F1 instead of asking a model; the
    remote judge retries once when no score can be parsed.
    """
    if judge_cfg.kind == LLM_OFFLINE_F1:
        answer_score = 5.0 * token_f1(case.expected_output, actual_output)
        context_score = 5.0 * token_f1("\n".join(case.expected_context), retrieval_context)
        raw = f"offline-f1 answer={answer_score:.6f} context={context_score:.6f}"
    elif judge_cfg.kind == LLM_REMOTE:
        answer_score, raw_a = _judge_remote(
            build_answer_judge_prompt(case, actual_output), judge_cfg
        )
        context_score, raw_c = _judge_remote(
            build_context_judge_prompt(case, retrieval_context), judge_cfg
        )
        raw = f"answer: {raw_a}\ncontext: {raw_c}"
    else:
        raise ConfigError(f"judge.kind {judge_cfg.kind!r} cannot judge cases")
    return EvalResult(
        case_id=case.case_id,
        answer_score=answer_score,
        context_score=context_score,
        judge_raw=raw,
        run_index=run_index,
    )


def summarize_runs(metric: str, per_run_means: list[float]) -> RunSummary:
    """Mean of per-run means plus the sample (n-1) standard deviation."""
    if not per_run_means:
        raise ValueError("cannot summarize zero runs")
    n = len(per_run_means)
    mean = sum(per_run_means) / n
    std = statistics.stdev(per_run_means) if n > 1 else None
    return RunSummary(metric=metric, mean=mean, std=std, n_runs=n, per_run=list(per_run_means))


def pearson(xs: list[float], ys: list[float]) -> float:
    """Product-moment correlation of two equally long, non-constant series."""
    if len(xs) != len(ys):
        raise CorrelationUndefinedError(
            f"length mismatch: {len(xs)} vs {len(ys)}"
        )
    if len(xs) < 2:
        raise CorrelationUndefinedError("need at least two points")
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    syy = sum((y - mean_y) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise CorrelationUndefinedError("correlation undefined for constant input")
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    return sxy / (math.sqrt(sxx) * math.sqrt(syy))


def _eval_one_case(
    case: EvalCase,
    bundle: IndexBundle,
    cfg: SystemConfig,
    judge_cfg: LlmConfig,
    run_index: int,
) -> EvalResult:
    answer = chatbot.chat(
        case.question,
        bundle,
        cfg.llm,
        mode=cfg.search.mode,
        top_k=cfg.search.top_k,
        boosting=cfg.search.boosting,
        k_rrf=cfg.search.k_rrf,
        branch_depth=cfg.search.branch_depth,
    )
    retrieval_context = "\n".join(hit.text for hit in answer.hits)
    return judge_case(case, answer.answer_text, retrieval_context, judge_cfg, run_index)


def run_eval(
    dataset: list[EvalCase],
    bundle: IndexBundle,
    cfg: SystemConfig,
    judge_cfg: LlmConfig | None = None,
    n_runs: int = 5,
    seed: int = 0,
    out_dir: str | Path | None = None,
    max_workers: int = DEFAULT_JUDGE_WORKERS,
) -> EvalReport:
    """Evaluate the chat pipeline over *dataset* with n independent runs.

    Case failures are recorded and skipped; a run failing more than 20% of its
    cases aborts the whole evaluation. *seed* is reserved for stochastic
    judges; the built-in pipeline is deterministic.
    """
    if not dataset:
        raise ValueError("dataset must be non-empty")
    del seed  # deterministic pipeline; kept for interface stability
    judge = judge_cfg if judge_cfg is not None else cfg.judge

    results: list[EvalResult] = []
    failures: list[tuple[int, str, str]] = []
    answer_means: list[float] = []
    context_means: list[float] = []
    for run_index in range(n_runs):
        run_results: list[EvalResult] = []
        run_failures: list[tuple[int, str, str]] = []
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = {
                case.case_id: pool.submit(
                    _eval_one_case, case, bundle, cfg, judge, run_index
                )
                for case in dataset
            }
            for case in dataset:
                try:
                    run_results.append(futures[case.case_id].result())
                except Exception as exc:
                    run_failures.append((run_index, case.case_id, str(exc)))
        if len(run_failures) > MAX_FAILED_CASE_FRACTION * len(dataset):
            raise EvalAbortedError(
                f"run {run_index}: {len(run_failures)}/{len(dataset)} cases failed"
            )
        run_results.sort(key=lambda r: r.case_id)
        results.extend(run_results)
        failures.extend(run_failures)
        answer_means.append(sum(r.answer_score for r in run_results) / len(run_results))
        context_means.append(sum(r.context_score for r in run_results) / len(run_results))

    report = EvalReport(
        answer=summarize_runs("answer", answer_means),
        context=summarize_runs("context", context_means),
        results=results,
        failures=failures,
    )
    if out_dir is not None:
        write_eval_report(report, out_dir)
    return report


def _fmt_std(std: float | None) -> str:
    if std is None:
        return ""
    text = f"{std:.3f}"
    return f"(±{text[1:] if text.startswith('0.') else text})"


def _fmt_cell(summary: RunSummary, best: bool) -> str:
    mean = f"{summary.mean:.2f}"
    if best:
        mean = f"**{mean}**"
    std = _fmt_std(summary.std)
    return f"{mean} {std}".strip()


def write_eval_report(report: EvalReport, out_dir: str | Path) -> None:
    """Write results.csv, results.md and per_case.csv under *out_dir*."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "results.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "mean", "std", "n_runs", "per_run"])
        for summary in (report.answer, report.context):
            writer.writerow(
                [
                    summary.metric,
                    f"{summary.mean:.6f}",
                    "" if summary.std is None else f"{summary.std:.6f}",
                    summary.n_runs,
                    " ".join(f"{m:.6f}" for m in summary.per_run),
                ]
            )
    lines = [
        "| Metric | Mean | Std | Runs |",
        "| --- | --- | --- | --- |",
    ]
    for summary in (report.answer, report.context):
        std = "-" if summary.std is None else f"{summary.std:.4f}"
        lines.append(
            f"| {summary.metric} | {summary.mean:.4f} | {std} | {summary.n_runs} |"
        )
    if report.failures:
        lines.append("")
        lines.append(f"Failed cases: {len(report.failures)}")
    (out / "results.md").write_text("\n".join(lines) + "\n", encoding="utf-8")
    with (out / "per_case.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_index", "case_id", "answer_score", "context_score"])
        for result in report.results:
            writer.writerow(
                [
                    result.run_index,
                    result.case_id,
                    f"{result.answer_score:.6f}",
                    f"{result.context_score:.6f}",
                ]
            )


@dataclass
class AblationRow:
    label: str
    answer: RunSummary
    context: RunSummary
    rebuilt_index: bool


@dataclass
class AblationReport:
    rows: list[AblationRow]
    n_runs: int

    def best_flags(self) -> tuple[list[bool], list[bool]]:
        best_answer = max(row.answer.mean for row in self.rows)
        best_context = max(row.context.mean for row in self.rows)
        return (
            [row.answer.mean == best_answer for row in self.rows],
            [row.context.mean == best_context for row in self.rows],
        )

    def to_markdown(self) -> str:
        best_answer, best_context = self.best_flags()
        lines = [
            "| Configuration | Answer | Context |",
            "| --- | --- | --- |",
        ]
        for i, row in enumerate(self.rows):
            lines.append(
                f"| {row.label} | {_fmt_cell(row.answer, best_answer[i])} "
                f"| {_fmt_cell(row.context, best_context[i])} |"
            )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        best_answer, best_context = self.best_flags()
        rows = ["configuration,answer_mean,answer_std,context_mean,context_std,"
                "best_answer,best_context,rebuilt_index"]
        for i, row in enumerate(self.rows):
            a_std = "" if row.answer.std is None else f"{row.answer.std:.6f}"
            c_std = "" if row.context.std is None else f"{row.context.std:.6f}"
            rows.append(
                f'"{row.label}",{row.answer.mean:.6f},{a_std},'
                f"{row.context.mean:.6f},{c_std},"
                f"{str(best_answer[i]).lower()},{str(best_context[i]).lower()},"
                f"{str(row.rebuilt_index).lower()}"
            )
        return "\n".join(rows) + "\n"


def _ingestion_key(cfg: SystemConfig) -> tuple:
    return (
        cfg.ingestion.max_chunk_size,
        cfg.ingestion.min_chunk_overlap,
        cfg.ingestion.markdown_conversion,
        cfg.embedding.kind,
        cfg.embedding.model_name,
        cfg.embedding.dimension,
    )


def _build_bundle(cfg: SystemConfig, manifest_path: str | Path) -> IndexBundle:
    documents, chunks = ingest_manifest(manifest_path, cfg.ingestion)
    lexical, vectors = build_indexes(chunks, cfg.embedding)
    return IndexBundle(lexical=lexical, vectors=vectors, corpus=Corpus(documents, chunks))


def run_ablation(
    grid: list[dict],
    dataset: list[EvalCase],
    base_cfg: SystemConfig,
    manifest_path: str | Path,
    judge_cfg: LlmConfig | None = None,
    n_runs: int = 5,
    out_dir: str | Path | None = None,
) -> AblationReport:
    """Evaluate every grid configuration, reusing indexes across configs whose
    ingestion and embedding parameters are unchanged.

    Grid entries are {"name"?: str, "overrides": {...}}; overrides use the
    config schema (nested sections or dotted keys).
    """
    if not grid:
        raise ConfigError("ablation grid is empty")
    rows: list[AblationRow] = []
    cache: dict[tuple, IndexBundle] = {}
    for entry in grid:
        if not isinstance(entry, dict):
            raise ConfigError(f"grid entry must be an object, got {entry!r}")
        overrides = entry.get("overrides", {k: v for k, v in entry.items() if k != "name"})
        cfg = apply_overrides(base_cfg, overrides)
        label = entry.get("name") or config_label(base_cfg, cfg)
        key = _ingestion_key(cfg)
        rebuilt = key not in cache
        if rebuilt:
            cache[key] = _build_bundle(cfg, manifest_path)
        report = run_eval(dataset, cache[key], cfg, judge_cfg, n_runs=n_runs)
        rows.append(
            AblationRow(
                label=label,
                answer=replace(report.answer, metric=f"answer[{label}]"),
                context=replace(report.context, metric=f"context[{label}]"),
                rebuilt_index=rebuilt,
            )
        )
    ablation = AblationReport(rows=rows, n_runs=n_runs)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.md").write_text(ablation.to_markdown(), encoding="utf-8")
        (out / "results.csv").write_text(ablation.to_csv(), encoding="utf-8")
    return ablation


def save_ablation_indexes(bundle: IndexBundle, dir_path: str | Path) -> None:
    """Persist a bundle built during ablation (convenience for inspection)."""
    save_indexes(dir_path, bundle.lexical, bundle.vectors, bundle.corpus)


__all__ = [
    "EvalCase",
    "EvalResult",
    "RunSummary",
    "EvalReport",
    "AblationReport",
    "AblationRow",
    "load_dataset",
    "build_answer_judge_prompt",
    "build_context_judge_prompt",
    "parse_judge_score",
    "token_f1",
    "judge_case",
    "summarize_runs",
    "pearson",
    "run_eval",
    "write_eval_report",
    "run_ablation",
    "ANSWER_EVALUATION_STEPS",
    "CONTEXT_EVALUATION_STEPS",
]
