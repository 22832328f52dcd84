"""End-to-end orchestration: model/hypothesis selection, extraction, the
annotation session wiring, run manifests, and dataset export.

All stage artifacts live in the config's working directory under fixed
names, so interrupted runs resume from the entailment cache and the vote
log. Manifests exclude anything volatile (timestamps go to a sidecar file):
two runs with the same config digest, corpus, and seed produce byte-identical
manifests and exports when the backends are mocks.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import time
from dataclasses import dataclass
from pathlib import Path

from .annotation import PRIVACY, AnnotationReport, Responder, run_annotation
from .config import PipelineConfig, make_llm_backend, make_nli_backend
from .corpus import (
    ReviewCorpus,
    filter_by_rating,
    ingest_reviews,
    normalize_corpus,
    partition_gold,
    review_to_record,
    write_corpus,
)
from .errors import ValidationError
from .evaluation import (
    ComparisonTable,
    MetricsReport,
    confusion_from_llm,
    confusion_from_nli,
    metrics,
    random_baseline,
    select_best,
)
from .hypotheses import HypothesisSet, resolve_hypothesis_set
from .labels import BinaryLabel, PseudoLabel, Vote
from .llm.classify import VoteRecord, classify_corpus
from .nli.labeling import explain_labels
from .nli.scoring import ScoreCache, save_matrix, score_corpus

logger = logging.getLogger(__name__)

STAGE_KEYS = (
    "ingested",
    "rating_filtered",
    "nli_scored",
    "maybe_privacy",
    "llm_yes",
    "llm_no",
    "llm_failed",
    "human_confirmed",
    "human_rejected",
)

MANIFEST_FILE = "manifest.json"
TIMINGS_FILE = "timings.json"
NLI_CACHE_FILE = "nli_cache.jsonl"
PSEUDO_LABELS_FILE = "pseudo_labels.jsonl"
VOTES_FILE = "votes.jsonl"
LLM_FAILURES_FILE = "llm_failures.jsonl"
QUEUE_FILE = "annotation_queue.jsonl"
EXTRACTED_FILE = "extracted.jsonl"
ANNOTATION_STATE_FILE = "annotation_state.jsonl"
ANNOTATION_REPORT_FILE = "annotation_report.json"
SELECTION_REPORT_FILE = "selection_report.json"


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", name).strip("-") or "backend"


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


@dataclass
class RunManifest:
    run_id: str
    config_digest: str
    seed: int
    hypothesis_set: dict
    backends: dict
    counts: dict

    def validate(self, *, annotation_complete: bool = False) -> None:
        c = self.counts
        missing = [k for k in STAGE_KEYS if k not in c]
        if missing:
            raise ValidationError(f"manifest missing stage counts: {missing}")
        checks = [
            (c["rating_filtered"] <= c["ingested"], "rating_filtered exceeds ingested"),
            (c["nli_scored"] == c["rating_filtered"], "nli_scored != rating_filtered"),
            (c["maybe_privacy"] <= c["nli_scored"], "maybe_privacy exceeds nli_scored"),
            (
                c["llm_yes"] + c["llm_no"] + c["llm_failed"] == c["maybe_privacy"],
                "llm_yes + llm_no + llm_failed != maybe_privacy",
            ),
            (
                c["human_confirmed"] + c["human_rejected"] <= c["llm_yes"],
                "human labels exceed llm_yes",
            ),
        ]
        if annotation_complete:
            checks.append(
                (
                    c["human_confirmed"] + c["human_rejected"] == c["llm_yes"],
                    "annotation complete but confirmed + rejected != llm_yes",
                )
            )
        for ok, message in checks:
            if not ok:
                raise ValidationError(f"manifest conservation violated: {message}")

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "hypothesis_set": self.hypothesis_set,
            "backends": self.backends,
            "counts": {k: self.counts[k] for k in STAGE_KEYS},
        }

    def write(self, path: Path) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def read(cls, path: Path) -> "RunManifest":
        raw = json.loads(path.read_text(encoding="utf-8"))
        return cls(
            run_id=raw["run_id"],
            config_digest=raw["config_digest"],
            seed=raw["seed"],
            hypothesis_set=raw["hypothesis_set"],
            backends=raw["backends"],
            counts=dict(raw["counts"]),
        )


def _file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _run_id(config_digest: str, corpus_path: Path) -> str:
    return hashlib.sha256(f"{config_digest}:{_file_sha256(corpus_path)}".encode()).hexdigest()[:16]


class StageTimer:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self._start: float | None = None
        self._stage: str | None = None

    def begin(self, stage: str) -> None:
        self._stage = stage
        self._start = time.perf_counter()

    def end(self) -> None:
        if self._stage is not None and self._start is not None:
            self.timings[self._stage] = round(time.perf_counter() - self._start, 3)
        self._stage = None


def write_pseudo_labels(path: Path, rows: list[tuple[str, PseudoLabel, float | None, tuple[int, ...]]]) -> None:
    with path.open("w", encoding="utf-8") as handle:
        for review_id, label, threshold, triggered in rows:
            handle.write(
                json.dumps(
                    {
                        "review_id": review_id,
                        "label": label.value,
                        "threshold": threshold,
                        "triggered": list(triggered),
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_pseudo_labels(path: Path) -> dict[str, PseudoLabel]:
    labels: dict[str, PseudoLabel] = {}
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                record = json.loads(line)
                labels[record["review_id"]] = PseudoLabel(record["label"])
    return labels


def _vote_record_to_dict(record: VoteRecord) -> dict:
    return {
        "review_id": record.review_id,
        "raw_responses": list(record.raw_responses),
        "votes": [v.value for v in record.votes],
        "decision": record.decision.value,
        "tie_flag": record.tie_flag,
    }


def _vote_record_from_dict(raw: dict) -> VoteRecord:
    return VoteRecord(
        review_id=raw["review_id"],
        raw_responses=tuple(raw["raw_responses"]),
        votes=tuple(Vote(v) for v in raw["votes"]),
        decision=BinaryLabel(raw["decision"]),
        tie_flag=bool(raw["tie_flag"]),
    )


def read_votes(path: Path) -> dict[str, VoteRecord]:
    votes: dict[str, VoteRecord] = {}
    if path.exists():
        with path.open(encoding="utf-8") as handle:
            for line in handle:
                if line.strip():
                    record = _vote_record_from_dict(json.loads(line))
                    votes[record.review_id] = record
    return votes


def append_votes(path: Path, records: list[VoteRecord]) -> None:
    with path.open("a", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(_vote_record_to_dict(record), sort_keys=True) + "\n")


@dataclass
class SelectionResult:
    model_table: ComparisonTable
    hypothesis_table: ComparisonTable
    best_model: str
    best_set_id: str
    pseudo_labels: list[tuple[str, PseudoLabel, float | None, tuple[int, ...]]]


def _evaluate_labeled(
    backend,
    corpus: ReviewCorpus,
    hset: HypothesisSet,
    gold: dict[str, int],
    cache: ScoreCache,
    max_inflight: int,
    workdir: Path,
) -> tuple[MetricsReport, list[tuple[str, PseudoLabel, float | None, tuple[int, ...]]]]:
    matrix = score_corpus(backend, corpus, hset, cache=cache, max_inflight=max_inflight)
    save_matrix(matrix, workdir / f"matrix_{_slug(backend.name)}_{hset.version_hash[:8]}.bin")
    explained = explain_labels(matrix, hset.heuristics)
    rows = [
        (review_id, label, threshold, triggered)
        for review_id, (label, threshold, triggered) in zip(matrix.review_ids, explained)
    ]
    pseudo = {review_id: label for review_id, label, _, _ in rows}
    report = metrics(confusion_from_nli(gold, pseudo))
    return report, rows


def run_selection(config: PipelineConfig) -> SelectionResult:
    """Evaluate every configured NLI backend on the generic set, pick the
    best by F1, re-evaluate it on the domain set, pick the winning set, and
    emit the pseudo-labeled corpus from the winning pair."""
    if config.labeled_path is None:
        raise ValidationError("selection needs corpus.labeled in the config")
    config.workdir.mkdir(parents=True, exist_ok=True)

    corpus = ingest_reviews(
        config.labeled_path, config.corpus_format, rejects_path=config.workdir / "rejects_labeled.jsonl"
    )
    labeled, _ = partition_gold(corpus)
    if not len(labeled):
        raise ValidationError("labeled corpus contains no gold labels")
    labeled = normalize_corpus(labeled)
    gold = {r.id: r.gold_label for r in labeled}

    generic = resolve_hypothesis_set(config.hypothesis_refs["generic"], config.base_dir)
    domain = resolve_hypothesis_set(config.hypothesis_refs["domain"], config.base_dir)
    cache = ScoreCache(config.workdir / NLI_CACHE_FILE)

    candidates: list[tuple[str, MetricsReport]] = []
    rows_by_model: dict[str, list] = {}
    for backend_cfg in config.nli_backends:
        backend = make_nli_backend(backend_cfg, config.seed, config.base_dir)
        report, rows = _evaluate_labeled(
            backend, labeled, generic, gold, cache, backend_cfg.max_inflight, config.workdir
        )
        candidates.append((backend.name, report))
        rows_by_model[backend.name] = rows
        logger.info("%s on %s: P=%.3f R=%.3f F1=%.3f", backend.name, generic.set_id, report.precision, report.recall, report.f1)

    model_table = select_best(candidates)
    best_model = model_table.winner_id
    best_cfg = next(b for b in config.nli_backends if b.name == best_model)
    best_generic_report = model_table.winner().report

    if domain.version_hash == generic.version_hash:
        hypothesis_table = select_best([(generic.set_id, best_generic_report)], baseline_id=generic.set_id)
        winning_rows = rows_by_model[best_model]
        best_set_id = generic.set_id
    else:
        backend = make_nli_backend(best_cfg, config.seed, config.base_dir)
        domain_report, domain_rows = _evaluate_labeled(
            backend, labeled, domain, gold, cache, best_cfg.max_inflight, config.workdir
        )
        logger.info("%s on %s: P=%.3f R=%.3f F1=%.3f", best_model, domain.set_id, domain_report.precision, domain_report.recall, domain_report.f1)
        hypothesis_table = select_best(
            [(generic.set_id, best_generic_report), (domain.set_id, domain_report)],
            baseline_id=generic.set_id,
        )
        best_set_id = hypothesis_table.winner_id
        winning_rows = domain_rows if best_set_id == domain.set_id else rows_by_model[best_model]

    cache.close()
    write_pseudo_labels(config.workdir / PSEUDO_LABELS_FILE, winning_rows)
    write_json(
        config.workdir / SELECTION_REPORT_FILE,
        {
            "models": model_table.to_dict(),
            "hypothesis_sets": hypothesis_table.to_dict(),
            "best_model": best_model,
            "best_hypothesis_set": best_set_id,
        },
    )
    return SelectionResult(model_table, hypothesis_table, best_model, best_set_id, winning_rows)


@dataclass
class ExtractionResult:
    manifest: RunManifest
    extracted_path: Path
    queue_path: Path
    failures: list[tuple[str, str]]


def run_extraction(config: PipelineConfig) -> ExtractionResult:
    """Preprocess, NLI-score and pseudo-label the unlabeled corpus, classify
    the maybe-privacy subset with the LLM, and queue yes-decisions for
    annotation. Writes the manifest plus every stage artifact."""
    if config.unlabeled_path is None:
        raise ValidationError("extraction needs corpus.unlabeled in the config")
    config.workdir.mkdir(parents=True, exist_ok=True)
    timer = StageTimer()

    timer.begin("ingest")
    corpus = ingest_reviews(
        config.unlabeled_path, config.corpus_format, rejects_path=config.workdir / "rejects_unlabeled.jsonl"
    )
    ingested = len(corpus)
    filtered = filter_by_rating(corpus, config.rating_min, config.rating_max)
    normalized = normalize_corpus(filtered)
    timer.end()

    hset = resolve_hypothesis_set(config.hypothesis_refs["extraction"], config.base_dir)
    backend_cfg = config.nli_backends[0]
    nli_backend = make_nli_backend(backend_cfg, config.seed, config.base_dir)

    timer.begin("nli")
    cache = ScoreCache(config.workdir / NLI_CACHE_FILE)
    matrix = score_corpus(nli_backend, normalized, hset, cache=cache, max_inflight=backend_cfg.max_inflight)
    cache.close()
    save_matrix(matrix, config.workdir / f"matrix_{_slug(nli_backend.name)}_{hset.version_hash[:8]}.bin")
    explained = explain_labels(matrix, hset.heuristics)
    rows = [
        (review_id, label, threshold, triggered)
        for review_id, (label, threshold, triggered) in zip(matrix.review_ids, explained)
    ]
    write_pseudo_labels(config.workdir / PSEUDO_LABELS_FILE, rows)
    label_by_id = {review_id: label for review_id, label, _, _ in rows}
    maybe_reviews = [r for r in normalized if label_by_id[r.id] is PseudoLabel.MAYBE_PRIVACY]
    timer.end()

    timer.begin("llm")
    votes_path = config.workdir / VOTES_FILE
    existing = read_votes(votes_path)
    existing = {rid: rec for rid, rec in existing.items() if rid in {r.id for r in maybe_reviews}}
    todo = [r for r in maybe_reviews if r.id not in existing]
    llm_backend = make_llm_backend(config.llm_backend, config.llm_script)
    new_records, failures = classify_corpus(
        llm_backend, todo, hset, config.sampling, max_inflight=config.llm_backend.max_inflight
    )
    append_votes(votes_path, new_records)
    records = {rec.review_id: rec for rec in new_records}
    records.update(existing)
    ordered_records = [records[r.id] for r in maybe_reviews if r.id in records]
    with (config.workdir / LLM_FAILURES_FILE).open("w", encoding="utf-8") as handle:
        for review_id, reason in failures:
            handle.write(json.dumps({"review_id": review_id, "reason": reason}, sort_keys=True) + "\n")
    timer.end()

    timer.begin("emit")
    yes_ids = {rec.review_id for rec in ordered_records if rec.decision is BinaryLabel.YES}
    yes_reviews = [r for r in maybe_reviews if r.id in yes_ids]
    queue_path = config.workdir / QUEUE_FILE
    write_corpus(normalized.derive(tuple(yes_reviews)), queue_path)

    trigger_by_id = {review_id: (threshold, triggered) for review_id, _, threshold, triggered in rows}
    extracted_path = config.workdir / EXTRACTED_FILE
    with extracted_path.open("w", encoding="utf-8") as handle:
        for review in yes_reviews:
            record = review_to_record(review)
            threshold, triggered = trigger_by_id[review.id]
            vote = records[review.id]
            record["provenance"] = {
                "nli": {"threshold": threshold, "triggered": list(triggered)},
                "llm": {
                    "votes": [v.value for v in vote.votes],
                    "decision": vote.decision.value,
                    "tie_flag": vote.tie_flag,
                },
            }
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    timer.end()

    counts = {
        "ingested": ingested,
        "rating_filtered": len(filtered),
        "nli_scored": len(normalized),
        "maybe_privacy": len(maybe_reviews),
        "llm_yes": len(yes_reviews),
        "llm_no": sum(1 for rec in ordered_records if rec.decision is BinaryLabel.NO),
        "llm_failed": len(failures),
        "human_confirmed": 0,
        "human_rejected": 0,
    }
    manifest = RunManifest(
        run_id=_run_id(config.digest, config.unlabeled_path),
        config_digest=config.digest,
        seed=config.seed,
        hypothesis_set={"set_id": hset.set_id, "version_hash": hset.version_hash},
        backends={
            "nli": {"name": backend_cfg.name, "endpoint": backend_cfg.endpoint},
            "llm": {"name": config.llm_backend.name, "endpoint": config.llm_backend.endpoint},
        },
        counts=counts,
    )
    manifest.validate()
    manifest.write(config.workdir / MANIFEST_FILE)
    write_json(config.workdir / TIMINGS_FILE, {"stages": timer.timings})
    logger.info("extraction: %s", " -> ".join(f"{k}={counts[k]}" for k in STAGE_KEYS[:7]))
    return ExtractionResult(manifest, extracted_path, queue_path, failures)


def annotate_run(config: PipelineConfig, responder: Responder) -> AnnotationReport:
    """Run (or resume) the annotation session over the run's queue, update
    the manifest's human counts, and write the agreement report."""
    queue_path = config.workdir / QUEUE_FILE
    if not queue_path.exists():
        raise ValidationError(f"no annotation queue at {queue_path}; run extraction first")
    queue_corpus = ingest_reviews(queue_path, "jsonl")
    if not config.annotators or len(config.annotators) < 2:
        raise ValidationError("config must list at least two annotators")

    report = run_annotation(
        list(queue_corpus),
        config.annotators,
        responder,
        state_path=config.workdir / ANNOTATION_STATE_FILE,
    )
    payload = report.to_dict()
    payload["tasks"] = [
        {
            "review_id": t.review_id,
            "assigned": list(t.assigned),
            "labels": t.labels,
            "tiebreak_by": t.tiebreak_by,
            "tiebreak_label": t.tiebreak_label,
            "final_label": t.final_label,
        }
        for t in report.tasks
    ]
    write_json(config.workdir / ANNOTATION_REPORT_FILE, payload)

    manifest_path = config.workdir / MANIFEST_FILE
    if manifest_path.exists():
        manifest = RunManifest.read(manifest_path)
        manifest.counts["human_confirmed"] = report.confirmed
        manifest.counts["human_rejected"] = report.rejected
        manifest.validate(annotation_complete=not report.leftover_ids)
        manifest.write(manifest_path)
    if report.leftover_ids:
        logger.warning("annotation incomplete: %d review(s) left over", len(report.leftover_ids))
    return report


def export_dataset(config: PipelineConfig, out_path: Path, fmt: str = "csv") -> int:
    """Write the confirmed privacy reviews with full provenance; returns the
    row count. The file round-trips through ingestion (extra provenance
    columns are ignored there)."""
    extracted_path = config.workdir / EXTRACTED_FILE
    report_path = config.workdir / ANNOTATION_REPORT_FILE
    if not extracted_path.exists():
        raise ValidationError(f"no extracted reviews at {extracted_path}; run extraction first")
    if not report_path.exists():
        raise ValidationError(f"no annotation report at {report_path}; run annotation first")

    report = json.loads(report_path.read_text(encoding="utf-8"))
    finals = report.get("final_labels", {})
    tasks = {t["review_id"]: t for t in report.get("tasks", [])}

    rows = []
    with extracted_path.open(encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            record = json.loads(line)
            review_id = record["id"]
            if finals.get(review_id) != PRIVACY:
                continue
            task = tasks.get(review_id, {})
            record["label"] = 1
            record["provenance"] = dict(
                record.get("provenance", {}),
                annotation={
                    "labels": task.get("labels", {}),
                    "tiebreak_by": task.get("tiebreak_by"),
                    "tiebreak_label": task.get("tiebreak_label"),
                    "final_label": task.get("final_label"),
                },
            )
            rows.append(record)

    if fmt == "jsonl":
        with out_path.open("w", encoding="utf-8") as handle:
            for record in rows:
                handle.write(json.dumps(record, sort_keys=True) + "\n")
    elif fmt == "csv":
        import csv as _csv

        fieldnames = ["id", "app", "store", "rating", "text", "label", "date", "provenance"]
        with out_path.open("w", newline="", encoding="utf-8") as handle:
            writer = _csv.DictWriter(handle, fieldnames=fieldnames)
            writer.writeheader()
            for record in rows:
                flat = {k: record.get(k) for k in fieldnames}
                flat["provenance"] = json.dumps(record.get("provenance", {}), sort_keys=True)
                flat = {k: ("" if v is None else v) for k, v in flat.items()}
                writer.writerow(flat)
    else:
        raise ValidationError(f"unknown export format {fmt!r}")
    return len(rows)


def evaluate_run(
    config: PipelineConfig,
    *,
    pseudo_path: Path | None = None,
    votes_path: Path | None = None,
) -> dict:
    """Score pseudo-labels and/or LLM decisions against the gold corpus,
    with the random-classifier baseline for whichever subsets apply."""
    if config.labeled_path is None:
        raise ValidationError("evaluation needs corpus.labeled in the config")
    corpus = ingest_reviews(config.labeled_path, config.corpus_format)
    labeled, _ = partition_gold(corpus)
    gold = {r.id: r.gold_label for r in labeled}
    if not gold:
        raise ValidationError("labeled corpus contains no gold labels")

    result: dict = {"gold_size": len(gold)}
    if pseudo_path is not None:
        pseudo = read_pseudo_labels(pseudo_path)
        cm = confusion_from_nli(gold, pseudo)
        rep = metrics(cm)
        result["nli"] = {
            "tp": cm.tp,
            "fp": cm.fp,
            "tn": cm.tn,
            "fn": cm.fn,
            "p": rep.precision,
            "r": rep.recall,
            "f1": rep.f1,
        }
    if votes_path is not None:
        votes = read_votes(votes_path)
        decisions = {rid: rec.decision for rid, rec in votes.items()}
        subset = {rid: label for rid, label in gold.items() if rid in decisions}
        if not subset:
            raise ValidationError("no overlap between gold labels and vote records")
        cm = confusion_from_llm(subset, decisions)
        rep = metrics(cm)
        n_pos = sum(subset.values())
        result["llm"] = {
            "tp": cm.tp,
            "fp": cm.fp,
            "tn": cm.tn,
            "fn": cm.fn,
            "p": rep.precision,
            "r": rep.recall,
            "f1": rep.f1,
            "evaluated": len(subset),
        }
        if n_pos > 0:
            baseline = random_baseline(n_pos, len(subset))
            result["random_baseline"] = {
                "p": baseline.precision,
                "r": baseline.recall,
                "f1": baseline.f1,
            }
    return result
