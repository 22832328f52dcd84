"""Review data model plus ingestion, normalization, filtering, and partitioning.

Every downstream stage consumes the :class:`Review` / :class:`ReviewCorpus`
types defined here. Ingestion never drops records silently: anything that
fails validation lands in a machine-readable rejects file.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from enum import Enum
from pathlib import Path

from .errors import SchemaMismatchError, ValidationError

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("id", "app", "store", "rating", "text", "label", "date")
_REQUIRED = ("id", "app", "store", "rating", "text")


class Store(str, Enum):
    GOOGLE_PLAY = "google_play"
    APPLE_APP_STORE = "apple_app_store"
    OTHER = "other"


def normalize_text(text_raw: str) -> str:
    """Lowercase, replace every non-alphanumeric character with a space,
    collapse space runs, and trim.

    Idempotent: ``normalize_text(normalize_text(x)) == normalize_text(x)``.
    """
    lowered = text_raw.lower()
    cleaned = "".join(ch if ch.isalnum() else " " for ch in lowered)
    return " ".join(cleaned.split())


@dataclass(frozen=True)
class Review:
    """One app-store review.

    ``gold_label`` is the manual annotation (1 = privacy-related,
    0 = non-privacy) when the review belongs to the labeled sample;
    ``text_norm`` is derived, never ingested.
    """

    id: str
    app_name: str
    store: Store
    rating: int
    text_raw: str
    text_norm: str | None = None
    submitted_at: date | None = None
    gold_label: int | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("review id must be non-empty")
        if not isinstance(self.rating, int) or not 1 <= self.rating <= 5:
            raise ValidationError(f"rating must be an integer in [1, 5], got {self.rating!r}")
        if self.gold_label is not None and self.gold_label not in (0, 1):
            raise ValidationError(f"gold_label must be 0 or 1, got {self.gold_label!r}")
        if self.text_norm is not None and normalize_text(self.text_norm) != self.text_norm:
            raise ValidationError("text_norm is not in normalized form")

    def normalized(self) -> "Review":
        """Return a copy with ``text_norm`` derived from ``text_raw``."""
        return replace(self, text_norm=normalize_text(self.text_raw))


@dataclass(frozen=True)
class Provenance:
    source: str
    ingested_at: str | None = None
    counts: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ReviewCorpus:
    reviews: tuple[Review, ...]
    provenance: Provenance

    def __post_init__(self) -> None:
        recorded = self.provenance.counts.get("reviews")
        if recorded != len(self.reviews):
            raise ValidationError(
                f"provenance counts record {recorded} reviews but corpus holds {len(self.reviews)}"
            )
        seen: set[str] = set()
        for review in self.reviews:
            if review.id in seen:
                raise ValidationError(f"duplicate review id {review.id!r} in corpus")
            seen.add(review.id)

    def __len__(self) -> int:
        return len(self.reviews)

    def __iter__(self):
        return iter(self.reviews)

    def derive(self, reviews: tuple[Review, ...], **extra_counts: int) -> "ReviewCorpus":
        """New corpus over ``reviews`` keeping source lineage, counts refreshed."""
        counts = dict(self.provenance.counts, reviews=len(reviews), **extra_counts)
        return ReviewCorpus(reviews, replace(self.provenance, counts=counts))


def _parse_record(raw: dict, line_no: int) -> Review:
    for key in _REQUIRED:
        value = raw.get(key)
        if value is None or (isinstance(value, str) and not value.strip()):
            raise ValidationError(f"missing required field '{key}'")

    try:
        store = Store(str(raw["store"]).strip())
    except ValueError:
        raise ValidationError(f"unknown store {raw['store']!r}") from None

    try:
        rating = int(str(raw["rating"]).strip())
    except ValueError:
        raise ValidationError(f"rating {raw['rating']!r} is not an integer") from None
    if not 1 <= rating <= 5:
        raise ValidationError(f"rating {rating} outside [1, 5]")

    label_raw = raw.get("label")
    gold_label: int | None = None
    if label_raw is not None and str(label_raw).strip() != "":
        try:
            gold_label = int(str(label_raw).strip())
        except ValueError:
            raise ValidationError(f"label {label_raw!r} is not 0/1") from None
        if gold_label not in (0, 1):
            raise ValidationError(f"label {gold_label} is not 0/1")

    date_raw = raw.get("date")
    submitted_at: date | None = None
    if date_raw is not None and str(date_raw).strip() != "":
        text = str(date_raw).strip()
        try:
            submitted_at = datetime.fromisoformat(text).date()
        except ValueError:
            try:
                submitted_at = date.fromisoformat(text)
            except ValueError:
                raise ValidationError(f"date {text!r} is not ISO-8601") from None

    return Review(
        id=str(raw["id"]).strip(),
        app_name=str(raw["app"]).strip(),
        store=store,
        rating=rating,
        text_raw=str(raw["text"]),
        submitted_at=submitted_at,
        gold_label=gold_label,
    )


def _iter_csv(path: Path):
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or "id" not in reader.fieldnames:
            raise ValidationError(f"{path}: missing CSV header with an 'id' column")
        for record in reader:
            record.pop(None, None)  # spill cells beyond the header
            yield reader.line_num, record


def _iter_jsonl(path: Path):
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                yield line_no, ValidationError(f"invalid json: {exc.msg}")
                continue
            if not isinstance(record, dict):
                yield line_no, ValidationError("record is not a JSON object")
                continue
            yield line_no, record


def detect_format(source: Path) -> str:
    suffix = source.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    raise ValidationError(f"cannot infer format from {source.name!r}; pass format explicitly")


def ingest_reviews(
    source: str | Path,
    fmt: str | None = None,
    *,
    rejects_path: str | Path | None = None,
) -> ReviewCorpus:
    """Read a review file into a corpus, routing bad records to a rejects file.

    Unknown columns/keys are ignored so provenance-enriched exports remain
    round-trippable. Aborts with :class:`SchemaMismatchError` when more than
    half of the records fail validation.
    """
    source = Path(source)
    if not source.exists():
        raise ValidationError(f"no such file: {source}")
    fmt = fmt or detect_format(source)
    if fmt == "csv":
        records = _iter_csv(source)
    elif fmt == "jsonl":
        records = _iter_jsonl(source)
    else:
        raise ValidationError(f"unknown format {fmt!r} (expected csv or jsonl)")

    reviews: list[Review] = []
    rejects: list[dict] = []
    seen_ids: set[str] = set()
    for line_no, record in records:
        if isinstance(record, ValidationError):
            rejects.append({"line_no": line_no, "reason": str(record)})
            continue
        try:
            review = _parse_record(record, line_no)
        except ValidationError as exc:
            rejects.append({"line_no": line_no, "reason": str(exc)})
            continue
        if review.id in seen_ids:
            rejects.append({"line_no": line_no, "reason": f"duplicate id {review.id!r}"})
            continue
        seen_ids.add(review.id)
        reviews.append(review)

    if rejects_path is not None or rejects:
        target = Path(rejects_path) if rejects_path else source.with_name(source.name + ".rejects.jsonl")
        with target.open("w", encoding="utf-8") as handle:
            for entry in rejects:
                handle.write(json.dumps(entry, sort_keys=True) + "\n")
        if rejects:
            logger.warning("%s: rejected %d record(s), see %s", source.name, len(rejects), target)

    total = len(reviews) + len(rejects)
    if total and len(rejects) * 2 > total:
        raise SchemaMismatchError(
            f"{source}: {len(rejects)} of {total} records rejected; file does not match the schema"
        )

    provenance = Provenance(
        source=str(source),
        ingested_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        counts={"reviews": len(reviews), "rejected": len(rejects)},
    )
    return ReviewCorpus(tuple(reviews), provenance)


def normalize_corpus(corpus: ReviewCorpus) -> ReviewCorpus:
    """Corpus with ``text_norm`` filled in for every review."""
    return corpus.derive(tuple(r.normalized() for r in corpus))


def filter_by_rating(corpus: ReviewCorpus, min_rating: int, max_rating: int) -> ReviewCorpus:
    """Keep reviews with ``min_rating <= rating <= max_rating``, order preserved."""
    if not (1 <= min_rating <= max_rating <= 5):
        raise ValidationError(f"invalid rating bounds ({min_rating}, {max_rating})")
    kept = tuple(r for r in corpus if min_rating <= r.rating <= max_rating)
    return corpus.derive(kept)


def partition_gold(corpus: ReviewCorpus) -> tuple[ReviewCorpus, ReviewCorpus]:
    """Split into (labeled, unlabeled) by presence of a gold label."""
    labeled = tuple(r for r in corpus if r.gold_label is not None)
    unlabeled = tuple(r for r in corpus if r.gold_label is None)
    return corpus.derive(labeled), corpus.derive(unlabeled)


def review_to_record(review: Review) -> dict:
    """Flat dict matching the ingestion schema (plus nothing else)."""
    return {
        "id": review.id,
        "app": review.app_name,
        "store": review.store.value,
        "rating": review.rating,
        "text": review.text_raw,
        "label": review.gold_label,
        "date": review.submitted_at.isoformat() if review.submitted_at else None,
    }


def write_corpus(corpus: ReviewCorpus, path: str | Path, fmt: str = "jsonl") -> None:
    """Write a corpus back out in the ingestion schema (csv or jsonl)."""
    path = Path(path)
    if fmt == "jsonl":
        with path.open("w", encoding="utf-8") as handle:
            for review in corpus:
                handle.write(json.dumps(review_to_record(review), sort_keys=True) + "\n")
    elif fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for review in corpus:
                record = review_to_record(review)
                record = {k: ("" if v is None else v) for k, v in record.items()}
                writer.writerow(record)
    else:
        raise ValidationError(f"unknown format {fmt!r} (expected csv or jsonl)")
