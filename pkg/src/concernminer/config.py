"""Pipeline configuration: one JSON file, CLI overrides, content digest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .llm.backends import HttpLlmBackend, MockLlmBackend, load_llm_script
from .llm.classify import SamplingSettings
from .nli.backends import DEFAULT_TRIGGER_TABLE, HttpNliBackend, MockNliBackend, load_trigger_table

MOCK_ENDPOINT = "mock"


@dataclass(frozen=True)
class NliBackendConfig:
    name: str
    endpoint: str
    timeout: float = 30.0
    max_inflight: int = 8
    max_retries: int = 3
    mock_table: str | None = None
    response_fields: dict | None = None  # remap entailment/neutral/contradiction keys


@dataclass(frozen=True)
class LlmBackendConfig:
    name: str
    endpoint: str
    timeout: float = 60.0
    max_inflight: int = 4
    max_retries: int = 3


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    workdir: Path
    labeled_path: Path | None
    unlabeled_path: Path | None
    corpus_format: str | None
    rating_min: int
    rating_max: int
    hypothesis_refs: dict[str, str]
    nli_backends: tuple[NliBackendConfig, ...]
    llm_backend: LlmBackendConfig
    llm_script: Path | None
    sampling: SamplingSettings
    annotators: tuple[str, ...]
    digest: str
    base_dir: Path = field(default_factory=Path)


def _resolve(base_dir: Path, value: str | None) -> Path | None:
    if value is None:
        return None
    path = Path(value)
    return path if path.is_absolute() else base_dir / path


def config_digest(raw: dict) -> str:
    """Digest of the behavior-affecting config content.

    The working directory is an output location, not behavior, so it is
    excluded: identical configs pointed at different workdirs compare equal.
    """
    trimmed = {k: v for k, v in raw.items() if k != "workdir"}
    canonical = json.dumps(trimmed, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _parse_nli_backend(raw: dict) -> NliBackendConfig:
    try:
        return NliBackendConfig(
            name=str(raw["name"]),
            endpoint=str(raw["endpoint"]),
            timeout=float(raw.get("timeout", 30.0)),
            max_inflight=int(raw.get("max_inflight", 8)),
            max_retries=int(raw.get("max_retries", 3)),
            mock_table=raw.get("mock_table"),
            response_fields=raw.get("response_fields"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed NLI backend config: {exc}") from None


def parse_config(raw: dict, base_dir: Path) -> PipelineConfig:
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    try:
        corpus = raw.get("corpus", {})
        nli = raw.get("nli", {})
        llm = raw.get("llm", {})
        backend_raw = llm.get("backend", {})
        sampling_raw = llm.get("sampling", {})

        backends = tuple(_parse_nli_backend(b) for b in nli.get("backends", []))
        if not backends:
            raise ValidationError("config needs at least one NLI backend")

        llm_backend = LlmBackendConfig(
            name=str(backend_raw.get("name", "llm")),
            endpoint=str(backend_raw.get("endpoint", MOCK_ENDPOINT)),
            timeout=float(backend_raw.get("timeout", 60.0)),
            max_inflight=int(backend_raw.get("max_inflight", 4)),
            max_retries=int(backend_raw.get("max_retries", 3)),
        )
        sampling = SamplingSettings(
            temperature=float(sampling_raw.get("temperature", 0.3)),
            top_p=float(sampling_raw.get("top_p", 0.9)),
            num_samples=int(sampling_raw.get("num_samples", 5)),
            max_response_tokens=int(sampling_raw.get("max_response_tokens", 64)),
        )
        hypothesis_refs = {
            "generic": "builtin:generic",
            "domain": "builtin:domain-mh",
            "extraction": "builtin:domain-mh",
        }
        hypothesis_refs.update({str(k): str(v) for k, v in raw.get("hypotheses", {}).items()})

        rating_min = int(corpus.get("rating_min", 1))
        rating_max = int(corpus.get("rating_max", 5))
        if not 1 <= rating_min <= rating_max <= 5:
            raise ValidationError(f"invalid rating bounds ({rating_min}, {rating_max})")

        workdir = _resolve(base_dir, str(raw.get("workdir", "runs/default")))
        assert workdir is not None

        return PipelineConfig(
            seed=int(raw.get("seed", 0)),
            workdir=workdir,
            labeled_path=_resolve(base_dir, corpus.get("labeled")),
            unlabeled_path=_resolve(base_dir, corpus.get("unlabeled")),
            corpus_format=corpus.get("format"),
            rating_min=rating_min,
            rating_max=rating_max,
            hypothesis_refs=hypothesis_refs,
            nli_backends=backends,
            llm_backend=llm_backend,
            llm_script=_resolve(base_dir, llm.get("script")),
            sampling=sampling,
            annotators=tuple(str(a) for a in raw.get("annotators", ())),
            digest=config_digest(raw),
            base_dir=base_dir,
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed config: {exc}") from None


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    """Read a config file, apply CLI overrides, and recompute the digest."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    if overrides:
        raw = apply_overrides(raw, overrides)
    return parse_config(raw, path.parent.resolve())


def apply_overrides(raw: dict, overrides: dict) -> dict:
    """Fold CLI override flags into the raw config dict."""
    raw = json.loads(json.dumps(raw))  # deep copy
    if overrides.get("seed") is not None:
        raw["seed"] = overrides["seed"]
    if overrides.get("hypotheses") is not None:
        raw.setdefault("hypotheses", {})["extraction"] = overrides["hypotheses"]
    if overrides.get("nli_endpoint") is not None:
        for backend in raw.get("nli", {}).get("backends", []):
            backend["endpoint"] = overrides["nli_endpoint"]
    if overrides.get("llm_endpoint") is not None:
        raw.setdefault("llm", {}).setdefault("backend", {})["endpoint"] = overrides["llm_endpoint"]
    if overrides.get("max_inflight") is not None:
        for backend in raw.get("nli", {}).get("backends", []):
            backend["max_inflight"] = overrides["max_inflight"]
        raw.setdefault("llm", {}).setdefault("backend", {})["max_inflight"] = overrides["max_inflight"]
    if overrides.get("workdir") is not None:
        raw["workdir"] = overrides["workdir"]
    return raw


def make_nli_backend(cfg: NliBackendConfig, seed: int, base_dir: Path | None = None):
    """Instantiate the scoring backend an NLI config block describes."""
    if cfg.endpoint == MOCK_ENDPOINT:
        triggers = DEFAULT_TRIGGER_TABLE
        if cfg.mock_table:
            table_path = _resolve(base_dir or Path(), cfg.mock_table)
            triggers = load_trigger_table(table_path)
        return MockNliBackend(cfg.name, seed=seed, triggers=triggers)
    return HttpNliBackend(
        cfg.name,
        cfg.endpoint,
        timeout=cfg.timeout,
        max_retries=cfg.max_retries,
        response_fields=cfg.response_fields,
    )


def make_llm_backend(cfg: LlmBackendConfig, script_path: Path | None):
    """Instantiate the chat backend an LLM config block describes."""
    if cfg.endpoint == MOCK_ENDPOINT:
        script = load_llm_script(script_path) if script_path else None
        return MockLlmBackend(script, name=cfg.name)
    return HttpLlmBackend(
        cfg.name,
        cfg.endpoint,
        timeout=cfg.timeout,
        max_retries=cfg.max_retries,
    )
