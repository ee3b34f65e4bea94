"""End-to-end batch run: ingest, localize, check-ins, scoring, mobility, reports.

A run writes its stage tables, the reports and ``manifest.json`` into the
output directory. Everything except the manifest's ``runtime`` section is
a pure function of the inputs and the configuration.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from . import __version__
from .checkin import count_checkins_per_tract, find_checkins
from .errors import IngestError, InvariantError
from .geo import build_index, localize
from .ingest import (
    BUNDLED_LEMMA_EXCEPTIONS,
    BUNDLED_SENTIMENT_LEXICON,
    BUNDLED_STOPWORDS,
    BUNDLED_VAD_LEXICON,
    DEMOGRAPHIC_FIELDS,
    bundled_path,
    load_lemma_exceptions,
    load_messages,
    load_sentiment_lexicon,
    load_stopwords,
    load_tracts,
    load_vad_lexicon,
)
from .interchange import write_checkins, write_localized, write_scores, write_tract_mobility, write_user_mobility
from .mobility import tract_mobility, user_mobilities
from .report import (
    ALL,
    COHORT_KEYS,
    EMOTION_FIELDS,
    TOP,
    WITH_CHECKINS,
    aggregate_tracts,
    build_cohorts,
    compare_all,
    correlation_matrix,
    write_aggregates,
    write_comparisons,
    write_correlations_csv,
    write_summary_csv,
)
from .sentiment import Scorer, score_messages
from .tokenize import Lemmatizer

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
RG_SCOPES = ("all", "checkins")
CORRELATION_FIELDS = EMOTION_FIELDS + ("R_g",) + DEMOGRAPHIC_FIELDS
_INPUTS = ("messages", "tracts", "sentiment_lexicon", "vad_lexicon", "lemma_exceptions", "stopwords")
_BUNDLED = {
    "sentiment_lexicon": BUNDLED_SENTIMENT_LEXICON,
    "vad_lexicon": BUNDLED_VAD_LEXICON,
    "lemma_exceptions": BUNDLED_LEMMA_EXCEPTIONS,
    "stopwords": BUNDLED_STOPWORDS,
}


@dataclass
class PipelineConfig:
    messages: str
    tracts: str
    # lexicon paths left as None use the copies shipped with the package
    sentiment_lexicon: Optional[str] = None
    vad_lexicon: Optional[str] = None
    lemma_exceptions: Optional[str] = None
    stopwords: Optional[str] = None
    k: int = 3
    include_checkin_emotion: bool = False
    rg_scope: str = "all"
    strict: bool = False
    workers: int = 1
    output_dir: str = "out"
    region: str = ""
    tract_vintage: Optional[str] = None
    test_method: str = "rank-sum"
    pooling: str = "tract"

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise IngestError(f"unknown config keys: {', '.join(unknown)}")
        for key in ("messages", "tracts"):
            if key not in data:
                raise IngestError(f"config lacks required key {key!r}")
        cfg = cls(**data)
        if base_dir is not None:
            base = Path(base_dir)
            for key in _INPUTS + ("output_dir",):
                value = getattr(cfg, key)
                if value is not None and not Path(value).is_absolute():
                    setattr(cfg, key, str(base / value))
        return cfg

    @classmethod
    def from_file(cls, path, overrides: Optional[dict] = None) -> "PipelineConfig":
        """Load a JSON config; relative paths resolve against its directory."""
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise IngestError(f"cannot read config: {exc.strerror}", path) from None
        except json.JSONDecodeError as exc:
            raise IngestError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
        if not isinstance(data, dict):
            raise IngestError("config must be a JSON object", path)
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_dict(data, base_dir=path.parent)

    def input_path(self, name: str) -> Path:
        value = getattr(self, name)
        return bundled_path(_BUNDLED[name]) if value is None else Path(value)

    def validate(self) -> None:
        """Check every setting and input path before any work starts."""
        if not isinstance(self.k, int) or self.k < 1:
            raise IngestError("k must be an integer >= 1")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise IngestError("workers must be an integer >= 1")
        if self.rg_scope not in RG_SCOPES:
            raise IngestError(f"rg_scope must be one of {RG_SCOPES}")
        if self.test_method not in ("rank-sum", "t"):
            raise IngestError("test_method must be 'rank-sum' or 't'")
        if self.pooling not in ("tract", "message"):
            raise IngestError("pooling must be 'tract' or 'message'")
        for name in _INPUTS:
            path = self.input_path(name)
            if not path.is_file():
                raise IngestError(f"{name} input not found", path)

    def recorded(self) -> dict:
        """Settings that shape the outputs; worker count and paths excluded."""
        data = asdict(self)
        for key in _INPUTS + ("output_dir", "workers"):
            data.pop(key)
        return data


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class _Run:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.output_dir)
        self.manifest = {
            "tool": "geoemotion",
            "version": __version__,
            "status": "running",
            "config": config.recorded(),
            "inputs": {},
            "counts": {},
            "cohorts": {},
            "checks": {},
            "outputs": {},
            "runtime": {"workers": config.workers, "stage_seconds": {}},
        }

    @contextmanager
    def stage(self, name):
        logger.info("stage %s", name)
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.manifest["runtime"]["stage_seconds"][name] = round(time.perf_counter() - t0, 6)

    def emit(self, name, writer, *args):
        path = self.out / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer(fh, *args)
        self.manifest["outputs"][name] = sha256_file(path)

    def write_manifest(self):
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / MANIFEST
        path.write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _check(run: _Run, name: str, ok: bool, detail: str) -> None:
    run.manifest["checks"][name] = bool(ok)
    if not ok:
        raise InvariantError(f"{name}: {detail}")


def _execute(run: _Run) -> None:
    cfg = run.config
    counts = run.manifest["counts"]
    cfg.validate()
    run.out.mkdir(parents=True, exist_ok=True)
    for name in _INPUTS:
        path = cfg.input_path(name)
        run.manifest["inputs"][name] = {"file": path.name, "sha256": sha256_file(path)}
    if cfg.tract_vintage is not None:
        run.manifest["inputs"]["tracts"]["vintage"] = cfg.tract_vintage

    with run.stage("ingest"):
        messages, stats = load_messages(cfg.input_path("messages"), strict=cfg.strict)
        counts.update(
            lines_total=stats.total,
            messages_accepted=stats.accepted,
            messages_rejected=stats.rejected,
            messages_duplicate=stats.duplicates,
        )
        if not messages:
            raise IngestError("no valid messages", cfg.input_path("messages"))
        tracts = load_tracts(cfg.input_path("tracts"))
        counts["tracts_loaded"] = len(tracts)
        if not tracts:
            raise IngestError("no tracts", cfg.input_path("tracts"))
        senti = load_sentiment_lexicon(cfg.input_path("sentiment_lexicon"))
        vad = load_vad_lexicon(cfg.input_path("vad_lexicon"))
        lemmatizer = Lemmatizer(load_lemma_exceptions(cfg.input_path("lemma_exceptions")))
        load_stopwords(cfg.input_path("stopwords"))

    with run.stage("localize"):
        index = build_index(tracts)
        located = localize(index, [(m.lat, m.lon) for m in messages], cfg.workers)
        assignments = {m.message_id: t for m, t in zip(messages, located)}
        counts["messages_localized"] = sum(1 for t in located if t is not None)
        counts["messages_unlocalized"] = len(messages) - counts["messages_localized"]
        run.emit("localized.tsv", write_localized, assignments)

    with run.stage("checkins"):
        checkins = find_checkins(messages, cfg.workers)
        per_tract, unlocalized_checkins = count_checkins_per_tract(checkins, assignments)
        counts["checkins_found"] = len(checkins)
        counts["checkins_localized"] = len(checkins) - unlocalized_checkins
        run.emit("checkins.tsv", write_checkins, checkins, assignments)

    with run.stage("score"):
        scores = score_messages(messages, Scorer(senti, vad, lemmatizer), cfg.workers)
        counts["messages_scored"] = len(scores)
        counts["messages_vad_matched"] = sum(1 for s in scores if s.vad is not None)
        run.emit("scores.tsv", write_scores, scores)

    checkin_ids = {c.message_id for c in checkins}
    with run.stage("mobility"):
        restrict = checkin_ids if cfg.rg_scope == "checkins" else None
        users = user_mobilities(messages, restrict_to=restrict, workers=cfg.workers)
        # tract R_g averages users with a localized message there (and, in
        # check-ins-only scope, a localized check-in)
        pairs = {
            m.message_id: (m.user_id, assignments[m.message_id])
            for m in messages
            if restrict is None or m.message_id in restrict
        }
        tract_mob = tract_mobility(users, pairs)
        counts["users"] = len({m.user_id for m in messages})
        counts["users_with_mobility"] = len(users)
        run.emit("users_mobility.tsv", write_user_mobility, users.values())
        run.emit("tracts_mobility.tsv", write_tract_mobility, tract_mob.values())

    with run.stage("aggregate"):
        score_map = {s.message_id: s for s in scores}
        aggregates = aggregate_tracts(
            messages, assignments, score_map, checkin_ids, tract_mob, tracts, cfg.include_checkin_emotion
        )
        cohorts = build_cohorts(aggregates, cfg.k, cfg.region)
        counts["tracts_with_messages"] = len(aggregates)
        for key in COHORT_KEYS:
            run.manifest["cohorts"][key] = {"label": cohorts[key].label, "tracts": len(cohorts[key])}
        _consistency(run, messages, aggregates, cohorts, per_tract)

    with run.stage("reports"):
        run.emit("aggregates.tsv", write_aggregates, aggregates)
        run.emit("summary.csv", write_summary_csv, cohorts, aggregates, cfg.pooling)
        comparisons = compare_all(cohorts, aggregates, method=cfg.test_method)
        run.emit("comparisons.tsv", write_comparisons, comparisons)
        matrix = correlation_matrix(aggregates, CORRELATION_FIELDS)
        run.emit("correlations.csv", write_correlations_csv, matrix, CORRELATION_FIELDS)


_BOUNDS = {"mean_P": (1, 5), "mean_N": (-5, -1), "mean_V": (1, 9), "mean_A": (1, 9), "mean_D": (1, 9)}


def _consistency(run, messages, aggregates, cohorts, per_tract) -> None:
    c = run.manifest["counts"]
    _check(run, "localized_le_accepted", c["messages_localized"] <= c["messages_accepted"], "more localized than accepted")
    _check(run, "checkins_le_accepted", c["checkins_found"] <= c["messages_accepted"], "more check-ins than messages")
    _check(
        run,
        "localized_checkins_le_localized",
        c["checkins_localized"] <= c["messages_localized"],
        "more localized check-ins than localized messages",
    )
    _check(run, "scored_eq_accepted", c["messages_scored"] == c["messages_accepted"], "scored count mismatch")
    _check(
        run,
        "aggregate_messages_sum",
        sum(a.n_messages for a in aggregates) == c["messages_localized"],
        "tract message counts do not add up to localized messages",
    )
    _check(
        run,
        "aggregate_checkins_sum",
        {a.tract_id: a.n_checkins for a in aggregates if a.n_checkins} == per_tract,
        "tract check-in counts disagree with the check-in table",
    )
    _check(run, "checkins_le_messages", all(a.n_checkins <= a.n_messages for a in aggregates), "tract with more check-ins than messages")
    in_bounds = True
    for a in aggregates:
        for name, (lo, hi) in _BOUNDS.items():
            v = getattr(a, name)
            if v is not None and not (lo <= v <= hi and math.isfinite(v)):
                in_bounds = False
    _check(run, "means_in_bounds", in_bounds, "tract mean outside its scale")
    top, mid, every = (set(cohorts[k].members) for k in (TOP, WITH_CHECKINS, ALL))
    _check(run, "cohort_nesting", top <= mid <= every, "cohorts are not nested")


def run_pipeline(config: PipelineConfig) -> tuple[int, dict]:
    """Run every stage; returns (exit status, manifest).

    Exit status is 0 on success, 1 for bad input and 2 when an internal
    consistency check fails. A manifest is written in every case.
    """
    run = _Run(config)
    status = 0
    try:
        _execute(run)
        run.manifest["status"] = "ok"
    except IngestError as exc:
        status = 1
        run.manifest["status"] = "failed"
        run.manifest["error"] = str(exc)
    except InvariantError as exc:
        status = 2
        run.manifest["status"] = "invariant-violation"
        run.manifest["error"] = str(exc)
    try:
        run.write_manifest()
    except OSError as exc:
        logger.error("cannot write manifest: %s", exc)
        if status == 0:
            status = 1
    return status, run.manifest


def stable_manifest(manifest: dict) -> dict:
    """The manifest without its run-dependent ``runtime`` section."""
    return {k: v for k, v in manifest.items() if k != "runtime"}
