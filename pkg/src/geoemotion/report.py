"""Tract aggregates, check-in cohorts and the tabular reports built on them.

Cohort statistics are computed over tract-level means ("distribution of
means"): each tract contributes one value per metric regardless of how many
messages it has. Message-level pooling is available for the summary table.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field, fields
from typing import IO, Iterable, Mapping, Optional, Sequence

from .ingest import DEMOGRAPHIC_FIELDS, Demographics, GeoMessage, Tract
from .mobility import TractMobility
from .sentiment import MessageScore
from .stats import CorrelationResult, pearson, rank_sum_test, welch_t_test
from .tokenize import WORD_KINDS, tokenize

EMOTION_FIELDS = ("mean_V", "mean_A", "mean_D", "mean_P", "mean_N")
METRIC_FIELDS = EMOTION_FIELDS + ("R_g",) + DEMOGRAPHIC_FIELDS + ("n_messages", "n_users", "n_checkins")
MISSING = "-"

TABLE_HEADER = ("Tracts", "#Tracts", "Valence", "Arousal", "Dominance", "Positive", "Negative")
MOBILITY_HEADER = ("Tracts", "#Tracts", "R_g (m)")
DEMOGRAPHICS_HEADER = (
    "Tracts",
    "#Tracts",
    "Median Age",
    "Hispanic",
    "Non-Hispanic",
    "Employed %",
    "Bachelors %",
)

ALL, WITH_CHECKINS, TOP = "all", "with_checkins", "top"
COHORT_KEYS = (ALL, WITH_CHECKINS, TOP)


@dataclass(frozen=True)
class TractAggregate:
    tract_id: str
    n_messages: int
    n_users: int
    n_checkins: int
    n_scored: int = 0  # messages entering the P/N means
    n_vad: int = 0  # of those, messages with a VAD match
    mean_P: Optional[float] = None
    mean_N: Optional[float] = None
    mean_V: Optional[float] = None
    mean_A: Optional[float] = None
    mean_D: Optional[float] = None
    R_g: Optional[float] = None
    n_mobility_users: int = 0
    demographics: Demographics = field(default_factory=Demographics)

    def metric(self, name: str) -> Optional[float]:
        if name in DEMOGRAPHIC_FIELDS:
            return self.demographics.get(name)
        value = getattr(self, name)
        return None if value is None else float(value)


@dataclass(frozen=True)
class Cohort:
    key: str
    label: str
    members: tuple[str, ...]
    threshold: Optional[int] = None

    def __len__(self) -> int:
        return len(self.members)


def _mean(values: Iterable[float]) -> Optional[float]:
    values = list(values)
    if not values:
        return None
    return math.fsum(values) / len(values)


def aggregate_tracts(
    messages: Sequence[GeoMessage],
    assignments: Mapping[str, Optional[str]],
    scores: Mapping[str, MessageScore],
    checkin_ids: Iterable[str],
    tract_mobility: Mapping[str, TractMobility],
    tracts: Iterable[Tract],
    include_checkin_emotion: bool = False,
) -> list[TractAggregate]:
    """One aggregate per tract with at least one localized message.

    Check-in messages count toward ``n_messages`` and ``n_checkins`` but are
    left out of the emotion means unless ``include_checkin_emotion``.
    """
    checkin_ids = set(checkin_ids)
    demographics = {t.tract_id: t.demographics for t in tracts}
    by_tract: dict[str, list[GeoMessage]] = defaultdict(list)
    for msg in messages:
        tract_id = assignments.get(msg.message_id)
        if tract_id is not None:
            by_tract[tract_id].append(msg)

    out = []
    for tract_id in sorted(by_tract):
        group = by_tract[tract_id]
        n_checkins = sum(1 for m in group if m.message_id in checkin_ids)
        scored = [
            scores[m.message_id]
            for m in group
            if m.message_id in scores and (include_checkin_emotion or m.message_id not in checkin_ids)
        ]
        vads = [s.vad for s in scored if s.vad is not None]
        mob = tract_mobility.get(tract_id)
        out.append(
            TractAggregate(
                tract_id=tract_id,
                n_messages=len(group),
                n_users=len({m.user_id for m in group}),
                n_checkins=n_checkins,
                n_scored=len(scored),
                n_vad=len(vads),
                mean_P=_mean(s.sentiment.positive for s in scored),
                mean_N=_mean(s.sentiment.negative for s in scored),
                mean_V=_mean(v.valence for v in vads),
                mean_A=_mean(v.arousal for v in vads),
                mean_D=_mean(v.dominance for v in vads),
                R_g=None if mob is None else mob.R_g,
                n_mobility_users=0 if mob is None else mob.n_users,
                demographics=demographics.get(tract_id, Demographics()),
            )
        )
    return out


def cohort_labels(k: int, region: str = "") -> dict[str, str]:
    region = region.strip()
    return {
        ALL: f"All {region} Tracts" if region else "All Tracts",
        WITH_CHECKINS: "Tracts with Check-ins",
        TOP: f"Tracts with >={k} Check-ins",
    }


def build_cohorts(aggregates: Sequence[TractAggregate], k: int = 3, region: str = "") -> dict[str, Cohort]:
    """All tracts with messages, tracts with >= 1 check-in, tracts with >= k."""
    if k < 1:
        raise ValueError("cohort threshold must be >= 1")
    if not aggregates:
        raise ValueError("no tract aggregates to build cohorts from")
    labels = cohort_labels(k, region)
    ordered = sorted(aggregates, key=lambda a: a.tract_id)
    members = {
        ALL: tuple(a.tract_id for a in ordered if a.n_messages >= 1),
        WITH_CHECKINS: tuple(a.tract_id for a in ordered if a.n_checkins >= 1),
        TOP: tuple(a.tract_id for a in ordered if a.n_checkins >= k),
    }
    return {
        key: Cohort(key, labels[key], members[key], k if key == TOP else None) for key in COHORT_KEYS
    }


# --------------------------------------------------------------------------
# summary table
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SummaryRow:
    label: str
    n_tracts: int
    values: dict[str, Optional[float]]


_MESSAGE_WEIGHT = {
    "mean_P": "n_scored",
    "mean_N": "n_scored",
    "mean_V": "n_vad",
    "mean_A": "n_vad",
    "mean_D": "n_vad",
}


def cohort_values(cohort: Cohort, aggregates: Mapping[str, TractAggregate], metric: str) -> list[float]:
    """Per-tract values of ``metric`` for cohort members, missing ones dropped."""
    values = (aggregates[t].metric(metric) for t in cohort.members)
    return [v for v in values if v is not None]


def _pooled(cohort: Cohort, aggregates: Mapping[str, TractAggregate], metric: str) -> Optional[float]:
    weight = _MESSAGE_WEIGHT[metric]
    num, den = [], 0
    for t in cohort.members:
        agg = aggregates[t]
        value, w = agg.metric(metric), getattr(agg, weight)
        if value is not None and w:
            num.append(value * w)
            den += w
    return math.fsum(num) / den if den else None


def summarize(
    cohorts: Mapping[str, Cohort],
    aggregates: Iterable[TractAggregate],
    metrics: Sequence[str] = EMOTION_FIELDS,
    pooling: str = "tract",
) -> list[SummaryRow]:
    """Cohort means of per-tract metrics, one row per cohort.

    ``pooling="message"`` weights each tract's emotion means by its number
    of contributing messages, i.e. a mean over messages instead of tracts.
    """
    if pooling not in ("tract", "message"):
        raise ValueError("pooling must be 'tract' or 'message'")
    by_id = {a.tract_id: a for a in aggregates}
    rows = []
    for key in COHORT_KEYS:
        cohort = cohorts[key]
        values = {}
        for metric in metrics:
            if pooling == "message" and metric in _MESSAGE_WEIGHT:
                values[metric] = _pooled(cohort, by_id, metric)
            else:
                values[metric] = _mean(cohort_values(cohort, by_id, metric))
        rows.append(SummaryRow(cohort.label, len(cohort), values))
    return rows


def _fmt(value: Optional[float], digits: int) -> str:
    return "NA" if value is None else f"{value:.{digits}f}"


def write_summary_csv(
    fh: IO[str], cohorts: Mapping[str, Cohort], aggregates: Sequence[TractAggregate], pooling: str = "tract"
) -> None:
    """Emotion table, then mobility and demographics blocks, blank-line separated."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TABLE_HEADER)
    for row in summarize(cohorts, aggregates, EMOTION_FIELDS, pooling):
        writer.writerow([row.label, row.n_tracts] + [_fmt(row.values[m], 3) for m in EMOTION_FIELDS])
    writer.writerow([])
    writer.writerow(MOBILITY_HEADER)
    for row in summarize(cohorts, aggregates, ("R_g",)):
        writer.writerow([row.label, row.n_tracts, _fmt(row.values["R_g"], 1)])
    writer.writerow([])
    writer.writerow(DEMOGRAPHICS_HEADER)
    for row in summarize(cohorts, aggregates, DEMOGRAPHIC_FIELDS):
        writer.writerow([row.label, row.n_tracts] + [_fmt(row.values[m], 2) for m in DEMOGRAPHIC_FIELDS])


# --------------------------------------------------------------------------
# cohort comparisons
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Comparison:
    metric: str
    cohort_a: str
    cohort_b: str
    n_a: int
    n_b: int
    mean_a: Optional[float]
    mean_b: Optional[float]
    statistic: Optional[float]
    z_value: Optional[float]
    p_value: Optional[float]
    method: str

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_value is not None and self.p_value < alpha


COMPARISON_PAIRS = ((ALL, WITH_CHECKINS), (ALL, TOP), (WITH_CHECKINS, TOP))


def compare(
    cohorts: Mapping[str, Cohort],
    aggregates: Iterable[TractAggregate],
    metric: str,
    cohort_a: str,
    cohort_b: str,
    method: str = "rank-sum",
    alternative: str = "two-sided",
) -> Comparison:
    """Test whether ``metric`` differs between two cohorts' tract values."""
    by_id = {a.tract_id: a for a in aggregates}
    xa = cohort_values(cohorts[cohort_a], by_id, metric)
    xb = cohort_values(cohorts[cohort_b], by_id, metric)
    stat = z = p = None
    used = method
    if method == "rank-sum":
        if xa and xb:
            res = rank_sum_test(xa, xb, alternative)
            stat, z, p, used = res.u_statistic, res.z_value, res.p_value, res.method
    elif method == "t":
        if len(xa) >= 2 and len(xb) >= 2:
            res = welch_t_test(xa, xb, alternative)
            stat, p, used = res.t_statistic, res.p_value, "welch-t"
    else:
        raise ValueError(f"unknown test method {method!r}")
    return Comparison(metric, cohort_a, cohort_b, len(xa), len(xb), _mean(xa), _mean(xb), stat, z, p, used)


def compare_all(
    cohorts: Mapping[str, Cohort],
    aggregates: Sequence[TractAggregate],
    metrics: Sequence[str] = EMOTION_FIELDS + ("R_g",) + DEMOGRAPHIC_FIELDS,
    method: str = "rank-sum",
) -> list[Comparison]:
    return [compare(cohorts, aggregates, m, a, b, method) for m in metrics for a, b in COMPARISON_PAIRS]


COMPARISON_HEADER = ("metric", "cohort_a", "cohort_b", "n_a", "n_b", "mean_a", "mean_b", "U", "z", "p", "method", "significant")


def _num(value: Optional[float]) -> str:
    return "NA" if value is None else repr(float(value))


def write_comparisons(fh: IO[str], comparisons: Iterable[Comparison], alpha: float = 0.05) -> None:
    writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
    writer.writerow(COMPARISON_HEADER)
    for c in comparisons:
        writer.writerow(
            [
                c.metric,
                c.cohort_a,
                c.cohort_b,
                c.n_a,
                c.n_b,
                _num(c.mean_a),
                _num(c.mean_b),
                _num(c.statistic),
                _num(c.z_value),
                _num(c.p_value),
                c.method,
                "NA" if c.p_value is None else ("yes" if c.significant(alpha) else "no"),
            ]
        )


# --------------------------------------------------------------------------
# term frequencies
# --------------------------------------------------------------------------


def term_frequencies(texts: Iterable[str], stopwords: frozenset[str] = frozenset()) -> list[tuple[str, int]]:
    """Case-folded word counts, descending, ties alphabetical.

    Tokens without a letter (bare numbers) are not terms.
    """
    counts: Counter[str] = Counter()
    for text in texts:
        for tok in tokenize(text):
            if tok.kind not in WORD_KINDS:
                continue
            word = tok.surface.lstrip("#").casefold().replace("’", "'")
            if word in stopwords or not any(ch.isalpha() for ch in word):
                continue
            counts[word] += 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def tract_term_frequencies(
    tract_id: str,
    messages: Iterable[GeoMessage],
    assignments: Mapping[str, Optional[str]],
    stopwords: frozenset[str] = frozenset(),
) -> list[tuple[str, int]]:
    texts = [m.text for m in messages if assignments.get(m.message_id) == tract_id]
    if not texts:
        raise KeyError(f"no messages localized to tract {tract_id!r}")
    return term_frequencies(texts, stopwords)


# --------------------------------------------------------------------------
# correlations
# --------------------------------------------------------------------------


def correlation_matrix(
    aggregates: Sequence[TractAggregate], metrics: Sequence[str]
) -> dict[tuple[str, str], Optional[CorrelationResult]]:
    """Pairwise Pearson r over tracts; tracts missing either field are dropped.

    A pair with fewer than 3 complete tracts or a constant field is None.
    """
    unknown = [m for m in metrics if m not in METRIC_FIELDS]
    if unknown:
        raise ValueError(f"unknown metric(s): {', '.join(unknown)}")
    out = {}
    for a in metrics:
        for b in metrics:
            pairs = [
                (x, y)
                for x, y in ((agg.metric(a), agg.metric(b)) for agg in aggregates)
                if x is not None and y is not None
            ]
            try:
                out[(a, b)] = pearson(pairs)
            except ValueError:
                out[(a, b)] = None
    return out


def write_correlations_csv(
    fh: IO[str], matrix: Mapping[tuple[str, str], Optional[CorrelationResult]], metrics: Sequence[str]
) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["field"] + list(metrics))
    for a in metrics:
        cells = []
        for b in metrics:
            res = matrix[(a, b)]
            cells.append("NA" if res is None else f"{res.r:.4f}")
        writer.writerow([a] + cells)


# --------------------------------------------------------------------------
# aggregate interchange file and map overlay
# --------------------------------------------------------------------------

AGGREGATE_COLUMNS = (
    "tract_id",
    "n_messages",
    "n_users",
    "n_checkins",
    "n_scored",
    "n_vad",
    "mean_P",
    "mean_N",
    "mean_V",
    "mean_A",
    "mean_D",
    "R_g",
    "n_mobility_users",
) + DEMOGRAPHIC_FIELDS

_INT_COLUMNS = {"n_messages", "n_users", "n_checkins", "n_scored", "n_vad", "n_mobility_users"}


def write_aggregates(fh: IO[str], aggregates: Iterable[TractAggregate]) -> None:
    writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
    writer.writerow(AGGREGATE_COLUMNS)
    for agg in aggregates:
        row = []
        for col in AGGREGATE_COLUMNS:
            value = agg.demographics.get(col) if col in DEMOGRAPHIC_FIELDS else getattr(agg, col)
            if value is None:
                row.append(MISSING)
            elif col in _INT_COLUMNS or col == "tract_id":
                row.append(str(value))
            else:
                row.append(repr(float(value)))
        writer.writerow(row)


def read_aggregates(fh: IO[str]) -> list[TractAggregate]:
    reader = csv.DictReader(fh, delimiter="\t")
    missing = set(AGGREGATE_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"aggregates file lacks columns: {', '.join(sorted(missing))}")
    out = []
    for row in reader:
        def val(col):
            raw = row[col]
            if raw == MISSING:
                return None
            return int(raw) if col in _INT_COLUMNS else float(raw)

        demo = Demographics(**{name: val(name) for name in DEMOGRAPHIC_FIELDS})
        kwargs = {
            f.name: val(f.name)
            for f in fields(TractAggregate)
            if f.name not in ("tract_id", "demographics")
        }
        out.append(TractAggregate(tract_id=row["tract_id"], demographics=demo, **kwargs))
    return out


def metric_overlay(tracts: Iterable[Tract], aggregates: Iterable[TractAggregate], metric: str) -> dict:
    """GeoJSON FeatureCollection of tract polygons annotated with ``metric``."""
    if metric not in METRIC_FIELDS:
        raise ValueError(f"unknown metric {metric!r}")
    by_id = {a.tract_id: a for a in aggregates}
    features = []
    for tract in sorted(tracts, key=lambda t: t.tract_id):
        agg = by_id.get(tract.tract_id)
        props = {
            "tract_id": tract.tract_id,
            metric: None if agg is None else agg.metric(metric),
            "n_messages": 0 if agg is None else agg.n_messages,
            "n_checkins": 0 if agg is None else agg.n_checkins,
        }
        features.append({"type": "Feature", "properties": props, "geometry": tract.to_geojson_geometry()})
    return {"type": "FeatureCollection", "features": features}


def write_overlay(fh: IO[str], overlay: dict) -> None:
    json.dump(overlay, fh, sort_keys=True)
    fh.write("\n")


def aggregate_dict(agg: TractAggregate) -> dict:
    return asdict(agg)
