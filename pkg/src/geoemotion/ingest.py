"""Readers and validators for message corpora, tract geodata and lexicons.

Everything here produces immutable domain objects; downstream modules never
touch the raw files.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .errors import IngestError

logger = logging.getLogger(__name__)

MESSAGE_KEYS = ("message_id", "user_id", "timestamp", "lat", "lon", "text")
DEMOGRAPHIC_FIELDS = (
    "median_age",
    "hispanic_pop",
    "non_hispanic_pop",
    "pct_employed",
    "pct_bachelors",
)
SENTIMENT_SECTIONS = ("terms", "boosters", "negators", "emoticons", "idioms")

# kept in IngestStats.errors so a very dirty file cannot blow up memory
MAX_RECORDED_ERRORS = 100

Point = tuple[float, float]  # (lon, lat), GeoJSON axis order
Ring = tuple[Point, ...]
Polygon = tuple[Ring, ...]  # exterior first, then holes


@dataclass(frozen=True, slots=True)
class GeoMessage:
    message_id: str
    user_id: str
    timestamp: datetime
    lat: float
    lon: float
    text: str

    def to_json(self) -> str:
        record = {
            "message_id": self.message_id,
            "user_id": self.user_id,
            "timestamp": self.timestamp.isoformat(),
            "lat": self.lat,
            "lon": self.lon,
            "text": self.text,
        }
        return json.dumps(record, ensure_ascii=False)


@dataclass(frozen=True, slots=True)
class Demographics:
    """Census attributes of one tract. ``None`` marks a missing value."""

    median_age: Optional[float] = None
    hispanic_pop: Optional[float] = None
    non_hispanic_pop: Optional[float] = None
    pct_employed: Optional[float] = None
    pct_bachelors: Optional[float] = None

    def get(self, name: str) -> Optional[float]:
        return getattr(self, name)


@dataclass(frozen=True, slots=True)
class Tract:
    tract_id: str
    polygons: tuple[Polygon, ...]
    demographics: Demographics = field(default_factory=Demographics)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        """(min_lon, min_lat, max_lon, max_lat) over exterior rings."""
        xs = [x for poly in self.polygons for x, _ in poly[0]]
        ys = [y for poly in self.polygons for _, y in poly[0]]
        return min(xs), min(ys), max(xs), max(ys)

    def rings(self) -> Iterable[Ring]:
        for poly in self.polygons:
            yield from poly

    def to_geojson_geometry(self) -> dict:
        coords = [[[list(p) for p in ring] for ring in poly] for poly in self.polygons]
        if len(coords) == 1:
            return {"type": "Polygon", "coordinates": coords[0]}
        return {"type": "MultiPolygon", "coordinates": coords}


@dataclass(frozen=True)
class SentimentLexicon:
    term_strengths: dict[str, int]
    boosters: dict[str, int]
    negators: frozenset[str]
    emoticons: dict[str, int]
    idioms: dict[tuple[str, ...], int]

    def __post_init__(self):
        # trailing "*" terms match by prefix; longest prefix wins
        stems = sorted(
            (t[:-1] for t in self.term_strengths if t.endswith("*")),
            key=lambda s: (-len(s), s),
        )
        object.__setattr__(self, "_stems", tuple(stems))
        words = set()
        for phrase in self.idioms:
            words.update(phrase)
        object.__setattr__(self, "_idiom_words", frozenset(words))
        object.__setattr__(
            self, "_max_idiom_len", max((len(p) for p in self.idioms), default=0)
        )

    def term_strength(self, word: str) -> Optional[int]:
        strength = self.term_strengths.get(word)
        if strength is not None:
            return strength
        for stem in self._stems:
            if word.startswith(stem):
                return self.term_strengths[stem + "*"]
        return None

    def is_idiom_word(self, word: str) -> bool:
        return word in self._idiom_words

    @property
    def max_idiom_len(self) -> int:
        return self._max_idiom_len

    def knows_word(self, word: str) -> bool:
        """True if ``word`` plays any role in scoring."""
        return (
            self.term_strength(word) is not None
            or word in self.boosters
            or word in self.negators
            or word in self._idiom_words
        )


@dataclass(frozen=True)
class VadLexicon:
    entries: dict[str, tuple[float, float, float]]

    def __contains__(self, lemma: str) -> bool:
        return lemma in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class IngestStats:
    total: int = 0
    accepted: int = 0
    rejected: int = 0
    duplicates: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "duplicates": self.duplicates,
        }


# --------------------------------------------------------------------------
# messages
# --------------------------------------------------------------------------


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO 8601 instant that carries an explicit UTC offset."""
    if not isinstance(value, str):
        raise ValueError("timestamp must be a string")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None or ts.utcoffset() is None:
        raise ValueError(f"timestamp {value!r} has no UTC offset")
    return ts.astimezone(timezone.utc)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def parse_message(line: str) -> GeoMessage:
    """Validate one JSONL record. Raises ValueError describing the defect."""
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc.msg}") from None
    if not isinstance(record, dict):
        raise ValueError("record is not a JSON object")
    missing = [k for k in MESSAGE_KEYS if k not in record]
    if missing:
        raise ValueError(f"missing keys: {', '.join(missing)}")
    extra = sorted(set(record) - set(MESSAGE_KEYS))
    if extra:
        raise ValueError(f"unexpected keys: {', '.join(extra)}")
    for key in ("message_id", "user_id", "text"):
        if not isinstance(record[key], str):
            raise ValueError(f"{key} must be a string")
    if not record["message_id"] or not record["user_id"]:
        raise ValueError("message_id and user_id must be nonempty")
    lat, lon = record["lat"], record["lon"]
    if not (_is_number(lat) and _is_number(lon)):
        raise ValueError("lat/lon must be numbers")
    lat, lon = float(lat), float(lon)
    if not (math.isfinite(lat) and -90.0 <= lat <= 90.0):
        raise ValueError(f"lat {lat} out of range")
    if not (math.isfinite(lon) and -180.0 <= lon <= 180.0):
        raise ValueError(f"lon {lon} out of range")
    timestamp = parse_timestamp(record["timestamp"])
    return GeoMessage(
        message_id=record["message_id"],
        user_id=record["user_id"],
        timestamp=timestamp,
        lat=lat,
        lon=lon,
        text=record["text"],
    )


def load_messages(path, strict: bool = False) -> tuple[list[GeoMessage], IngestStats]:
    """Load a JSONL message corpus.

    Valid records come back in file order. With ``strict`` the first
    malformed line raises :class:`IngestError`; otherwise it is skipped and
    counted. A repeated ``message_id`` keeps the first occurrence.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IngestError(f"cannot read messages: {exc.strerror}", path) from exc

    stats = IngestStats()
    messages: list[GeoMessage] = []
    seen: set[str] = set()
    lines = raw.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    for lineno, chunk in enumerate(lines, start=1):
        stats.total += 1
        try:
            msg = parse_message(chunk.decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            reason = str(exc) if isinstance(exc, ValueError) else "invalid UTF-8"
            if strict:
                raise IngestError(reason, path, lineno) from None
            stats.rejected += 1
            if len(stats.errors) < MAX_RECORDED_ERRORS:
                stats.errors.append((lineno, reason))
            continue
        if msg.message_id in seen:
            stats.duplicates += 1
            continue
        seen.add(msg.message_id)
        messages.append(msg)
        stats.accepted += 1
    if stats.rejected:
        logger.warning("%s: skipped %d malformed lines", path, stats.rejected)
    return messages, stats


def write_messages(path, messages: Iterable[GeoMessage]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for msg in messages:
            fh.write(msg.to_json())
            fh.write("\n")


# --------------------------------------------------------------------------
# tracts
# --------------------------------------------------------------------------


def _parse_ring(coords, path, index) -> Ring:
    if not isinstance(coords, list):
        raise IngestError("ring is not a coordinate list", path, index)
    ring = []
    for pt in coords:
        if not (isinstance(pt, list) and len(pt) >= 2 and _is_number(pt[0]) and _is_number(pt[1])):
            raise IngestError("malformed coordinate pair", path, index)
        ring.append((float(pt[0]), float(pt[1])))
    if ring and ring[0] != ring[-1]:
        logger.warning("%s: feature %d has an unclosed ring; closing it", path, index)
        ring.append(ring[0])
    if len(ring) < 4:
        raise IngestError("ring has fewer than 4 vertices", path, index)
    return tuple(ring)


def _parse_demographic(props: dict, name: str, path, index) -> Optional[float]:
    value = props.get(name)
    if value is None:
        return None
    if not _is_number(value) or not math.isfinite(value):
        raise IngestError(f"{name} must be a number or null", path, index)
    value = float(value)
    upper = 100.0 if name.startswith("pct_") else math.inf
    if not (0.0 <= value <= upper):
        raise IngestError(f"{name}={value} out of range", path, index)
    return value


def load_tracts(path) -> list[Tract]:
    """Load census tracts from a GeoJSON FeatureCollection.

    Features without polygonal geometry are skipped with a warning. A
    repeated ``tract_id`` is fatal.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IngestError(f"cannot read tracts: {exc.strerror}", path) from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise IngestError(f"invalid JSON: {exc}", path) from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise IngestError("not a FeatureCollection", path)
    features = doc.get("features")
    if not isinstance(features, list):
        raise IngestError("FeatureCollection has no feature list", path)

    tracts: list[Tract] = []
    seen: set[str] = set()
    for index, feature in enumerate(features):
        if not isinstance(feature, dict):
            raise IngestError("feature is not an object", path, index)
        props = feature.get("properties") or {}
        tract_id = props.get("tract_id")
        if not isinstance(tract_id, str) or not tract_id:
            raise IngestError("feature lacks a string tract_id", path, index)
        geom = feature.get("geometry") or {}
        gtype = geom.get("type")
        if gtype == "Polygon":
            raw_polys = [geom.get("coordinates")]
        elif gtype == "MultiPolygon":
            raw_polys = geom.get("coordinates")
        else:
            logger.warning("%s: feature %d (%s) has %s geometry; skipped", path, index, tract_id, gtype)
            continue
        if not isinstance(raw_polys, list) or not raw_polys:
            raise IngestError("empty polygon coordinates", path, index)
        polygons = []
        for raw in raw_polys:
            if not isinstance(raw, list) or not raw:
                raise IngestError("polygon without rings", path, index)
            polygons.append(tuple(_parse_ring(r, path, index) for r in raw))
        if tract_id in seen:
            raise IngestError(f"duplicate tract_id {tract_id!r}", path, index)
        seen.add(tract_id)
        demographics = Demographics(
            **{name: _parse_demographic(props, name, path, index) for name in DEMOGRAPHIC_FIELDS}
        )
        tracts.append(Tract(tract_id, tuple(polygons), demographics))
    return tracts


def write_tracts(path, tracts: Iterable[Tract]) -> None:
    features = []
    for tract in tracts:
        props = {"tract_id": tract.tract_id}
        for name in DEMOGRAPHIC_FIELDS:
            props[name] = tract.demographics.get(name)
        features.append({"type": "Feature", "properties": props, "geometry": tract.to_geojson_geometry()})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh)


# --------------------------------------------------------------------------
# lexicons
# --------------------------------------------------------------------------


def _data_lines(path):
    """Yield (lineno, stripped line) skipping blanks and ``#`` comments."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read lexicon: {exc.strerror}", path) from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            yield lineno, line.rstrip("\r\n")


def _parse_int(value: str, path, lineno) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise IngestError(f"expected an integer, got {value!r}", path, lineno) from None


def _check_strength(strength: int, path, lineno) -> int:
    if not (1 <= abs(strength) <= 5):
        raise IngestError(f"strength {strength} outside [-5,-1] U [1,5]", path, lineno)
    return strength


def load_sentiment_lexicon(path) -> SentimentLexicon:
    """Parse the sectioned TSV format (``[terms]``, ``[boosters]``, ...)."""
    sections = {name: {} for name in SENTIMENT_SECTIONS}
    negators: set[str] = set()
    current = None
    for lineno, line in _data_lines(path):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip().lower()
            if current not in sections:
                raise IngestError(f"unknown section [{current}]", path, lineno)
            continue
        if current is None:
            raise IngestError("entry before any section header", path, lineno)
        parts = line.split("\t")
        key = parts[0].strip()
        if current != "emoticons":
            key = key.lower().replace("’", "'")
        if not key:
            raise IngestError("empty term", path, lineno)
        if current == "negators":
            if len(parts) > 1 and any(p.strip() for p in parts[1:]):
                raise IngestError("negator rows take no value", path, lineno)
            negators.add(key)
            continue
        if len(parts) != 2:
            raise IngestError("expected term<TAB>integer", path, lineno)
        value = _parse_int(parts[1], path, lineno)
        if current == "boosters":
            if value == 0:
                raise IngestError("booster offset must be nonzero", path, lineno)
        else:
            _check_strength(value, path, lineno)
        table = sections[current]
        if current == "idioms":
            key = tuple(key.split())
        if key in table:
            raise IngestError(f"duplicate entry {parts[0].strip()!r}", path, lineno)
        table[key] = value
    clash = set(sections["terms"]) & set(sections["emoticons"])
    if clash:
        raise IngestError(f"entries in both [terms] and [emoticons]: {sorted(clash)}", path)
    return SentimentLexicon(
        term_strengths=sections["terms"],
        boosters=sections["boosters"],
        negators=frozenset(negators),
        emoticons=sections["emoticons"],
        idioms=sections["idioms"],
    )


def load_vad_lexicon(path) -> VadLexicon:
    """Parse ``lemma<TAB>valence<TAB>arousal<TAB>dominance`` rows."""
    entries: dict[str, tuple[float, float, float]] = {}
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 4:
            raise IngestError("expected lemma<TAB>valence<TAB>arousal<TAB>dominance", path, lineno)
        lemma = parts[0].strip().lower()
        try:
            values = tuple(float(p) for p in parts[1:])
        except ValueError:
            raise IngestError("non-numeric VAD value", path, lineno) from None
        for v in values:
            if not (1.0 <= v <= 9.0):
                raise IngestError(f"VAD value {v} outside [1, 9]", path, lineno)
        if lemma in entries:
            raise IngestError(f"duplicate lemma {lemma!r}", path, lineno)
        entries[lemma] = values
    return VadLexicon(entries)


def load_lemma_exceptions(path) -> dict[str, str]:
    """Irregular inflections: ``inflected<TAB>lemma`` rows."""
    table = {}
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise IngestError("expected inflected<TAB>lemma", path, lineno)
        table[parts[0].strip().lower()] = parts[1].strip().lower()
    return table


def load_stopwords(path) -> frozenset[str]:
    return frozenset(line.strip().lower() for _, line in _data_lines(path))


def bundled_path(name: str) -> Path:
    """Path of a data file shipped inside the package."""
    return Path(str(resources.files("geoemotion") / "data" / name))


BUNDLED_SENTIMENT_LEXICON = "sentiment_lexicon.tsv"
BUNDLED_VAD_LEXICON = "vad_lexicon.tsv"
BUNDLED_LEMMA_EXCEPTIONS = "lemma_exceptions.tsv"
BUNDLED_STOPWORDS = "stopwords.txt"
