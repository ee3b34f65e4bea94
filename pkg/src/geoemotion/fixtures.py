"""Synthetic datasets with recorded ground truth.

Expected counts and means are recorded from the generators' own bookkeeping
while they generate, never by running the analysis code over the output.
The lexicon loaders and lemmatizer are only used to keep word pools apart.
"""

from __future__ import annotations

import json
import math
import random
import shutil
from dataclasses import asdict, dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .ingest import (
    BUNDLED_LEMMA_EXCEPTIONS,
    BUNDLED_SENTIMENT_LEXICON,
    BUNDLED_STOPWORDS,
    BUNDLED_VAD_LEXICON,
    Demographics,
    Tract,
    bundled_path,
    load_lemma_exceptions,
    load_sentiment_lexicon,
    load_vad_lexicon,
    write_tracts,
)
from .tokenize import Lemmatizer

EARTH_RADIUS_M = 6_371_000.0
START_TIME = datetime(2014, 7, 1, tzinfo=timezone.utc)

# words no bundled lexicon knows, in any inflection
FILLER_WORDS = (
    "just", "today", "with", "my", "the", "here", "again", "later", "about",
    "downtown", "corner", "avenue", "boulevard", "plaza", "block", "north",
    "south", "east", "west", "yesterday", "tomorrow", "tonight", "almost",
    "maybe", "honestly", "literally", "anyway", "everyone", "somebody",
    "thing", "stuff", "place", "spot", "area", "kinda", "pretty", "still",
    "omw", "btw", "lmao", "tbh",
)

# generator-side inflection table: surface form -> lemma
INFLECTED_FORMS = {
    "smile": "smiles", "friend": "friends", "flower": "flowers", "puppy": "puppies",
    "beach": "beaches", "wave": "waves", "dance": "dancing", "party": "parties",
    "laugh": "laughing", "walk": "walked", "celebrate": "celebrated", "travel": "traveling",
    "concert": "concerts", "taco": "tacos", "sunset": "sunsets", "child": "children",
    "swim": "swimming", "eat": "ate", "go": "went", "win": "won",
}

VENUE_WORDS = (
    "Blue", "Door", "Golden", "Harbor", "Echo", "Silver", "Lake", "Sunset",
    "Corner", "Union", "Grand", "Olive", "Pine", "Canyon", "Mesa", "Vista",
)
VENUE_KINDS = ("Cafe", "Studios", "Market", "Bar & Grill", "Gym", "Park", "Station", "Diner", "Library", "Theater")
CITY_NAMES = ("Los Angeles", "Burbank", "Glendale", "Pasadena", "Santa Monica", "West Hollywood", "Long Beach", "Culver City")


# --------------------------------------------------------------------------
# tract grid
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    cols: int = 50
    rows: int = 40
    lon0: float = -118.75
    lat0: float = 33.70
    step: float = 1 / 64  # dyadic so vertices and edge midpoints are exact floats
    jitter: bool = True
    hole_every: int = 7
    seed: int = 2014

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return (self.lon0, self.lat0, self.lon0 + self.cols * self.step, self.lat0 + self.rows * self.step)


def _demographics(rng: random.Random) -> Demographics:
    hispanic = float(rng.randint(100, 4500))
    non_hispanic = float(rng.randint(100, 4500))
    return Demographics(
        median_age=round(rng.uniform(22, 55), 1),
        hispanic_pop=hispanic,
        non_hispanic_pop=non_hispanic,
        pct_employed=round(rng.uniform(45, 85), 1),
        pct_bachelors=round(rng.uniform(3, 60), 1),
    )


def _lattice(spec: GridSpec, rng: random.Random):
    unit = spec.step / 16
    verts = {}
    for i in range(spec.cols + 1):
        for j in range(spec.rows + 1):
            x = spec.lon0 + i * spec.step
            y = spec.lat0 + j * spec.step
            interior = 0 < i < spec.cols and 0 < j < spec.rows
            if spec.jitter and interior:
                x += rng.randint(-4, 4) * unit
                y += rng.randint(-4, 4) * unit
            verts[i, j] = (x, y)
    return verts


def hole_square(spec: GridSpec, i: int, j: int) -> tuple[tuple[float, float], ...]:
    """Clockwise hole ring centered in cell (i, j)."""
    cx = spec.lon0 + (i + 0.5) * spec.step
    cy = spec.lat0 + (j + 0.5) * spec.step
    h = spec.step / 8
    return ((cx - h, cy - h), (cx - h, cy + h), (cx + h, cy + h), (cx + h, cy - h), (cx - h, cy - h))


def grid_layout(spec: GridSpec):
    """Cell index -> (ring, has_hole, island_owner) plus vertex lattice."""
    rng = random.Random(spec.seed)
    verts = _lattice(spec, rng)
    cells = {}
    for i in range(spec.cols):
        for j in range(spec.rows):
            k = i * spec.rows + j
            ring = (verts[i, j], verts[i + 1, j], verts[i + 1, j + 1], verts[i, j + 1], verts[i, j])
            has_hole = spec.hole_every > 0 and k % spec.hole_every == 3
            # every other hole is filled by an island owned by the east neighbour
            island_owner = (i + 1, j) if has_hole and i + 1 < spec.cols and (k // spec.hole_every) % 2 == 0 else None
            cells[i, j] = (ring, has_hole, island_owner)
    return verts, cells, rng


def grid_tracts(spec: GridSpec = GridSpec()) -> list[Tract]:
    verts, cells, rng = grid_layout(spec)
    n = spec.cols * spec.rows
    perm = list(range(n))
    rng.shuffle(perm)
    ids = {}
    for i in range(spec.cols):
        for j in range(spec.rows):
            ids[i, j] = f"06037{perm[i * spec.rows + j]:06d}"
    polygons = {key: [] for key in cells}
    for (i, j), (ring, has_hole, island_owner) in cells.items():
        rings = [ring]
        if has_hole:
            rings.append(hole_square(spec, i, j))
        polygons[i, j].append(tuple(rings))
        if island_owner is not None:
            island = tuple(reversed(hole_square(spec, i, j)))
            polygons[island_owner].append((island,))
    tracts = []
    for i in range(spec.cols):
        for j in range(spec.rows):
            tracts.append(Tract(ids[i, j], tuple(polygons[i, j]), _demographics(rng)))
    return tracts


def random_points(spec: GridSpec, n: int, seed: int = 1, margin: float = 0.05) -> list[tuple[float, float]]:
    """Uniform (lat, lon) points over the grid's box, padded by ``margin``."""
    x0, y0, x1, y1 = spec.bbox
    dx, dy = (x1 - x0) * margin, (y1 - y0) * margin
    rng = np.random.default_rng(seed)
    lons = rng.uniform(x0 - dx, x1 + dx, n)
    lats = rng.uniform(y0 - dy, y1 + dy, n)
    return list(zip(lats.tolist(), lons.tolist()))


def boundary_points(spec: GridSpec, n: int = 1000, seed: int = 3) -> list[tuple[float, float]]:
    """(lat, lon) points on or within 1e-9 degrees of edges, vertices and holes."""
    verts, cells, _ = grid_layout(spec)
    rng = random.Random(seed)
    eps = 1e-9
    keys = sorted(cells)
    holed = [k for k in keys if cells[k][1]]
    out = []
    while len(out) < n:
        kind = len(out) % 6
        if kind == 0:  # lattice vertex, shared by up to four tracts
            i, j = rng.randint(0, spec.cols), rng.randint(0, spec.rows)
            x, y = verts[i, j]
        elif kind == 1:  # midpoint of a cell edge
            ring = cells[rng.choice(keys)][0]
            e = rng.randrange(4)
            (ax, ay), (bx, by) = ring[e], ring[e + 1]
            x, y = (ax + bx) / 2, (ay + by) / 2
        elif kind == 2:  # hole corner or hole-edge midpoint
            i, j = rng.choice(holed)
            hole = hole_square(spec, i, j)
            e = rng.randrange(4)
            (ax, ay), (bx, by) = hole[e], hole[e + 1]
            x, y = (ax, ay) if rng.random() < 0.5 else ((ax + bx) / 2, (ay + by) / 2)
        elif kind == 3:  # just inside / outside a hole edge
            i, j = rng.choice(holed)
            hole = hole_square(spec, i, j)
            cx, cy = (hole[0][0] + hole[2][0]) / 2, (hole[0][1] + hole[2][1]) / 2
            h = spec.step / 8 + rng.choice((-eps, eps))
            side = rng.randrange(4)
            t = rng.uniform(-h, h)
            x, y = [(cx - h, cy + t), (cx + h, cy + t), (cx + t, cy - h), (cx + t, cy + h)][side]
        elif kind == 4:  # just off a lattice vertex
            i, j = rng.randint(0, spec.cols), rng.randint(0, spec.rows)
            vx, vy = verts[i, j]
            x, y = vx + rng.choice((-eps, 0.0, eps)), vy + rng.choice((-eps, eps))
        else:  # on or just beyond the outer border
            x0, y0, x1, y1 = spec.bbox
            t = rng.random()
            off = rng.choice((0.0, eps, -eps))
            side = rng.randrange(4)
            x, y = [
                (x0 - off, y0 + t * (y1 - y0)),
                (x1 + off, y0 + t * (y1 - y0)),
                (x0 + t * (x1 - x0), y0 - off),
                (x0 + t * (x1 - x0), y1 + off),
            ][side]
        out.append((y, x))
    return out


# --------------------------------------------------------------------------
# small corpora
# --------------------------------------------------------------------------


def _timestamp(i: int) -> str:
    return (START_TIME + timedelta(seconds=60 * i)).isoformat()


def _record(mid: str, uid: str, i: int, lat: float, lon: float, text: str) -> dict:
    return {"message_id": mid, "user_id": uid, "timestamp": _timestamp(i), "lat": lat, "lon": lon, "text": text}


_CORRUPTIONS = (
    lambda r: json.dumps({k: v for k, v in r.items() if k != "lat"}),
    lambda r: json.dumps(r)[:-7],
    lambda r: json.dumps({**r, "lat": 123.0}),
    lambda r: json.dumps({**r, "lon": "west"}),
    lambda r: json.dumps({**r, "timestamp": "2014-07-01T10:00:00"}),
    lambda r: json.dumps({**r, "timestamp": "yesterday"}),
    lambda r: json.dumps({**r, "extra": 1}),
    lambda r: json.dumps({**r, "message_id": ""}),
    lambda r: json.dumps({**r, "text": 42}),
    lambda r: "[1, 2, 3]",
    lambda r: "",
)


def corrupted_corpus(n_lines: int = 1000, n_corrupt: int = 37, seed: int = 11) -> tuple[bytes, dict]:
    """JSONL bytes with planted malformed lines; ground truth counts alongside."""
    rng = random.Random(seed)
    bad = set(rng.sample(range(n_lines), n_corrupt))
    lines = []
    kinds = Counter_()
    for i in range(n_lines):
        rec = _record(f"m{i:05d}", f"u{i % 37:03d}", i, 34.0 + rng.random() * 0.5, -118.5 + rng.random() * 0.5, f"message {i}")
        if i in bad:
            c = rng.randrange(len(_CORRUPTIONS) + 1)
            if c == len(_CORRUPTIONS):
                lines.append(b'{"message_id": "\xff\xfe", "user_id": "u"}')
                kinds["invalid-utf8"] += 1
            else:
                lines.append(_CORRUPTIONS[c](rec).encode("utf-8"))
                kinds[f"corruption-{c}"] += 1
        else:
            lines.append(json.dumps(rec, ensure_ascii=False).encode("utf-8"))
    truth = {"total": n_lines, "accepted": n_lines - n_corrupt, "rejected": n_corrupt, "duplicates": 0, "kinds": dict(kinds)}
    return b"\n".join(lines) + b"\n", truth


class Counter_(dict):
    def __missing__(self, key):
        return 0


def coverage_corpus(n: int = 1000, fraction: float = 0.82, seed: int = 5) -> tuple[list[str], list[bool]]:
    """Texts where exactly round(n * fraction) contain a VAD lexicon lemma."""
    vad = load_vad_lexicon(bundled_path(BUNDLED_VAD_LEXICON))
    rng = random.Random(seed)
    n_cov = round(n * fraction)
    flags = [True] * n_cov + [False] * (n - n_cov)
    rng.shuffle(flags)
    lemmas = sorted(vad.entries)
    texts = []
    for covered in flags:
        words = rng.sample(FILLER_WORDS, rng.randint(2, 5))
        if covered:
            words.insert(rng.randrange(len(words) + 1), rng.choice(lemmas))
        if rng.random() < 0.3:
            words.append("http://t.co/" + "".join(rng.choices("abcdefXYZ0123", k=8)))
        if rng.random() < 0.2:
            words.insert(0, "@" + rng.choice(("beach", "happy", "love", "joe")))
        texts.append(" ".join(words))
    return texts, flags


def planted_pairs(n: int = 500, r: float = 0.59, seed: int = 0) -> list[tuple[float, float]]:
    """Pairs whose population correlation is ``r`` (Cholesky mixing of normals)."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, 2))
    chol = np.linalg.cholesky(np.array([[1.0, r], [r, 1.0]]))
    xy = z @ chol.T
    return [(float(a), float(b)) for a, b in xy]


# --------------------------------------------------------------------------
# synthetic city
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CitySpec:
    cols: int = 20
    rows: int = 15
    lon0: float = -118.60
    lat0: float = 33.80
    step: float = 0.02
    n_messages: int = 100_000
    n_users: int = 3000
    k: int = 3
    n_top: int = 30
    n_low: int = 30
    n_empty: int = 8
    n_away_checkins: int = 20
    valence_shift: float = 0.3
    rg_shift_m: float = 50_000.0
    p_away: float = 0.2
    p_visit: float = 0.03
    p_unmatched: float = 0.18
    p_negative: float = 0.35
    p_negative_top: float = 0.20
    p_positive: float = 0.30
    n_malformed: int = 25
    n_duplicates: int = 15
    seed: int = 7


def _destination(lat: float, lon: float, distance_m: float, bearing: float) -> tuple[float, float]:
    phi1, lmb1 = math.radians(lat), math.radians(lon)
    delta = distance_m / EARTH_RADIUS_M
    phi2 = math.asin(math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(bearing))
    lmb2 = lmb1 + math.atan2(
        math.sin(bearing) * math.sin(delta) * math.cos(phi1), math.cos(delta) - math.sin(phi1) * math.sin(phi2)
    )
    return math.degrees(phi2), math.degrees(lmb2)


def city_pools():
    """Word pools whose lexicon roles do not overlap.

    Returns (vad_words, high_valence_words, negative_terms, positive_terms)
    where the VAD words carry no sentiment role and the sentiment terms
    match no VAD lemma under any of the generator's surface forms.
    """
    senti = load_sentiment_lexicon(bundled_path(BUNDLED_SENTIMENT_LEXICON))
    vad = load_vad_lexicon(bundled_path(BUNDLED_VAD_LEXICON))
    vad_words = sorted(w for w in vad.entries if not senti.knows_word(w) and not senti.knows_word(INFLECTED_FORMS.get(w, w)))
    vad_words = [w for w in vad_words if w not in FILLER_WORDS]
    by_valence = sorted(vad_words, key=lambda w: (-vad.entries[w][0], w))
    high = sorted(by_valence[: max(1, len(by_valence) // 5)])

    lemmatizer = Lemmatizer(load_lemma_exceptions(bundled_path(BUNDLED_LEMMA_EXCEPTIONS)))

    def clean(term):
        if term.endswith("*") or senti.is_idiom_word(term) or " " in term:
            return False
        return lemmatizer.lemmatize(term, vad.entries) is None

    negative = sorted(t for t, s in senti.term_strengths.items() if s < 0 and clean(t))
    positive = sorted(t for t, s in senti.term_strengths.items() if s > 0 and clean(t))
    return vad, vad_words, high, negative, positive


def _venue(rng: random.Random) -> str:
    return f"{rng.choice(VENUE_WORDS)} {rng.choice(VENUE_WORDS)} {rng.choice(VENUE_KINDS)}"


def _checkin_text(rng: random.Random) -> str:
    venue = _venue(rng)
    city = rng.choice(CITY_NAMES)
    url = "http://t.co/" + "".join(rng.choices("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789", k=10))
    form = rng.randrange(4)
    if form == 0:
        return f"I'm at {venue} ({city}, CA) {url}"
    if form == 1:
        return f"I'm at @{venue.split()[0].lower()}{rng.randint(1, 99)} {venue} in {city}, CA {url}"
    if form == 2:
        return f"I’m at {venue} - @{venue.replace(' ', '').replace('&', '').lower()} ({city}, CA) {url}"
    return f"I'm at {venue} ({city}, CA)"


def generate_city(spec: CitySpec = CitySpec()):
    """Build the synthetic city.

    Returns (tracts, jsonl_lines, ground_truth). Lines include the planted
    malformed records and duplicate ids.
    """
    rng = random.Random(spec.seed)
    vad, vad_words, high, negative, positive = city_pools()
    base_mean = math.fsum(vad.entries[w][0] for w in vad_words) / len(vad_words)
    high_mean = math.fsum(vad.entries[w][0] for w in high) / len(high)
    w_high = spec.valence_shift / (high_mean - base_mean)
    if not 0 < w_high < 1:
        raise ValueError("valence shift not attainable with the bundled pools")

    grid = GridSpec(spec.cols, spec.rows, spec.lon0, spec.lat0, spec.step, jitter=False, hole_every=0, seed=spec.seed)
    tracts = grid_tracts(grid)
    n_tracts = len(tracts)
    cell_of = {}
    for i in range(spec.cols):
        for j in range(spec.rows):
            cell_of[tracts[i * spec.rows + j].tract_id] = (i, j)
    order = list(range(n_tracts))
    rng.shuffle(order)
    empty = {tracts[i].tract_id for i in order[: spec.n_empty]}
    top = {tracts[i].tract_id for i in order[spec.n_empty : spec.n_empty + spec.n_top]}
    low = {tracts[i].tract_id for i in order[spec.n_empty + spec.n_top : spec.n_empty + spec.n_top + spec.n_low]}
    active = [tracts[i].tract_id for i in order[spec.n_empty :]]

    def point_in(tract_id):
        i, j = cell_of[tract_id]
        x = spec.lon0 + (i + rng.uniform(0.1, 0.9)) * spec.step
        y = spec.lat0 + (j + rng.uniform(0.1, 0.9)) * spec.step
        return y, x

    users = [f"u{n:05d}" for n in range(spec.n_users)]
    home = {u: active[n % len(active)] for n, u in enumerate(users)}
    residents = {}
    for u in users:
        residents.setdefault(home[u], []).append(u)
    away_m = {}
    for u in users:
        d = rng.uniform(120_000, 220_000)
        if home[u] in top:
            # two-cluster r_g is sqrt(p(1-p)) * d, so this adds ~rg_shift_m
            d += spec.rg_shift_m / math.sqrt(spec.p_away * (1 - spec.p_away))
        away_m[u] = d

    checkin_counts = {}
    for t in sorted(top):
        checkin_counts[t] = rng.randint(spec.k, spec.k + 9)
    for t in sorted(low):
        checkin_counts[t] = rng.randint(1, max(1, spec.k - 1))
    n_checkins_local = sum(checkin_counts.values())
    n_checkins = n_checkins_local + spec.n_away_checkins
    n_regular = spec.n_messages - n_checkins
    if n_regular < spec.n_users:
        raise ValueError("too few messages for the requested users")

    # planned messages: (user, kind, tract_or_None)
    plan = []
    for t, c in checkin_counts.items():
        for _ in range(c):
            # with very few users a tract may have no residents; anyone can visit
            plan.append((rng.choice(residents.get(t) or users), "checkin", t))
    for _ in range(spec.n_away_checkins):
        plan.append((rng.choice(users), "checkin", None))
    authors = users + [rng.choice(users) for _ in range(n_regular - spec.n_users)]
    for u in authors:
        r = rng.random()
        if r < spec.p_away:
            plan.append((u, "regular", None))
        elif r < spec.p_away + spec.p_visit:
            t = rng.choice(active)
            plan.append((u, "regular", t))
        else:
            plan.append((u, "regular", home[u]))
    rng.shuffle(plan)

    truth_tracts = {}

    def tally(t):
        if t not in truth_tracts:
            truth_tracts[t] = {"n_messages": 0, "n_checkins": 0, "users": set(), "valence": [], "n_scored": 0, "n_negative": 0}
        return truth_tracts[t]

    records = []
    for n, (u, kind, t) in enumerate(plan):
        if t is not None:
            lat, lon = point_in(t)
        else:
            hlat, hlon = point_in(home[u])
            lat, lon = _destination(hlat, hlon, away_m[u] * rng.uniform(0.95, 1.05), rng.uniform(0, 2 * math.pi))
        if kind == "checkin":
            text = _checkin_text(rng)
            valences = []
            neg = False
        else:
            shifted = t in top
            words = rng.sample(FILLER_WORDS, rng.randint(2, 4))
            valences = []
            if rng.random() >= spec.p_unmatched:
                lemma = rng.choice(high) if shifted and rng.random() < w_high else rng.choice(vad_words)
                surface = INFLECTED_FORMS[lemma] if lemma in INFLECTED_FORMS and rng.random() < 0.25 else lemma
                words.insert(rng.randrange(len(words) + 1), surface)
                valences.append(vad.entries[lemma][0])
            neg = rng.random() < (spec.p_negative_top if shifted else spec.p_negative)
            if neg:
                words.insert(rng.randrange(len(words) + 1), rng.choice(negative))
            if rng.random() < spec.p_positive:
                words.insert(rng.randrange(len(words) + 1), rng.choice(positive))
            text = " ".join(words)
        records.append(_record(f"m{n:06d}", u, n, lat, lon, text))
        if t is not None:
            row = tally(t)
            row["n_messages"] += 1
            row["users"].add(u)
            if kind == "checkin":
                row["n_checkins"] += 1
            else:
                row["n_scored"] += 1
                row["n_negative"] += int(neg)
                row["valence"].extend(valences)

    lines = [json.dumps(r, ensure_ascii=False) for r in records]
    n_valid = len(lines)
    for _ in range(spec.n_duplicates):
        src = lines[rng.randrange(n_valid)]
        lines.insert(rng.randrange(len(lines) + 1), src)
    for c in range(spec.n_malformed):
        rec = _record(f"bad{c:03d}", "u00000", 0, 34.0, -118.3, "broken")
        bad = _CORRUPTIONS[c % (len(_CORRUPTIONS) - 1)](rec)
        lines.insert(rng.randrange(len(lines) + 1), bad)

    per_tract = {}
    for t in sorted(truth_tracts):
        row = truth_tracts[t]
        per_tract[t] = {
            "n_messages": row["n_messages"],
            "n_checkins": row["n_checkins"],
            "n_users": len(row["users"]),
            "n_scored": row["n_scored"],
            "n_vad": len(row["valence"]),
            "mean_V": math.fsum(row["valence"]) / len(row["valence"]) if row["valence"] else None,
        }
    n_localized = sum(r["n_messages"] for r in per_tract.values())
    with_checkins = sorted(t for t, r in per_tract.items() if r["n_checkins"] >= 1)
    top_cohort = sorted(t for t, r in per_tract.items() if r["n_checkins"] >= spec.k)
    truth = {
        "spec": asdict(spec),
        "lines_total": len(lines),
        "accepted": n_valid,
        "rejected": spec.n_malformed,
        "duplicates": spec.n_duplicates,
        "localized": n_localized,
        "unlocalized": n_valid - n_localized,
        "checkins_total": n_checkins,
        "checkins_localized": n_checkins_local,
        "users": spec.n_users,
        "tracts_total": n_tracts,
        "cohort_sizes": {"all": len(per_tract), "with_checkins": len(with_checkins), "top": len(top_cohort)},
        "designated_top": sorted(top),
        "designated_low": sorted(low),
        "designated_empty": sorted(empty),
        "planted": {
            "valence_shift": spec.valence_shift,
            "rg_shift_m": spec.rg_shift_m,
            "high_pool_weight": w_high,
            "negative_rate_base": spec.p_negative,
            "negative_rate_top": spec.p_negative_top,
        },
        "tracts": per_tract,
    }
    return tracts, lines, truth


def write_city(out_dir, spec: CitySpec = CitySpec()) -> dict:
    """Write the city dataset, lexicon copies, config and ground truth."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tracts, lines, truth = generate_city(spec)
    write_tracts(out / "tracts.geojson", tracts)
    with open(out / "messages.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    for name in (BUNDLED_SENTIMENT_LEXICON, BUNDLED_VAD_LEXICON, BUNDLED_LEMMA_EXCEPTIONS, BUNDLED_STOPWORDS):
        shutil.copyfile(bundled_path(name), out / name)
    config = {
        "messages": "messages.jsonl",
        "tracts": "tracts.geojson",
        "sentiment_lexicon": BUNDLED_SENTIMENT_LEXICON,
        "vad_lexicon": BUNDLED_VAD_LEXICON,
        "lemma_exceptions": BUNDLED_LEMMA_EXCEPTIONS,
        "stopwords": BUNDLED_STOPWORDS,
        "k": spec.k,
        "output_dir": "out",
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    (out / "ground_truth.json").write_text(json.dumps(truth, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return truth


def write_grid(out_dir, spec: GridSpec = GridSpec(), n_random: int = 10_000, n_boundary: int = 1000) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tracts = grid_tracts(spec)
    write_tracts(out / "tracts.geojson", tracts)
    points = random_points(spec, n_random) + boundary_points(spec, n_boundary)
    with open(out / "points.tsv", "w", encoding="utf-8") as fh:
        fh.write("lat\tlon\n")
        for lat, lon in points:
            fh.write(f"{lat!r}\t{lon!r}\n")
    truth = {"tracts": len(tracts), "random_points": n_random, "boundary_points": n_boundary, "spec": asdict(spec)}
    (out / "ground_truth.json").write_text(json.dumps(truth, indent=1) + "\n", encoding="utf-8")
    return truth


def write_corrupted(out_dir, n_lines: int = 1000, n_corrupt: int = 37, seed: int = 11) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data, truth = corrupted_corpus(n_lines, n_corrupt, seed)
    (out / "messages.jsonl").write_bytes(data)
    (out / "ground_truth.json").write_text(json.dumps(truth, indent=1) + "\n", encoding="utf-8")
    return truth


def load_truth(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def optional_float(value) -> Optional[float]:
    return None if value is None else float(value)
