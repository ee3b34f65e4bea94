"""TSV files passed between pipeline stages.

Every table has a header row, rows sorted by their key column, and "-" for
a missing value. Floats are written with ``repr`` so they read back exactly.
"""

from __future__ import annotations

import csv
from typing import IO, Iterable, Mapping, Optional

from .checkin import CheckIn
from .errors import IngestError
from .mobility import TractMobility, UserMobility
from .sentiment import MessageScore, SentimentScore, VadScore

MISSING = "-"

LOCALIZED_HEADER = ("message_id", "tract_id")
CHECKIN_HEADER = ("message_id", "venue_name", "venue_handle", "city", "region", "tract_id")
SCORE_HEADER = ("message_id", "P", "N", "valence", "arousal", "dominance", "matched_terms")
USER_MOBILITY_HEADER = ("user_id", "n_points", "r_g")
TRACT_MOBILITY_HEADER = ("tract_id", "n_users", "R_g")


def _writer(fh):
    return csv.writer(fh, delimiter="\t", lineterminator="\n", quoting=csv.QUOTE_MINIMAL)


def _opt(value) -> str:
    return MISSING if value is None else str(value)


def _reader(fh, header, name):
    reader = csv.reader(fh, delimiter="\t")
    first = next(reader, None)
    if first is None or tuple(first) != header:
        raise IngestError(f"expected header {' '.join(header)}", name, 1)
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise IngestError(f"expected {len(header)} columns, got {len(row)}", name, lineno)
        yield lineno, row


def write_localized(fh: IO[str], assignments: Mapping[str, Optional[str]]) -> None:
    w = _writer(fh)
    w.writerow(LOCALIZED_HEADER)
    for mid in sorted(assignments):
        w.writerow([mid, _opt(assignments[mid])])


def read_localized(fh: IO[str]) -> dict[str, Optional[str]]:
    out = {}
    for _, (mid, tract_id) in _reader(fh, LOCALIZED_HEADER, "localized table"):
        out[mid] = None if tract_id == MISSING else tract_id
    return out


def write_checkins(fh: IO[str], checkins: Iterable[CheckIn], assignments: Mapping[str, Optional[str]]) -> None:
    w = _writer(fh)
    w.writerow(CHECKIN_HEADER)
    for c in sorted(checkins, key=lambda c: c.message_id):
        w.writerow(
            [c.message_id, c.venue_name, _opt(c.venue_handle), _opt(c.city), _opt(c.region), _opt(assignments.get(c.message_id))]
        )


def read_checkins(fh: IO[str]) -> list[tuple[CheckIn, Optional[str]]]:
    out = []
    for _, row in _reader(fh, CHECKIN_HEADER, "check-in table"):
        mid, venue, handle, city, region, tract_id = (None if v == MISSING else v for v in row)
        out.append((CheckIn(mid, venue, handle, city, region), tract_id))
    return out


def write_scores(fh: IO[str], scores: Iterable[MessageScore]) -> None:
    w = _writer(fh)
    w.writerow(SCORE_HEADER)
    for s in sorted(scores, key=lambda s: s.message_id):
        vad = s.vad
        if vad is None:
            w.writerow([s.message_id, s.sentiment.positive, s.sentiment.negative, MISSING, MISSING, MISSING, 0])
        else:
            w.writerow(
                [s.message_id, s.sentiment.positive, s.sentiment.negative,
                 repr(vad.valence), repr(vad.arousal), repr(vad.dominance), vad.matched_terms]
            )


def read_scores(fh: IO[str]) -> dict[str, MessageScore]:
    out = {}
    for lineno, row in _reader(fh, SCORE_HEADER, "score table"):
        mid, p, n, v, a, d, matched = row
        try:
            sentiment = SentimentScore(int(p), int(n))
            vad = None if v == MISSING else VadScore(float(v), float(a), float(d), int(matched))
        except ValueError as exc:
            raise IngestError(str(exc), "score table", lineno) from None
        out[mid] = MessageScore(mid, sentiment, vad)
    return out


def write_user_mobility(fh: IO[str], users: Iterable[UserMobility]) -> None:
    w = _writer(fh)
    w.writerow(USER_MOBILITY_HEADER)
    for u in sorted(users, key=lambda u: u.user_id):
        w.writerow([u.user_id, u.n_points, repr(u.r_g)])


def write_tract_mobility(fh: IO[str], tracts: Iterable[TractMobility]) -> None:
    w = _writer(fh)
    w.writerow(TRACT_MOBILITY_HEADER)
    for t in sorted(tracts, key=lambda t: t.tract_id):
        w.writerow([t.tract_id, t.n_users, repr(t.R_g)])


def read_tract_mobility(fh: IO[str]) -> dict[str, TractMobility]:
    out = {}
    for lineno, (tract_id, n_users, r) in _reader(fh, TRACT_MOBILITY_HEADER, "tract mobility table"):
        try:
            out[tract_id] = TractMobility(tract_id, int(n_users), float(r))
        except ValueError as exc:
            raise IngestError(str(exc), "tract mobility table", lineno) from None
    return out
