"""Parser for Foursquare-style check-in announcements.

Accepted shape (prefix is case-insensitive)::

    I'm at [@handle] VENUE [- @handle] [(CITY, RG) | in CITY, RG] [URL]

A leading ``@handle`` binds to the first token and the rest is the venue.
When nothing else follows it, the handle doubles as the venue name.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .ingest import GeoMessage
from .parallel import map_chunks

_PREFIX = re.compile(r"^\s*(?:i['’]m|im)\s+at\s+", re.IGNORECASE)
_URL_TAIL = re.compile(r"\s+(https?://\S+)\s*$", re.IGNORECASE)
# the venue group is greedy so the location binds to the last "(...)" / " in "
_PAREN_LOC = re.compile(r"^(.*?)\s*\(\s*([^()]*?)\s*,\s*([A-Za-z]{2})\s*\)\s*$", re.DOTALL)
_IN_LOC = re.compile(r"^(.*)\s+in\s+([^,()]+?)\s*,\s*([A-Za-z]{2})\s*$", re.IGNORECASE | re.DOTALL)
_TAIL_HANDLE = re.compile(r"\s+-\s+@(\w+)\s*$")
_LEAD_HANDLE = re.compile(r"^@(\w+)(?:\s+|$)")
_URL_ANYWHERE = re.compile(r"https?://", re.IGNORECASE)


@dataclass(frozen=True, slots=True)
class CheckIn:
    message_id: str
    venue_name: str
    venue_handle: Optional[str] = None
    city: Optional[str] = None
    region: Optional[str] = None
    url: Optional[str] = None

    @property
    def venue_key(self) -> tuple[str, str]:
        """Identity used to tell venues apart: lowercased (name, city)."""
        return self.venue_name.lower(), (self.city or "").lower()

    def to_text(self) -> str:
        """Canonical announcement text; parsing it yields this check-in back."""
        parts = ["I'm at", self.venue_name]
        if self.venue_handle:
            parts.append(f"- @{self.venue_handle}")
        if self.city is not None and self.region is not None:
            parts.append(f"({self.city}, {self.region})")
        if self.url:
            parts.append(self.url)
        return " ".join(parts)


def parse_checkin(text: str, message_id: str = "") -> Optional[CheckIn]:
    """Parse ``text`` as a check-in; None when it is not one."""
    prefix = _PREFIX.match(text)
    if not prefix:
        return None
    body = text[prefix.end() :].strip()

    url = None
    m = _URL_TAIL.search(" " + body)
    if m:
        url = m.group(1)
        body = (" " + body)[: m.start()].strip()

    city = region = None
    m = _PAREN_LOC.match(body) or _IN_LOC.match(body)
    if m and m.group(2).strip():
        city, region = m.group(2).strip(), m.group(3).upper()
        body = m.group(1).strip()

    handle = None
    m = _TAIL_HANDLE.search(body)
    if m:
        handle = m.group(1)
        body = body[: m.start()].strip()
    else:
        m = _LEAD_HANDLE.match(body)
        if m:
            handle = m.group(1)
            rest = body[m.end() :].strip()
            body = rest if rest else handle

    venue = body.strip()
    if not venue or _URL_ANYWHERE.search(venue):
        return None
    return CheckIn(message_id, venue, handle, city, region, url)


def _checkin_chunk(messages):
    out = []
    for msg in messages:
        c = parse_checkin(msg.text, msg.message_id)
        if c is not None:
            out.append(c)
    return out


def find_checkins(messages: Sequence[GeoMessage], workers: int = 1) -> list[CheckIn]:
    """All check-ins in a corpus, in corpus order. Repeats are kept."""
    return map_chunks(_checkin_chunk, list(messages), workers)


def count_checkins_per_tract(
    checkins: Iterable[CheckIn], assignments: Mapping[str, Optional[str]]
) -> tuple[dict[str, int], int]:
    """Check-in counts per tract plus the number that fell outside every tract."""
    counts: Counter[str] = Counter()
    unlocalized = 0
    for c in checkins:
        tract_id = assignments.get(c.message_id)
        if tract_id is None:
            unlocalized += 1
        else:
            counts[tract_id] += 1
    return dict(sorted(counts.items())), unlocalized
