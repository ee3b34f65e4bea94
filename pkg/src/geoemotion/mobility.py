"""Radius of gyration per user and its per-tract average.

A user's radius of gyration is the root-mean-square haversine distance of
their message locations from the arithmetic mean location. Sums go through
``math.fsum`` so results are independent of point order.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .geo import haversine
from .ingest import GeoMessage
from .parallel import map_chunks


@dataclass(frozen=True, slots=True)
class UserMobility:
    user_id: str
    n_points: int
    center: tuple[float, float]  # (lat, lon)
    r_g: float


@dataclass(frozen=True, slots=True)
class TractMobility:
    tract_id: str
    n_users: int
    R_g: float


def center_of_mass(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Component-wise mean of (lat, lon) points in degree space.

    Raises ValueError for an empty sequence or for a point set spanning more
    than 180 degrees of longitude, where a degree-space mean is meaningless.
    """
    if not points:
        raise ValueError("center of mass of no points")
    lons = [p[1] for p in points]
    if max(lons) - min(lons) > 180.0:
        raise ValueError("point set crosses the antimeridian")
    n = len(points)
    # offsets from the minimum keep identical points exact and stay order-free
    lat0 = min(p[0] for p in points)
    lon0 = min(lons)
    return lat0 + math.fsum(p[0] - lat0 for p in points) / n, lon0 + math.fsum(v - lon0 for v in lons) / n


def radius_of_gyration(points: Sequence[tuple[float, float]]) -> float:
    center = center_of_mass(points)
    if len(points) == 1:
        return 0.0
    sq = math.fsum(haversine(p, center) ** 2 for p in points)
    return math.sqrt(sq / len(points))


def user_mobility(user_id: str, points: Sequence[tuple[float, float]]) -> UserMobility:
    return UserMobility(user_id, len(points), center_of_mass(points), radius_of_gyration(points))


def _mobility_chunk(groups):
    return [user_mobility(uid, pts) for uid, pts in groups]


def user_mobilities(
    messages: Iterable[GeoMessage],
    restrict_to: Optional[set[str]] = None,
    workers: int = 1,
) -> dict[str, UserMobility]:
    """r_g for every user, from all their geo-tagged messages.

    ``restrict_to`` limits the points to the given message ids (the
    check-ins-only variant); users left without points are omitted.
    """
    points: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for msg in messages:
        if restrict_to is not None and msg.message_id not in restrict_to:
            continue
        points[msg.user_id].append((msg.lat, msg.lon))
    groups = sorted(points.items())
    result = map_chunks(_mobility_chunk, groups, workers)
    return {m.user_id: m for m in result}


def tract_mobility(
    user_mobilities: Mapping[str, UserMobility],
    assignments: Mapping[str, tuple[str, Optional[str]]],
) -> dict[str, TractMobility]:
    """Mean r_g over the distinct users with a localized message in each tract.

    ``assignments`` maps message_id to (user_id, tract_id or None).
    """
    users_by_tract: dict[str, set[str]] = defaultdict(set)
    for user_id, tract_id in assignments.values():
        if tract_id is None:
            continue
        if user_id not in user_mobilities:
            raise KeyError(f"no mobility record for user {user_id!r}")
        users_by_tract[tract_id].add(user_id)
    out = {}
    for tract_id in sorted(users_by_tract):
        users = users_by_tract[tract_id]
        mean = math.fsum(user_mobilities[u].r_g for u in users) / len(users)
        out[tract_id] = TractMobility(tract_id, len(users), mean)
    return out
