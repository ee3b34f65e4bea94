"""Great-circle distance and point-to-tract localization.

Containment follows the even-odd rule over every ring of a tract, with
points on any ring (exterior or hole) counted as inside. When several
tracts contain a point the lexicographically smallest ``tract_id`` wins,
which keeps assignments on shared edges reproducible.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .ingest import Tract
from .parallel import map_chunks

EARTH_RADIUS_M = 6_371_000.0
NODE_CAPACITY = 16


def haversine(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Distance in meters between two (lat, lon) points in degrees."""
    lat1, lon1 = a
    lat2, lon2 = b
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlmb = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(min(1.0, h)))


# --------------------------------------------------------------------------
# containment kernels; the scalar and vector forms perform the same float ops
# --------------------------------------------------------------------------


def _ring_edges(ring):
    return zip(ring[:-1], ring[1:])


def tract_contains(tract: Tract, lon: float, lat: float) -> bool:
    inside = False
    for ring in tract.rings():
        for (x1, y1), (x2, y2) in _ring_edges(ring):
            if (
                (x2 - x1) * (lat - y1) - (y2 - y1) * (lon - x1) == 0.0
                and min(x1, x2) <= lon <= max(x1, x2)
                and min(y1, y2) <= lat <= max(y1, y2)
            ):
                return True
            if (y1 > lat) != (y2 > lat):
                x_cross = x1 + (lat - y1) * (x2 - x1) / (y2 - y1)
                if lon < x_cross:
                    inside = not inside
    return inside


def tract_contains_many(tract: Tract, lons: np.ndarray, lats: np.ndarray) -> np.ndarray:
    parity = np.zeros(lons.shape, dtype=bool)
    boundary = np.zeros(lons.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for ring in tract.rings():
            for (x1, y1), (x2, y2) in _ring_edges(ring):
                on_line = (x2 - x1) * (lats - y1) - (y2 - y1) * (lons - x1) == 0.0
                boundary |= (
                    on_line
                    & (lons >= min(x1, x2))
                    & (lons <= max(x1, x2))
                    & (lats >= min(y1, y2))
                    & (lats <= max(y1, y2))
                )
                if y1 == y2:
                    continue
                straddles = (y1 > lats) != (y2 > lats)
                x_cross = x1 + (lats - y1) * (x2 - x1) / (y2 - y1)
                parity ^= straddles & (lons < x_cross)
    return parity | boundary


# --------------------------------------------------------------------------
# STR-packed R-tree
# --------------------------------------------------------------------------


class _Node:
    __slots__ = ("bbox", "children", "leaf")

    def __init__(self, bbox, children, leaf):
        self.bbox = bbox
        self.children = children
        self.leaf = leaf


def _union(boxes):
    return (
        min(b[0] for b in boxes),
        min(b[1] for b in boxes),
        max(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )


def _str_level(items, capacity):
    """One Sort-Tile-Recursive packing pass over (bbox, payload) pairs."""
    n = len(items)
    n_nodes = -(-n // capacity)
    slices = max(1, math.ceil(math.sqrt(n_nodes)))
    per_slice = slices * capacity
    by_x = sorted(range(n), key=lambda i: ((items[i][0][0] + items[i][0][2]) / 2, i))
    groups = []
    for s in range(0, n, per_slice):
        column = sorted(by_x[s : s + per_slice], key=lambda i: ((items[i][0][1] + items[i][0][3]) / 2, i))
        for c in range(0, len(column), capacity):
            groups.append([items[i] for i in column[c : c + capacity]])
    return groups


class SpatialIndex:
    """Bounding-box tree over tract geometries.

    Each tract is stored in exactly one leaf. The structure depends only on
    the tracts and their input order.
    """

    def __init__(self, tracts: Sequence[Tract], capacity: int = NODE_CAPACITY):
        if not tracts:
            raise ValueError("cannot index an empty tract set")
        if capacity < 2:
            raise ValueError("node capacity must be >= 2")
        self.tracts = list(tracts)
        self.capacity = capacity
        self.bboxes = [t.bbox for t in self.tracts]
        order = sorted(range(len(self.tracts)), key=lambda i: self.tracts[i].tract_id)
        # rank[i] = position of tract i in tract_id order; smaller rank wins ties
        self.rank = np.empty(len(self.tracts), dtype=np.int64)
        self.rank[order] = np.arange(len(self.tracts))
        self._by_rank = order

        # leaves group tract indices directly
        groups = _str_level([(self.bboxes[i], i) for i in range(len(self.tracts))], capacity)
        nodes = [_Node(_union([g[0] for g in grp]), [g[1] for g in grp], True) for grp in groups]
        while len(nodes) > 1:
            groups = _str_level([(node.bbox, node) for node in nodes], capacity)
            nodes = [_Node(_union([g[0] for g in grp]), [g[1] for g in grp], False) for grp in groups]
        self.root = nodes[0]

    def __len__(self) -> int:
        return len(self.tracts)

    def leaf_entries(self) -> list[int]:
        """Tract indices in leaf order (each exactly once)."""
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.leaf:
                out.extend(node.children)
            else:
                stack.extend(reversed(node.children))
        return out

    def candidates(self, lat: float, lon: float) -> list[int]:
        """Indices of tracts whose bounding box contains the point."""
        out = []
        stack = [self.root]
        bboxes = self.bboxes
        while stack:
            node = stack.pop()
            x0, y0, x1, y1 = node.bbox
            if not (x0 <= lon <= x1 and y0 <= lat <= y1):
                continue
            if node.leaf:
                for i in node.children:
                    b = bboxes[i]
                    if b[0] <= lon <= b[2] and b[1] <= lat <= b[3]:
                        out.append(i)
            else:
                stack.extend(node.children)
        return out

    def locate(self, lat: float, lon: float) -> Optional[str]:
        best = None
        for i in self.candidates(lat, lon):
            if (best is None or self.rank[i] < self.rank[best]) and tract_contains(self.tracts[i], lon, lat):
                best = i
        return None if best is None else self.tracts[best].tract_id

    def locate_many(self, lats, lons) -> list[Optional[str]]:
        """Vectorized :meth:`locate` for arrays of coordinates."""
        lats = np.asarray(lats, dtype=float)
        lons = np.asarray(lons, dtype=float)
        best = np.full(lats.shape, len(self.tracts), dtype=np.int64)
        self._visit(self.root, np.arange(lats.size), lats, lons, best)
        return self._ids_from_ranks(best)

    def _visit(self, node, idx, lats, lons, best):
        x0, y0, x1, y1 = node.bbox
        sub_lon = lons[idx]
        sub_lat = lats[idx]
        keep = (sub_lon >= x0) & (sub_lon <= x1) & (sub_lat >= y0) & (sub_lat <= y1)
        idx = idx[keep]
        if idx.size == 0:
            return
        if not node.leaf:
            for child in node.children:
                self._visit(child, idx, lats, lons, best)
            return
        sub_lon = lons[idx]
        sub_lat = lats[idx]
        for i in node.children:
            bx0, by0, bx1, by1 = self.bboxes[i]
            mask = (sub_lon >= bx0) & (sub_lon <= bx1) & (sub_lat >= by0) & (sub_lat <= by1)
            if not mask.any():
                continue
            hit = idx[mask]
            inside = tract_contains_many(self.tracts[i], lons[hit], lats[hit])
            hit = hit[inside]
            np.minimum.at(best, hit, self.rank[i])

    def _ids_from_ranks(self, best: np.ndarray) -> list[Optional[str]]:
        n = len(self.tracts)
        ids = [self.tracts[i].tract_id for i in self._by_rank]
        return [None if r == n else ids[r] for r in best.tolist()]


def build_index(tracts: Sequence[Tract]) -> SpatialIndex:
    return SpatialIndex(tracts)


def locate(index: SpatialIndex, point: tuple[float, float]) -> Optional[str]:
    """Tract containing a (lat, lon) point, or None."""
    lat, lon = point
    return index.locate(lat, lon)


# --------------------------------------------------------------------------
# linear scans: no index, every tract tested
# --------------------------------------------------------------------------


def locate_bruteforce(tracts: Sequence[Tract], point: tuple[float, float]) -> Optional[str]:
    lat, lon = point
    hits = [t.tract_id for t in tracts if tract_contains(t, lon, lat)]
    return min(hits) if hits else None


def locate_many_bruteforce(tracts: Sequence[Tract], lats, lons) -> list[Optional[str]]:
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    order = sorted(range(len(tracts)), key=lambda i: tracts[i].tract_id)
    best = np.full(lats.shape, len(tracts), dtype=np.int64)
    for rank, i in enumerate(order):
        inside = tract_contains_many(tracts[i], lons, lats)
        best[inside & (best == len(tracts))] = rank
    ids = [tracts[i].tract_id for i in order]
    return [None if r == len(tracts) else ids[r] for r in best.tolist()]


# --------------------------------------------------------------------------
# corpus-level localization
# --------------------------------------------------------------------------

_WORKER_INDEX: Optional[SpatialIndex] = None


def _init_worker(index: SpatialIndex) -> None:
    global _WORKER_INDEX
    _WORKER_INDEX = index


def _locate_chunk(points):
    if not points:
        return []
    lats = [p[0] for p in points]
    lons = [p[1] for p in points]
    return _WORKER_INDEX.locate_many(lats, lons)


def localize(index: SpatialIndex, points: Sequence[tuple[float, float]], workers: int = 1) -> list[Optional[str]]:
    """Tract id (or None) for each (lat, lon), in input order."""
    return map_chunks(_locate_chunk, list(points), workers, initializer=_init_worker, initargs=(index,))
