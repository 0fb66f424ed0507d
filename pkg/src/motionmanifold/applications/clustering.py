"""Corpus distance matrices and agglomerative clustering."""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..curve_core import ImmersionError, ProjectionError, SrvCurve, project_closed, srv_transform
from ..geodesics import closed_distance
from ..mocap_io import AnimationClip, clip_to_curve, resample_clip, wrap_angle
from ..motion_space import optimal_reparametrization

log = logging.getLogger(__name__)

METRICS = ("linear-l2", "geodesic-closed", "geodesic-shape")


class InvalidMatrixError(ValueError):
    """A distance matrix that is not square, symmetric, nonnegative with zero diagonal."""


class DistanceComputationError(RuntimeError):
    def __init__(self, label: str, cause: Exception):
        super().__init__(f"clip {label!r}: {cause}")
        self.label = label


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    labels: tuple
    values: np.ndarray
    metric: str
    excluded: tuple = ()

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        labels = tuple(str(x) for x in self.labels)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] != len(labels):
            raise InvalidMatrixError("values must be square and match the labels")
        if len(set(labels)) != len(labels):
            raise InvalidMatrixError("labels must be unique")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidMatrixError("distances must be finite and nonnegative")
        if not np.array_equal(v, v.T):
            raise InvalidMatrixError("matrix is not symmetric")
        if np.any(np.diag(v) != 0):
            raise InvalidMatrixError("diagonal must be zero")
        if self.metric not in METRICS:
            raise InvalidMatrixError(f"unknown metric {self.metric!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "excluded", tuple(self.excluded))

    @property
    def size(self) -> int:
        return len(self.labels)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.metric, *self.labels])
        for label, row in zip(self.labels, self.values):
            w.writerow([label, *(repr(float(x)) for x in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DistanceMatrix":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows:
            raise InvalidMatrixError("empty matrix file")
        metric, labels = rows[0][0], rows[0][1:]
        if [r[0] for r in rows[1:]] != labels:
            raise InvalidMatrixError("row labels do not match column labels")
        try:
            values = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
        except ValueError as e:
            raise InvalidMatrixError(f"non-numeric entry: {e}") from None
        return cls(labels, values, metric)


# ---------------------------------------------------------------------------
# Distances


def linear_distance(a: np.ndarray, b: np.ndarray) -> float:
    """L2 norm over t in [0, 1] of the wrapped angle difference of two frame arrays."""
    d = wrap_angle(a - b)
    m = d.shape[0]
    if m == 1:
        return float(np.linalg.norm(d))
    w = np.full(m, 1.0 / (m - 1))
    w[[0, -1]] *= 0.5
    return float(np.sqrt(w @ np.sum(d * d, axis=1)))


def prepare_srv(clip: AnimationClip, epsilon: float = 1e-6) -> SrvCurve:
    """Closed-manifold SRV of a clip on the common time interval [0, 1]."""
    srv = srv_transform(clip_to_curve(clip, duration=1.0), "closed")
    return project_closed(srv, epsilon)


def _pair(task):
    metric, a, b, d_closed, kw = task
    if metric == "geodesic-closed":
        return closed_distance(a, b, k=kw["k"])
    return optimal_reparametrization(a, b, kw["seed_count"], unaligned_distance=d_closed, k=kw["k"])[1]


def _pairwise(metric, items, unaligned, kw, workers) -> np.ndarray:
    N = len(items)
    pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]
    tasks = [(metric, items[i], items[j], None if unaligned is None else unaligned[i, j], kw)
             for i, j in pairs]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_pair, tasks))
    else:
        results = [_pair(t) for t in tasks]
    D = np.zeros((N, N))
    for (i, j), d in zip(pairs, results):
        D[i, j] = D[j, i] = d
    return D


def distance_matrix(clips: Sequence[AnimationClip], metric: str = "geodesic-shape",
                    common_frames: int = 128, labels: Optional[Sequence[str]] = None,
                    epsilon: float = 1e-6, seed_count: int = 16, k: int = 16,
                    exclude_failures: bool = False, workers: int = 1) -> DistanceMatrix:
    """Pairwise distances between clips after resampling to ``common_frames``.

    Every pair is computed once, in the orientation i < j, and mirrored, so
    the matrix is exactly symmetric and does not depend on scheduling.
    Geodesic metrics project every clip onto the closed manifold first; a
    clip that cannot be projected aborts the computation unless
    ``exclude_failures`` is set, in which case it is dropped and listed in
    ``excluded``.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    if len(clips) < 2:
        raise ValueError("need at least 2 clips")
    labels = [str(x) for x in (labels if labels is not None else range(len(clips)))]
    if len(labels) != len(clips):
        raise ValueError("one label per clip")
    dims = {c.skeleton.n for c in clips}
    if len(dims) != 1:
        raise ValueError(f"clips have different joint-space dimensions {sorted(dims)}")
    clips = [resample_clip(c, common_frames) for c in clips]

    if metric == "linear-l2":
        N = len(clips)
        D = np.zeros((N, N))
        for i in range(N):
            for j in range(i + 1, N):
                D[i, j] = D[j, i] = linear_distance(clips[i].frames, clips[j].frames)
        return DistanceMatrix(labels, D, metric)

    items, kept, excluded = [], [], []
    for label, clip in zip(labels, clips):
        try:
            items.append(prepare_srv(clip, epsilon))
            kept.append(label)
        except (ProjectionError, ImmersionError) as e:
            if not exclude_failures:
                raise DistanceComputationError(label, e) from e
            log.warning("excluding clip %s: %s", label, e)
            excluded.append(label)
    if len(items) < 2:
        raise ValueError("fewer than 2 clips left after exclusions")

    kw = {"k": k, "seed_count": seed_count}
    D = _pairwise("geodesic-closed", items, None, kw, workers)
    if metric == "geodesic-shape":
        D = _pairwise("geodesic-shape", items, D, kw, workers)
    return DistanceMatrix(kept, D, metric, excluded)


# ---------------------------------------------------------------------------
# Clustering


@dataclass(frozen=True)
class Merge:
    a: int
    b: int
    height: float
    new_id: int


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Merge list in the usual convention: leaves are 0..N-1, merge i creates N+i."""

    labels: tuple
    merges: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        merges = tuple(m if isinstance(m, Merge) else Merge(*m) for m in self.merges)
        object.__setattr__(self, "merges", merges)
        N = len(self.labels)
        if len(merges) != max(N - 1, 0):
            raise ValueError(f"expected {N - 1} merges, got {len(merges)}")
        seen = set()
        for i, m in enumerate(merges):
            if m.new_id != N + i or m.a in seen or m.b in seen or max(m.a, m.b) >= N + i:
                raise ValueError(f"inconsistent merge {i}: {m}")
            seen.update((m.a, m.b))

    @property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def members(self, cluster: int) -> list[int]:
        N = len(self.labels)
        if cluster < N:
            return [cluster]
        m = self.merges[cluster - N]
        return sorted(self.members(m.a) + self.members(m.b))

    def to_json(self) -> str:
        return json.dumps({
            "labels": list(self.labels),
            "merges": [[m.a, m.b, m.height, m.new_id] for m in self.merges],
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Dendrogram":
        data = json.loads(text)
        return cls(data["labels"], [Merge(int(a), int(b), float(h), int(c)) for a, b, h, c in data["merges"]])

    def to_newick(self) -> str:
        N = len(self.labels)
        heights = {N + i: m.height for i, m in enumerate(self.merges)}

        def name(label: str) -> str:
            if any(ch in label for ch in " ():;,[]'"):
                return "'" + label.replace("'", "''") + "'"
            return label

        def node(c: int) -> str:
            if c < N:
                return name(self.labels[c])
            m = self.merges[c - N]
            parts = []
            for child in (m.a, m.b):
                h = heights.get(child, 0.0)
                parts.append(f"{node(child)}:{m.height - h:.12g}")
            return "(" + ",".join(parts) + ")"

        if N == 1:
            return name(self.labels[0]) + ";"
        return node(2 * N - 2) + ";"


def hierarchical_cluster(matrix: DistanceMatrix) -> Dendrogram:
    """Agglomerative average-linkage clustering.

    At every step the closest pair of clusters merges; exact ties go to the
    pair whose smallest leaf indices are lowest.  Cluster distances follow
    the Lance-Williams update for average linkage.  In each merge the
    cluster holding the lower leaf index is listed first.
    """
    N = matrix.size
    D = np.array(matrix.values, dtype=float)
    active = {i: (i, 1) for i in range(N)}          # id -> (lowest leaf, size)
    dist = {(i, j): D[i, j] for i in range(N) for j in range(i + 1, N)}
    merges = []
    for step in range(N - 1):
        def key(pair):
            a, b = pair
            lo = sorted((active[a][0], active[b][0]))
            return (dist[pair], lo[0], lo[1])

        a, b = min(dist, key=key)
        if active[a][0] > active[b][0]:
            a, b = b, a
        height = dist[(min(a, b), max(a, b))]
        new = N + step
        na, nb = active[a][1], active[b][1]
        for c in list(active):
            if c in (a, b):
                continue
            da = dist.pop((min(a, c), max(a, c)))
            db = dist.pop((min(b, c), max(b, c)))
            dist[(c, new)] = (na * da + nb * db) / (na + nb)
        del dist[(min(a, b), max(a, b))]
        active[new] = (min(active[a][0], active[b][0]), na + nb)
        del active[a], active[b]
        merges.append(Merge(a, b, float(height), new))
    return Dendrogram(matrix.labels, merges)


def cut_dendrogram(dendrogram: Dendrogram, k: int) -> np.ndarray:
    """Flat cluster labels after undoing the last k - 1 merges.

    Clusters are numbered 0..k-1 in order of their lowest leaf index.
    """
    N = len(dendrogram.labels)
    if not 1 <= k <= N:
        raise ValueError(f"k must lie in [1, {N}]")
    parent = list(range(2 * N - 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for m in dendrogram.merges[:N - k]:
        parent[find(m.a)] = m.new_id
        parent[find(m.b)] = m.new_id
    roots = [find(i) for i in range(N)]
    order = {}
    for r in roots:
        order.setdefault(r, len(order))
    return np.array([order[r] for r in roots])


def cluster_labels_csv(labels: Sequence[str], assignment: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "cluster"])
    for label, c in zip(labels, assignment):
        w.writerow([label, int(c)])
    return buf.getvalue()
