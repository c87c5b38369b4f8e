"""Average-linkage hierarchical agglomerative clustering of word vectors.

Pair similarity is 1 / (1 + euclidean distance), so it lies in (0, 1] and
equals 1 only for identical vectors. Cluster-pair linkage is the mean of all
cross-cluster pair similarities. Agglomeration starts from singletons and
repeatedly merges the most similar pair; equal linkages are broken by the
lexicographically smallest (min cluster id, other cluster id) pair, which
makes merge order deterministic and oracle-testable.

The implementation keeps a matrix of cross-cluster similarity *sums* and adds
the two merged rows on every merge. For average linkage this reproduces the
mean-of-all-pairs definition exactly (the sum over the union is the sum of
the sums), unlike shortcuts that average centroid distances.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

import numpy as np

from .embedding import read_vector_file, write_vector_file
from .errors import DataFormatError

logger = logging.getLogger(__name__)


def pair_similarity(u, v) -> float:
    """Euclidean-distance-based similarity 1 / (1 + ||u - v||)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(1.0 / (1.0 + np.sqrt(np.sum((u - v) ** 2))))


def similarity_matrix(vectors) -> np.ndarray:
    """All pairwise similarities, row-vectorized with the pair formula."""
    vectors = np.asarray(vectors, dtype=float)
    n = vectors.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        dist = np.sqrt(np.sum((vectors - vectors[i]) ** 2, axis=1))
        out[i] = 1.0 / (1.0 + dist)
    return out


def average_linkage(a_members, b_members, vectors) -> float:
    """Mean pair similarity between two disjoint clusters."""
    a = sorted(a_members)
    b = sorted(b_members)
    if not a or not b:
        raise ValueError("clusters must be non-empty")
    if set(a) & set(b):
        raise ValueError("clusters overlap")
    vectors = np.asarray(vectors, dtype=float)
    total = 0.0
    for i in a:
        for j in b:
            total += pair_similarity(vectors[i], vectors[j])
    return total / (len(a) * len(b))


@dataclass
class Dendrogram:
    """Full merge history: leaves are 0..n-1, merge t creates cluster n+t."""

    merges: list[tuple[int, int, float, int]]
    leaf_count: int

    def __post_init__(self):
        if self.leaf_count >= 1 and len(self.merges) != self.leaf_count - 1:
            raise ValueError(
                f"{self.leaf_count} leaves need {self.leaf_count - 1} merges, "
                f"got {len(self.merges)}"
            )


@dataclass
class ClusterAssignment:
    """Final word -> cluster map with per-cluster centroids.

    Cluster ids are 0..k-1 ordered by each cluster's smallest member id.
    ``words`` carries the clustered token strings (index-aligned with
    ``assign``) when the vectors came from a vocabulary.
    """

    k: int
    assign: np.ndarray
    centroids: np.ndarray
    member_counts: np.ndarray
    words: list[str] | None = None

    def __post_init__(self):
        self.assign = np.asarray(self.assign, dtype=int)
        self.member_counts = np.asarray(self.member_counts, dtype=int)
        if self.assign.size and (self.assign.min() < 0 or self.assign.max() >= self.k):
            raise ValueError("cluster id outside 0..k-1")
        if (self.member_counts < 1).any():
            raise ValueError("empty cluster in assignment")
        if self.centroids.shape[0] != self.k:
            raise ValueError("centroid row count != k")
        if self.words is not None and len(self.words) != len(self.assign):
            raise ValueError("words and assignment lengths differ")

    def cluster_of(self, word: str) -> int:
        if self.words is None:
            raise ValueError("assignment carries no words")
        try:
            return int(self.assign[self.words.index(word)])
        except ValueError:
            raise KeyError(word) from None


def compute_centroids(assign, vectors, k: int | None = None) -> np.ndarray:
    """Arithmetic mean of member vectors per cluster, ascending-id order."""
    assign = np.asarray(assign, dtype=int)
    vectors = np.asarray(vectors, dtype=float)
    if k is None:
        k = int(assign.max()) + 1 if assign.size else 0
    centroids = np.empty((k, vectors.shape[1]))
    for c in range(k):
        members = np.flatnonzero(assign == c)
        if members.size == 0:
            raise ValueError(f"cluster {c} has no members")
        centroids[c] = vectors[members].mean(axis=0)
    return centroids


def build_dendrogram(vectors, similarity_fn=None, linkage: str = "average") -> Dendrogram:
    """Agglomerate n vectors all the way to one cluster.

    ``similarity_fn(u, v)`` may replace the euclidean-based pair similarity;
    only average linkage is shipped.
    """
    if linkage != "average":
        raise ValueError(f"only 'average' linkage is shipped, got {linkage!r}")
    vectors = np.asarray(vectors, dtype=float)
    n = vectors.shape[0]
    if n < 1:
        raise ValueError("need at least one vector")
    if similarity_fn is None:
        sims = similarity_matrix(vectors)
    else:
        sims = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                sims[i, j] = similarity_fn(vectors[i], vectors[j])

    # slot arrays: a merge reuses the first operand's slot
    pair_sums = sims.copy()
    counts = np.ones(n)
    ids = np.arange(n)
    active = np.ones(n, dtype=bool)
    merges = []
    for step in range(n - 1):
        act = np.flatnonzero(active)
        sub = pair_sums[np.ix_(act, act)] / np.outer(counts[act], counts[act])
        upper = np.triu(np.ones(sub.shape, dtype=bool), 1)
        best = sub[upper].max()
        cand_i, cand_j = np.nonzero(upper & (sub == best))
        # ids, not slots, drive the tie rule
        keyed = []
        for i, j in zip(cand_i, cand_j):
            ia, ib = int(ids[act[i]]), int(ids[act[j]])
            keyed.append(((min(ia, ib), max(ia, ib)), act[i], act[j]))
        (id_a, id_b), slot_a, slot_b = min(keyed)
        new_id = n + step
        merges.append((id_a, id_b, float(best), new_id))
        pair_sums[slot_a, :] += pair_sums[slot_b, :]
        pair_sums[:, slot_a] += pair_sums[:, slot_b]
        counts[slot_a] += counts[slot_b]
        ids[slot_a] = new_id
        active[slot_b] = False
    return Dendrogram(merges, n)


def cut_dendrogram(dendrogram: Dendrogram, k: int) -> list[list[int]]:
    """Member lists of the k clusters left after the first n-k merges.

    Clusters are ordered by smallest contained leaf, members ascending.
    """
    n = dendrogram.leaf_count
    if not (1 <= k <= n):
        raise ValueError(f"k must be in 1..{n}, got {k}")
    parent: dict[int, int] = {}
    for a, b, _, new_id in dendrogram.merges[: n - k]:
        parent[a] = new_id
        parent[b] = new_id
    groups: dict[int, list[int]] = {}
    for leaf in range(n):
        root = leaf
        while root in parent:
            root = parent[root]
        groups.setdefault(root, []).append(leaf)
    clusters = sorted(groups.values(), key=lambda m: m[0])
    if len(clusters) != k:
        raise ValueError(f"cut produced {len(clusters)} clusters, expected {k}")
    return clusters


def assignment_from_cut(clusters, vectors, words=None) -> ClusterAssignment:
    """Build a ClusterAssignment (with centroids) from cut member lists."""
    vectors = np.asarray(vectors, dtype=float)
    assign = np.empty(vectors.shape[0], dtype=int)
    for cid, members in enumerate(clusters):
        assign[members] = cid
    centroids = compute_centroids(assign, vectors, k=len(clusters))
    counts = np.array([len(m) for m in clusters])
    return ClusterAssignment(len(clusters), assign, centroids, counts, words=words)


def hac_cluster(vectors, k: int, words=None, similarity_fn=None):
    """Cluster vectors into k groups; returns the full dendrogram too.

    The dendrogram covers the complete agglomeration so it can be re-cut at
    any other k; the assignment corresponds to stopping at k clusters.
    """
    vectors = np.asarray(vectors, dtype=float)
    n = vectors.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k must be in 1..{n}, got {k}")
    dendrogram = build_dendrogram(vectors, similarity_fn=similarity_fn)
    clusters = cut_dendrogram(dendrogram, k)
    return dendrogram, assignment_from_cut(clusters, vectors, words=words)


def centroid_path_for(path) -> str:
    return str(path) + ".centroids"


_CLUSTER_TOKEN_RE = re.compile(r"^cluster_(\d+)$")


def save_assignment(assignment: ClusterAssignment, path) -> None:
    """Write ``word<TAB>cluster_id`` lines plus a companion centroid file."""
    if assignment.words is None:
        raise ValueError("assignment has no words; cannot persist")
    with open(path, "w", encoding="utf-8") as fh:
        for word, cid in zip(assignment.words, assignment.assign):
            fh.write(f"{word}\t{int(cid)}\n")
    labels = [f"cluster_{c}" for c in range(assignment.k)]
    write_vector_file(centroid_path_for(path), labels, assignment.centroids)


def load_assignment(path, vocabulary=None) -> ClusterAssignment:
    """Read an assignment and its companion centroid file.

    With a vocabulary given, words absent from it are rejected. Cluster ids
    must cover 0..k-1 with no empty cluster; the centroid file must contain a
    ``cluster_<id>`` row for every id.
    """
    words: list[str] = []
    cids: list[int] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataFormatError(f"{path}:{lineno}: expected word<TAB>cluster_id")
            try:
                cid = int(parts[1])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: cluster id must be an integer") from None
            if cid < 0:
                raise DataFormatError(f"{path}:{lineno}: negative cluster id")
            if parts[0] in words:
                raise DataFormatError(f"{path}:{lineno}: duplicate word {parts[0]!r}")
            if vocabulary is not None and parts[0] not in vocabulary:
                raise DataFormatError(f"{path}:{lineno}: unknown word {parts[0]!r}")
            words.append(parts[0])
            cids.append(cid)
    if not words:
        raise DataFormatError(f"{path}: empty assignment file")
    k = max(cids) + 1
    counts = np.bincount(cids, minlength=k)
    missing_clusters = np.flatnonzero(counts == 0)
    if missing_clusters.size:
        raise DataFormatError(f"{path}: cluster {missing_clusters[0]} has no members")

    cpath = centroid_path_for(path)
    labels, centroids = read_vector_file(cpath)
    rows = {}
    for i, label in enumerate(labels):
        # undo the reader's space unescaping: match the on-disk token
        m = _CLUSTER_TOKEN_RE.match(label.replace(" ", "_"))
        if not m:
            raise DataFormatError(f"{cpath}: unexpected centroid token {label!r}")
        rows[int(m.group(1))] = i
    for c in range(k):
        if c not in rows:
            raise DataFormatError(f"{cpath}: missing centroid row for cluster {c}")
    extra = set(rows) - set(range(k))
    if extra:
        raise DataFormatError(f"{cpath}: centroid row for unknown cluster {min(extra)}")
    ordered = centroids[[rows[c] for c in range(k)]]
    return ClusterAssignment(k, np.array(cids), ordered, counts, words=words)
