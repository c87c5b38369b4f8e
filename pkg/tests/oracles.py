"""Slow reference implementations used only by the tests.

naive_hac is an independent O(n^3) agglomerative clusterer: it caches
pairwise-cluster linkages, recomputes only the merged cluster's row after each
merge with literal ascending-id double loops, and snapshots the assignment at
every cluster count during a single agglomeration.
"""

import numpy as np

from semexpand.clustering import pair_similarity


def _snapshot(clusters) -> list:
    """Cluster index per leaf, clusters ordered by smallest contained leaf."""
    groups = sorted(clusters.values(), key=lambda members: members[0])
    size = sum(len(g) for g in groups)
    assign = [0] * size
    for index, members in enumerate(groups):
        for leaf in members:
            assign[leaf] = index
    return assign


def naive_hac(vectors):
    """Full agglomeration of row vectors under average-similarity linkage.

    Returns (merges, assignments_by_k). merges holds (id_a, id_b, linkage,
    new_id) tuples in merge order, with leaves 0..n-1 and merge t creating id
    n+t; ties go to the pair with the smallest (min id, other id). The
    assignments dict has an entry for every k from n down to 1.
    """
    vectors = np.asarray(vectors, dtype=float)
    n = len(vectors)
    sim = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            sim[i, j] = pair_similarity(vectors[i], vectors[j])

    clusters = {i: [i] for i in range(n)}  # dendrogram id -> sorted leaves

    def linkage(a_members, b_members) -> float:
        total = 0.0
        for u in a_members:
            for v in b_members:
                total += sim[u, v]
        return total / (len(a_members) * len(b_members))

    cache = {}
    for a in range(n):
        for b in range(a + 1, n):
            cache[(a, b)] = sim[a, b]

    merges = []
    assignments = {n: _snapshot(clusters)}
    for step in range(n - 1):
        best_pair = None
        best_value = None
        for (a, b), value in cache.items():
            if (
                best_pair is None
                or value > best_value
                or (value == best_value and (a, b) < best_pair)
            ):
                best_pair = (a, b)
                best_value = value
        a, b = best_pair
        new_id = n + step
        merges.append((a, b, best_value, new_id))
        merged = sorted(clusters.pop(a) + clusters.pop(b))
        for pair in [p for p in cache if a in p or b in p]:
            del cache[pair]
        for other, members in clusters.items():
            key = (other, new_id) if other < new_id else (new_id, other)
            cache[key] = linkage(members, merged)
        clusters[new_id] = merged
        assignments[n - step - 1] = _snapshot(clusters)
    return merges, assignments
