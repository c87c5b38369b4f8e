"""Word-cluster feature expansion: concatenate each word vector with the
centroid of its cluster, doubling the representation width.

Words outside the clustered set and OOV tokens fall back to zeros, extending
the zero-vector OOV policy to the centroid half.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import ClusterAssignment
from .embedding import EmbeddingMatrix, write_vector_file


@dataclass
class WordClusterMatrix:
    """|V| x 2d matrix: row i = (word vector i, centroid of word i's cluster)."""

    rows: np.ndarray
    embedding: EmbeddingMatrix
    assignment: ClusterAssignment

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def vocabulary(self):
        return self.embedding.vocabulary


def expand(emb: EmbeddingMatrix, assignment: ClusterAssignment) -> WordClusterMatrix:
    """Concatenate word vectors with their cluster centroids.

    Every clustered word must exist in the embedding vocabulary; words the
    assignment does not cover get a zero centroid half. Values are copied from
    their sources, never re-derived.
    """
    if assignment.words is None:
        raise ValueError("assignment carries no words; cannot align with vocabulary")
    d = emb.dim
    rows = np.zeros((len(emb.vocabulary), 2 * d))
    rows[:, :d] = emb.input_vectors
    for word, cid in zip(assignment.words, assignment.assign):
        if word not in emb.vocabulary:
            raise ValueError(f"clustered word {word!r} missing from the embedding vocabulary")
        rows[emb.vocabulary.index_of(word), d:] = assignment.centroids[cid]
    return WordClusterMatrix(rows, emb, assignment)


def _lookup_table(source) -> np.ndarray:
    if isinstance(source, WordClusterMatrix):
        return source.rows
    if isinstance(source, EmbeddingMatrix):
        return source.input_vectors
    return np.asarray(source, dtype=float)


def embed_sequence(token_ids, source, max_len: int, oov_marker: int | None = None):
    """Token ids -> (max_len x width matrix, validity mask).

    ``source`` is a WordClusterMatrix, an EmbeddingMatrix or a plain lookup
    table. The OOV marker (default: table row count) maps to a zero row but
    still counts as a valid position. Sequences are tail-truncated to
    ``max_len`` and tail-padded with zero rows; the mask is 1 on real
    positions, 0 on padding.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    table = _lookup_table(source)
    if oov_marker is None:
        oov_marker = table.shape[0]
    out = np.zeros((max_len, table.shape[1]))
    mask = np.zeros(max_len)
    for t, tok in enumerate(token_ids[:max_len]):
        if tok != oov_marker:
            out[t] = table[tok]
        mask[t] = 1.0
    return out, mask


def embed_dataset(dataset, source, max_len: int):
    """Embed a whole LabeledDataset into (B x L x width, B x L mask, labels)."""
    table = _lookup_table(source)
    batch = np.zeros((len(dataset.examples), max_len, table.shape[1]))
    masks = np.zeros((len(dataset.examples), max_len))
    labels = np.zeros(len(dataset.examples), dtype=int)
    for i, (ids, label) in enumerate(dataset.examples):
        batch[i], masks[i] = embed_sequence(ids, table, max_len, dataset.oov_marker)
        labels[i] = label
    return batch, masks, labels


def save_expanded(wc: WordClusterMatrix, path) -> None:
    """Persist the expanded matrix in the embedding file format (dim = 2d)."""
    write_vector_file(path, wc.vocabulary.words, wc.rows)
