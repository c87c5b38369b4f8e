"""Skip-Gram word embedding training and the embedding text-file format.

Training maximizes the average log probability of context words around each
center word. The exact-softmax mode normalizes over the whole vocabulary every
update and is the default at desk scale; negative sampling is the documented
approximation for larger vocabularies.

File format: first line ``<vocab_size> <dim>``, then one ``<word> <v1> .. <vd>``
line per word. Words must be space-free on disk, so internal spaces of
multi-word tokens (from dictionary merging) are written as ``_`` and restored
on load.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .corpus import TokenizedCorpus, Vocabulary
from .errors import DataFormatError, NumericError

logger = logging.getLogger(__name__)

MODE_EXACT = "exact-softmax"
MODE_NEGATIVE = "negative-sampling"


@dataclass
class SkipGramConfig:
    window: int = 2
    dim: int = 50
    epochs: int = 15
    learning_rate: float = 0.025
    final_learning_rate: float = 0.0001
    seed: int = 0
    mode: str = MODE_EXACT
    negative_samples: int = 5

    def __post_init__(self):
        if self.window < 1 or self.dim < 1 or self.epochs < 1:
            raise ValueError("window, dim and epochs must all be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.final_learning_rate > self.learning_rate:
            raise ValueError("final_learning_rate must not exceed learning_rate")
        if self.mode not in (MODE_EXACT, MODE_NEGATIVE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_NEGATIVE and self.negative_samples < 1:
            raise ValueError("negative-sampling mode needs negative_samples >= 1")


@dataclass
class EmbeddingMatrix:
    """Input- and output-side vectors for every vocabulary word.

    ``input_vectors`` are the word representations exported downstream;
    ``output_vectors`` are the context-side softmax parameters.
    """

    vocabulary: Vocabulary
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    objective_history: list[float] | None = None

    def __post_init__(self):
        n = len(self.vocabulary)
        if self.input_vectors.shape != self.output_vectors.shape:
            raise ValueError("input/output vector shapes differ")
        if self.input_vectors.shape[0] != n:
            raise ValueError(f"expected {n} rows, got {self.input_vectors.shape[0]}")

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def vector(self, word: str) -> np.ndarray:
        return self.input_vectors[self.vocabulary.index_of(word)]


def _sigmoid(x):
    # tanh form avoids overflow for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def softmax_probability(center: int, context: int, emb: EmbeddingMatrix) -> float:
    """Probability of ``context`` given ``center`` under the full softmax."""
    n = len(emb.vocabulary)
    if not (0 <= center < n and 0 <= context < n):
        raise ValueError(f"word ids must be < {n}")
    scores = emb.output_vectors @ emb.input_vectors[center]
    scores -= scores.max()
    e = np.exp(scores)
    return float(e[context] / e.sum())


def softmax_pair_gradients(input_vectors, output_vectors, center: int, context: int):
    """Log probability of one (center, context) pair and its ascent gradients.

    Returns ``(logp, grad_center_input, grad_output_matrix)`` where the output
    gradient covers every vocabulary row (the exact-softmax normalizer touches
    them all).
    """
    v = input_vectors[center]
    scores = output_vectors @ v
    m = scores.max()
    e = np.exp(scores - m)
    z = e.sum()
    p = e / z
    logp = float(scores[context] - m - np.log(z))
    grad_v = output_vectors[context] - p @ output_vectors
    grad_out = np.outer(-p, v)
    grad_out[context] += v
    return logp, grad_v, grad_out


def negative_sampling_pair_gradients(
    input_vectors, output_vectors, center: int, context: int, negatives
):
    """Negative-sampling pair loss and ascent gradients.

    ``negatives`` must not contain ``context``. Returns
    ``(loss, grad_center_input, {row_id: grad_output_row})``.
    """
    v = input_vectors[center]
    s_pos = _sigmoid(output_vectors[context] @ v)
    loss = float(_log_sigmoid(output_vectors[context] @ v))
    grad_v = (1.0 - s_pos) * output_vectors[context]
    grad_rows = {context: (1.0 - s_pos) * v}
    for n in negatives:
        if n == context:
            raise ValueError("negative sample equals the context word")
        x = output_vectors[n] @ v
        loss += float(_log_sigmoid(-x))
        s_n = _sigmoid(x)
        grad_v = grad_v - s_n * output_vectors[n]
        grad_rows[n] = grad_rows.get(n, 0.0) - s_n * v
    return loss, grad_v, grad_rows


def _window_pairs(sentence: list[int], window: int):
    """(center, context) pairs, clipped at sentence boundaries."""
    n = len(sentence)
    for t in range(n):
        lo = max(0, t - window)
        hi = min(n, t + window + 1)
        for j in range(lo, hi):
            if j != t:
                yield sentence[t], sentence[j]


def corpus_objective(corpus: TokenizedCorpus, emb: EmbeddingMatrix, window: int) -> float:
    """Average log probability of all in-window pairs, normalized by token count."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if not corpus.sentences:
        raise DataFormatError("cannot evaluate the objective on an empty corpus")
    total = 0.0
    pairs = 0
    out_t = emb.output_vectors.T
    for sent in corpus.sentences:
        ids = np.asarray(sent)
        logits = emb.input_vectors[ids] @ out_t
        m = logits.max(axis=1)
        logz = m + np.log(np.exp(logits - m[:, None]).sum(axis=1))
        logp = logits - logz[:, None]
        length = len(ids)
        rows = np.arange(length)
        for off in range(1, window + 1):
            if length > off:
                total += float(logp[rows[: length - off], ids[off:]].sum())
                total += float(logp[rows[off:], ids[: length - off]].sum())
                pairs += 2 * (length - off)
    if pairs == 0:
        logger.warning("no valid training pairs (all sentences shorter than 2 tokens)")
        return 0.0
    return total / corpus.token_count


def _noise_distribution(corpus: TokenizedCorpus) -> np.ndarray:
    """Unigram^(3/4) noise distribution for negative sampling."""
    counts = np.zeros(len(corpus.vocabulary))
    for sent in corpus.sentences:
        for t in sent:
            counts[t] += 1
    weights = counts**0.75
    return weights / weights.sum()


def train_skipgram(
    corpus: TokenizedCorpus, config: SkipGramConfig, track_objective: bool = False
) -> EmbeddingMatrix:
    """Train skip-gram embeddings by per-pair stochastic gradient ascent.

    Parameters start uniform in [-0.5/dim, 0.5/dim] from ``config.seed``; the
    learning rate decays linearly to ``config.final_learning_rate`` over all
    updates. Deterministic for a fixed seed (single-threaded). With
    ``track_objective`` the exact objective is recorded before training and
    after every epoch in ``objective_history``.
    """
    vocab = corpus.vocabulary
    n = len(vocab)
    if n < 2:
        raise DataFormatError("skip-gram needs a vocabulary of at least 2 words")
    rng = np.random.default_rng(config.seed)
    bound = 0.5 / config.dim
    inp = rng.uniform(-bound, bound, size=(n, config.dim))
    out = rng.uniform(-bound, bound, size=(n, config.dim))
    emb = EmbeddingMatrix(vocab, inp, out)

    pairs_per_epoch = sum(1 for s in corpus.sentences for _ in _window_pairs(s, config.window))
    if pairs_per_epoch == 0:
        logger.warning("corpus yields no training pairs; returning initial vectors")
        if track_objective:
            emb.objective_history = [0.0]
        return emb
    total_updates = config.epochs * pairs_per_epoch

    cumulative = None
    if config.mode == MODE_NEGATIVE:
        cumulative = np.cumsum(_noise_distribution(corpus))

    history = []
    if track_objective:
        history.append(corpus_objective(corpus, emb, config.window))

    lr0 = config.learning_rate
    lr1 = config.final_learning_rate
    done = 0
    for epoch in range(1, config.epochs + 1):
        for sent in corpus.sentences:
            for center, context in _window_pairs(sent, config.window):
                frac = done / total_updates
                lr = lr0 + (lr1 - lr0) * frac
                if config.mode == MODE_EXACT:
                    _, grad_v, grad_out = softmax_pair_gradients(inp, out, center, context)
                    inp[center] += lr * grad_v
                    out += lr * grad_out
                else:
                    draws = np.searchsorted(
                        cumulative, rng.random(config.negative_samples)
                    )
                    negatives = [int(d) for d in draws if d != context]
                    _, grad_v, grad_rows = negative_sampling_pair_gradients(
                        inp, out, center, context, negatives
                    )
                    inp[center] += lr * grad_v
                    for row, g in grad_rows.items():
                        out[row] += lr * g
                done += 1
        if not (np.isfinite(inp).all() and np.isfinite(out).all()):
            raise NumericError(f"skip-gram training diverged at epoch {epoch}")
        if track_objective:
            obj = corpus_objective(corpus, emb, config.window)
            if not np.isfinite(obj):
                raise NumericError(f"skip-gram objective became NaN at epoch {epoch}")
            history.append(obj)
            logger.info("epoch %d/%d objective %.6f", epoch, config.epochs, obj)
    if track_objective:
        emb.objective_history = history
    return emb


def _escape_word(word: str) -> str:
    return word.replace(" ", "_")


def _unescape_word(word: str) -> str:
    return word.replace("_", " ")


def write_vector_file(path, words, matrix) -> None:
    """Write any (words, |words| x d matrix) pair in the embedding file format."""
    matrix = np.asarray(matrix)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {matrix.shape[1]}\n")
        for word, row in zip(words, matrix):
            vals = " ".join(f"{x:.8g}" for x in row)
            fh.write(f"{_escape_word(word)} {vals}\n")


def read_vector_file(path) -> tuple[list[str], np.ndarray]:
    """Parse an embedding-format file into (words, matrix).

    Raises DataFormatError with a line number for malformed headers, rows with
    the wrong number of values, non-numeric values and duplicate words.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise DataFormatError(f"{path}:1: header must be '<vocab_size> <dim>'")
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataFormatError(f"{path}:1: header must contain two integers") from None
        if count < 1 or dim < 1:
            raise DataFormatError(f"{path}:1: vocab size and dim must be positive")
        words: list[str] = []
        seen: set[str] = set()
        matrix = np.empty((count, dim))
        row = 0
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            if row >= count:
                raise DataFormatError(f"{path}:{lineno}: more rows than the header declares")
            fields = line.split()
            if len(fields) != dim + 1:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 1 word + {dim} values, got {len(fields)} fields"
                )
            word = _unescape_word(fields[0])
            if word in seen:
                raise DataFormatError(f"{path}:{lineno}: duplicate word {word!r}")
            seen.add(word)
            try:
                matrix[row] = [float(x) for x in fields[1:]]
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-numeric value") from None
            words.append(word)
            row += 1
    if row != count:
        raise DataFormatError(f"{path}: header declares {count} rows, found {row}")
    return words, matrix


def save_embeddings(emb: EmbeddingMatrix, path) -> None:
    """Persist the input-side vectors (the exported word representations)."""
    write_vector_file(path, emb.vocabulary.words, emb.input_vectors)


def load_embeddings(path) -> EmbeddingMatrix:
    """Load a standalone embedding file; counts default to 1, output side to zero."""
    words, matrix = read_vector_file(path)
    vocab = Vocabulary(words, {w: 1 for w in words})
    return EmbeddingMatrix(vocab, matrix, np.zeros_like(matrix))
