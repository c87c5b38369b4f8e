"""Seeded synthetic data for benchmarks and sanity checks.

The planted-topic benchmark builds three disjoint 30-word topic vocabularies.
Labeled training sentences draw only from the first 20 words of their topic;
test sentences draw from the 10 held-out words, so test-time generalization
has to come from the embedding space, not from memorized word features. The
unlabeled companion corpus covers all 90 words but mixes topics within a
sentence at CONTAMINATION_RATE, leaving single-epoch embeddings individually
noisy while pairwise similarity still groups topics. Cluster centroids average
that noise away, which is exactly the signal the expanded classifier can use
and the plain one cannot.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import clustering, corpus, embedding, expansion
from .nn import LstmClassifier, TrainConfig, evaluate, train_classifier

TOPIC_COUNT = 3
WORDS_PER_TOPIC = 30
TRAIN_WORDS_PER_TOPIC = 20
TRAIN_SENTENCES = 600
TEST_SENTENCES = 150
UNLABELED_SENTENCES = 2000
TRAIN_LENGTH = (4, 8)
TEST_LENGTH = (2, 4)
CONTAMINATION_RATE = 0.25
EMBED_DIM = 16

# benchmark harness settings, tuned for a reliable gap at small runtime
BENCH_EMBED_EPOCHS = 1
BENCH_WINDOW = 2
BENCH_CLUSTER_COUNT = 3
BENCH_MAX_LEN = 8
BENCH_HIDDEN = 64
BENCH_TRAIN_EPOCHS = 30
BENCH_BATCH_SIZE = 32
BENCH_LEARNING_RATE = 0.1
ACCURACY_MARGIN = 0.02
BENCHMARK_SEEDS = (1, 2, 3, 4, 5)


def topic_word(topic: int, index: int) -> str:
    return f"t{topic}w{index:02d}"


@dataclass
class SyntheticBenchmark:
    unlabeled: list
    train: list
    test: list


def _sentence(rng, topic: int, word_indices, contamination: float, length_range) -> str:
    length = int(rng.integers(length_range[0], length_range[1] + 1))
    tokens = []
    for _ in range(length):
        t = topic
        if contamination > 0 and rng.random() < contamination:
            t = int((topic + 1 + rng.integers(TOPIC_COUNT - 1)) % TOPIC_COUNT)
        tokens.append(topic_word(t, int(rng.choice(word_indices))))
    return " ".join(tokens)


def make_benchmark(seed: int) -> SyntheticBenchmark:
    """Generate the planted-topic benchmark for one seed."""
    rng = np.random.default_rng(seed)
    all_indices = np.arange(WORDS_PER_TOPIC)
    train_indices = all_indices[:TRAIN_WORDS_PER_TOPIC]
    test_indices = all_indices[TRAIN_WORDS_PER_TOPIC:]

    unlabeled = [
        _sentence(rng, int(rng.integers(TOPIC_COUNT)), all_indices, CONTAMINATION_RATE, TRAIN_LENGTH)
        for _ in range(UNLABELED_SENTENCES)
    ]
    seen = {token for line in unlabeled for token in line.split()}
    for topic in range(TOPIC_COUNT):
        missing = [i for i in all_indices if topic_word(topic, i) not in seen]
        while missing:
            unlabeled.append(" ".join(topic_word(topic, i) for i in missing[:8]))
            missing = missing[8:]

    train = [
        (f"topic{n % TOPIC_COUNT}", _sentence(rng, n % TOPIC_COUNT, train_indices, 0.0, TRAIN_LENGTH))
        for n in range(TRAIN_SENTENCES)
    ]
    test = [
        (f"topic{n % TOPIC_COUNT}", _sentence(rng, n % TOPIC_COUNT, test_indices, 0.0, TEST_LENGTH))
        for n in range(TEST_SENTENCES)
    ]
    return SyntheticBenchmark(unlabeled, train, test)


def write_benchmark(bench: SyntheticBenchmark, out_dir) -> dict:
    """Write corpus.txt, train.tsv and test.tsv under out_dir; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": out / "corpus.txt",
        "train": out / "train.tsv",
        "test": out / "test.tsv",
    }
    paths["corpus"].write_text("\n".join(bench.unlabeled) + "\n", encoding="utf-8")
    for key in ("train", "test"):
        rows = getattr(bench, key)
        paths[key].write_text(
            "".join(f"{label}\t{text}\n" for label, text in rows), encoding="utf-8"
        )
    return paths


@dataclass
class BenchmarkResult:
    expanded_accuracy: float
    plain_accuracy: float

    @property
    def delta(self) -> float:
        return self.expanded_accuracy - self.plain_accuracy


def run_benchmark(seed: int) -> BenchmarkResult:
    """Train expanded and plain LSTM classifiers on one benchmark instance.

    Both arms share the same embeddings, data and training hyperparameters;
    they differ only in input width (2d expanded vs d plain).
    """
    bench = make_benchmark(seed)
    sentences = [corpus.tokenize(line) for line in bench.unlabeled]
    vocab = corpus.build_vocabulary(sentences)
    encoded = corpus.encode_corpus(sentences, vocab)
    emb = embedding.train_skipgram(
        encoded,
        embedding.SkipGramConfig(
            window=BENCH_WINDOW, dim=EMBED_DIM, epochs=BENCH_EMBED_EPOCHS, seed=seed
        ),
    )
    _, assignment = clustering.hac_cluster(
        emb.input_vectors, BENCH_CLUSTER_COUNT, words=vocab.words
    )
    expanded = expansion.expand(emb, assignment)

    train_ds = corpus.encode_dataset(bench.train, vocab)
    test_ds = corpus.encode_dataset(bench.test, vocab)
    accuracies = {}
    for arm, source in (("expanded", expanded), ("plain", emb)):
        x_train, m_train, y_train = expansion.embed_dataset(train_ds, source, BENCH_MAX_LEN)
        x_test, m_test, y_test = expansion.embed_dataset(test_ds, source, BENCH_MAX_LEN)
        model = LstmClassifier(
            input_width=x_train.shape[2],
            num_classes=train_ds.num_classes,
            hidden=BENCH_HIDDEN,
            seed=seed,
        )
        config = TrainConfig(
            batch_size=BENCH_BATCH_SIZE,
            epochs=BENCH_TRAIN_EPOCHS,
            learning_rate=BENCH_LEARNING_RATE,
            seed=seed,
        )
        train_classifier(model, x_train, m_train, y_train, config)
        accuracies[arm] = evaluate(model, x_test, m_test, y_test).accuracy
    return BenchmarkResult(accuracies["expanded"], accuracies["plain"])


def make_separable_toyset(
    num_examples: int = 20, max_len: int = 20, width: int = 8, seed: int = 0
):
    """A tiny two-class set, linearly separated in the mean input vector.

    Returns (x, mask, y) ready for either classifier; class c offsets the
    first feature by +/-1 on all valid positions, plus small noise.
    """
    rng = np.random.default_rng(seed)
    x = np.zeros((num_examples, max_len, width))
    mask = np.zeros((num_examples, max_len))
    y = np.arange(num_examples) % 2
    for i in range(num_examples):
        length = int(rng.integers(max_len // 2, max_len + 1))
        rows = rng.normal(scale=0.1, size=(length, width))
        rows[:, 0] += 1.0 if y[i] == 0 else -1.0
        x[i, :length] = rows
        mask[i, :length] = 1.0
    return x, mask, y
