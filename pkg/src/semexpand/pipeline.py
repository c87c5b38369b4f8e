"""End-to-end experiment pipeline: split, grid search over k, run, compare.

Every stochastic stage draws from the single config seed. Grid trials and the
final model use a per-k seed derived with SeedSequence([seed, k]), so adding
or removing grid points never perturbs the other points' results.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import clustering, corpus, embedding, expansion
from .config import ExperimentConfig
from .errors import ConfigError, DataFormatError, SemexpandError
from .nn import CnnClassifier, LstmClassifier, TrainConfig, evaluate, save_model, train_classifier

logger = logging.getLogger(__name__)

REPORT_VERSION = 1

ARTIFACT_NAMES = {
    "embeddings": "embeddings.txt",
    "assignment": "clusters.tsv",
    "expanded": "expanded.txt",
    "model": "model.txt",
    "report": "report.json",
    "summary": "report.txt",
    "config": "config.txt",
}


def stratified_split_indices(labels, label_names, fractions, seed: int):
    """Per-class shuffled index slices for (train, validation, test).

    The first two parts take floor(fraction * class size); the last part gets
    the remainder. Any empty part fails, naming the offending class.
    """
    labels = np.asarray(labels, dtype=int)
    rng = np.random.default_rng(seed)
    parts: tuple[list, list, list] = ([], [], [])
    for class_id in range(len(label_names)):
        members = np.flatnonzero(labels == class_id)
        rng.shuffle(members)
        n = len(members)
        n_train = int(fractions[0] * n)
        n_val = int(fractions[1] * n)
        slices = (members[:n_train], members[n_train : n_train + n_val], members[n_train + n_val :])
        if any(len(s) == 0 for s in slices):
            raise ConfigError(
                f"class {label_names[class_id]!r} has only {n} example(s), "
                f"too few for a {fractions[0]}/{fractions[1]}/{fractions[2]} split"
            )
        for part, s in zip(parts, slices):
            part.extend(int(i) for i in s)
    return tuple(sorted(p) for p in parts)


def _subset(dataset: corpus.LabeledDataset, indices) -> corpus.LabeledDataset:
    return corpus.LabeledDataset(
        examples=[dataset.examples[i] for i in indices],
        num_classes=dataset.num_classes,
        oov_marker=dataset.oov_marker,
        label_names=list(dataset.label_names),
    )


def split_dataset(dataset: corpus.LabeledDataset, fractions, seed: int):
    """Stratified (train, validation, test) split of a labeled dataset."""
    labels = [label for _, label in dataset.examples]
    parts = stratified_split_indices(labels, dataset.label_names, fractions, seed)
    return tuple(_subset(dataset, indices) for indices in parts)


def split_fingerprint(test_indices, total: int) -> str:
    """Hash identifying a test split; equal iff the same examples are held out."""
    payload = f"{total}:" + ",".join(str(i) for i in sorted(test_indices))
    return hashlib.sha256(payload.encode("ascii")).hexdigest()


def seed_for(base_seed: int, k: int) -> int:
    return int(np.random.SeedSequence([base_seed, k]).generate_state(1)[0])


@dataclass
class ExperimentReport:
    config: dict
    split_fingerprint: str
    label_names: list
    chosen_k: int
    grid: list
    test_accuracy: float
    per_class: list
    confusion: list
    train_log: dict
    timings: dict
    artifacts: dict
    format_version: int = REPORT_VERSION

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def summary_lines(self) -> list:
        cfg = self.config
        lines = [
            f"model {cfg['model']}  seed {cfg['seed']}  "
            + ("no expansion" if cfg["no_expansion"] else f"chosen k {self.chosen_k}"),
            f"test accuracy {self.test_accuracy:.4f}",
        ]
        for row in self.per_class:
            lines.append(
                f"class {row['label']}: precision {row['precision']:.4f} "
                f"recall {row['recall']:.4f}"
            )
        if len(self.grid) > 1:
            lines.append("grid (k -> validation accuracy):")
            for row in self.grid:
                lines.append(f"  {row['k']} -> {row['validation_accuracy']:.4f}")
        lines.append(
            "timings: "
            + "  ".join(f"{name} {seconds:.2f}s" for name, seconds in self.timings.items())
        )
        return lines


def save_report(report: ExperimentReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report(path) -> ExperimentReport:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise DataFormatError(f"{path}: expected a JSON object")
    version = raw.get("format_version")
    if version != REPORT_VERSION:
        raise DataFormatError(f"{path}: unsupported report version {version!r}")
    names = {f.name for f in dataclasses.fields(ExperimentReport)}
    missing = names - raw.keys()
    if missing:
        raise DataFormatError(f"{path}: missing report field {sorted(missing)[0]!r}")
    return ExperimentReport(**{name: raw[name] for name in names})


@contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except SemexpandError as exc:
        raise type(exc)(f"{name}: {exc}") from None
    finally:
        timings[name] = timings.get(name, 0.0) + (time.perf_counter() - start)


def _build_classifier(cfg: ExperimentConfig, input_width: int, num_classes: int, seed: int):
    if cfg.model == "cnn":
        return CnnClassifier(
            input_width=input_width,
            num_classes=num_classes,
            max_len=cfg.max_len,
            kernels=cfg.kernels,
            kernel_width=cfg.kernel_width,
            pool_width=cfg.pool_width,
            seed=seed,
        )
    return LstmClassifier(
        input_width=input_width, num_classes=num_classes, hidden=cfg.hidden, seed=seed
    )


def _fit(cfg, source, train_ds, seed):
    """Train a fresh classifier on train_ds; returns (model, train log)."""
    x, m, y = expansion.embed_dataset(train_ds, source, cfg.max_len)
    model = _build_classifier(cfg, x.shape[2], train_ds.num_classes, seed)
    log = train_classifier(
        model,
        x,
        m,
        y,
        TrainConfig(
            batch_size=cfg.batch_size,
            epochs=cfg.train_epochs,
            learning_rate=cfg.learning_rate,
            seed=seed,
        ),
    )
    return model, log


def _score(cfg, model, source, ds):
    x, m, y = expansion.embed_dataset(ds, source, cfg.max_len)
    return evaluate(model, x, m, y)


def run_pipeline(cfg: ExperimentConfig) -> ExperimentReport:
    """Execute the full experiment and write all artifacts to cfg.output_dir."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / fname for name, fname in ARTIFACT_NAMES.items()}
    timings: dict = {}
    total_start = time.perf_counter()

    if not cfg.dataset:
        raise ConfigError("dataset path is required")
    user_dict = None
    with _stage("tokenize", timings):
        if cfg.dictionary:
            user_dict = corpus.load_dictionary_file(cfg.dictionary)
        raw_examples = corpus.load_labeled_file(cfg.dataset)
        sentences = corpus.load_sentence_file(cfg.corpus, user_dict) if cfg.corpus else []

    with _stage("embeddings", timings):
        if cfg.embeddings:
            emb = embedding.load_embeddings(cfg.embeddings)
        else:
            if not cfg.corpus:
                raise ConfigError("either a corpus to train on or an embeddings file is required")
            with _stage("vocabulary", timings):
                vocab = corpus.build_vocabulary(sentences, cfg.min_count)
                encoded_corpus = corpus.encode_corpus(sentences, vocab)
            emb = embedding.train_skipgram(encoded_corpus, cfg.skipgram_config())
        embedding.save_embeddings(emb, paths["embeddings"])
    vocab = emb.vocabulary

    with _stage("tokenize", timings):
        dataset = corpus.encode_dataset(raw_examples, vocab, user_dict)
    fractions = (cfg.train_fraction, cfg.validation_fraction, cfg.test_fraction)
    labels = [label for _, label in dataset.examples]
    idx_train, idx_val, idx_test = stratified_split_indices(
        labels, dataset.label_names, fractions, cfg.seed
    )
    train_ds, val_ds, test_ds = (_subset(dataset, i) for i in (idx_train, idx_val, idx_test))
    fingerprint = split_fingerprint(idx_test, len(dataset))

    dendrogram = None
    grid_rows: list = []
    if cfg.no_expansion:
        chosen_k = 0
        chosen_seed = seed_for(cfg.seed, 0)
    else:
        with _stage("cluster", timings):
            grid = cfg.grid_values(len(vocab))
            dendrogram = clustering.build_dendrogram(emb.input_vectors)

        def source_for(k: int):
            cut = clustering.cut_dendrogram(dendrogram, k)
            assignment = clustering.assignment_from_cut(cut, emb.input_vectors, vocab.words)
            return assignment, expansion.expand(emb, assignment)

        best = None
        for k in grid:
            try:
                with _stage("grid_search", timings):
                    trial_seed = seed_for(cfg.seed, k)
                    _, trial_source = source_for(k)
                    trial_model, _ = _fit(cfg, trial_source, train_ds, trial_seed)
                    val_accuracy = _score(cfg, trial_model, trial_source, val_ds).accuracy
            except SemexpandError as exc:
                raise type(exc)(f"k={k}: {exc}") from None
            grid_rows.append({"k": k, "validation_accuracy": val_accuracy})
            logger.info("grid k=%d validation accuracy %.4f", k, val_accuracy)
            if best is None or val_accuracy > best[1]:
                best = (k, val_accuracy)
        chosen_k, _ = best
        chosen_seed = seed_for(cfg.seed, chosen_k)

    with _stage("expand", timings):
        if cfg.no_expansion:
            source = emb
        else:
            assignment, source = source_for(chosen_k)
            clustering.save_assignment(assignment, paths["assignment"])
            expansion.save_expanded(source, paths["expanded"])

    with _stage("train", timings):
        final_train = _subset(dataset, list(idx_train) + list(idx_val))
        model, log = _fit(cfg, source, final_train, chosen_seed)
        save_model(model, paths["model"])
    with _stage("evaluate", timings):
        test_result = _score(cfg, model, source, test_ds)

    report = ExperimentReport(
        config={f.name: getattr(cfg, f.name) for f in dataclasses.fields(cfg)},
        split_fingerprint=fingerprint,
        label_names=list(dataset.label_names),
        chosen_k=chosen_k,
        grid=grid_rows,
        test_accuracy=test_result.accuracy,
        per_class=[
            {
                "label": dataset.label_names[c],
                "precision": float(test_result.precision[c]),
                "recall": float(test_result.recall[c]),
            }
            for c in range(dataset.num_classes)
        ],
        confusion=test_result.confusion.tolist(),
        train_log={
            "epoch_losses": log.epoch_losses,
            "epoch_accuracies": log.epoch_accuracies,
            "first_batch_loss": log.first_batch_loss,
        },
        timings={},
        artifacts={name: str(path) for name, path in paths.items()},
    )
    timings["total"] = time.perf_counter() - total_start
    report.timings = {name: round(seconds, 6) for name, seconds in timings.items()}
    save_report(report, paths["report"])
    Path(paths["summary"]).write_text("\n".join(report.summary_lines()) + "\n", encoding="utf-8")
    Path(paths["config"]).write_text("\n".join(cfg.snapshot_lines()) + "\n", encoding="utf-8")
    return report


def grid_search_k(cfg: ExperimentConfig) -> ExperimentReport:
    """Pipeline run that must search a grid; rejects single-k configs."""
    if not cfg.uses_grid():
        raise ConfigError("grid search needs k_min and k_max (leave k unset)")
    if cfg.no_expansion:
        raise ConfigError("grid search is meaningless with --no-expansion")
    return run_pipeline(cfg)


def compare_runs(report_a: ExperimentReport, report_b: ExperimentReport) -> dict:
    """Side-by-side deltas (a minus b); refuses runs with different test splits."""
    if report_a.split_fingerprint != report_b.split_fingerprint:
        raise ConfigError(
            "cannot compare runs with different test splits "
            f"({report_a.split_fingerprint[:12]} vs {report_b.split_fingerprint[:12]})"
        )
    per_class = []
    by_label = {row["label"]: row for row in report_b.per_class}
    for row in report_a.per_class:
        other = by_label.get(row["label"])
        if other is None:
            raise DataFormatError(f"class {row['label']!r} missing from second report")
        per_class.append(
            {
                "label": row["label"],
                "precision_delta": row["precision"] - other["precision"],
                "recall_delta": row["recall"] - other["recall"],
            }
        )
    return {
        "accuracy_a": report_a.test_accuracy,
        "accuracy_b": report_b.test_accuracy,
        "accuracy_delta": report_a.test_accuracy - report_b.test_accuracy,
        "chosen_k_a": report_a.chosen_k,
        "chosen_k_b": report_b.chosen_k,
        "per_class": per_class,
    }


def comparison_lines(comparison: dict) -> list:
    lines = [
        f"accuracy {comparison['accuracy_a']:.4f} vs {comparison['accuracy_b']:.4f} "
        f"(delta {comparison['accuracy_delta']:+.4f})",
        f"chosen k {comparison['chosen_k_a']} vs {comparison['chosen_k_b']}",
    ]
    for row in comparison["per_class"]:
        lines.append(
            f"class {row['label']}: precision {row['precision_delta']:+.4f} "
            f"recall {row['recall_delta']:+.4f}"
        )
    return lines
