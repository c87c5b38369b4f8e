"""Command-line interface: one subcommand per pipeline stage.

Exit codes: 0 success, 1 usage or configuration error, 2 data or file-format
error, 3 numeric failure during training.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import clustering, corpus, embedding, expansion, pipeline
from .config import ExperimentConfig, coerce_value, load_config
from .errors import ConfigError, DataFormatError, NumericError
from .nn import (
    CnnClassifier,
    LstmClassifier,
    TrainConfig,
    evaluate,
    load_model,
    save_model,
    train_classifier,
)

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """Raises ConfigError on usage problems so main() can map them to exit 1."""

    def error(self, message):
        raise ConfigError(message)


def _write_or_print(lines, output) -> None:
    text = "\n".join(lines) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_dictionary(args):
    return corpus.load_dictionary_file(args.dictionary) if args.dictionary else None


def _display_token(token: str) -> str:
    return token.replace(" ", "_")


def cmd_tokenize(args) -> int:
    user_dict = _load_dictionary(args)
    lines = []
    with open(args.corpus, encoding="utf-8") as fh:
        for line in fh:
            tokens = corpus.tokenize(line, user_dict)
            lines.append(" ".join(_display_token(t) for t in tokens))
    _write_or_print(lines, args.output)
    return 0


def cmd_augment(args) -> int:
    user_dict = _load_dictionary(args)
    table = corpus.load_synonym_file(args.synonyms)
    raw = corpus.load_labeled_file(args.dataset)
    tokenized = [(label, corpus.tokenize(text, user_dict)) for label, text in raw]
    augmented = corpus.augment_with_synonyms(tokenized, table, args.max_new)
    lines = [f"{label}\t{' '.join(tokens)}" for label, tokens in augmented]
    _write_or_print(lines, args.output)
    logger.info("augmented %d examples to %d", len(raw), len(augmented))
    return 0


def cmd_train_embeddings(args) -> int:
    user_dict = _load_dictionary(args)
    sentences = corpus.load_sentence_file(args.corpus, user_dict)
    vocab = corpus.build_vocabulary(sentences, args.min_count)
    encoded = corpus.encode_corpus(sentences, vocab)
    cfg = embedding.SkipGramConfig(
        window=args.window,
        dim=args.dim,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        final_learning_rate=args.final_learning_rate,
        seed=args.seed,
        mode=args.mode,
        negative_samples=args.negative_samples,
    )
    emb = embedding.train_skipgram(encoded, cfg, track_objective=args.track_objective)
    if args.track_objective:
        for epoch, value in enumerate(emb.objective_history):
            label = "initial" if epoch == 0 else f"epoch {epoch}"
            print(f"objective {label}: {value:.6f}")
    embedding.save_embeddings(emb, args.output)
    print(f"trained {len(vocab)} x {cfg.dim} vectors -> {args.output}")
    return 0


def cmd_cluster(args) -> int:
    emb = embedding.load_embeddings(args.embeddings)
    _, assignment = clustering.hac_cluster(
        emb.input_vectors, args.k, words=emb.vocabulary.words
    )
    clustering.save_assignment(assignment, args.output)
    print(f"assigned {len(emb.vocabulary)} words to {args.k} clusters -> {args.output}")
    return 0


def cmd_expand(args) -> int:
    emb = embedding.load_embeddings(args.embeddings)
    assignment = clustering.load_assignment(args.assignment, vocabulary=emb.vocabulary)
    expanded = expansion.expand(emb, assignment)
    expansion.save_expanded(expanded, args.output)
    print(f"wrote {len(emb.vocabulary)} x {expanded.dim} expanded vectors -> {args.output}")
    return 0


def _build_model_from_args(args, input_width: int, num_classes: int):
    if args.model == "cnn":
        return CnnClassifier(
            input_width=input_width,
            num_classes=num_classes,
            max_len=args.max_len,
            kernels=args.kernels,
            kernel_width=args.kernel_width,
            pool_width=args.pool_width,
            seed=args.seed,
        )
    return LstmClassifier(
        input_width=input_width, num_classes=num_classes, hidden=args.hidden, seed=args.seed
    )


def _embedded_dataset(args, vectors_path):
    emb = embedding.load_embeddings(vectors_path)
    user_dict = _load_dictionary(args)
    raw = corpus.load_labeled_file(args.dataset)
    dataset = corpus.encode_dataset(raw, emb.vocabulary, user_dict)
    x, mask, y = expansion.embed_dataset(dataset, emb, args.max_len)
    return dataset, x, mask, y


def cmd_train(args) -> int:
    dataset, x, mask, y = _embedded_dataset(args, args.vectors)
    model = _build_model_from_args(args, x.shape[2], dataset.num_classes)
    config = TrainConfig(
        batch_size=args.batch_size,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        seed=args.seed,
    )
    log = train_classifier(model, x, mask, y, config)
    save_model(model, args.output)
    print(
        f"final epoch loss {log.epoch_losses[-1]:.6f} "
        f"accuracy {log.epoch_accuracies[-1]:.4f} -> {args.output}"
    )
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model_file)
    if hasattr(model, "max_len"):
        args.max_len = model.max_len
    dataset, x, mask, y = _embedded_dataset(args, args.vectors)
    if dataset.num_classes != model.num_classes:
        raise ConfigError(
            f"dataset has {dataset.num_classes} classes, model expects {model.num_classes}"
        )
    result = evaluate(model, x, mask, y)
    for line in result.summary_lines(dataset.label_names):
        print(line)
    return 0


def _config_from_args(args) -> ExperimentConfig:
    overrides = {}
    for f in dataclasses.fields(ExperimentConfig):
        raw = getattr(args, f.name, None)
        if raw is not None:
            overrides[f.name] = coerce_value(f.name, raw)
    return load_config(args.config, overrides)


def cmd_run(args) -> int:
    report = pipeline.run_pipeline(_config_from_args(args))
    for line in report.summary_lines():
        print(line)
    return 0


def cmd_grid_search(args) -> int:
    report = pipeline.grid_search_k(_config_from_args(args))
    for line in report.summary_lines():
        print(line)
    return 0


def cmd_compare(args) -> int:
    report_a = pipeline.load_report(args.report_a)
    report_b = pipeline.load_report(args.report_b)
    for line in pipeline.comparison_lines(pipeline.compare_runs(report_a, report_b)):
        print(line)
    return 0


def _add_dictionary_flag(parser) -> None:
    parser.add_argument("--dictionary", help="user dictionary file, one term per line")


def _add_config_overrides(parser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    group = parser.add_argument_group("config overrides")
    for f in dataclasses.fields(ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type in (bool, "bool"):
            group.add_argument(flag, nargs="?", const="true", metavar="BOOL", dest=f.name)
        else:
            group.add_argument(flag, metavar=f.name.upper(), dest=f.name)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semexpand", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", help="tokenize a text file, one sentence per line")
    p.add_argument("corpus")
    _add_dictionary_flag(p)
    p.add_argument("--output")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("augment", help="grow a labeled dataset by synonym substitution")
    p.add_argument("dataset")
    p.add_argument("synonyms")
    p.add_argument("--max-new", type=int, default=1, help="new examples per original")
    _add_dictionary_flag(p)
    p.add_argument("--output")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train-embeddings", help="train skip-gram word vectors on a corpus")
    p.add_argument("corpus")
    p.add_argument("--output", required=True)
    _add_dictionary_flag(p)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--learning-rate", type=float, default=0.025)
    p.add_argument("--final-learning-rate", type=float, default=0.0001)
    p.add_argument(
        "--mode",
        choices=(embedding.MODE_EXACT, embedding.MODE_NEGATIVE),
        default=embedding.MODE_EXACT,
    )
    p.add_argument("--negative-samples", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--track-objective", action="store_true")
    p.set_defaults(func=cmd_train_embeddings)

    p = sub.add_parser("cluster", help="group word vectors by hierarchical clustering")
    p.add_argument("embeddings")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("expand", help="concatenate word vectors with cluster centroids")
    p.add_argument("embeddings")
    p.add_argument("assignment")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_expand)

    for name, handler in (("train", cmd_train), ("evaluate", cmd_evaluate)):
        p = sub.add_parser(
            name,
            help=(
                "train a classifier on a labeled dataset"
                if name == "train"
                else "score a saved classifier on a labeled dataset"
            ),
        )
        p.add_argument("dataset")
        p.add_argument("--vectors", required=True, help="word or expanded vector file")
        _add_dictionary_flag(p)
        p.add_argument("--max-len", type=int, default=20)
        if name == "train":
            p.add_argument("--output", required=True)
            p.add_argument("--model", choices=("cnn", "lstm"), default="lstm")
            p.add_argument("--hidden", type=int, default=300)
            p.add_argument("--kernels", type=int, default=64)
            p.add_argument("--kernel-width", type=int, default=5)
            p.add_argument("--pool-width", type=int, default=2)
            p.add_argument("--batch-size", type=int, default=128)
            p.add_argument("--epochs", type=int, default=10)
            p.add_argument("--learning-rate", type=float, default=0.01)
            p.add_argument("--seed", type=int, default=0)
        else:
            p.add_argument("--model-file", required=True)
        p.set_defaults(func=handler)

    p = sub.add_parser("run", help="run the full pipeline from a config")
    _add_config_overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("grid-search", help="run the pipeline with a cluster-count grid")
    _add_config_overrides(p)
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("compare", help="diff two run reports on the same test split")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
