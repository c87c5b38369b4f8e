"""Cluster-based semantic expansion for short-text classification.

Word vectors are trained with skip-gram, grouped by average-linkage
hierarchical clustering, and each word is represented by the concatenation of
its own vector and its cluster centroid. CNN and LSTM classifiers consume the
expanded vectors; a CLI orchestrates the stages and a grid search over the
cluster count.
"""

from .clustering import (
    ClusterAssignment,
    Dendrogram,
    average_linkage,
    build_dendrogram,
    compute_centroids,
    cut_dendrogram,
    hac_cluster,
    pair_similarity,
)
from .config import ExperimentConfig, load_config
from .corpus import (
    LabeledDataset,
    SynonymTable,
    TokenizedCorpus,
    UserDictionary,
    Vocabulary,
    augment_with_synonyms,
    build_vocabulary,
    encode_corpus,
    encode_dataset,
    tokenize,
)
from .embedding import (
    EmbeddingMatrix,
    SkipGramConfig,
    corpus_objective,
    load_embeddings,
    save_embeddings,
    softmax_probability,
    train_skipgram,
)
from .errors import (
    ConfigError,
    DataFormatError,
    EmptyVocabularyError,
    NumericError,
    SemexpandError,
)
from .expansion import WordClusterMatrix, embed_dataset, embed_sequence, expand
from .pipeline import (
    ExperimentReport,
    compare_runs,
    grid_search_k,
    run_pipeline,
    split_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterAssignment",
    "ConfigError",
    "DataFormatError",
    "Dendrogram",
    "EmbeddingMatrix",
    "EmptyVocabularyError",
    "ExperimentConfig",
    "ExperimentReport",
    "LabeledDataset",
    "NumericError",
    "SemexpandError",
    "SkipGramConfig",
    "SynonymTable",
    "TokenizedCorpus",
    "UserDictionary",
    "Vocabulary",
    "WordClusterMatrix",
    "augment_with_synonyms",
    "average_linkage",
    "build_dendrogram",
    "build_vocabulary",
    "compare_runs",
    "compute_centroids",
    "corpus_objective",
    "cut_dendrogram",
    "embed_dataset",
    "embed_sequence",
    "encode_corpus",
    "encode_dataset",
    "expand",
    "grid_search_k",
    "hac_cluster",
    "load_config",
    "load_embeddings",
    "pair_similarity",
    "run_pipeline",
    "save_embeddings",
    "softmax_probability",
    "split_dataset",
    "tokenize",
    "train_skipgram",
    "__version__",
]
