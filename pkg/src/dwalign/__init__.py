"""Bilingual word alignment and embedding toolkit.

Pipeline: ingest a parallel corpus, train the log-linear IBM-2 baseline
aligner with EM, then train the distributed aligner, which keeps the
baseline's alignment posteriors fixed while learning word embeddings
whose energy-based translation probabilities explain them. Evaluation
covers alignment error rate, corpus likelihood, nearest-neighbor
inspection, and cross-lingual document classification.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    ClassPartition,
    ParallelCorpus,
    SentencePair,
    Vocab,
    build_classes,
    build_vocab,
    encode_corpus,
)
from .errors import DataError, NumericalError  # noqa: F401
from .fa import FaParams, train_fa, viterbi_align  # noqa: F401
from .dwa import DwaModel, DwaTrainConfig, dwa_viterbi, train_dwa  # noqa: F401
from .translation import DwaParams, init_params  # noqa: F401
from .evaluation import aer, corpus_aer, corpus_loglik, nearest_neighbors  # noqa: F401
