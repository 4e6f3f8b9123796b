"""Cross-lingual document classification on top of the learned embeddings.

Source-language documents are projected into the target embedding space by
replacing each word with the embedding of its most probable translation;
documents on either side become the mean of their word vectors; a
multiclass averaged perceptron is trained on one side and evaluated on the
other.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .corpus import ClassPartition, Vocab
from .errors import DataError
from .translation import DwaParams, translation_dist


@dataclass
class LabeledDocs:
    docs: list[tuple[list[str], int]]
    label_names: list[str]

    def __len__(self) -> int:
        return len(self.docs)


def read_labeled_docs(path, label_names: list[str] | None = None) -> LabeledDocs:
    """Read `label<TAB>token token ...` lines.

    With ``label_names`` given, the mapping is fixed and unseen labels are
    an error (use the training set's names for a test set); otherwise
    labels are numbered by first appearance.
    """
    fixed = label_names is not None
    names = list(label_names) if fixed else []
    index = {name: i for i, name in enumerate(names)}
    docs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'label<TAB>tokens'")
            label, text = parts
            if label not in index:
                if fixed:
                    raise DataError(f"{path}:{lineno}: unknown label {label!r}")
                index[label] = len(names)
                names.append(label)
            docs.append((text.split(), index[label]))
    return LabeledDocs(docs=docs, label_names=names)


def project_embedding(e: int, params: DwaParams, classes: ClassPartition) -> np.ndarray:
    """Target embedding of the most probable translation of a lone source word.

    Ties go to the smallest target id; the returned vector is always an
    exact row of the target embedding matrix.
    """
    src = np.array([e], dtype=np.int64)
    probs = translation_dist(1, src, params, classes)
    return params.tgt_emb[int(np.argmax(probs))]


class EmbeddingLookup:
    """Token -> vector through a vocab; OOV tokens and specials map to None."""

    def __init__(self, vocab: Vocab, vector_fn, dim: int):
        self._vocab = vocab
        self._fn = vector_fn
        self.dim = dim

    @classmethod
    def from_matrix(cls, vocab: Vocab, matrix: np.ndarray) -> "EmbeddingLookup":
        return cls(vocab, lambda tid: matrix[tid], matrix.shape[1])

    @classmethod
    def projected(cls, vocab: Vocab, params: DwaParams,
                  classes: ClassPartition) -> "EmbeddingLookup":
        """Source-side lookup returning projected (translated) embeddings."""
        cache: dict[int, np.ndarray] = {}

        def fn(tid: int) -> np.ndarray:
            vec = cache.get(tid)
            if vec is None:
                vec = project_embedding(tid, params, classes)
                cache[tid] = vec
            return vec

        return cls(vocab, fn, params.dim)

    def __call__(self, token: str):
        tid = self._vocab.token_to_id.get(token)
        if tid is None or tid == self._vocab.unk_id or tid == self._vocab.null_id:
            return None
        return self._fn(tid)


def doc_representation(tokens, lookup, dim: int | None = None) -> np.ndarray:
    """Mean of the vectors ``lookup`` yields; tokens mapping to None are skipped.

    An effectively empty document becomes the zero vector.
    """
    vecs = [v for v in (lookup(t) for t in tokens) if v is not None]
    if not vecs:
        if dim is None:
            dim = getattr(lookup, "dim", None)
        if dim is None:
            raise ValueError("cannot size the zero vector for an all-unknown "
                             "document; pass dim or use an EmbeddingLookup")
        return np.zeros(dim)
    return np.mean(vecs, axis=0)


def docs_to_vectors(data: LabeledDocs, lookup) -> tuple[np.ndarray, np.ndarray]:
    xs = np.stack([doc_representation(tokens, lookup) for tokens, _ in data.docs])
    ys = np.array([label for _, label in data.docs], dtype=np.int64)
    n_empty = int((np.abs(xs).sum(axis=1) == 0.0).sum())
    if n_empty:
        warnings.warn(f"{n_empty} of {len(data)} documents had no known tokens")
    return xs, ys


@dataclass
class PerceptronModel:
    """Multiclass perceptron with running-average weights.

    ``averaged_weights`` is the mean of the weight-matrix snapshots taken
    after every training example; predictions use the average.
    """

    weights: np.ndarray
    averaged_weights: np.ndarray
    update_count: int


def train_perceptron(xs: np.ndarray, ys: np.ndarray, n_labels: int,
                     epochs: int = 3, seed: int = 1,
                     shuffle: bool = True) -> PerceptronModel:
    """Mistake-driven training: w_true += x, w_guess -= x; ties to label 0.

    The visit order is reshuffled each epoch from one seeded generator.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    n, dim = xs.shape
    w = np.zeros((n_labels, dim))
    w_sum = np.zeros_like(w)
    steps = 0
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        order = rng.permutation(n) if shuffle else np.arange(n)
        for t in order:
            x = xs[t]
            guess = int(np.argmax(w @ x))
            truth = int(ys[t])
            if guess != truth:
                w[truth] += x
                w[guess] -= x
            w_sum += w
            steps += 1
    return PerceptronModel(weights=w, averaged_weights=w_sum / steps,
                           update_count=steps)


def predict(model: PerceptronModel, xs: np.ndarray) -> np.ndarray:
    return np.argmax(xs @ model.averaged_weights.T, axis=1)


def classify_eval(model: PerceptronModel, xs: np.ndarray, ys: np.ndarray) -> float:
    """Accuracy of the averaged-weight predictions on a test set."""
    if xs.shape[0] == 0:
        raise ValueError("test set is empty")
    return float((predict(model, xs) == ys).mean())


def majority_baseline(train_ys: np.ndarray, test_ys: np.ndarray) -> float:
    """Test accuracy of always predicting the most frequent training label."""
    counts = np.bincount(train_ys)
    top = int(np.argmax(counts))
    return float((test_ys == top).mean())
