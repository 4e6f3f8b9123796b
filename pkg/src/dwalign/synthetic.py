"""Synthetic bilingual data with known gold structure.

A word-for-word dictionary corpus drives end-to-end checks: both aligners
must recover the dictionary and align noise insertions to the null word.
A matching document-classification task reuses the same dictionary so the
transfer pipeline can be scored against a known topical structure.
"""
from __future__ import annotations

import numpy as np

from .alignments import GoldAlignment
from .corpus import ParallelCorpus, build_vocab, encode_corpus
from .transfer import LabeledDocs


def dictionary_tokens(n_types: int = 50):
    src = [f"src{i:02d}" for i in range(n_types)]
    tgt = [f"tgt{i:02d}" for i in range(n_types)]
    return src, tgt


def make_dictionary_corpus(n_pairs: int = 2000, n_types: int = 50,
                           n_noise_types: int = 10, noise_rate: float = 0.1,
                           min_len: int = 3, max_len: int = 9, seed: int = 7):
    """Word-for-word translated pairs with null-generated noise insertions.

    Every source token has exactly one translation, emitted in the same
    order; each target position additionally receives noise tokens (drawn
    from a disjoint type set) at the given rate. Gold sure links cover the
    dictionary tokens; noise tokens stay unaligned.

    Returns (corpus, gold alignments, src->tgt surface dictionary).
    """
    rng = np.random.default_rng(seed)
    src_types, tgt_types = dictionary_tokens(n_types)
    noise_types = [f"noise{i:02d}" for i in range(n_noise_types)]
    mapping = dict(zip(src_types, tgt_types))

    src_sents, tgt_sents, golds = [], [], []
    for _ in range(n_pairs):
        length = int(rng.integers(min_len, max_len + 1))
        ids = rng.integers(0, n_types, size=length)
        src = [src_types[i] for i in ids]
        tgt = []
        links = set()
        for pos, tok in enumerate(src):
            if rng.random() < noise_rate:
                tgt.append(noise_types[int(rng.integers(0, n_noise_types))])
            links.add((pos, len(tgt)))
            tgt.append(mapping[tok])
        if rng.random() < noise_rate:
            tgt.append(noise_types[int(rng.integers(0, n_noise_types))])
        src_sents.append(src)
        tgt_sents.append(tgt)
        golds.append(GoldAlignment(sure=links))

    src_vocab = build_vocab(src_sents, min_count=1, source_side=True)
    tgt_vocab = build_vocab(tgt_sents, min_count=1)
    corpus = encode_corpus(src_sents, tgt_sents, src_vocab, tgt_vocab)
    return corpus, golds, mapping


def make_classification_task(mapping: dict, n_labels: int = 4,
                             train_counts=(70, 50, 40, 40),
                             test_counts=(70, 50, 40, 40),
                             doc_len_range=(30, 50), own_topic_rate: float = 0.75,
                             seed: int = 11):
    """Topic-coded documents in both languages from one dictionary.

    The dictionary's source words are split round-robin into ``n_labels``
    topic groups; a document of label y draws each token from group y with
    probability ``own_topic_rate`` and uniformly otherwise. Training
    documents use source-language surface forms, test documents the
    translated target forms.

    Returns (train LabeledDocs, test LabeledDocs).
    """
    rng = np.random.default_rng(seed)
    src_words = sorted(mapping)
    groups = [src_words[g::n_labels] for g in range(n_labels)]
    label_names = [f"topic{g}" for g in range(n_labels)]

    def make_doc(label: int, translate: bool):
        length = int(rng.integers(doc_len_range[0], doc_len_range[1] + 1))
        toks = []
        for _ in range(length):
            if rng.random() < own_topic_rate:
                pool = groups[label]
            else:
                pool = src_words
            tok = pool[int(rng.integers(0, len(pool)))]
            toks.append(mapping[tok] if translate else tok)
        return toks, label

    def make_split(counts, translate):
        docs = []
        for label, count in enumerate(counts):
            for _ in range(count):
                docs.append(make_doc(label, translate))
        return LabeledDocs(docs=docs, label_names=list(label_names))

    train = make_split(train_counts, translate=False)
    test = make_split(test_counts, translate=True)
    return train, test
