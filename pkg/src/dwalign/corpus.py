"""Parallel corpus ingestion, vocabularies, and frequency-based word classes."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

UNK_TOKEN = "<unk>"
NULL_TOKEN = "<null>"
VOCAB_HEADER = "#dwalign-vocab v1"
PIPE_SEP = " ||| "


@dataclass
class Vocab:
    """Token/id mapping with per-id corpus frequencies.

    Ids are dense 0..|V|-1 and assigned by decreasing frequency; ties keep
    first-occurrence order, with the specials sorting ahead of real tokens
    of equal frequency. ``unk_id`` is always present. ``null_id`` exists
    only on source-side vocabs and names the virtual empty-alignment word,
    which never occurs in running text.
    """

    token_to_id: dict[str, int]
    id_to_token: list[str]
    freq: np.ndarray
    unk_id: int
    null_id: int | None = None

    def __len__(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        tid = self.token_to_id.get(token, self.unk_id)
        if tid == self.null_id:
            return self.unk_id
        return tid

    def encode(self, tokens) -> np.ndarray:
        return np.array([self.lookup(t) for t in tokens], dtype=np.int64)

    def decode(self, ids) -> list[str]:
        return [self.id_to_token[int(i)] for i in ids]


def build_vocab(raw_sentences, min_count: int = 1, source_side: bool = False) -> Vocab:
    """Count tokens and build a vocab, folding rare tokens into UNK.

    Tokens seen fewer than ``min_count`` times map to ``unk_id`` and their
    occurrences are credited to UNK's frequency. Literal occurrences of the
    special surface forms are treated as out-of-vocabulary.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts = Counter()
    for sent in raw_sentences:
        counts.update(sent)

    unk_freq = 0
    entries = []  # (token, freq, tie rank)
    for rank, (tok, c) in enumerate(counts.items()):
        if tok in (UNK_TOKEN, NULL_TOKEN) or c < min_count:
            unk_freq += c
        else:
            entries.append((tok, c, rank))
    entries.append((UNK_TOKEN, unk_freq, -2))
    if source_side:
        entries.append((NULL_TOKEN, 0, -1))
    entries.sort(key=lambda e: (-e[1], e[2]))

    id_to_token = [tok for tok, _, _ in entries]
    token_to_id = {tok: i for i, tok in enumerate(id_to_token)}
    freq = np.array([c for _, c, _ in entries], dtype=np.int64)
    return Vocab(
        token_to_id=token_to_id,
        id_to_token=id_to_token,
        freq=freq,
        unk_id=token_to_id[UNK_TOKEN],
        null_id=token_to_id[NULL_TOKEN] if source_side else None,
    )


@dataclass(frozen=True)
class SentencePair:
    """One encoded pair: source positions 1..I, target positions 1..J.

    ``src[p]`` is the word at source position p+1; position 0 is the
    implicit null word and is not stored.
    """

    src: np.ndarray
    tgt: np.ndarray

    @property
    def I(self) -> int:  # noqa: E743 - conventional alignment notation
        return self.src.shape[0]

    @property
    def J(self) -> int:
        return self.tgt.shape[0]


@dataclass
class ParallelCorpus:
    pairs: list[SentencePair]
    src_vocab: Vocab
    tgt_vocab: Vocab
    n_dropped: int = 0

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def n_target_tokens(self) -> int:
        return sum(p.J for p in self.pairs)


def encode_corpus(src_sents, tgt_sents, src_vocab: Vocab, tgt_vocab: Vocab,
                  max_len: int | None = None) -> ParallelCorpus:
    """Encode tokenized sentence pairs, dropping pairs with an empty side.

    ``max_len`` optionally drops pairs where either side exceeds it
    (disabled by default). Dropped pairs are counted on the corpus.
    """
    if len(src_sents) != len(tgt_sents):
        raise DataError(
            f"line count mismatch: {len(src_sents)} source lines vs "
            f"{len(tgt_sents)} target lines"
        )
    pairs = []
    dropped = 0
    for s_toks, t_toks in zip(src_sents, tgt_sents):
        if not s_toks or not t_toks:
            dropped += 1
            continue
        if max_len is not None and (len(s_toks) > max_len or len(t_toks) > max_len):
            dropped += 1
            continue
        pairs.append(SentencePair(src_vocab.encode(s_toks), tgt_vocab.encode(t_toks)))
    return ParallelCorpus(pairs, src_vocab, tgt_vocab, n_dropped=dropped)


@dataclass
class ClassPartition:
    """Frequency-based partition of a target vocabulary into word classes.

    ``order`` is the greedy scan order (decreasing frequency, ties by id);
    class ``c`` owns ``order[starts[c]:starts[c+1]]``. ``class_of`` and
    ``within_index`` map a word id to its class and to its index inside the
    class member list; ``pos_in_order`` locates the id in the scan order.
    """

    class_of: np.ndarray
    order: np.ndarray
    starts: np.ndarray
    within_index: np.ndarray
    pos_in_order: np.ndarray

    @property
    def n_classes(self) -> int:
        return len(self.starts) - 1

    @property
    def members(self) -> list[np.ndarray]:
        return [self.order[self.starts[c]:self.starts[c + 1]]
                for c in range(self.n_classes)]

    def sizes(self) -> np.ndarray:
        return np.diff(self.starts)


def build_classes(tgt_vocab: Vocab) -> ClassPartition:
    """Greedily pack words into classes by decreasing frequency.

    A word always joins the current class; the class is closed once its
    cumulative frequency reaches total/sqrt(|V|) or its size reaches
    sqrt(|V|). Every class is therefore non-empty and, before its closing
    word was added, had cumulative frequency below the threshold.
    """
    nv = len(tgt_vocab)
    if nv == 0:
        raise ValueError("cannot partition an empty vocabulary")
    freq = tgt_vocab.freq
    order = np.lexsort((np.arange(nv), -freq)).astype(np.int64)
    root = math.sqrt(nv)
    threshold = float(freq.sum()) / root

    class_of = np.empty(nv, dtype=np.int64)
    within = np.empty(nv, dtype=np.int64)
    pos_in_order = np.empty(nv, dtype=np.int64)
    starts = [0]
    cum = 0.0
    size = 0
    cls = 0
    for pos in range(nv):
        wid = order[pos]
        class_of[wid] = cls
        within[wid] = pos - starts[-1]
        pos_in_order[wid] = pos
        cum += float(freq[wid])
        size += 1
        if cum >= threshold or size >= root:
            starts.append(pos + 1)
            cls += 1
            cum = 0.0
            size = 0
    if starts[-1] != nv:
        starts.append(nv)
    return ClassPartition(
        class_of=class_of,
        order=order,
        starts=np.array(starts, dtype=np.int64),
        within_index=within,
        pos_in_order=pos_in_order,
    )


def read_parallel_text(path) -> tuple[list[list[str]], list[list[str]]]:
    """Read a `SOURCE ||| TARGET` file into tokenized sentence lists."""
    src_sents, tgt_sents = [], []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            parts = line.split(PIPE_SEP)
            if len(parts) != 2:
                raise DataError(
                    f"{path}:{lineno}: expected exactly one '{PIPE_SEP.strip()}' "
                    f"separator, found {len(parts) - 1}"
                )
            src_sents.append(parts[0].split())
            tgt_sents.append(parts[1].split())
    return src_sents, tgt_sents


def read_two_files(src_path, tgt_path) -> tuple[list[list[str]], list[list[str]]]:
    """Read a parallel corpus stored as one file per language."""
    with open(src_path, encoding="utf-8") as f:
        src_sents = [line.split() for line in f]
    with open(tgt_path, encoding="utf-8") as f:
        tgt_sents = [line.split() for line in f]
    if len(src_sents) != len(tgt_sents):
        raise DataError(
            f"line count mismatch: {src_path} has {len(src_sents)} lines, "
            f"{tgt_path} has {len(tgt_sents)}"
        )
    return src_sents, tgt_sents


def write_vocab(vocab: Vocab, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(VOCAB_HEADER + "\n")
        for tok, c in zip(vocab.id_to_token, vocab.freq):
            f.write(f"{tok}\t{int(c)}\n")


def read_vocab(path) -> Vocab:
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != VOCAB_HEADER:
            raise DataError(f"{path}: bad vocab header {header!r}")
        id_to_token = []
        freqs = []
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'token<TAB>freq'")
            id_to_token.append(parts[0])
            try:
                freqs.append(int(parts[1]))
            except ValueError:
                raise DataError(f"{path}:{lineno}: frequency {parts[1]!r} is not an integer")
    token_to_id = {tok: i for i, tok in enumerate(id_to_token)}
    if len(token_to_id) != len(id_to_token):
        raise DataError(f"{path}: duplicate tokens in vocab file")
    if UNK_TOKEN not in token_to_id:
        raise DataError(f"{path}: vocab file lacks the {UNK_TOKEN} entry")
    return Vocab(
        token_to_id=token_to_id,
        id_to_token=id_to_token,
        freq=np.array(freqs, dtype=np.int64),
        unk_id=token_to_id[UNK_TOKEN],
        null_id=token_to_id.get(NULL_TOKEN),
    )
