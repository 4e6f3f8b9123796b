"""Command-line surface for the full pipeline.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
failure. Diagnostics go to stderr; machine-readable results to stdout.
Output files are written to a temporary path and renamed into place.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from . import __version__
from . import corpus as corpus_mod
from . import dwa as dwa_mod
from . import evaluation
from . import fa as fa_mod
from . import model_io
from . import transfer
from .alignments import read_gold, read_pharaoh, write_pharaoh
from .errors import DataError, NumericalError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _atomic_write_text(path, render) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".dwalign-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            render(f)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _corpus_args(p, vocab_files: bool = False):
    p.add_argument("--corpus", help="one SOURCE ||| TARGET line per pair")
    p.add_argument("--src", help="source-side file (one sentence per line)")
    p.add_argument("--tgt", help="target-side file (one sentence per line)")
    p.add_argument("--max-len", type=int, default=None,
                   help="drop pairs where either side is longer (default: keep all)")
    if vocab_files:
        p.add_argument("--src-vocab", help="existing source vocab file")
        p.add_argument("--tgt-vocab", help="existing target vocab file")
        p.add_argument("--min-count", type=int, default=1,
                       help="fold tokens seen fewer times into UNK when building vocabs")


def build_parser() -> _Parser:
    parser = _Parser(prog="dwalign", description=__doc__)
    parser.add_argument("--version", action="version", version=f"dwalign {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("prepare", parents=[], help="build and write vocab files")
    _corpus_args(p)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--out-src-vocab", required=True)
    p.add_argument("--out-tgt-vocab", required=True)

    p = sub.add_parser("train-fa", help="train the log-linear IBM-2 baseline")
    _corpus_args(p, vocab_files=True)
    p.add_argument("--iters", type=int, default=5)
    p.add_argument("--p0", type=float, default=fa_mod.DEFAULT_P0)
    p.add_argument("--init-lambda", type=float, default=fa_mod.DEFAULT_LAMBDA)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-dwa", help="train the distributed aligner")
    _corpus_args(p)
    p.add_argument("--fa-model", required=True,
                   help="trained baseline model supplying vocabs and posteriors")
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=0,
                   help="context half-width k (0 or 3 in the reported setups)")
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--eta", type=float, default=0.05)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--no-shuffle", action="store_true")
    p.add_argument("--word-bias-from-freq", action="store_true",
                   help="seed word biases with unigram log-probabilities")
    p.add_argument("--out", required=True)

    p = sub.add_parser("align", help="write Viterbi alignments in Pharaoh format")
    _corpus_args(p)
    p.add_argument("--model", required=True, help="an fa or dwa model file")
    p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("aer", help="score Pharaoh predictions against a gold file")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)

    p = sub.add_parser("nn", help="nearest neighbors of a word's embedding")
    p.add_argument("--model", required=True, help="a dwa model file")
    p.add_argument("--word", required=True)
    p.add_argument("--side", choices=("src", "tgt"), default="tgt")
    p.add_argument("--n", type=int, default=10)

    p = sub.add_parser("expected-repr",
                       help="neighbors of the expected translated representation")
    p.add_argument("--model", required=True, help="a dwa model file")
    p.add_argument("--word", required=True, help="source-side word")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--vector-out",
                   help="also write the raw vector in embedding text format")

    p = sub.add_parser("project",
                       help="project labeled source docs to target-space vectors")
    p.add_argument("--model", required=True, help="a dwa model file")
    p.add_argument("--docs", required=True, help="label<TAB>tokens file")
    p.add_argument("--out", required=True,
                   help="writes label<TAB>space-separated floats per doc")

    p = sub.add_parser("classify",
                       help="train on projected source docs, test on target docs")
    p.add_argument("--model", required=True, help="a dwa model file")
    p.add_argument("--train", required=True, help="source-language labeled docs")
    p.add_argument("--test", required=True, help="target-language labeled docs")
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("export-embeddings", help="write embeddings as text")
    p.add_argument("--model", required=True, help="a dwa model file")
    p.add_argument("--side", choices=("src", "tgt"), default="tgt")
    p.add_argument("--out", required=True)

    for name, p in sub.choices.items():
        p.add_argument("--threads", type=int, default=1,
                       help="reserved; only the deterministic single-threaded "
                            "mode is implemented")
    return parser


def _validate(args) -> None:
    checks = [
        ("min_count", lambda v: v >= 1, ">= 1"),
        ("max_len", lambda v: v >= 1, ">= 1"),
        ("iters", lambda v: v >= 0, ">= 0"),
        ("p0", lambda v: 0.0 < v < 1.0, "in (0, 1)"),
        ("init_lambda", lambda v: v > 0.0, "> 0"),
        ("dim", lambda v: v >= 1, ">= 1"),
        ("window", lambda v: v >= 0, ">= 0"),
        ("epochs", lambda v: v >= 0, ">= 0"),
        ("eta", lambda v: v > 0.0, "> 0"),
        ("eps", lambda v: v >= 0.0, ">= 0"),
        ("n", lambda v: v >= 1, ">= 1"),
        ("threads", lambda v: v >= 1, ">= 1"),
    ]
    for name, ok, desc in checks:
        value = getattr(args, name, None)
        if value is not None and not ok(value):
            raise UsageError(f"--{name.replace('_', '-')} must be {desc}, got {value}")
    if args.command == "classify" and args.epochs < 1:
        raise UsageError("--epochs must be >= 1 for classify")
    if getattr(args, "threads", 1) > 1:
        print("note: parallel mode is not implemented; running single-threaded",
              file=sys.stderr)


def _read_corpus_sentences(args):
    if args.corpus and (args.src or args.tgt):
        raise UsageError("pass either --corpus or --src/--tgt, not both")
    if args.corpus:
        return corpus_mod.read_parallel_text(args.corpus)
    if args.src and args.tgt:
        return corpus_mod.read_two_files(args.src, args.tgt)
    raise UsageError("a corpus is required: --corpus FILE or --src FILE --tgt FILE")


def _load_corpus_with_vocabs(args, src_vocab, tgt_vocab):
    src_sents, tgt_sents = _read_corpus_sentences(args)
    corpus = corpus_mod.encode_corpus(src_sents, tgt_sents, src_vocab, tgt_vocab,
                                      max_len=args.max_len)
    if corpus.n_dropped:
        print(f"dropped {corpus.n_dropped} pairs (empty or over --max-len)",
              file=sys.stderr)
    return corpus


def _cmd_prepare(args) -> int:
    src_sents, tgt_sents = _read_corpus_sentences(args)
    src_vocab = corpus_mod.build_vocab(src_sents, args.min_count, source_side=True)
    tgt_vocab = corpus_mod.build_vocab(tgt_sents, args.min_count)
    _atomic_write_text(args.out_src_vocab,
                       lambda f: _render_vocab(f, src_vocab))
    _atomic_write_text(args.out_tgt_vocab,
                       lambda f: _render_vocab(f, tgt_vocab))
    print(f"pairs={len(src_sents)} src_vocab={len(src_vocab)} "
          f"tgt_vocab={len(tgt_vocab)}")
    return 0


def _render_vocab(f, vocab) -> None:
    f.write(corpus_mod.VOCAB_HEADER + "\n")
    for tok, c in zip(vocab.id_to_token, vocab.freq):
        f.write(f"{tok}\t{int(c)}\n")


def _cmd_train_fa(args) -> int:
    if bool(args.src_vocab) != bool(args.tgt_vocab):
        raise UsageError("--src-vocab and --tgt-vocab must be given together")
    src_sents, tgt_sents = _read_corpus_sentences(args)
    if args.src_vocab and args.tgt_vocab:
        src_vocab = corpus_mod.read_vocab(args.src_vocab)
        tgt_vocab = corpus_mod.read_vocab(args.tgt_vocab)
        if src_vocab.null_id is None:
            raise DataError(f"{args.src_vocab}: source vocab lacks the null entry")
    else:
        src_vocab = corpus_mod.build_vocab(src_sents, args.min_count, source_side=True)
        tgt_vocab = corpus_mod.build_vocab(tgt_sents, args.min_count)
    corpus = corpus_mod.encode_corpus(src_sents, tgt_sents, src_vocab, tgt_vocab,
                                      max_len=args.max_len)
    params, _ = fa_mod.train_fa(corpus, iterations=args.iters, p0=args.p0,
                                init_lambda=args.init_lambda)
    fa_mod.save_fa(args.out, params, src_vocab, tgt_vocab)
    print(f"model={args.out} lambda={params.lam:.6f} p0={params.p0}")
    return 0


def _cmd_train_dwa(args) -> int:
    fa_params, src_vocab, tgt_vocab = fa_mod.load_fa(args.fa_model)
    corpus = _load_corpus_with_vocabs(args, src_vocab, tgt_vocab)
    config = dwa_mod.DwaTrainConfig(
        epochs=args.epochs, dim=args.dim, half_window=args.window,
        eta=args.eta, eps=args.eps, seed=args.seed, shuffle=not args.no_shuffle,
        word_bias_from_freq=args.word_bias_from_freq,
    )
    model, _ = dwa_mod.train_dwa(corpus, fa_params, config)
    dwa_mod.save_dwa(args.out, model)
    print(f"model={args.out} lambda={model.lam:.6f} p0={model.p0}")
    return 0


def _load_any_model(path):
    kind, _, _ = model_io.load_container(path)
    if kind == "fa":
        params, src_vocab, tgt_vocab = fa_mod.load_fa(path)
        return "fa", params, src_vocab, tgt_vocab
    if kind == "dwa":
        model = dwa_mod.load_dwa(path)
        return "dwa", model, model.src_vocab, model.tgt_vocab
    raise DataError(f"{path}: unknown model kind {kind!r}")


def _cmd_align(args) -> int:
    kind, model, src_vocab, tgt_vocab = _load_any_model(args.model)
    corpus = _load_corpus_with_vocabs(args, src_vocab, tgt_vocab)
    if kind == "fa":
        links_iter = (fa_mod.viterbi_align(pair, model) for pair in corpus.pairs)
    else:
        links_iter = (dwa_mod.dwa_viterbi(pair, model.params, model.lam,
                                          model.p0, model.classes)
                      for pair in corpus.pairs)
    links = list(links_iter)
    if args.out:
        _atomic_write_text(args.out, lambda f: write_pharaoh(f, links))
    else:
        write_pharaoh(sys.stdout, links)
    return 0


def _cmd_aer(args) -> int:
    predicted = read_pharaoh(args.pred)
    golds = read_gold(args.gold, n_pairs=len(predicted))
    score = evaluation.corpus_aer(predicted, golds)
    print(f"AER={score:.4f}")
    return 0


def _require_dwa(path):
    model = dwa_mod.load_dwa(path)
    return model


def _vocab_and_matrix(model, side):
    if side == "src":
        return model.src_vocab, model.params.src_emb
    return model.tgt_vocab, model.params.tgt_emb


def _cmd_nn(args) -> int:
    model = _require_dwa(args.model)
    vocab, matrix = _vocab_and_matrix(model, args.side)
    tid = vocab.token_to_id.get(args.word)
    if tid is None:
        raise DataError(f"word {args.word!r} not in the {args.side} vocabulary")
    for word, sim in evaluation.nearest_neighbors(matrix[tid], matrix,
                                                  vocab.id_to_token, n=args.n):
        print(f"{word}\t{sim:.6f}")
    return 0


def _cmd_expected_repr(args) -> int:
    model = _require_dwa(args.model)
    tid = model.src_vocab.token_to_id.get(args.word)
    if tid is None or tid == model.src_vocab.null_id:
        raise DataError(f"word {args.word!r} not in the source vocabulary")
    vec = evaluation.expected_translation_repr(tid, model.params, model.classes)
    for word, sim in evaluation.nearest_neighbors(vec, model.params.tgt_emb,
                                                  model.tgt_vocab.id_to_token,
                                                  n=args.n):
        print(f"{word}\t{sim:.6f}")
    if args.vector_out:
        _atomic_write_text(
            args.vector_out,
            lambda f: _render_embeddings(f, [args.word], vec[None, :]))
    return 0


def _render_embeddings(f, words, matrix) -> None:
    f.write(f"{len(words)} {matrix.shape[1]}\n")
    for word, row in zip(words, matrix):
        values = " ".join(f"{v:.6g}" for v in row)
        f.write(f"{word} {values}\n")


def _cmd_project(args) -> int:
    model = _require_dwa(args.model)
    docs = transfer.read_labeled_docs(args.docs)
    lookup = transfer.EmbeddingLookup.projected(model.src_vocab, model.params,
                                                model.classes)
    xs, ys = transfer.docs_to_vectors(docs, lookup)

    def render(f):
        for label, row in zip(ys, xs):
            values = " ".join(f"{v:.17g}" for v in row)
            f.write(f"{docs.label_names[label]}\t{values}\n")

    _atomic_write_text(args.out, render)
    print(f"docs={len(docs)} dim={xs.shape[1]} out={args.out}")
    return 0


def _cmd_classify(args) -> int:
    model = _require_dwa(args.model)
    train_docs = transfer.read_labeled_docs(args.train)
    test_docs = transfer.read_labeled_docs(args.test,
                                           label_names=train_docs.label_names)
    proj = transfer.EmbeddingLookup.projected(model.src_vocab, model.params,
                                              model.classes)
    native = transfer.EmbeddingLookup.from_matrix(model.tgt_vocab,
                                                  model.params.tgt_emb)
    train_x, train_y = transfer.docs_to_vectors(train_docs, proj)
    test_x, test_y = transfer.docs_to_vectors(test_docs, native)
    clf = transfer.train_perceptron(train_x, train_y,
                                    n_labels=len(train_docs.label_names),
                                    epochs=args.epochs, seed=args.seed)
    accuracy = transfer.classify_eval(clf, test_x, test_y)
    majority = transfer.majority_baseline(train_y, test_y)
    print(f"accuracy={accuracy:.4f} n={len(test_docs)} majority={majority:.4f}")
    return 0


def _cmd_export_embeddings(args) -> int:
    model = _require_dwa(args.model)
    vocab, matrix = _vocab_and_matrix(model, args.side)
    _atomic_write_text(
        args.out,
        lambda f: _render_embeddings(f, vocab.id_to_token, matrix))
    print(f"words={len(vocab)} dim={matrix.shape[1]} out={args.out}")
    return 0


_COMMANDS = {
    "prepare": _cmd_prepare,
    "train-fa": _cmd_train_fa,
    "train-dwa": _cmd_train_dwa,
    "align": _cmd_align,
    "aer": _cmd_aer,
    "nn": _cmd_nn,
    "expected-repr": _cmd_expected_repr,
    "project": _cmd_project,
    "classify": _cmd_classify,
    "export-embeddings": _cmd_export_embeddings,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exit_:  # --help / --version
            return int(exit_.code or 0)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        _validate(args)
        return _COMMANDS[args.command](args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (DataError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())
