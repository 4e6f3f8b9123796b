import time
from types import SimpleNamespace

import pytest

from dwalign import dwa as dwa_mod
from dwalign import evaluation, synthetic
from dwalign.fa import train_fa, viterbi_align

# training settings for the synthetic dictionary pipeline; the DWA epoch
# budget is deliberately below the 40-epoch cap
FA_ITERS = 5
DWA_EPOCHS = 15
DWA_DIM = 16


@pytest.fixture(scope="session")
def dict_pipeline():
    """Dictionary corpus with both aligners trained on it, timed."""
    corpus, golds, mapping = synthetic.make_dictionary_corpus()
    t0 = time.monotonic()
    fa_params, fa_history = train_fa(corpus, iterations=FA_ITERS, log=None)
    fa_links = [viterbi_align(pair, fa_params) for pair in corpus.pairs]
    config = dwa_mod.DwaTrainConfig(epochs=DWA_EPOCHS, dim=DWA_DIM,
                                    half_window=0, seed=1, shuffle=False)
    model, q_history = dwa_mod.train_dwa(corpus, fa_params, config, log=None)
    dwa_links = [dwa_mod.dwa_viterbi(pair, model.params, model.lam, model.p0,
                                     model.classes)
                 for pair in corpus.pairs]
    elapsed = time.monotonic() - t0
    return SimpleNamespace(
        corpus=corpus, golds=golds, mapping=mapping,
        fa=fa_params, fa_history=fa_history, fa_links=fa_links,
        fa_aer=evaluation.corpus_aer(fa_links, golds),
        dwa=model, q_history=q_history, dwa_links=dwa_links,
        dwa_aer=evaluation.corpus_aer(dwa_links, golds),
        config=config, elapsed=elapsed,
    )
