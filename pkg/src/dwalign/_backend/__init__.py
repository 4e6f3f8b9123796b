"""Numeric kernel selection.

The environment variable ``DWALIGN_BACKEND`` picks the implementation of
the per-sentence hot kernels:

  ``auto``   (default) compiled numba kernels when numba imports, else numpy
  ``numba``  require the compiled kernels, fail loudly if unavailable
  ``numpy``  force the pure-numpy fallback

Both implementations share signatures and are compared like-for-like by
the test suite and by ``benchmarks/bench_backends.py``.
"""
import os
import warnings

_choice = os.environ.get("DWALIGN_BACKEND", "auto").lower()
if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"DWALIGN_BACKEND must be auto, numba or numpy, got {_choice!r}")

if _choice == "numpy":
    from . import np_impl as impl
    BACKEND = "numpy"
else:
    try:
        from . import nb_impl as impl
        BACKEND = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        warnings.warn("numba unavailable, falling back to the numpy kernels")
        from . import np_impl as impl
        BACKEND = "numpy"

diag_features = impl.diag_features
prior_matrix = impl.prior_matrix
fa_posteriors = impl.fa_posteriors
fa_loglik = impl.fa_loglik
fa_viterbi_best = impl.fa_viterbi_best
fa_estep_update = impl.fa_estep_update
diag_model_h = impl.diag_model_h
dwa_sentence_q = impl.dwa_sentence_q
dwa_sentence_grad = impl.dwa_sentence_grad
dwa_viterbi_best = impl.dwa_viterbi_best
