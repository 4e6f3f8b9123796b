"""AdaGrad ascent over the translation-model parameter blocks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .translation import ARRAY_FIELDS, DwaParams

DEFAULT_ETA = 0.05
DEFAULT_EPS = 1e-8


@dataclass
class AdaGradState:
    """Per-coordinate accumulated squared gradients plus step constants."""

    sq_grads: DwaParams
    eta: float = DEFAULT_ETA
    eps: float = DEFAULT_EPS

    @classmethod
    def init(cls, params: DwaParams, eta: float = DEFAULT_ETA,
             eps: float = DEFAULT_EPS) -> "AdaGradState":
        return cls(sq_grads=params.zeros_like(), eta=eta, eps=eps)


def adagrad_step(params: DwaParams, grads: DwaParams, state: AdaGradState) -> None:
    """One ascent step: G += g^2; theta += eta * g / (sqrt(G) + eps).

    Mutates ``params`` and ``state`` in place. A non-finite gradient
    coordinate aborts and names the offending block.
    """
    for name in ARRAY_FIELDS:
        g = getattr(grads, name)
        if not np.isfinite(g).all():
            raise NumericalError(f"non-finite gradient in block {name!r}")
        acc = getattr(state.sq_grads, name)
        acc += g * g
        denom = np.sqrt(acc) + state.eps
        step = np.zeros_like(g)
        np.divide(g, denom, out=step, where=denom > 0.0)
        theta = getattr(params, name)
        theta += state.eta * step
