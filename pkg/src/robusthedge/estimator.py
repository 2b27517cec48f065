"""Estimator-style facade over the functional pricing modules.

``fit`` takes a market model (object, dict or JSON path) and validates it;
``predict`` prices a batch of payoffs.  The heavy lifting stays in
:mod:`multi_period`, :mod:`american` and :mod:`semistatic`.
"""
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import american, multi_period, semistatic
from .exceptions import ValidationError
from .model import MarketModel, from_dict, load_model, reachable_leaves, reachable_nodes

KINDS = ("european", "american_super", "american_sub", "american_hat", "semistatic")


def check_model(X, mode="exact"):
    """Coerce ``X`` to a validated :class:`MarketModel` in ``mode``."""
    if isinstance(X, MarketModel):
        if X.mode != mode:
            from .model import dumps, loads
            return loads(dumps(X), mode)
        return X
    if isinstance(X, dict):
        return from_dict(X, mode)
    if isinstance(X, (str, Path)):
        return load_model(X, mode)
    raise ValidationError(f"cannot build a market model from {type(X).__name__}")


def check_payoff(model, f, kind="european"):
    """Check that ``f`` covers the nodes the pricing kind needs.

    Sequences are read in canonical leaf (or node) order.
    """
    need = reachable_leaves(model) if kind in ("european", "semistatic") else reachable_nodes(model)
    if not isinstance(f, dict):
        ids = model.leaves if kind in ("european", "semistatic") else list(model.nodes)
        f = list(f)
        if len(f) != len(ids):
            raise ValidationError(f"expected {len(ids)} payoff values, got {len(f)}")
        f = dict(zip(ids, f))
    missing = [n for n in need if str(n) not in {str(k) for k in f}]
    if missing:
        raise ValidationError(f"payoff missing at {missing}")
    return {str(k): v for k, v in f.items()}


class RobustPricer(BaseEstimator):
    """Robust super-/sub-hedging prices for a fixed market model.

    Parameters
    ----------
    kind : one of ``KINDS``
    mode : ``"exact"`` or ``"float"``
    cap : stopping-rule cap for the American kinds
    options : static option payoffs for ``kind="semistatic"`` (defaults to
        the options stored on the model)
    """

    def __init__(self, kind="european", mode="exact", cap=american.DEFAULT_CAP, options=None):
        self.kind = kind
        self.mode = mode
        self.cap = cap
        self.options = options

    def fit(self, X, y=None):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}")
        model = check_model(X, self.mode)
        if self.kind == "semistatic":
            self.na_report_ = semistatic.check_na_with_options(model, self.options)
        else:
            self.na_report_ = multi_period.check_na_global(model)
        self.model_ = model
        self.n_leaves_ = len(reachable_leaves(model))
        return self

    def price(self, f):
        """Full result object for one payoff."""
        check_is_fitted(self, "model_")
        model = self.model_
        f = check_payoff(model, f, self.kind)
        if self.kind == "european":
            return multi_period.superhedge_european(model, f)
        if self.kind == "american_super":
            return american.superhedge_american(model, f, cap=self.cap)
        if self.kind == "american_sub":
            return american.subhedge_american(model, f, cap=self.cap)
        if self.kind == "american_hat":
            return american.hat_price(model, f, cap=self.cap)
        return semistatic.price_semistatic(model, f, self.options)

    def predict(self, payoffs):
        """Prices of a batch of payoffs (object array in exact mode)."""
        out = []
        for f in payoffs:
            res = self.price(f)
            out.append(getattr(res, "price", res))
        return np.array(out, dtype=object if self.mode == "exact" else float)
