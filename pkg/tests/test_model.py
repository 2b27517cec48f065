import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robusthedge import builders
from robusthedge.exceptions import ParseError, ValidationError
from robusthedge.model import (dumps, load_model, loads, model_equal, quasi_sure_support,
                               reachable_leaves, save_model, to_dict)
from robusthedge.multi_period import mixture_selection
from robusthedge.oracle import random_tree


def test_binomial_round_trip(tmp_path, binom2):
    path = tmp_path / "m.json"
    save_model(binom2, path)
    again = load_model(path)
    assert len(again.nodes) == 7
    assert model_equal(binom2, again)
    assert path.read_text() == dumps(again)


def test_canonical_node_order(binom2):
    ids = [n["id"] for n in to_dict(binom2)["nodes"]]
    assert ids == ["root", "d", "u", "dd", "du", "ud", "uu"]


def _raw(constraint=None, extremes=None):
    raw = builders.tree_dict(1, [0], lambda p: [("u", 1), ("d", -1)],
                             lambda p: constraint or builders.box([0], [1]),
                             lambda p: extremes or [["1/2", "1/2"]])
    return json.dumps(raw)


def test_origin_excluded_is_rejected():
    with pytest.raises(ValidationError, match="origin not in constraint set"):
        loads(_raw(constraint=builders.box([1], [2])))


def test_extreme_not_summing_to_one():
    with pytest.raises(ValidationError, match="measure does not sum to 1"):
        loads(_raw(extremes=[[0.5, 0.6]]))


def test_malformed_json_is_parse_error():
    with pytest.raises(ParseError):
        loads("{not json")


def test_unbounded_polytope_h_rejected():
    with pytest.raises(ValidationError):
        loads(_raw(constraint=builders.halfspaces([[1]], [1])))


def test_float_mode_reads_rationals():
    m = loads(_raw(), "float")
    assert m.nodes["root"].extremes[0] == (0.5, 0.5)


@pytest.mark.parametrize("extremes, expected", [
    ([["3/10", "7/10"], ["7/10", "3/10"]], {0, 1}),
    ([[1, 0]], {0}),
    ([[1, 0], ["1/2", "1/2"]], {0, 1}),
])
def test_quasi_sure_support(extremes, expected):
    m = builders.one_period([1, -1], builders.box([0], [1]), extremes)
    assert quasi_sure_support(m.nodes["root"]) == frozenset(expected)


def test_reachability_skips_polar_branch():
    m = builders.one_period([1, 0, -1], builders.box([0], [1]), [[1, 0, 0], [0, 0, 1]])
    assert reachable_leaves(m) == ["a0", "a2"]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_support_equals_mixture_support(seed):
    m = random_tree(np.random.default_rng(seed), max_T=2)
    mix = mixture_selection(m)
    for nid in m.internal_nodes:
        supp = {i for i, p in enumerate(mix[nid]) if p > 0}
        assert quasi_sure_support(m.nodes[nid]) == frozenset(supp)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_serialization_is_identity(seed):
    m = random_tree(np.random.default_rng(seed), max_T=2)
    text = dumps(m)
    assert dumps(loads(text)) == text
    assert model_equal(m, loads(text))


def test_edge_increments_are_finite(binom2):
    for nid in binom2.internal_nodes:
        for inc in binom2.increments(nid):
            assert all(isinstance(x, Fraction) for x in inc)
