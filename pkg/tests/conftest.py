from fractions import Fraction

import pytest

from robusthedge import builders

F = Fraction


@pytest.fixture
def binom2():
    return builders.binomial(2)


@pytest.fixture
def binom2_float():
    return builders.binomial(2, mode="float")


@pytest.fixture
def call2():
    return {"uu": 2, "ud": 0, "du": 0, "dd": 0}


@pytest.fixture
def american_call():
    # f_t = (S_t - S_0)^+ on the two-period binomial
    return {"root": 0, "u": 1, "d": 0, "uu": 2, "ud": 0, "du": 0, "dd": 0}


def one_step_call(mode="exact"):
    return builders.one_period([1, -1], builders.box([0], [1]), [["1/2", "1/2"]], mode=mode)


def tangent_ball_node(mode="exact"):
    """Discretised ball example: s in {1, 3/2, 2}, dS = (s - 1, -1)."""
    incs = [[0, -1], ["1/2", -1], [1, -1]]
    return builders.one_period(incs, builders.ball([0, 1], 1), [["1/3", "1/3", "1/3"]], mode=mode)


def trinomial(mode="exact"):
    return builders.one_period([1, 0, -1], builders.cone([[1], [-1]]),
                               [["1/3", "1/3", "1/3"]], mode=mode)


TRI_G = [{"a0": "1/2", "a1": "-1/2", "a2": "1/2"}]


def four_atom(mode="exact"):
    return builders.one_period([2, 1, -1, -2], builders.cone([[1], [-1]]),
                               [["1/4", "1/4", "1/4", "1/4"]], mode=mode)


FOUR_G = [{"a0": 1, "a1": -1, "a2": -1, "a3": 1}]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
