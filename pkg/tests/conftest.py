"""Shared fixtures: small hand-checkable models used across the test modules."""

from fractions import Fraction

import pytest

from absorbing_mdp import (
    AtomDecl,
    FiniteActions,
    MdpModel,
    Number,
    ONE,
    SegmentDecl,
    StateSpace,
    TransitionKernel,
)

HALF = Number.exact(1, 2)

# one "ACCEPTANCE n [tag] PASS/FAIL: text" line per criterion, printed in the
# terminal summary so they survive output capture
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def chain_model() -> MdpModel:
    """A -> B -> Delta with a stalling branch at both states.

    Under the all-"fwd" strategy the path is deterministic (absorbed at t=2);
    "stall" keeps the chain at A with probability 1/2.
    """
    space = StateSpace(
        atoms=(AtomDecl("A"), AtomDecl("B"), AtomDecl("Delta")),
    )
    actions = FiniteActions(("fwd", "stall"))
    rows = (
        (("A", "fwd"), (("B", ONE),)),
        (("A", "stall"), (("A", HALF), ("Delta", HALF))),
        (("B", "fwd"), (("Delta", ONE),)),
        (("B", "stall"), (("A", HALF), ("Delta", HALF))),
        (("Delta", "fwd"), (("Delta", ONE),)),
        (("Delta", "stall"), (("Delta", ONE),)),
    )
    return MdpModel(
        name="chain",
        states=space,
        actions=actions,
        kernel=TransitionKernel(rows=rows),
    )


def ladder_model(depth: int) -> MdpModel:
    """c1 -> c2 -> ... with per-step absorption 1/2; the last rung is the
    declared frontier.  Visits to cn are exactly 2^(1-n)."""
    names = [f"c{n}" for n in range(1, depth + 2)]
    space = StateSpace(atoms=tuple(AtomDecl(n) for n in names) + (AtomDecl("Delta"),))
    actions = FiniteActions(("step",))
    rows = []
    for n in range(1, depth + 1):
        rows.append(((f"c{n}", "step"), ((f"c{n + 1}", HALF), ("Delta", HALF))))
    rows.append(((f"c{depth + 1}", "step"), (("Delta", ONE),)))
    rows.append((("Delta", "step"), (("Delta", ONE),)))
    return MdpModel(
        name=f"ladder{depth}",
        states=space,
        actions=actions,
        kernel=TransitionKernel(rows=tuple(rows)),
        frontier=frozenset({f"c{depth + 1}"}),
    )


def loop_model() -> MdpModel:
    """A proper two-cycle A -> B -> A with absorption 1/2 per step; exercises
    the bounded-iteration fallback of the countable solver."""
    space = StateSpace(atoms=(AtomDecl("A"), AtomDecl("B"), AtomDecl("Delta")))
    actions = FiniteActions(("x",))
    rows = (
        (("A", "x"), (("B", HALF), ("Delta", HALF))),
        (("B", "x"), (("A", HALF), ("Delta", HALF))),
        (("Delta", "x"), (("Delta", ONE),)),
    )
    return MdpModel(
        name="loop",
        states=space,
        actions=actions,
        kernel=TransitionKernel(rows=rows),
    )


def segment_space() -> StateSpace:
    """One unit segment plus an isolated start atom; used by density tests."""
    return StateSpace(
        atoms=(AtomDecl("start"), AtomDecl("Delta")),
        segments=(SegmentDecl("seg", Fraction(0), Fraction(1)),),
    )


@pytest.fixture
def chain():
    return chain_model()


@pytest.fixture
def ladder8():
    return ladder_model(8)


@pytest.fixture
def loop():
    return loop_model()
