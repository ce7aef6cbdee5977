"""Occupation solvers: exact unrolling, stationary-tail closed forms,
frontier certificates and the flow equation."""

from fractions import Fraction

import pytest

from absorbing_mdp import (
    CountableSolverError,
    StatePoint,
    Number,
    ONE,
    SolverError,
    StageKernel,
    Strategy,
    StrategyRule,
    ActionAtom,
    Truncation,
    UnrollResidualError,
    ZERO,
    deterministic_stationary,
    expected_hitting_time,
    marginal_state,
    markov_sequence,
    nsum,
    occupation_countable,
    occupation_unroll,
    survival_probs,
    tail_sum,
)

from conftest import chain_model, ladder_model, loop_model

F = Fraction


def atom_masses(measure):
    out = {}
    for c in marginal_state(measure).components:
        out[c.state.point.atom] = out.get(c.state.point.atom, ZERO) + c.mass()
    return out


def forward(model):
    return deterministic_stationary(default="fwd")


# -- exact unrolling -------------------------------------------------------


def test_unroll_deterministic_path(chain):
    occ = occupation_unroll(chain, forward(chain), chain.states.point("A"), horizon=2)
    assert occ.method == "unroll"
    assert occ.tail_bound == ZERO
    assert atom_masses(occ.measure) == {"A": ONE, "B": ONE}
    assert expected_hitting_time(occ) == Number.exact(2)


def test_unroll_requires_full_absorption(chain):
    stall = deterministic_stationary(default="stall")
    with pytest.raises(UnrollResidualError):
        occupation_unroll(chain, stall, chain.states.point("A"), horizon=5)


def test_unroll_two_stage_strategy(chain):
    # stall once (survive at A w.p. 1/2), then go forward
    s = markov_sequence(
        [
            StageKernel(rules=(StrategyRule(dist=ActionAtom("stall")),)),
            StageKernel(rules=(StrategyRule(dist=ActionAtom("fwd")),)),
        ]
    )
    occ = occupation_unroll(chain, s, chain.states.point("A"), horizon=3)
    masses = atom_masses(occ.measure)
    # visits: A at t=0, A again w.p. 1/2 at t=1, then B w.p. 1/2 at t=2
    assert masses == {"A": Number.exact(3, 2), "B": Number.exact(1, 2)}
    assert expected_hitting_time(occ) == Number.exact(2)


# -- countable solver, closed form ----------------------------------------


def test_countable_agrees_with_unroll(chain):
    x0 = chain.states.point("A")
    a = occupation_unroll(chain, forward(chain), x0, horizon=2)
    b = occupation_countable(chain, forward(chain), x0)
    assert atom_masses(a.measure) == atom_masses(b.measure)
    assert b.tail_bound == ZERO


def test_countable_geometric_self_loop(chain):
    # stalling at A: absorbed w.p. 1/2 each step, visits(A) = 2
    stall = deterministic_stationary(default="stall")
    occ = occupation_countable(chain, stall, chain.states.point("A"))
    assert atom_masses(occ.measure) == {"A": Number.exact(2)}
    assert occ.tail_bound == ZERO
    assert expected_hitting_time(occ) == Number.exact(2)


def test_countable_proper_cycle_certifies_residual(loop):
    occ = occupation_countable(loop, deterministic_stationary(default="x"),
                               loop.states.point("A"))
    masses = atom_masses(occ.measure)
    # geometric cycle: visits(A) = 4/3, visits(B) = 2/3, found by iteration
    assert masses["A"].within(F(4, 3), 1e-11)
    assert masses["B"].within(F(2, 3), 1e-11)
    assert occ.tail_bound != ZERO
    assert occ.tail_bound.certainly_le(Truncation().residual * 2)


def test_countable_rejects_density_start(chain):
    s = forward(chain)
    with pytest.raises(SolverError):
        occupation_countable(chain, s, StatePoint(segment="seg", coord=F(1, 2)))


def test_countable_rejects_bounded_strategies(chain):
    stage = StageKernel(rules=(StrategyRule(dist=ActionAtom("fwd")),))
    s = Strategy(stages=(stage, stage), stationary_tail=False)
    with pytest.raises(SolverError):
        occupation_countable(chain, s, chain.states.point("A"))


def test_state_budget_is_enforced():
    model = ladder_model(10)
    s = deterministic_stationary(default="step")
    with pytest.raises(CountableSolverError):
        occupation_countable(model, s, model.states.point("c1"),
                             Truncation(states=4))


# -- frontier certificates -------------------------------------------------


def test_frontier_tail_bound_closed_form(ladder8):
    s = deterministic_stationary(default="step")
    occ = occupation_countable(ladder8, s, ladder8.states.point("c1"))
    masses = atom_masses(occ.measure)
    for n in range(1, 9):
        assert masses[f"c{n}"] == Number.exact(1, 2 ** (n - 1))
    # frontier rung gets no occupancy; its inflow 2^-8 is capped at factor 2
    assert "c9" not in masses
    assert occ.measure.total_mass() == Number.exact(2) - Number.exact(1, 2 ** 7)
    assert occ.tail_bound == Number.exact(1, 2 ** 7)


def test_frontier_certificate_covers_truth(ladder8):
    # the un-truncated model absorbs the frontier mass in one extra step,
    # so the true mean lies inside the certified interval
    s = deterministic_stationary(default="step")
    occ = occupation_countable(ladder8, s, ladder8.states.point("c1"))
    true_total = F(2) - F(1, 2 ** 8)  # sum of 2^(1-n) for n = 1..9
    mean = expected_hitting_time(occ)
    assert not mean.is_exact
    assert abs(float(mean.value) - float(true_total)) <= float(mean.err)


def test_continue_bound_override(ladder8):
    s = deterministic_stationary(default="step")
    occ = occupation_countable(ladder8, s, ladder8.states.point("c1"),
                               continue_bound=F(3, 4))
    # cap becomes 1/(1 - 3/4) = 4: twice the default bound
    assert occ.tail_bound == Number.exact(1, 2 ** 6)


# -- survival and tails ----------------------------------------------------


def test_survival_probs_deterministic(chain):
    probs = survival_probs(chain, forward(chain), chain.states.point("A"), 3)
    assert probs == [ONE, ONE, ZERO, ZERO]


def test_survival_probs_geometric(chain):
    stall = deterministic_stationary(default="stall")
    probs = survival_probs(chain, stall, chain.states.point("A"), 4)
    assert probs == [Number.exact(1, 2 ** t) for t in range(5)]


def test_tail_sum_matches_survival_series(chain):
    # geometric survival 2^-t, so the tail at n is exactly 2^(1-n)
    stall = deterministic_stationary(default="stall")
    x0 = chain.states.point("A")
    for n in range(4):
        assert tail_sum(chain, stall, x0, n) == Number.exact(F(2, 2 ** n))


def test_flow_equation_on_ladder(ladder8):
    """Every computed occupancy satisfies mass(y) = start(y) + sum of inflows."""
    s = deterministic_stationary(default="step")
    occ = occupation_countable(ladder8, s, ladder8.states.point("c1"))
    masses = atom_masses(occ.measure)
    # under the single action, inflow to c(n+1) is mass(cn) / 2
    for n in range(2, 9):
        want = masses[f"c{n - 1}"] * Number.exact(1, 2)
        assert masses[f"c{n}"] == want
    assert masses["c1"] == ONE  # only the initial mass


def test_expected_time_exact_iff_no_tail(chain, ladder8):
    exact = occupation_countable(chain, forward(chain), chain.states.point("A"))
    assert expected_hitting_time(exact).is_exact
    capped = occupation_countable(
        ladder8, deterministic_stationary(default="step"), ladder8.states.point("c1")
    )
    assert not expected_hitting_time(capped).is_exact
