"""Models, kernels, validation diagnostics and strategy plumbing."""

from fractions import Fraction

import pytest

from absorbing_mdp import (
    ActionAtom,
    ActionMixture,
    AtomDecl,
    FiniteActions,
    FixedDiffuse,
    FromRegion,
    MdpModel,
    ModelError,
    Number,
    ONE,
    SegmentSelector,
    StageKernel,
    StateDensity,
    StatePoint,
    Strategy,
    StrategyFamily,
    StrategyRule,
    StateSpace,
    TransitionKernel,
    check_condition_s,
    deterministic_stationary,
    markov_sequence,
    validate_model,
    validate_strategy,
)
from absorbing_mdp.zoo import example1

from conftest import chain_model, ladder_model

F = Fraction
HALF = Number.exact(1, 2)


# -- validation ------------------------------------------------------------


def test_clean_models_have_no_diagnostics(chain, ladder8):
    assert validate_model(chain) == []
    assert validate_model(ladder8) == []


def bad_model(rows):
    space = StateSpace(atoms=(AtomDecl("A"), AtomDecl("Delta")))
    return MdpModel(
        name="bad",
        states=space,
        actions=FiniteActions(("x",)),
        kernel=TransitionKernel(rows=rows),
    )


def test_row_mass_must_be_one():
    m = bad_model(
        (
            (("A", "x"), (("Delta", HALF),)),
            (("Delta", "x"), (("Delta", ONE),)),
        )
    )
    assert any("mass" in d or "sum" in d for d in validate_model(m))


def test_missing_row_is_reported():
    m = bad_model(((("Delta", "x"), (("Delta", ONE),)),))
    assert validate_model(m) != []


def test_cemetery_needs_sure_self_loop():
    m = bad_model(
        (
            (("A", "x"), (("Delta", ONE),)),
            (("Delta", "x"), (("A", ONE),)),
        )
    )
    assert any("Delta" in d for d in validate_model(m))


def test_unknown_target_is_reported():
    m = bad_model(
        (
            (("A", "x"), (("ghost", ONE),)),
            (("Delta", "x"), (("Delta", ONE),)),
        )
    )
    assert any("ghost" in d for d in validate_model(m))


# -- continuity condition --------------------------------------------------


def test_condition_trivial_for_finite_actions(chain):
    res = check_condition_s(chain)
    assert res.status == "holds_trivially"


def test_condition_fails_with_jump_witness():
    entry = example1()
    res = check_condition_s(entry.model)
    assert res.status == "fails"
    assert res.induced_map is not None
    assert res.jump_at is not None
    lo = res.induced_map(res.jump_at - F(1, 8))
    hi = res.induced_map(res.jump_at + F(1, 8))
    assert {lo, hi} == {0, 1}


# -- kernel pieces ---------------------------------------------------------


def test_from_region_matching():
    r = FromRegion(atoms=("A", "B"))
    assert r.matches(StatePoint(atom="A"))
    assert not r.matches(StatePoint(atom="C"))
    s = FromRegion(segment="seg")
    assert s.matches(StatePoint(segment="seg", coord=F(1, 2)))
    assert s.covers_segment("seg")


def test_from_region_needs_exactly_one_side():
    with pytest.raises(ModelError):
        FromRegion()
    with pytest.raises(ModelError):
        FromRegion(atoms=("A",), segment="seg")


def test_fixed_diffuse_target_mass():
    rule = FixedDiffuse(
        region=FromRegion(atoms=("A",)),
        atom_probs=(("Delta", HALF),),
        pieces=(("seg", (F(0), F(1, 2)), (HALF,)),),
    )
    # 1/2 atom mass + 1/2 * 1/2 density mass
    assert rule.target_mass() == Number.exact(3, 4)


# -- strategies ------------------------------------------------------------


def test_stationary_tail_clamps_stages():
    s = deterministic_stationary(default="fwd")
    assert s.stage(0) is s.stage(99)


def test_bounded_strategy_refuses_overflow():
    stage = StageKernel(rules=(StrategyRule(dist=ActionAtom("fwd")),))
    s = Strategy(stages=(stage,), stationary_tail=False)
    with pytest.raises(ModelError):
        s.stage(1)


def test_markov_sequence_orders_stages(chain):
    s = markov_sequence(
        [
            StageKernel(rules=(StrategyRule(dist=ActionAtom("stall")),)),
            StageKernel(rules=(StrategyRule(dist=ActionAtom("fwd")),)),
        ]
    )
    A = chain.states.point("A")
    assert s.stage(0).dist_at(A) == ActionAtom("stall")
    assert s.stage(1).dist_at(A) == ActionAtom("fwd")
    assert s.stage(5).dist_at(A) == ActionAtom("fwd")


def test_first_matching_rule_wins(chain):
    stage = StageKernel(
        rules=(
            StrategyRule(dist=ActionAtom("stall"), atoms=("A",)),
            StrategyRule(dist=ActionAtom("fwd")),
        )
    )
    assert stage.dist_at(chain.states.point("A")) == ActionAtom("stall")
    assert stage.dist_at(chain.states.point("B")) == ActionAtom("fwd")


def test_silent_stage_raises(chain):
    stage = StageKernel(rules=(StrategyRule(dist=ActionAtom("fwd"), atoms=("B",)),))
    with pytest.raises(ModelError):
        stage.dist_at(chain.states.point("A"))


# -- selectors -------------------------------------------------------------


def test_selector_cells_are_left_closed():
    sel = SegmentSelector("seg", breaks=(F(0), F(1, 2), F(1)), actions=("lo", "hi"))
    assert sel.action_at(F(0)) == "lo"
    assert sel.action_at(F(1, 4)) == "lo"
    assert sel.action_at(F(1, 2)) == "hi"
    # the right endpoint clamps into the last cell
    assert sel.action_at(F(1)) == "hi"


def test_selector_shape_errors():
    with pytest.raises(ModelError):
        SegmentSelector("seg", breaks=(F(0), F(1)), actions=("a", "b"))
    with pytest.raises(ModelError):
        SegmentSelector("seg", breaks=(F(1), F(0)), actions=("a",))


def test_selector_splits_density_and_preserves_mass():
    sel = SegmentSelector("seg", breaks=(F(0), F(1, 2), F(1)), actions=("lo", "hi"))
    stage = StageKernel(rules=(sel,))
    d = StateDensity("seg", (F(1, 4), F(3, 4)), (Number.exact(2),))
    parts = stage.split_density(d)
    # the cut at 1/2 splits the density into two cells with the two actions
    assert [(p[0], p[2]) for p in parts] == [
        ((F(1, 4), F(1, 2)), ActionAtom("lo")),
        ((F(1, 2), F(3, 4)), ActionAtom("hi")),
    ]
    mass = sum((hi - lo) * 2 for (lo, hi), _, _ in parts)
    assert mass == F(1)


# -- families --------------------------------------------------------------


def test_family_explored_lists_members_then_generated():
    base = deterministic_stationary(default="fwd")
    fam = StrategyFamily(
        label="probe",
        members=(("base", base),),
        index_lo=1,
        index_hi=3,
        generator=lambda i: base,
    )
    names = [n for n, _ in fam.explored()]
    assert names == ["base", "probe:1", "probe:2", "probe:3"]


def test_validate_strategy_flags_unknown_action(chain):
    s = deterministic_stationary(default="sideways")
    assert validate_strategy(chain, s) != []


def test_validate_strategy_accepts_mixtures(chain):
    mix = ActionMixture(parts=((HALF, ActionAtom("fwd")), (HALF, ActionAtom("stall"))))
    s = Strategy(stages=(StageKernel(rules=(StrategyRule(dist=mix),)),))
    assert validate_strategy(chain, s) == []
