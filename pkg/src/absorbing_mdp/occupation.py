"""Occupation measures, survival probabilities and tail sums.

Two solver paths:

* `occupation_unroll` steps the exact forward distribution through finitely
  many stages and requires sure absorption within the horizon; it is the
  only path that handles segment densities.

* `occupation_countable` handles purely atomic dynamics.  It runs the
  non-stationary prefix exactly, then solves the stationary tail in closed
  form when the strategy-fixed chain is acyclic apart from self-loops:
  expected visits at a state equal the entering mass divided by the escape
  probability.  Mass entering declared frontier atoms is not dropped: it is
  certified into `tail_bound` as (frontier inflow) x cap, where the cap
  1/(1-q) bounds the occupation a unit of stray mass can still generate and
  q is the largest stay-in-play probability seen (overridable via
  `continue_bound`).  The bound is a library construction, valid whenever q
  really bounds the continuation probability beyond the frontier.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .numbers import Number, ZERO, ONE, nsum
from .measure import (
    ActionAtom,
    ActionDensity,
    ActionMixture,
    ActionPart,
    Domain,
    HybridMeasure,
    MeasureComponent,
    StateAtom,
    StateDensity,
    StatePart,
    pushforward_affine,
)
from .mdp import (
    ActionPushforward,
    FixedDiffuse,
    MdpModel,
    ModelError,
    Strategy,
    resolve_rule,
)
from .spaces import StatePoint


class SolverError(Exception):
    pass


class UnrollResidualError(SolverError):
    def __init__(self, residual: Number, horizon: int):
        self.residual = residual
        super().__init__(
            f"mass {float(residual.value):.6g} still in play after {horizon} stages; "
            "not surely absorbed within the horizon"
        )


class CountableSolverError(SolverError):
    def __init__(self, message: str, residual: Number | None = None):
        self.residual = residual
        super().__init__(message)


@dataclass(frozen=True)
class Truncation:
    states: int = 64
    stages: int = 256
    residual: Fraction = Fraction(1, 2 ** 40)


@dataclass(frozen=True)
class OccupationResult:
    measure: HybridMeasure
    tail_bound: Number
    method: str


def expected_hitting_time(occ: OccupationResult) -> Number:
    """Total occupation mass; exact when the tail bound is zero, otherwise a
    float with the tail bound folded into the error."""
    total = occ.measure.total_mass()
    if occ.tail_bound == ZERO:
        return total
    return Number.approx(float(total.value), float(total.err) + float(occ.tail_bound.value))


def _decompose_atoms(part: ActionPart):
    if isinstance(part, ActionAtom):
        return [(part.action, ONE)]
    if isinstance(part, ActionMixture):
        out = []
        for w, p in part.parts:
            if not isinstance(p, ActionAtom):
                raise SolverError("atomic dynamics require purely atomic action mixtures")
            out.append((p.action, w))
        return out
    raise SolverError("atomic dynamics cannot draw from an action density")


def _is_zero(n: Number) -> bool:
    return n.is_exact and n.value == 0


class _Flow:
    """Mass routed out of the playable region during stepping."""

    def __init__(self):
        self.absorbed = ZERO
        self.frontier = ZERO


def _step(model: MdpModel, parts, stage, flow: _Flow):
    """One forward stage: returns (joint occupation components, next parts)."""
    space = model.states
    joint = []
    for spart, w in parts:
        if _is_zero(w):
            continue
        if isinstance(spart, StateAtom):
            joint.append((spart, stage.dist_at(spart.point), w))
        else:
            for breaks, heights, dist in stage.split_density(spart):
                joint.append((StateDensity(spart.segment, tuple(breaks), tuple(heights)), dist, w))

    nxt: dict[StatePart, Number] = {}

    def route_atom(name: str, mass: Number):
        if name == space.cemetery:
            flow.absorbed = flow.absorbed + mass
        elif name in model.frontier:
            flow.frontier = flow.frontier + mass
        else:
            key = StateAtom(space.point(name))
            nxt[key] = nxt.get(key, ZERO) + mass

    for spart, dist, w in joint:
        rule = resolve_rule(model, spart)
        smass = spart.mass()
        if rule == "table":
            atom = spart.point.atom
            for a, wa in _decompose_atoms(dist):
                row = model.kernel.row(atom, a)
                if row is None:
                    raise ModelError(f"no kernel row for ({atom!r}, {a!r})")
                for nxt_name, p in row:
                    route_atom(nxt_name, w * wa * p)
        elif isinstance(rule, ActionPushforward):
            for part, m in pushforward_affine(
                space, dist, segment=rule.segment, alpha=rule.alpha, beta=rule.beta
            ):
                nxt[part] = nxt.get(part, ZERO) + w * smass * m
        elif isinstance(rule, FixedDiffuse):
            mass = w * smass * dist.mass()
            for name, p in rule.atom_probs:
                route_atom(name, mass * p)
            for label, breaks, heights in rule.pieces:
                key = StateDensity(label, tuple(breaks), tuple(heights))
                nxt[key] = nxt.get(key, ZERO) + mass
        else:
            raise ModelError(f"unhandled rule {rule!r}")

    return joint, list(nxt.items())


def _merge_joint(domain: Domain, components) -> HybridMeasure:
    merged: dict = {}
    order: list = []
    for s, a, w in components:
        key = (s, a)
        if key in merged:
            merged[key] = merged[key] + w
        else:
            merged[key] = w
            order.append(key)
    return HybridMeasure(
        domain, tuple(MeasureComponent(s, a, merged[(s, a)]) for s, a in order)
    )


def occupation_unroll(
    model: MdpModel, strategy: Strategy, x0: StatePoint, horizon: int
) -> OccupationResult:
    """Exact finite-horizon occupation measure; requires sure absorption."""
    parts = [(StateAtom(x0), ONE)]
    flow = _Flow()
    collected = []
    for t in range(horizon):
        joint, parts = _step(model, parts, strategy.stage(t), flow)
        collected.extend(joint)
        if not _is_zero(flow.frontier):
            raise CountableSolverError(
                "mass reached the model frontier; the unroll path cannot continue",
                residual=flow.frontier,
            )
    residual = nsum(w * s.mass() for s, w in parts)
    if residual.is_exact:
        if residual.value != 0:
            raise UnrollResidualError(residual, horizon)
    elif not residual.certainly_le(Fraction(1, 10 ** 9)):
        raise UnrollResidualError(residual, horizon)
    domain = Domain(model.states, model.actions)
    return OccupationResult(_merge_joint(domain, collected), ZERO, "unroll")


def _atomic_step(model: MdpModel, stage, dist, occ, flow: _Flow):
    space = model.states
    nxt: dict[str, Number] = {}

    def route(name: str, mass: Number):
        if name == space.cemetery:
            flow.absorbed = flow.absorbed + mass
        elif name in model.frontier:
            flow.frontier = flow.frontier + mass
        else:
            nxt[name] = nxt.get(name, ZERO) + mass

    for atom, mass in dist.items():
        if _is_zero(mass):
            continue
        point = space.point(atom)
        rule = resolve_rule(model, StateAtom(point))
        pairs = _decompose_atoms(stage.dist_at(point))
        for a, wa in pairs:
            key = (atom, a)
            occ[key] = occ.get(key, ZERO) + mass * wa
        if rule == "table":
            for a, wa in pairs:
                row = model.kernel.row(atom, a)
                if row is None:
                    raise ModelError(f"no kernel row for ({atom!r}, {a!r})")
                for name, p in row:
                    route(name, mass * wa * p)
        elif isinstance(rule, FixedDiffuse):
            if rule.pieces:
                raise SolverError("atomic solver met a density target")
            for name, p in rule.atom_probs:
                route(name, mass * p)
        else:
            raise SolverError("atomic solver met a segment embedding rule")
    return nxt


def _tail_transitions(model: MdpModel, stage, support):
    """Strategy-fixed transition data over atoms reachable from `support`:
    per-state successor masses in play, stay probability, action pairs and
    continue-in-play probability (frontier counts as still in play)."""
    space = model.states
    trans: dict[str, dict[str, Number]] = {}
    stay: dict[str, Number] = {}
    acts: dict[str, list] = {}
    cont: dict[str, Number] = {}
    frontier_p: dict[str, Number] = {}
    absorbed_p: dict[str, Number] = {}
    todo = sorted(support)
    seen = set(todo)
    while todo:
        atom = todo.pop()
        point = space.point(atom)
        rule = resolve_rule(model, StateAtom(point))
        pairs = _decompose_atoms(stage.dist_at(point))
        acts[atom] = pairs
        out: dict[str, Number] = {}
        fr = ZERO
        ab = ZERO

        def take(name: str, mass: Number):
            nonlocal fr, ab
            if name == space.cemetery:
                ab = ab + mass
            elif name in model.frontier:
                fr = fr + mass
            else:
                out[name] = out.get(name, ZERO) + mass

        if rule == "table":
            for a, wa in pairs:
                row = model.kernel.row(atom, a)
                if row is None:
                    raise ModelError(f"no kernel row for ({atom!r}, {a!r})")
                for name, p in row:
                    take(name, wa * p)
        elif isinstance(rule, FixedDiffuse):
            if rule.pieces:
                raise SolverError("atomic solver met a density target")
            for name, p in rule.atom_probs:
                take(name, p)
        else:
            raise SolverError("atomic solver met a segment embedding rule")

        stay[atom] = out.pop(atom, ZERO)
        trans[atom] = out
        frontier_p[atom] = fr
        absorbed_p[atom] = ab
        cont[atom] = ONE - ab
        for name in out:
            if name not in seen:
                seen.add(name)
                todo.append(name)
    return trans, stay, acts, cont, frontier_p


def _topo_order(trans, nodes):
    """Topological order ignoring self-loops; None if a proper cycle exists."""
    indeg = {n: 0 for n in nodes}
    for src in nodes:
        for dst in trans[src]:
            if dst != src:
                indeg[dst] += 1
    ready = sorted(n for n in nodes if indeg[n] == 0)
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for dst in sorted(trans[n]):
            if dst == n:
                continue
            indeg[dst] -= 1
            if indeg[dst] == 0:
                ready.append(dst)
        ready.sort()
    if len(order) != len(nodes):
        return None
    return order


def occupation_countable(
    model: MdpModel,
    strategy: Strategy,
    x0: StatePoint,
    trunc: Truncation = Truncation(),
    continue_bound: Fraction | None = None,
) -> OccupationResult:
    """Occupation measure for purely atomic dynamics, exact up to a
    certified tail bound."""
    if x0.atom is None:
        raise SolverError("the countable path needs an atomic initial state")
    if not strategy.stationary_tail:
        raise SolverError("the countable path needs a stationary tail")
    prefix = len(strategy.stages) - 1
    if prefix > trunc.stages:
        raise CountableSolverError(f"{prefix} prefix stages exceed the stage budget")

    occ: dict = {}
    flow = _Flow()
    dist: dict[str, Number] = {x0.atom: ONE}
    for t in range(prefix):
        dist = _atomic_step(model, strategy.stage(t), dist, occ, flow)

    tail_stage = strategy.stage(prefix)
    support = [a for a, m in dist.items() if not _is_zero(m)]
    trans, stay, acts, cont, frontier_p = _tail_transitions(model, tail_stage, support)
    nodes = sorted(trans)
    if len(nodes) > trunc.states:
        raise CountableSolverError(
            f"{len(nodes)} reachable states exceed the state budget {trunc.states}"
        )

    order = _topo_order(trans, nodes)
    if order is not None:
        enter = {n: dist.get(n, ZERO) for n in nodes}
        for x in order:
            inflow = enter[x]
            if _is_zero(inflow):
                continue
            escape = ONE - stay[x]
            if escape.is_exact and escape.value == 0:
                raise CountableSolverError(f"state {x!r} never leaves itself")
            visits = inflow / escape
            for a, wa in acts[x]:
                key = (x, a)
                occ[key] = occ.get(key, ZERO) + visits * wa
            for dst, p in trans[x].items():
                enter[dst] = enter[dst] + visits * p
            flow.frontier = flow.frontier + visits * frontier_p[x]
    else:
        # proper cycles: iterate the remaining stage budget and certify what
        # is left in play afterwards
        budget = trunc.stages - prefix
        for _ in range(budget):
            dist = _atomic_step(model, tail_stage, dist, occ, flow)
            if all(_is_zero(m) for m in dist.values()):
                dist = {}
                break
        alive = nsum(dist.values())
        leftover = alive * _cap(cont, continue_bound, needed=not _is_zero(alive))
        if not leftover.certainly_le(trunc.residual):
            raise CountableSolverError(
                f"residual {float(leftover.value):.3e} above the requested bound "
                f"after {trunc.stages} stages",
                residual=leftover,
            )
        tail = flow.frontier * _cap(cont, continue_bound, needed=not _is_zero(flow.frontier)) + leftover
        return _countable_result(model, occ, tail)

    tail = flow.frontier * _cap(cont, continue_bound, needed=not _is_zero(flow.frontier))
    return _countable_result(model, occ, tail)


def _cap(cont: dict, continue_bound, needed: bool) -> Number:
    """Occupation cap for one unit of stray mass: 1/(1-q)."""
    if continue_bound is not None:
        q = Number.lift(continue_bound)
    elif cont:
        q = max(cont.values())
    else:
        q = ZERO
    if q >= ONE:
        if needed:
            raise CountableSolverError(
                "no absorption certificate: continuation probability reaches 1; "
                "supply continue_bound"
            )
        return ONE
    return ONE / (ONE - q)


def _countable_result(model: MdpModel, occ: dict, tail: Number) -> OccupationResult:
    space = model.states
    domain = Domain(model.states, model.actions)
    comps = []
    for (atom, action), w in occ.items():
        if _is_zero(w):
            continue
        comps.append(MeasureComponent(StateAtom(space.point(atom)), ActionAtom(action), w))
    return OccupationResult(HybridMeasure(domain, tuple(comps)), tail, "countable")


def survival_probs(
    model: MdpModel, strategy: Strategy, x0: StatePoint, n_max: int
) -> list[Number]:
    """P(still in play at time t) for t = 0..n_max.  Mass that reached the
    frontier stays in the error bound forever (it may or may not be alive)."""
    parts = [(StateAtom(x0), ONE)]
    flow = _Flow()
    out: list[Number] = []
    for t in range(n_max + 1):
        alive = nsum(w * s.mass() for s, w in parts)
        pool = flow.frontier
        if _is_zero(pool):
            out.append(alive)
        else:
            out.append(Number.approx(float(alive.value), float(alive.err) + float(pool.value)))
        if t < n_max:
            _, parts = _step(model, parts, strategy.stage(t), flow)
    return out


def tail_sum(
    model: MdpModel,
    strategy: Strategy,
    x0: StatePoint,
    n: int,
    solver: str = "countable",
    horizon: int | None = None,
    trunc: Truncation = Truncation(),
    continue_bound: Fraction | None = None,
) -> Number:
    """Expected time spent in play from stage n on: total occupation mass
    minus the first n survival probabilities.  Nonincreasing in n."""
    if solver == "countable":
        occ = occupation_countable(model, strategy, x0, trunc, continue_bound)
    elif solver == "unroll":
        if horizon is None:
            raise SolverError("the unroll path needs a horizon")
        occ = occupation_unroll(model, strategy, x0, horizon)
    else:
        raise SolverError(f"unknown solver {solver!r}")
    total = expected_hitting_time(occ)
    if n == 0:
        return total
    surv = survival_probs(model, strategy, x0, n - 1)
    return total - nsum(surv)
