"""Convergence checks against finite test-function batteries.

Three battery modes mirror three product topologies on measures:

* mode "w": every function must be declared continuous (jointly, in state
  and action);
* mode "ws": functions may be continuous or caratheodory (measurable in
  the state, continuous in the action);
* mode "s": functions see the state marginal only.

A verdict is always relative to the finite battery and the tolerance: the
battery realizes a topology on the instances exercised, it is not the full
topology.  Reports carry that caveat verbatim.

Declared continuity is sanity-checked along the state space's declared
convergent sequences: the deviation at the deepest term must have decayed
relative to the first term.  This is a finite check; it rejects honest
discontinuities (an indicator of the limit point) and accepts slow but
genuine convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .numbers import Number, ZERO, nsum
from .measure import (
    ActionAtom,
    ActionMixture,
    CONTINUOUS,
    CARATHEODORY,
    HybridMeasure,
    MeasureError,
    StateAtom,
    StateDensity,
    TestFunction,
    integrate,
    marginal_state,
)
from .mdp import MdpModel, Strategy
from .occupation import occupation_unroll
from .spaces import FiniteActions, IntervalActions, StatePoint, StateSpace

DEFAULT_TOPOLOGY_TOL = 1e-9
_CONTINUITY_ABS = 1e-9
_CONTINUITY_RATIO = 0.25


class BatteryError(ValueError):
    pass


@dataclass(frozen=True)
class TestBattery:
    __test__ = False  # keep pytest from collecting this as a test class

    name: str
    mode: str  # w | ws | s
    functions: tuple[TestFunction, ...]

    def __post_init__(self):
        if self.mode not in ("w", "ws", "s"):
            raise BatteryError(f"unknown mode {self.mode!r}")
        if not self.functions:
            raise BatteryError("a battery needs at least one function")
        names = [f.name for f in self.functions]
        if len(set(names)) != len(names):
            raise BatteryError("duplicate function names")
        for f in self.functions:
            if self.mode == "w" and f.declared_class != CONTINUOUS:
                raise BatteryError(
                    f"{f.name!r}: mode 'w' admits only declared-continuous functions"
                )
            if self.mode == "ws" and f.declared_class not in (CONTINUOUS, CARATHEODORY):
                raise BatteryError(
                    f"{f.name!r}: mode 'ws' admits continuous or caratheodory functions"
                )
            if self.mode == "s" and f.arity != "state":
                raise BatteryError(f"{f.name!r}: mode 's' sees the state marginal only")


def make_battery(
    name: str,
    mode: str,
    functions,
    space: StateSpace | None = None,
    actions=None,
) -> TestBattery:
    """Build a battery; when a space is supplied, declared-continuous
    functions are checked along its declared convergent sequences first."""
    battery = TestBattery(name, mode, tuple(functions))
    if space is not None:
        for f in battery.functions:
            if f.declared_class == CONTINUOUS:
                _check_continuity(f, space, actions)
    return battery


def _action_samples(f: TestFunction, actions):
    if f.arity == "state":
        return [None]
    if actions is None:
        raise BatteryError(f"{f.name!r}: joint continuity check needs the action space")
    if isinstance(actions, FiniteActions):
        return list(actions.names)
    lo, hi = actions.lo, actions.hi
    return [lo, (lo + hi) / 2, hi]


def _check_continuity(f: TestFunction, space: StateSpace, actions):
    for seq in space.sequences:
        if not seq.terms:
            continue
        limit = space.point(seq.limit)
        first = space.point(seq.terms[0])
        last = space.point(seq.terms[-1])
        for a in _action_samples(f, actions):
            def val(p):
                return float(f.evaluate(p, a).value) if a is not None else float(f.evaluate(p).value)
            dev_first = abs(val(first) - val(limit))
            dev_last = abs(val(last) - val(limit))
            allowed = max(_CONTINUITY_ABS, _CONTINUITY_RATIO * dev_first)
            if dev_last > allowed:
                raise BatteryError(
                    f"{f.name!r} declared continuous but deviates by {dev_last:.3g} "
                    f"at the deepest term toward {seq.limit!r}"
                )


@dataclass(frozen=True)
class FunctionTrace:
    name: str
    values: tuple
    limit_value: Number
    gaps: tuple
    converged: bool
    persistent: bool


CAVEAT = (
    "verdicts are relative to this finite battery and tolerance; "
    "they witness, but do not characterize, the corresponding topology"
)


@dataclass(frozen=True)
class ConvergenceReport:
    battery: str
    mode: str
    tol: float
    verdict: str  # converges | diverges
    witness: str | None
    witness_gap: Number | None
    traces: tuple[FunctionTrace, ...]
    note: str = ""
    caveat: str = CAVEAT


def check_convergence(
    sequence,
    limit: HybridMeasure,
    battery: TestBattery,
    tol: float = DEFAULT_TOPOLOGY_TOL,
    integrate_tol: float | None = None,
) -> ConvergenceReport:
    """Battery-relative convergence of a measure sequence to a limit.

    A function converges when every gap in the final third is certified at
    or below tol; it diverges persistently when every such gap is certified
    at or above 10*tol.  The verdict is `converges` iff every function
    converges, else `diverges` with the strongest witness.
    """
    sequence = list(sequence)
    if not sequence:
        raise MeasureError("need at least one measure in the sequence")
    itol = DEFAULT_INTEGRATE if integrate_tol is None else integrate_tol
    if battery.mode == "s":
        sequence = [marginal_state(mu) for mu in sequence]
        limit = marginal_state(limit)

    k = len(sequence)
    start = k - math.ceil(k / 3)
    # floats are exact binary rationals, so this conversion is lossless
    tol_exact = Fraction(tol)
    traces = []
    for f in battery.functions:
        lim_val = integrate(limit, f, itol)
        vals = [integrate(mu, f, itol) for mu in sequence]
        gaps = [abs(v - lim_val) for v in vals]
        tail = gaps[start:]
        converged = all(g.certainly_le(tol_exact) for g in tail)
        persistent = all(g.certainly_ge(10 * tol_exact) for g in tail)
        traces.append(
            FunctionTrace(f.name, tuple(vals), lim_val, tuple(gaps), converged, persistent)
        )

    bad = [t for t in traces if not t.converged]
    if not bad:
        return ConvergenceReport(
            battery.name, battery.mode, tol, "converges", None, None, tuple(traces)
        )

    def strength(t: FunctionTrace):
        return min(float(g.value) for g in t.gaps[start:])

    pool = [t for t in bad if t.persistent] or bad
    witness = max(pool, key=strength)
    note = ""
    if not witness.persistent:
        note = (
            "no gap stayed certified above 10*tol through the final third; "
            "the divergence verdict is tolerance-sensitive"
        )
    return ConvergenceReport(
        battery.name,
        battery.mode,
        tol,
        "diverges",
        witness.name,
        min(witness.gaps[start:], key=lambda g: g.value),
        tuple(traces),
        note=note,
    )


DEFAULT_INTEGRATE = 1e-12


def multi_initial_check(
    model: MdpModel,
    pairs,
    limit_pair,
    battery: TestBattery,
    tol: float = DEFAULT_TOPOLOGY_TOL,
    horizon: int = 4,
) -> ConvergenceReport:
    """Convergence of occupation measures along a sequence of
    (initial state, strategy) pairs against a limit pair."""
    seq = [occupation_unroll(model, s, x0, horizon).measure for x0, s in pairs]
    lx0, ls = limit_pair
    lim = occupation_unroll(model, ls, lx0, horizon).measure
    return check_convergence(seq, lim, battery, tol)


# -- distance to deterministic relaxations ---------------------------------


def determinism_defect(mu: HybridMeasure) -> Number:
    """How far a measure on state x action is from having a deterministic
    action disintegration: the integral of (total action mass minus the
    largest single-action mass) over a common refinement of the state cells.
    Zero iff one action carries all the mass on every cell."""
    if not isinstance(mu.domain.actions, FiniteActions):
        raise MeasureError("determinism defect needs a finite action space")

    atom_cells: dict = {}
    seg_pieces: dict = {}
    for c in mu.components:
        if c.action is None:
            raise MeasureError("determinism defect needs action information")
        parts = (
            c.action.parts if isinstance(c.action, ActionMixture) else ((Number.lift(1), c.action),)
        )
        for w, part in parts:
            if not isinstance(part, ActionAtom):
                raise MeasureError("finite-action measures must mix atoms only")
            weight = c.weight * w
            if isinstance(c.state, StateAtom):
                cell = atom_cells.setdefault(c.state.point, {})
                cell[part.action] = cell.get(part.action, ZERO) + weight
            else:
                seg_pieces.setdefault(c.state.segment, []).append(
                    (c.state.breaks, c.state.heights, part.action, weight)
                )

    defect = ZERO
    for cell in atom_cells.values():
        total = nsum(cell.values())
        top = max(cell.values(), key=lambda v: v.value)
        defect = defect + (total - top)

    for pieces in seg_pieces.values():
        cuts = sorted({b for breaks, _, _, _ in pieces for b in breaks})
        for lo, hi in zip(cuts, cuts[1:]):
            mid = lo + (hi - lo) / 2
            per_action: dict = {}
            for breaks, heights, action, weight in pieces:
                for a, b, h in zip(breaks, breaks[1:], heights):
                    if a <= mid < b:
                        per_action[action] = per_action.get(action, ZERO) + weight * h
            if not per_action:
                continue
            total = nsum(per_action.values())
            top = max(per_action.values(), key=lambda v: v.value)
            length = Number.lift(hi - lo) if not isinstance(hi - lo, float) else Number.approx(hi - lo, 0.0)
            defect = defect + (total - top) * length
    return defect
