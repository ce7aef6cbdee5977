"""Hybrid measures on state x action products, and test functions.

A measure is a finite list of product components: a state part (an atom or a
piecewise-constant density on one segment) tensored with an action part (an
atom, a piecewise-constant density, or a finite mixture of those), carried
with a nonnegative weight.  Components with no action part represent
measures on the state space alone (marginals).

Integration is exact whenever the component is purely atomic, or the test
function carries a structured form (a sum of tensor-product terms with
piecewise-polynomial factors) covering the parts involved.  Everything else
falls back to adaptive quadrature with a tracked error bound.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .numbers import Number, ZERO, ONE, nsum
from .quadrature import adaptive_quadrature, QuadratureError
from .spaces import (
    ActionSpace,
    FiniteActions,
    IntervalActions,
    StatePoint,
    StateSpace,
)

DEFAULT_INTEGRATE_TOL = 1e-12

ActionValue = str | Fraction | float


class MeasureError(ValueError):
    pass


class CoverageError(KeyError):
    """A structured form was asked about a point it does not cover."""


def _lift_pos(x) -> Number:
    """Positions denote themselves: float coords carry no uncertainty."""
    if isinstance(x, (int, Fraction)):
        return Number.lift(x)
    return Number.approx(x, 0.0)


def _wrap_value(v) -> Number:
    if isinstance(v, Number):
        return v
    if isinstance(v, (int, Fraction)):
        return Number.lift(v)
    if isinstance(v, float):
        return Number.approx(v, 0.0)
    raise TypeError(f"evaluator returned {type(v).__name__}")


def _check_pieces(breaks, heights, where: str):
    if len(breaks) != len(heights) + 1:
        raise MeasureError(f"{where}: need len(breaks) == len(heights) + 1")
    for a, b in zip(breaks, breaks[1:]):
        if not a < b:
            raise MeasureError(f"{where}: breaks must increase strictly")
    for h in heights:
        if not isinstance(h, Number):
            raise MeasureError(f"{where}: heights must be Numbers")
        if h.is_exact:
            if h.value < 0:
                raise MeasureError(f"{where}: negative height")
        elif float(h.value) < -float(h.err):
            raise MeasureError(f"{where}: negative height")


def _pieces_mass(breaks, heights) -> Number:
    total = ZERO
    for a, b, h in zip(breaks, breaks[1:], heights):
        total = total + h * (_lift_pos(b) - _lift_pos(a))
    return total


# -- measure parts ---------------------------------------------------------


@dataclass(frozen=True)
class StateAtom:
    """Unit point mass at a state."""

    point: StatePoint

    def mass(self) -> Number:
        return ONE


@dataclass(frozen=True)
class StateDensity:
    """Piecewise-constant density on part of one segment."""

    segment: str
    breaks: tuple
    heights: tuple

    def __post_init__(self):
        _check_pieces(self.breaks, self.heights, f"density on {self.segment!r}")

    def mass(self) -> Number:
        return _pieces_mass(self.breaks, self.heights)


StatePart = StateAtom | StateDensity


@dataclass(frozen=True)
class ActionAtom:
    action: ActionValue

    def mass(self) -> Number:
        return ONE


@dataclass(frozen=True)
class ActionDensity:
    breaks: tuple
    heights: tuple

    def __post_init__(self):
        _check_pieces(self.breaks, self.heights, "action density")

    def mass(self) -> Number:
        return _pieces_mass(self.breaks, self.heights)


@dataclass(frozen=True)
class ActionMixture:
    """Weighted finite mixture of atoms and densities (not nested)."""

    parts: tuple  # of (Number weight, ActionAtom | ActionDensity)

    def __post_init__(self):
        for w, p in self.parts:
            if not isinstance(w, Number):
                raise MeasureError("mixture weights must be Numbers")
            if not isinstance(p, (ActionAtom, ActionDensity)):
                raise MeasureError("mixture parts must be atoms or densities")

    def mass(self) -> Number:
        return nsum(w * p.mass() for w, p in self.parts)


ActionPart = ActionAtom | ActionDensity | ActionMixture


def action_mass(part: ActionPart | None) -> Number:
    return ONE if part is None else part.mass()


# -- measures --------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    states: StateSpace
    actions: ActionSpace


@dataclass(frozen=True)
class MeasureComponent:
    state: StatePart
    action: ActionPart | None
    weight: Number

    def mass(self) -> Number:
        return self.weight * self.state.mass() * action_mass(self.action)


@dataclass(frozen=True)
class HybridMeasure:
    domain: Domain
    components: tuple[MeasureComponent, ...] = ()

    def __post_init__(self):
        for c in self.components:
            _validate_component(self.domain, c)

    def total_mass(self) -> Number:
        return nsum(c.mass() for c in self.components)

    @property
    def is_marginal(self) -> bool:
        return all(c.action is None for c in self.components)


def _validate_weight(w: Number, where: str):
    if not isinstance(w, Number):
        raise MeasureError(f"{where}: weight must be a Number")
    if w.is_exact:
        if w.value < 0:
            raise MeasureError(f"{where}: negative weight")
    elif float(w.value) < -float(w.err):
        raise MeasureError(f"{where}: negative weight")


def _validate_component(domain: Domain, c: MeasureComponent):
    _validate_weight(c.weight, "component")
    space = domain.states
    s = c.state
    if isinstance(s, StateAtom):
        p = s.point
        if p.atom is not None:
            space.atom_decl(p.atom)
        else:
            seg = space.segment_decl(p.segment)
            if not (seg.lo <= p.coord <= seg.hi):
                raise MeasureError(f"point coordinate {p.coord} outside {p.segment!r}")
    elif isinstance(s, StateDensity):
        seg = space.segment_decl(s.segment)
        if not (seg.lo <= s.breaks[0] and s.breaks[-1] <= seg.hi):
            raise MeasureError(f"density support outside segment {s.segment!r}")
    else:
        raise MeasureError(f"bad state part {s!r}")
    a = c.action
    if a is None:
        return
    parts = a.parts if isinstance(a, ActionMixture) else ((ONE, a),)
    for w, part in parts:
        _validate_weight(w, "mixture part")
        if isinstance(part, ActionAtom):
            _validate_action_value(domain.actions, part.action)
        elif isinstance(part, ActionDensity):
            if not isinstance(domain.actions, IntervalActions):
                raise MeasureError("action densities need an interval action space")
            if not (domain.actions.lo <= part.breaks[0] and part.breaks[-1] <= domain.actions.hi):
                raise MeasureError("action density support outside the action interval")


def _validate_action_value(actions: ActionSpace, a: ActionValue):
    if isinstance(actions, FiniteActions):
        if a not in actions.names:
            raise MeasureError(f"unknown action {a!r}")
    else:
        if isinstance(a, str):
            raise MeasureError("interval actions are coordinates, not names")
        if not (actions.lo <= a <= actions.hi):
            raise MeasureError(f"action coordinate {a} outside the interval")


def add(mu: HybridMeasure, nu: HybridMeasure) -> HybridMeasure:
    if mu.domain != nu.domain:
        raise MeasureError("cannot add measures on different domains")
    return HybridMeasure(mu.domain, mu.components + nu.components)


def scale(mu: HybridMeasure, c) -> HybridMeasure:
    c = Number.lift(c)
    _validate_weight(c, "scale factor")
    return HybridMeasure(
        mu.domain,
        tuple(MeasureComponent(k.state, k.action, k.weight * c) for k in mu.components),
    )


def total_mass(mu: HybridMeasure) -> Number:
    return mu.total_mass()


def marginal_state(mu: HybridMeasure) -> HybridMeasure:
    """Project onto the state space, merging equal state parts."""
    merged: dict = {}
    order: list = []
    for c in mu.components:
        w = c.weight * action_mass(c.action)
        key = c.state
        if key in merged:
            merged[key] = merged[key] + w
        else:
            merged[key] = w
            order.append(key)
    comps = tuple(MeasureComponent(s, None, merged[s]) for s in order)
    return HybridMeasure(mu.domain, comps)


class PushforwardError(MeasureError):
    pass


def pushforward_affine(
    space: StateSpace,
    part: ActionPart,
    *,
    segment: str | None = None,
    atom: str | None = None,
    alpha=Fraction(1),
    beta=Fraction(0),
) -> list[tuple[StatePart, Number]]:
    """Image of an action measure under a |-> alpha*a + beta into a segment,
    or collapse onto a named atom.  Mass is preserved exactly."""
    if (segment is None) == (atom is None):
        raise PushforwardError("target is a segment embedding or an atom, pick one")
    if atom is not None:
        return [(StateAtom(space.point(atom)), part.mass())]
    seg = space.segment_decl(segment)

    def land(coord):
        if not (seg.lo <= coord <= seg.hi):
            raise PushforwardError(f"image {coord} escapes segment {segment!r}")
        return coord

    out: list[tuple[StatePart, Number]] = []

    def emit(p: ActionAtom | ActionDensity, w: Number):
        if isinstance(p, ActionAtom):
            if isinstance(p.action, str):
                raise PushforwardError("cannot embed a named action by an affine map")
            out.append((StateAtom(StatePoint(segment=segment, coord=land(alpha * p.action + beta))), w))
            return
        if alpha == 0:
            out.append((StateAtom(StatePoint(segment=segment, coord=land(beta))), w * p.mass()))
            return
        breaks = tuple(alpha * b + beta for b in p.breaks)
        heights = tuple(h / Number.lift(abs(alpha)) for h in p.heights)
        if alpha < 0:
            breaks = tuple(reversed(breaks))
            heights = tuple(reversed(heights))
        land(breaks[0]), land(breaks[-1])
        out.append((StateDensity(segment, breaks, heights), w))

    if isinstance(part, ActionMixture):
        for w, p in part.parts:
            emit(p, w)
    else:
        emit(part, ONE)
    return out


# -- test functions --------------------------------------------------------

CONTINUOUS = "continuous"
CARATHEODORY = "caratheodory"
MEASURABLE = "measurable"
_CLASSES = (CONTINUOUS, CARATHEODORY, MEASURABLE)


class BoundViolation(MeasureError):
    pass


@dataclass(frozen=True)
class PiecewisePoly:
    """Piecewise polynomial on [breaks[0], breaks[-1]] with optional explicit
    values at the break coordinates (for genuinely discontinuous functions)."""

    breaks: tuple
    coeffs: tuple  # per piece, ascending powers
    knots: tuple | None = None

    def __post_init__(self):
        if len(self.coeffs) != len(self.breaks) - 1:
            raise MeasureError("need one coefficient row per piece")
        for a, b in zip(self.breaks, self.breaks[1:]):
            if not a < b:
                raise MeasureError("breaks must increase strictly")
        if self.knots is not None and len(self.knots) != len(self.breaks):
            raise MeasureError("need one knot value per break")

    def _piece_eval(self, i: int, x):
        acc = 0
        for c in reversed(self.coeffs[i]):
            acc = acc * x + c
        return acc

    def value_at(self, x):
        if x < self.breaks[0] or x > self.breaks[-1]:
            raise CoverageError(f"{x} outside piecewise range")
        if self.knots is not None:
            for b, k in zip(self.breaks, self.knots):
                if x == b:
                    return k
        i = bisect.bisect_right(self.breaks, x) - 1
        i = min(max(i, 0), len(self.coeffs) - 1)
        return self._piece_eval(i, x)

    def integral(self, lo, hi):
        """Exact integral over [lo, hi] within the covered range."""
        if lo > hi:
            raise MeasureError("need lo <= hi")
        if lo < self.breaks[0] or hi > self.breaks[-1]:
            raise CoverageError("integration range escapes the piecewise range")
        total = 0
        for i, (a, b) in enumerate(zip(self.breaks, self.breaks[1:])):
            x0, x1 = max(a, lo), min(b, hi)
            if not x0 < x1:
                continue
            for j, c in enumerate(self.coeffs[i]):
                if isinstance(c, int):
                    c = Fraction(c)
                total = total + c * (x1 ** (j + 1) - x0 ** (j + 1)) / (j + 1)
        return total

    def integral_against(self, breaks, heights) -> Number:
        total = ZERO
        for a, b, h in zip(breaks, breaks[1:], heights):
            total = total + h * _wrap_value(self.integral(a, b))
        return total


def const_poly(value, lo=Fraction(0), hi=Fraction(1)) -> PiecewisePoly:
    return PiecewisePoly((lo, hi), ((value,),))


@dataclass(frozen=True)
class StateFactor:
    """State side of a structured term: one polynomial per covered segment
    plus explicit values at covered atoms."""

    segment_polys: tuple = ()  # of (label, PiecewisePoly)
    atom_values: tuple = ()  # of (name, value)

    def poly_for(self, label: str) -> PiecewisePoly:
        for lbl, p in self.segment_polys:
            if lbl == label:
                return p
        raise CoverageError(f"no structured factor for segment {label!r}")

    def value_at(self, point: StatePoint):
        if point.atom is not None:
            for name, v in self.atom_values:
                if name == point.atom:
                    return v
            raise CoverageError(f"no structured value for atom {point.atom!r}")
        return self.poly_for(point.segment).value_at(point.coord)

    def integral_against(self, density: StateDensity) -> Number:
        return self.poly_for(density.segment).integral_against(density.breaks, density.heights)


@dataclass(frozen=True)
class ActionFactor:
    """Action side of a structured term: a polynomial on the action interval,
    or a value table over named actions, or a constant."""

    poly: PiecewisePoly | None = None
    table: tuple = ()  # of (name, value)
    const: object = None

    def value_at(self, action: ActionValue):
        if self.const is not None:
            return self.const
        if isinstance(action, str):
            for name, v in self.table:
                if name == action:
                    return v
            raise CoverageError(f"no structured value for action {action!r}")
        if self.poly is None:
            raise CoverageError("no structured polynomial for interval actions")
        return self.poly.value_at(action)

    def integral_against(self, density: ActionDensity) -> Number:
        if self.const is not None:
            return density.mass() * _wrap_value(self.const)
        if self.poly is None:
            raise CoverageError("no structured polynomial for interval actions")
        return self.poly.integral_against(density.breaks, density.heights)


@dataclass(frozen=True)
class TestFunction:
    """Bounded test integrand with a declared regularity class.

    `evaluator` is the function itself; `structured`, when present, is an
    exactly integrable representation that must agree with the evaluator
    (sum of StateFactor x ActionFactor terms, or a single StateFactor for
    state-only functions).
    """

    __test__ = False  # keep pytest from collecting this as a test class

    name: str
    declared_class: str
    evaluator: Callable
    bound: Fraction | float = Fraction(1)
    arity: str = "state_action"
    structured: tuple = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.declared_class not in _CLASSES:
            raise MeasureError(f"unknown class {self.declared_class!r}")
        if self.arity not in ("state", "state_action"):
            raise MeasureError(f"unknown arity {self.arity!r}")
        if self.bound < 0:
            raise MeasureError("bound must be nonnegative")

    def evaluate(self, point: StatePoint, action: ActionValue | None = None) -> Number:
        if self.arity == "state":
            raw = self.evaluator(point)
        else:
            if action is None:
                raise MeasureError(f"{self.name!r} needs an action argument")
            raw = self.evaluator(point, action)
        v = _wrap_value(raw)
        slack = float(v.err) + 1e-12
        if float(abs(v.value)) > float(self.bound) + slack:
            raise BoundViolation(
                f"{self.name!r} evaluated to {float(v.value)} beyond bound {self.bound}"
            )
        return v


def structured_state_function(name, declared_class, factor: StateFactor, bound) -> TestFunction:
    """State-only test function whose evaluator is the structured form itself."""
    return TestFunction(
        name=name,
        declared_class=declared_class,
        evaluator=lambda p: factor.value_at(p),
        bound=bound,
        arity="state",
        structured=(factor,),
    )


def structured_joint_function(name, declared_class, terms, bound) -> TestFunction:
    """Joint test function evaluated through its tensor-product terms."""
    terms = tuple(terms)

    def ev(p, a):
        acc = 0
        for sf, af in terms:
            acc = acc + sf.value_at(p) * af.value_at(a)
        return acc

    return TestFunction(
        name=name,
        declared_class=declared_class,
        evaluator=ev,
        bound=bound,
        arity="state_action",
        structured=terms,
    )


# -- integration -----------------------------------------------------------


class IntegrationError(Exception):
    def __init__(self, message, value=None, err=None):
        super().__init__(message)
        self.value = value
        self.err = err


def integrate(mu: HybridMeasure, g: TestFunction, tol: float = DEFAULT_INTEGRATE_TOL) -> Number:
    """Integral of g against mu.  The result's error bound is zero on fully
    exact paths, and at most tol when quadrature was involved."""
    comps = mu.components
    if not comps:
        return ZERO
    share = tol / len(comps)
    total = ZERO
    for c in comps:
        total = total + _component_integral(c, g, share)
    return total


def _component_integral(c: MeasureComponent, g: TestFunction, tol: float) -> Number:
    if g.arity == "state":
        amass = action_mass(c.action)
        if isinstance(c.state, StateAtom):
            v = g.evaluate(c.state.point)
        else:
            v = _state_density_integral(c.state, g, tol)
        return c.weight * v * amass
    if c.action is None:
        raise MeasureError(f"{g.name!r} needs actions but the measure is a marginal")
    parts = c.action.parts if isinstance(c.action, ActionMixture) else ((ONE, c.action),)
    total = ZERO
    for w, apart in parts:
        total = total + w * _pure_integral(c.state, apart, g, tol / len(parts))
    return c.weight * total


def _state_density_integral(d: StateDensity, g: TestFunction, tol: float) -> Number:
    if g.structured is not None:
        factor = g.structured[0]
        return factor.integral_against(d)
    total = ZERO
    budget = tol / len(d.heights)
    for a, b, h in zip(d.breaks, d.breaks[1:], d.heights):
        f = lambda x: float(g.evaluate(StatePoint(segment=d.segment, coord=x)).value)
        v, e = _quad(f, float(a), float(b), budget / max(float(h.value), 1e-30))
        total = total + h * Number.approx(v, e)
    return total


def _pure_integral(s: StatePart, a: ActionAtom | ActionDensity, g: TestFunction, tol: float) -> Number:
    atomic_s = isinstance(s, StateAtom)
    atomic_a = isinstance(a, ActionAtom)
    if atomic_s and atomic_a:
        return g.evaluate(s.point, a.action)
    if g.structured is not None:
        total = ZERO
        for sf, af in g.structured:
            sv = _wrap_value(sf.value_at(s.point)) if atomic_s else sf.integral_against(s)
            av = _wrap_value(af.value_at(a.action)) if atomic_a else af.integral_against(a)
            total = total + sv * av
        return total
    if atomic_s:
        f = lambda t: float(g.evaluate(s.point, t).value)
        return _density_quad(a.breaks, a.heights, f, tol)
    if atomic_a:
        f = lambda x: float(g.evaluate(StatePoint(segment=s.segment, coord=x), a.action).value)
        return _density_quad(s.breaks, s.heights, f, tol)
    # nested: outer over the state density, inner over the action density
    smass = max(float(s.mass().value), 1e-30)
    inner_tol = tol / (2.0 * smass)

    def outer(x):
        p = StatePoint(segment=s.segment, coord=x)
        f = lambda t: float(g.evaluate(p, t).value)
        inner = _density_quad(a.breaks, a.heights, f, inner_tol)
        return float(inner.value)

    got = _density_quad(s.breaks, s.heights, outer, tol / 2.0)
    return Number.approx(float(got.value), float(got.err) + smass * inner_tol)


def _density_quad(breaks, heights, f, tol: float) -> Number:
    total = ZERO
    budget = tol / len(heights)
    for a, b, h in zip(breaks, breaks[1:], heights):
        hv = max(float(h.value), 1e-30)
        v, e = _quad(f, float(a), float(b), budget / hv)
        total = total + h * Number.approx(v, e)
    return total


def _quad(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    try:
        return adaptive_quadrature(f, lo, hi, tol)
    except QuadratureError as exc:
        raise IntegrationError(str(exc), value=exc.value, err=exc.err) from exc


def check_structured_consistency(
    g: TestFunction,
    space: StateSpace,
    actions: ActionSpace,
    samples_per_piece: int = 3,
) -> None:
    """Verify that a structured form agrees with the evaluator at piece
    midpoints, knots, and a few action samples.  Raises on disagreement."""
    if g.structured is None:
        return
    if g.arity == "state":
        factors = [(g.structured[0], None)]
    else:
        factors = list(g.structured)

    if isinstance(actions, FiniteActions):
        action_samples = list(actions.names)
    else:
        lo, hi = actions.lo, actions.hi
        action_samples = [lo, (lo + hi) / 2, hi]

    def state_samples(sf: StateFactor):
        pts = []
        for name, _ in sf.atom_values:
            pts.append(space.point(name))
        for label, poly in sf.segment_polys:
            for a, b in zip(poly.breaks, poly.breaks[1:]):
                for k in range(1, samples_per_piece + 1):
                    coord = a + (b - a) * Fraction(k, samples_per_piece + 1)
                    pts.append(StatePoint(segment=label, coord=coord))
            for b in poly.breaks:
                pts.append(StatePoint(segment=label, coord=b))
        return pts

    seen = set()
    for sf, _ in factors:
        for p in state_samples(sf):
            if p in seen:
                continue
            seen.add(p)
            if g.arity == "state":
                want = _wrap_value(g.structured[0].value_at(p))
                got = g.evaluate(p)
                _assert_close(g.name, want, got)
            else:
                for a in action_samples:
                    acc = ZERO
                    for sf2, af2 in factors:
                        acc = acc + _wrap_value(sf2.value_at(p)) * _wrap_value(af2.value_at(a))
                    _assert_close(g.name, acc, g.evaluate(p, a))


def _assert_close(name, want: Number, got: Number):
    gap = abs(want - got)
    if float(gap.value) > 1e-9 + float(gap.err):
        raise MeasureError(f"structured form of {name!r} disagrees with its evaluator")
