"""Expected-hitting-time analysis and uniform-absorption diagnostics.

The Bellman operator here is the one for worst-case expected time to
absorption: (Tw)(x) = 1 + max over actions of the expected value of w at
the successor, with w pinned to zero at the cemetery.  Value iteration from
zero is monotone and converges to the least fixed point on the truncated
support (successors outside the support count as zero).

`uniformity_report` tabulates tail sums over a strategy family.  Its
verdict is honest about finite evidence: a certified witness cell proves
non-uniformity over the explored family; a certified sup-row decay at the
deepest stage supports (but cannot prove) uniform absorption; everything
else is inconclusive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .numbers import Number, ZERO, ONE, nsum
from .measure import StateAtom
from .mdp import (
    FiniteActions,
    FixedDiffuse,
    MdpModel,
    ModelError,
    StrategyFamily,
    resolve_rule,
)
from .occupation import (
    Truncation,
    expected_hitting_time,
    occupation_countable,
    survival_probs,
)
from .spaces import StatePoint


class ValueError_(ModelError):
    pass


@dataclass(frozen=True)
class ValueFunction:
    """Values on named atoms, zero at the cemetery, with an optional
    closed-form fallback for atoms beyond the stored table."""

    values: dict
    cemetery: str = "Delta"
    fallback: Callable[[str], Number | None] | None = None

    def value_at(self, name: str) -> Number:
        if name == self.cemetery:
            return ZERO
        if name in self.values:
            return self.values[name]
        if self.fallback is not None:
            v = self.fallback(name)
            if v is not None:
                return v
        raise ValueError_(f"no value for state {name!r}")


def _successor_rows(model: MdpModel, atom: str):
    """Per-action successor distributions for one atom."""
    if not isinstance(model.actions, FiniteActions):
        raise ModelError("hitting-time analysis needs finite actions")
    rule = resolve_rule(model, StateAtom(model.states.point(atom)))
    if rule == "table":
        out = []
        for a in model.actions.names:
            row = model.kernel.row(atom, a)
            if row is None:
                raise ModelError(f"no kernel row for ({atom!r}, {a!r})")
            out.append((a, row))
        return out
    if isinstance(rule, FixedDiffuse):
        if rule.pieces:
            raise ModelError("hitting-time analysis needs atomic targets")
        return [(a, rule.atom_probs) for a in model.actions.names]
    raise ModelError("hitting-time analysis needs atomic targets")


def _apply_at(model: MdpModel, lookup: Callable[[str], Number], atom: str) -> Number:
    best = None
    for _, row in _successor_rows(model, atom):
        total = nsum(p * lookup(name) for name, p in row)
        if best is None or total > best:
            best = total
    return ONE + best


def bellman_apply(model: MdpModel, w: ValueFunction, support) -> ValueFunction:
    """One application of the operator on the given atoms; successor values
    come from w (including its fallback)."""
    out = {}
    for atom in support:
        out[atom] = _apply_at(model, w.value_at, atom)
    return ValueFunction(out, cemetery=model.states.cemetery)


def value_iterate(model: MdpModel, support, iters: int):
    """Iterate from zero on the truncated support: successors outside the
    support (and the cemetery) count as zero.  Returns the final iterate and
    the last per-state increments.  The iterates increase monotonically."""
    support = list(support)
    inside = set(support) | {model.states.cemetery}
    values = {a: ZERO for a in support}

    def lookup(name: str) -> Number:
        if name == model.states.cemetery or name not in inside:
            return ZERO
        return values[name]

    gaps = {a: ZERO for a in support}
    for _ in range(iters):
        new = {a: _apply_at(model, lookup, a) for a in support}
        gaps = {a: new[a] - values[a] for a in support}
        values = new
    return ValueFunction(values, cemetery=model.states.cemetery), gaps


@dataclass(frozen=True)
class VerifyResult:
    kind: str  # fixed_point | strict_supersolution | violated
    state: str | None = None
    details: tuple = ()  # of (atom, w, Tw)


def verify_supersolution(model: MdpModel, w: ValueFunction, support) -> VerifyResult:
    """Exact comparison of w against Tw on the support."""
    details = []
    first_violation = None
    strict = False
    for atom in support:
        lhs = w.value_at(atom)
        rhs = _apply_at(model, w.value_at, atom)
        details.append((atom, lhs, rhs))
        if lhs.is_exact and rhs.is_exact:
            if lhs.value < rhs.value and first_violation is None:
                first_violation = atom
            elif lhs.value > rhs.value:
                strict = True
        else:
            if lhs < rhs and first_violation is None:
                first_violation = atom
            elif lhs > rhs:
                strict = True
    if first_violation is not None:
        return VerifyResult("violated", first_violation, tuple(details))
    if strict:
        return VerifyResult("strict_supersolution", None, tuple(details))
    return VerifyResult("fixed_point", None, tuple(details))


@dataclass(frozen=True)
class AbsorptionReport:
    eps: float
    n_max: int
    strategy_names: tuple
    expected_times: tuple
    rows: tuple  # per strategy, tail sums for n = 0..n_max
    sup_row: tuple
    verdict: str  # non_uniform_witness | decays | inconclusive
    witness: tuple | None  # (strategy name, n, value)
    note: str = ""


def uniformity_report(
    model: MdpModel,
    family: StrategyFamily,
    x0: StatePoint,
    n_max: int,
    eps=Fraction(1, 10 ** 6),
    trunc: Truncation = Truncation(),
    continue_bound: Fraction | None = None,
) -> AbsorptionReport:
    """Tail-sum table over an explored strategy family.

    A witness is only claimed when a tail sum in the deeper half of the
    table is certified at or above eps; sup-row decay is only claimed when
    every final tail is certified at or below eps.
    """
    names = []
    times = []
    rows = []
    for name, strat in family.explored():
        occ = occupation_countable(model, strat, x0, trunc, continue_bound)
        total = expected_hitting_time(occ)
        surv = survival_probs(model, strat, x0, max(n_max - 1, 0))
        tails = [total]
        for n in range(1, n_max + 1):
            tails.append(tails[-1] - surv[n - 1])
        names.append(name)
        times.append(total)
        rows.append(tuple(tails))

    sup_row = []
    for n in range(n_max + 1):
        col = [row[n] for row in rows]
        sup_row.append(max(col, key=lambda v: v.value))

    witness = None
    half = (n_max + 1) // 2
    for i, row in enumerate(rows):
        for n in range(half, n_max + 1):
            if row[n].certainly_ge(eps):
                cand = (names[i], n, row[n])
                if witness is None or (n, float(row[n].value)) > (witness[1], float(witness[2].value)):
                    witness = cand
    if witness is not None:
        return AbsorptionReport(
            float(eps), n_max, tuple(names), tuple(times), tuple(rows), tuple(sup_row),
            "non_uniform_witness", witness,
            note=f"tail sum stays at or above eps at stage {witness[1]} under {witness[0]!r}",
        )
    if all(row[n_max].certainly_le(eps) for row in rows):
        return AbsorptionReport(
            float(eps), n_max, tuple(names), tuple(times), tuple(rows), tuple(sup_row),
            "decays", None,
            note="every explored tail sum is certified below eps at the deepest stage; "
            "this supports but cannot prove uniformity beyond the explored family",
        )
    return AbsorptionReport(
        float(eps), n_max, tuple(names), tuple(times), tuple(rows), tuple(sup_row),
        "inconclusive", None,
        note="neither a certified witness nor certified decay at the deepest stage",
    )
