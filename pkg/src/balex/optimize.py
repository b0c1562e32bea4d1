"""Exact solvers for constrained attractive-count maximization over matchings.

The constraint systems the mechanism generates fix, per agent, a set of allowed
objects, a lower bound on the number of attractive objects received and
optionally an exact count (once a promise is locked).  Queries are answered by
an integer flow with lower bounds (flownet module); brute_force_max answers the
same queries by exhaustive enumeration and serves as the oracle everything else
is checked against.

Counts are integral throughout; witnesses are tie-broken to the canonical
lexicographic minimum (agent priority order, then object identifier order).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .flownet import ExchangeFlow
from .model import Instance, Matching, canon


class InfeasibleError(ValueError):
    """Raised when a constraint system admits no matching."""


class EnumerationLimitError(ValueError):
    """Raised when a brute-force operation is asked to enumerate too large a space."""


@dataclass(frozen=True)
class WelfareConstraints:
    """Per-agent candidate sets and attractive-count bounds for one query.

    allowed[i] is the set an agent's bundle must come from, attractive[i] the
    objects counted toward her welfare, min_attractive[i] a lower bound on that
    count and exact_attractive[i] (when present) pins it exactly.
    """

    allowed: Mapping[str, frozenset[str]]
    attractive: Mapping[str, frozenset[str]]
    min_attractive: Mapping[str, int]
    exact_attractive: Mapping[str, int] = field(default_factory=dict)

    def check(self, instance: Instance) -> None:
        for a in instance.agents:
            size = len(instance.endowment[a])
            if self.min_attractive.get(a, 0) > size:
                raise ValueError(
                    f"agent {a!r}: min_attractive exceeds the endowment size {size}"
                )
            if a in self.exact_attractive and self.exact_attractive[a] < self.min_attractive.get(a, 0):
                raise ValueError(f"agent {a!r}: exact_attractive below min_attractive")


def _matching_from_masks(instance: Instance, masks: list[int]) -> Matching:
    return Matching(
        {a: instance.unmask(masks[i]) for i, a in enumerate(instance.agents)}
    )


def feasible(instance: Instance, constraints: WelfareConstraints) -> Matching | None:
    """Some matching satisfying the constraints (canonical witness), or None."""
    flow = _make_flow(instance, constraints)
    if not flow.solve_feasible():
        return None
    masks = flow.extract_canonical(list(range(len(instance.agents))))
    return _matching_from_masks(instance, masks)


def max_attractive(
    instance: Instance, constraints: WelfareConstraints, target: str
) -> tuple[int, Matching]:
    """Maximum attainable |bundle(target) ∩ A_target| over the constraint set, with witness."""
    flow = _make_flow(instance, constraints)
    if not flow.solve_feasible():
        raise InfeasibleError("constraint set is empty")
    t = instance.agent_index[target]
    best = flow.maximize(t)
    flow.freeze(t)
    masks = flow.extract_canonical(list(range(len(instance.agents))))
    return best, _matching_from_masks(instance, masks)


def _make_flow(instance: Instance, constraints: WelfareConstraints) -> ExchangeFlow:
    constraints.check(instance)
    m = len(instance.object_ids)
    sizes = list(instance.sizes)
    allowed_a: list[int] = []
    allowed_b: list[int] = []
    lo: list[int] = []
    hi: list[int] = []
    for i, a in enumerate(instance.agents):
        s_mask = instance.mask(constraints.allowed.get(a, frozenset()))
        a_mask = instance.mask(constraints.attractive.get(a, frozenset()))
        allowed_a.append(s_mask & a_mask)
        allowed_b.append(s_mask & ~a_mask)
        if a in constraints.exact_attractive:
            lo.append(constraints.exact_attractive[a])
            hi.append(constraints.exact_attractive[a])
        else:
            lo.append(constraints.min_attractive.get(a, 0))
            hi.append(sizes[i])
    flow = ExchangeFlow(sizes, allowed_a, allowed_b, lo, hi, n_objects=m)
    return flow


def enumerate_constrained(
    instance: Instance, constraints: WelfareConstraints
) -> Iterator[Matching]:
    """All matchings satisfying the constraints, in canonical order."""
    agents = instance.agents
    allowed = [canon(constraints.allowed.get(a, frozenset())) for a in agents]
    attractive = [constraints.attractive.get(a, frozenset()) for a in agents]
    sizes = instance.sizes

    def rec(i: int, used: frozenset[str], acc: list[frozenset[str]]) -> Iterator[Matching]:
        if i == len(agents):
            yield Matching({a: acc[k] for k, a in enumerate(agents)})
            return
        a = agents[i]
        pool = [o for o in allowed[i] if o not in used]
        for combo in itertools.combinations(pool, sizes[i]):
            bundle = frozenset(combo)
            got = len(bundle & attractive[i])
            if got < constraints.min_attractive.get(a, 0):
                continue
            if a in constraints.exact_attractive and got != constraints.exact_attractive[a]:
                continue
            acc.append(bundle)
            yield from rec(i + 1, used | bundle, acc)
            acc.pop()

    yield from rec(0, frozenset(), [])


def brute_force_max(
    instance: Instance,
    constraints: WelfareConstraints,
    target: str,
    bound: int = 10,
) -> tuple[int, Matching]:
    """Oracle twin of max_attractive by exhaustive enumeration (small instances only)."""
    if len(instance.objects) > bound:
        raise EnumerationLimitError(
            f"instance has {len(instance.objects)} objects, brute-force bound is {bound}"
        )
    a_target = constraints.attractive.get(target, frozenset())
    best = -1
    witness: Matching | None = None
    for mu in enumerate_constrained(instance, constraints):
        got = len(mu.assignment[target] & a_target)
        if got > best:
            best = got
            witness = mu
    if witness is None:
        raise InfeasibleError("constraint set is empty")
    return best, witness


def network_dump(instance: Instance, constraints: WelfareConstraints) -> str:
    """Text dump of the flow network for one constraint system (debug aid)."""
    flow = _make_flow(instance, constraints)
    flow.solve_feasible()
    return flow.dump()
