"""Named benchmark profiles with their expected audit artifacts.

Each fixture bundles an instance, a preference profile and the artifacts the
audits are expected to reproduce (candidate matchings, blocking structure,
mechanism output).  They double as regression anchors for the acceptance
suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .model import (
    Instance,
    MarginalPreference,
    Matching,
    TrichotomousPreference,
    validate_instance,
)


@dataclass(frozen=True)
class Fixture:
    name: str
    instance: Instance
    prefs: Mapping[str, MarginalPreference | TrichotomousPreference]
    expected: dict[str, object] = field(default_factory=dict)
    notes: str = ""


def _fs(*objs: str) -> frozenset[str]:
    return frozenset(objs)


def _matching(**bundles: tuple[str, ...]) -> Matching:
    return Matching({a: frozenset(b) for a, b in bundles.items()})


def _example1() -> Fixture:
    instance = validate_instance(
        {
            "agents": ["1", "2"],
            "objects": ["o1", "o2", "p1", "p2"],
            "endowments": {"1": ["o1", "o2"], "2": ["p1", "p2"]},
        }
    )
    order = (_fs("o1"), _fs("p1"), _fs("p2"), _fs("o2"))
    prefs = {a: MarginalPreference(a, order) for a in instance.agents}
    return Fixture(
        name="example1",
        instance=instance,
        prefs=prefs,
        expected={
            "unique_cir": instance.endowment_matching(),
            "efficient_ir_count": 0,
            "famous_matching": _matching(**{"1": ("o1", "p1"), "2": ("o2", "p2")}),
            "famous_violation": ("2", "p1"),
        },
        notes="Both agents rank o1 > p1 > p2 > o2; only the endowment is "
        "unambiguously IR and even it is not unambiguously efficient.",
    )


def _thm4_instance() -> Instance:
    return validate_instance(
        {
            "agents": ["1", "2", "3", "4"],
            "objects": ["o", "p", "q1", "q2", "r"],
            "endowments": {"1": ["o"], "2": ["p"], "3": ["q1", "q2"], "4": ["r"]},
        }
    )


_THM4_BASE = {
    "1": ( _fs("q1"), _fs("o", "r") ),
    "2": ( _fs("q1"), _fs("p", "r") ),
    "3": ( _fs("o", "p"), _fs("q1", "q2") ),
    "4": ( _fs("q2"), _fs("r") ),
}


def _thm4(name: str, overrides: dict[str, tuple[frozenset[str], frozenset[str]]],
          expected: dict[str, object], notes: str) -> Fixture:
    instance = _thm4_instance()
    table = dict(_THM4_BASE)
    table.update(overrides)
    prefs = {
        a: TrichotomousPreference(a, attractive, bearable)
        for a, (attractive, bearable) in table.items()
    }
    return Fixture(name=name, instance=instance, prefs=prefs, expected=expected, notes=notes)


def _thm4_base() -> Fixture:
    mu1 = _matching(**{"1": ("q1",), "2": ("r",), "3": ("o", "p"), "4": ("q2",)})
    mu2 = _matching(**{"1": ("r",), "2": ("q1",), "3": ("o", "p"), "4": ("q2",)})
    return _thm4(
        "thm4-base",
        {},
        {
            "efficient_ir_set": [mu1, mu2],
            "mechanism_output": mu1,
            "round1_promises": (1, 0, 1, 0),
            "round1_matching": _matching(
                **{"1": ("q1",), "2": ("p",), "3": ("o", "q2"), "4": ("r",)}
            ),
            "round1_non_improvable": frozenset({"1", "2"}),
            "round2_promises": (1, 0, 2, 1),
            "trace_rounds": 3,
        },
        notes="Exactly two unambiguously IR+efficient matchings; the priority "
        "mechanism under order 1<2<3<4 selects the one favoring agent 1.",
    )


def _thm4_p2() -> Fixture:
    return _thm4(
        "thm4-p2",
        {"2": (_fs("q1"), _fs("p"))},
        {
            "mechanism_output": _matching(
                **{"1": ("q1",), "2": ("p",), "3": ("o", "q2"), "4": ("r",)}
            ),
            "manipulator": "3",
        },
        notes="Agent 2 drops r from her bearable set; agent 3 now profits at this "
        "profile by shrinking her attractive set to {p} (see thm4-p3).",
    )


def _thm4_p3() -> Fixture:
    return _thm4(
        "thm4-p3",
        {"2": (_fs("q1"), _fs("p")), "3": (_fs("p"), _fs("o", "q1", "q2"))},
        {
            "mechanism_output": _matching(
                **{"1": ("r",), "2": ("q1",), "3": ("o", "p"), "4": ("q2",)}
            ),
        },
        notes="Reported by agent 3 as a manipulation of thm4-p2: she receives "
        "{o, p}, two attractive objects under her true preference there.",
    )


def _thm4_p3x() -> Fixture:
    return _thm4(
        "thm4-p3x",
        {"2": (_fs("q1"), _fs("p")), "3": (_fs("p"), _fs("q1", "q2"))},
        {
            "mechanism_output": _matching(
                **{"1": ("o",), "2": ("q1",), "3": ("p", "q2"), "4": ("r",)}
            ),
        },
        notes="Further truncation by agent 3 (o unacceptable).",
    )


def _core_unit_demand() -> Fixture:
    instance = validate_instance(
        {
            "agents": ["1", "2", "3"],
            "objects": ["o", "p", "q"],
            "endowments": {"1": ["o"], "2": ["p"], "3": ["q"]},
        }
    )
    prefs = {
        "1": TrichotomousPreference("1", _fs("o", "p", "q"), _fs()),
        "2": TrichotomousPreference("2", _fs("o"), _fs("p", "q")),
        "3": TrichotomousPreference("3", _fs("o"), _fs("p", "q")),
    }
    return Fixture(
        name="core-unit-demand",
        instance=instance,
        prefs=prefs,
        expected={
            "endowment_in_weak_core": True,
            "endowment_efficient": False,
        },
        notes="The endowment is unambiguously in the weak core yet not "
        "unambiguously efficient (giving agent 2 object o improves).",
    )


def _no_pe_core() -> Fixture:
    instance = validate_instance(
        {
            "agents": ["1", "2", "3"],
            "objects": ["o1", "o2", "p1", "p2", "q1", "q2"],
            "endowments": {"1": ["o1", "o2"], "2": ["p1", "p2"], "3": ["q1", "q2"]},
        }
    )
    prefs = {
        "1": TrichotomousPreference("1", _fs("p1"), _fs("o1", "o2")),
        "2": TrichotomousPreference("2", _fs("o1", "o2", "q1", "q2"), _fs("p1", "p2")),
        "3": TrichotomousPreference("3", _fs("p1"), _fs("q1", "q2")),
    }
    table = [
        _matching(**{"1": ("o1", "p1"), "2": ("o2", "p2"), "3": ("q1", "q2")}),
        _matching(**{"1": ("o2", "p1"), "2": ("o1", "p2"), "3": ("q1", "q2")}),
        _matching(**{"1": ("o1", "o2"), "2": ("p2", "q2"), "3": ("p1", "q1")}),
        _matching(**{"1": ("o1", "o2"), "2": ("p2", "q1"), "3": ("p1", "q2")}),
    ]
    return Fixture(
        name="no-pe-core",
        instance=instance,
        prefs=prefs,
        expected={"efficient_ir_set": table, "all_blocked": True},
        notes="Strongly trichotomous marginals; all four unambiguously IR and "
        "efficient matchings are strongly blocked under some responsive profile.",
    )


def _core_tricho_unit() -> Fixture:
    instance = validate_instance(
        {
            "agents": ["1", "2", "3", "4"],
            "objects": ["o", "p", "q", "r"],
            "endowments": {"1": ["o"], "2": ["p"], "3": ["q"], "4": ["r"]},
        }
    )
    prefs = {
        "1": TrichotomousPreference("1", _fs("q"), _fs("o")),
        "2": TrichotomousPreference("2", _fs("r"), _fs("p")),
        "3": TrichotomousPreference("3", _fs("r"), _fs("o", "q")),
        "4": TrichotomousPreference("4", _fs("q"), _fs("p", "r")),
    }
    mu = _matching(**{"1": ("q",), "2": ("r",), "3": ("o",), "4": ("p",)})
    return Fixture(
        name="core-tricho-unit",
        instance=instance,
        prefs=prefs,
        expected={
            "matching": mu,
            "matching_efficient": True,
            "blocking_coalition": ("3", "4"),
        },
        notes="Unit-demand trichotomous counterexample: the printed source has "
        "duplicate endowment indices (resolved to agents 1..4 owning o,p,q,r) and "
        "claims agents 2 and 3 block by swapping endowments, which does not "
        "strictly improve either agent as printed; the actual block the auditor "
        "finds is agents 3 and 4 swapping q and r.",
    )


def _thm1_nu1() -> Fixture:
    agents = ["1", "2", "3"]
    objects = []
    endow = {}
    for i in agents:
        own = [f"o{i}", f"p{i}", f"pp{i}", f"q{i}"]
        endow[i] = own
        objects += own
    instance = validate_instance(
        {"agents": agents, "objects": objects, "endowments": endow}
    )
    prefs = {}
    for i in agents:
        others = [j for j in agents if j != i]
        prefs[i] = MarginalPreference(
            i,
            (
                frozenset(f"o{j}" for j in others),
                frozenset(x for j in others for x in (f"p{j}", f"pp{j}")),
                frozenset(instance.endowment[i]),
                frozenset(f"q{j}" for j in others),
            ),
        )
    return Fixture(
        name="thm1-nu1",
        instance=instance,
        prefs=prefs,
        expected={"no_cir_is_efficient": True},
        notes="Endowments allowed in the third class with non-endowments in the "
        "second: every unambiguously IR matching is defeated by an explicit trade.",
    )


def _thm1_nu0() -> Fixture:
    instance = validate_instance(
        {
            "agents": ["1", "2", "3"],
            "objects": ["o1", "o2", "o3", "q1", "p1", "p2", "p3", "q2", "a1", "a2", "a3"],
            "endowments": {
                "1": ["o1", "o2", "o3", "q1"],
                "2": ["p1", "p2", "p3", "q2"],
                "3": ["a1", "a2", "a3"],
            },
        }
    )
    a_objs = _fs("a1", "a2", "a3")
    o_objs = _fs("o1", "o2", "o3")
    p_objs = _fs("p1", "p2", "p3")
    prefs = {
        "1": MarginalPreference("1", (a_objs, o_objs, _fs("q1"), p_objs | _fs("q2"))),
        "2": MarginalPreference("2", (a_objs, p_objs, _fs("q2"), o_objs | _fs("q1"))),
        "3": MarginalPreference("3", (o_objs | p_objs, a_objs, _fs("q1", "q2"))),
    }
    return Fixture(
        name="thm1-nu0",
        instance=instance,
        prefs=prefs,
        expected={"no_cir_is_efficient": True},
        notes="Endowments in the third class, non-endowments barred from the "
        "second: again no matching is both unambiguously IR and efficient.",
    )


_BUILDERS = {
    "example1": _example1,
    "thm4-base": _thm4_base,
    "thm4-p2": _thm4_p2,
    "thm4-p3": _thm4_p3,
    "thm4-p3x": _thm4_p3x,
    "core-unit-demand": _core_unit_demand,
    "no-pe-core": _no_pe_core,
    "core-tricho-unit": _core_tricho_unit,
    "thm1-nu1": _thm1_nu1,
    "thm1-nu0": _thm1_nu0,
}

FIXTURE_NAMES = tuple(sorted(_BUILDERS))


def load_fixture(name: str) -> Fixture:
    """Look up a fixture by name; KeyError lists the known names."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(
            f"unknown fixture {name!r}; known fixtures: {', '.join(FIXTURE_NAMES)}"
        ) from None
    return builder()
