import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GROUPS, elements, endomorphisms
from lcachar.characterize import quartic_counterexample
from lcachar.dist import atomic, char_fn, exp_poly_charfn
from lcachar.errors import InputError, PointOutsideGroup, UnsupportedSubgroupForm
from lcachar.groups import GroupDescriptor, Subgroup
from lcachar.polyfd import PolynomialFn
from lcachar.serialize import (
    charfn_from_json,
    charfn_json,
    distribution_from_json,
    distribution_json,
    dumps,
    element_from_json,
    element_json,
    group_from_json,
    group_json,
    homomorphism_from_json,
    homomorphism_json,
    parse_json,
    round12,
    subgroup_from_json,
    subgroup_json,
    to_jsonable,
)

Z = GroupDescriptor(1)
T = GroupDescriptor(0, 1)
Z6 = GroupDescriptor(0, 0, (6,))


def through_text(data):
    return json.loads(json.dumps(data))


@pytest.mark.parametrize("g", GROUPS, ids=str)
@settings(max_examples=20, deadline=None)
@given(data=st.data())
def test_round_trips(g, data):
    assert group_from_json(through_text(group_json(g))) == g
    x = data.draw(elements(g))
    assert element_from_json(g, through_text(element_json(x))) == x
    h = data.draw(endomorphisms(g))
    h2 = homomorphism_from_json(g, through_text(homomorphism_json(h)))
    assert h2(x) == h(x)


def test_subgroup_round_trip():
    for K in (Subgroup.generated(Z6, [Z6.coerce(2)]), Subgroup.multiples(Z, 0, 3),
              Subgroup.torus_cyclic(T, 0, 4)):
        K2 = subgroup_from_json(K.owner, through_text(subgroup_json(K)))
        assert K2.equals(K)
    assert subgroup_from_json(Z6, "whole").equals(Subgroup.whole(Z6))
    with pytest.raises(UnsupportedSubgroupForm):
        subgroup_from_json(Z6, {"tag": "sylow"})


def test_distribution_and_charfn_round_trip():
    mu = atomic([0, 2, 5], ["1/2", "1/3", "1/6"], Z6)
    assert distribution_from_json(Z6, through_text(distribution_json(mu))) == mu
    f = exp_poly_charfn(T.coerce([Fraction(1, 3)]), PolynomialFn(Z, {(2,): Fraction(1, 7)}))
    g = charfn_from_json(Z, through_text(charfn_json(f)))
    for n in range(-4, 5):
        assert g(Z.coerce(n)) == f(Z.coerce(n))
    h = charfn_from_json(Z6, through_text(charfn_json(char_fn(mu))))
    assert all(abs(h(y) - char_fn(mu)(y)) < 1e-15 for y in Z6.elements())


def test_errors_carry_paths():
    with pytest.raises(InputError, match="line 1 column"):
        parse_json('{"z_rank": 1,', "--group")
    with pytest.raises(InputError, match="unknown field"):
        group_from_json({"z_rank": 1, "rank": 2})
    with pytest.raises(InputError, match=r"dist.atoms\[1\]"):
        distribution_from_json(Z6, {"atoms": [{"point": 0, "weight": "1/2"}, 3]}, "dist")
    with pytest.raises(PointOutsideGroup):
        element_from_json(Z6, {"z": [1], "f": [0]})


def test_number_formatting():
    assert round12(0.1 + 0.2) == 0.3
    assert round12(-0.0) == 0.0 and str(round12(-0.0)) == "0.0"
    assert to_jsonable(Fraction(-3, 4)) == "-3/4"
    assert to_jsonable(1 + 1e-20j) == 1.0
    assert to_jsonable(2j) == {"re": 0.0, "im": 2.0}


def test_certificate_dump_is_deterministic():
    one = dumps(quartic_counterexample(1, Fraction(1, 100))[1])
    two = dumps(quartic_counterexample(1, Fraction(1, 100))[1])
    assert one == two
    data = json.loads(one)
    assert set(data) == {"claim", "pass", "verdict", "witnesses", "fitted_q", "residuals",
                         "details", "sub_certificates"}
    assert data["fitted_q"] == {"(2,2)": "-0.12"}
