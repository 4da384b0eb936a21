import json

import numpy as np
import pytest

from crncycles.crn import Crn, CrnError, Reaction, species_list
from crncycles.formats import (
    crn_from_json_dict,
    crn_from_text,
    crn_to_json_dict,
    crn_to_text,
    system_from_json_dict,
    system_to_json_dict,
    trajectory_from_csv,
    trajectory_to_csv,
    write_atomic,
)
from crncycles.systems import bimolecular_crn, seventh_order_crn, two_species_system, default_centers


def test_text_round_trip_simple():
    crn = Crn(
        species_list(["X", "Y"]),
        [Reaction((1, 0), (0, 1), 2.5), Reaction((0, 0), (1, 0), 1 / 3)],
    )
    text = crn_to_text(crn)
    assert "X -> Y @ 2.5" in text
    assert "0 -> X @" in text
    assert crn_from_text(text) == crn


def test_text_round_trip_generated_networks():
    for crn in (seventh_order_crn(2, 1.0), bimolecular_crn(1, 1.0, 0.01)):
        assert crn_from_text(crn_to_text(crn)) == crn


def test_text_species_header_pins_order():
    text = "species: B A\nA -> B @ 1\n"
    crn = crn_from_text(text)
    assert crn.species_names == ("B", "A")


def test_text_without_header_uses_first_appearance():
    crn = crn_from_text("A + 2B -> 3C @ 0.5\n")
    assert crn.species_names == ("A", "B", "C")
    assert crn.reactions[0].reactant == (1, 2, 0)
    assert crn.reactions[0].product == (0, 0, 3)


def test_text_comma_species_names():
    # names like Z1,2 survive because counts bind to the leading digits only
    crn = bimolecular_crn(1, 1.0, 0.01)
    assert "Z1,2" in crn.species_names
    assert crn_from_text(crn_to_text(crn)) == crn


def test_text_malformed_lines():
    with pytest.raises(CrnError):
        crn_from_text("A -> B\n")  # no rate
    with pytest.raises(CrnError):
        crn_from_text("A B @ 1\n")  # no arrow
    with pytest.raises(CrnError):
        crn_from_text("species: A\nA -> C @ 1\n")  # undeclared species


def test_json_round_trip():
    crn = seventh_order_crn(1, 0.5)
    data = json.loads(json.dumps(crn_to_json_dict(crn)))
    assert crn_from_json_dict(data) == crn


def test_system_json_round_trip():
    sys_ = two_species_system(default_centers(2))
    data = json.loads(json.dumps(system_to_json_dict(sys_)))
    back = system_from_json_dict(data)
    assert back == sys_
    assert back.names == sys_.names


def test_trajectory_csv_round_trip():
    times = np.array([0.0, 0.01, 0.02])
    states = np.array([[1.0, 2.0], [1 / 3, -0.125], [9.87654321e-5, 1e12]])
    text = trajectory_to_csv(times, states, ["X", "Y"])
    assert text.splitlines()[0] == "t,X,Y"
    t2, s2, names = trajectory_from_csv(text)
    assert names == ["X", "Y"]
    assert np.array_equal(t2, times)
    assert np.array_equal(s2, states)


def test_write_atomic(tmp_path):
    target = tmp_path / "out.txt"
    write_atomic(target, "payload")
    assert target.read_text() == "payload"
    leftovers = [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]
    assert not leftovers
