import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastonet.errors import ParseError
from elastonet.io import dumps_network, dumps_response, loads_network, loads_response, natural_key
from elastonet.model import ModalResponse, StaticResponse
from elastonet.random_networks import modal_from_pieces, random_network, random_static_target
from elastonet.reduce import extract_modal

from conftest import series_chain


def test_natural_sort():
    assert sorted(["n10", "n2", "a", "n1"], key=natural_key) == ["a", "n1", "n2", "n10"]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_network_round_trip_is_byte_identical(seed, d):
    rng = np.random.default_rng(seed)
    net = random_network(rng, d, 3, 4)
    text = dumps_network(net)
    back = loads_network(text)
    assert dumps_network(back) == text
    np.testing.assert_array_equal(back.positions[np.argsort(back.labels)], net.positions[np.argsort(net.labels)])


def test_network_order_does_not_matter():
    net = series_chain()
    shuffled = type(net)(2, net.nodes[::-1], net.springs[::-1])
    assert dumps_network(net) == dumps_network(shuffled)


def test_floats_keep_full_precision():
    net = random_network(np.random.default_rng(0), 2, 2, 1)
    back = loads_network(dumps_network(net))
    for s in net.springs:
        match = [t for t in back.springs if t.key == s.key]
        assert match[0].stiffness == s.stiffness


def test_static_response_round_trip(rng):
    resp = random_static_target(rng, 3)
    text = dumps_response(resp)
    back = loads_response(text)
    assert isinstance(back, StaticResponse)
    np.testing.assert_array_equal(back.matrix, resp.matrix)
    assert dumps_response(back) == text


def test_modal_response_round_trip(rng):
    resp = modal_from_pieces(rng, 3, 2)
    text = dumps_response(resp)
    back = loads_response(text)
    assert isinstance(back, ModalResponse)
    assert dumps_response(back) == text
    np.testing.assert_array_equal(back.A, resp.A)
    assert back.resonances.tolist() == resp.resonances.tolist()


def test_modal_without_terms(rng):
    resp = extract_modal(series_chain())
    assert dumps_response(loads_response(dumps_response(resp))) == dumps_response(resp)


def _net_doc():
    return json.loads(dumps_network(series_chain()))


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda d: d["nodes"][1].pop("mass"), "nodes[1]"),
        (lambda d: d["nodes"][0].update(position=[0, 0, 0]), "nodes[0]"),
        (lambda d: d["springs"][1].update(labels=["a", "zz"]), "springs[1]"),
        (lambda d: d["springs"][0].update(stiffness="stiff"), "springs[0]"),
        (lambda d: d["springs"][0].update(stiffness=-1), "springs[0]"),
        (lambda d: d.update(version=7), "version"),
        (lambda d: d["nodes"][2].update(kind="boundary"), "nodes[2]"),
    ],
)
def test_malformed_network_names_record(mutate, fragment):
    doc = _net_doc()
    mutate(doc)
    with pytest.raises(ParseError, match=fragment.replace("[", r"\[").replace("]", r"\]")):
        loads_network(json.dumps(doc))


def test_not_json():
    with pytest.raises(ParseError):
        loads_network("{nodes: ")


def test_response_needs_exactly_one_kind(rng):
    doc = json.loads(dumps_response(random_static_target(rng, 2)))
    doc["modal"] = {"A": [], "masses": [], "terms": []}
    with pytest.raises(ParseError, match="exactly one"):
        loads_response(json.dumps(doc))


def test_response_matrix_must_be_full(rng):
    doc = json.loads(dumps_response(random_static_target(rng, 2)))
    doc["static"]["matrix"][2] = doc["static"]["matrix"][2][:2]
    with pytest.raises(ParseError, match=r"static.matrix\[2\]"):
        loads_response(json.dumps(doc))
