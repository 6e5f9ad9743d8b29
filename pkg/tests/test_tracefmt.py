import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perceng.filters import HistoryIState, NdetIState, ProbIState
from perceng.scenarios import instantiate_scenario
from perceng.scenarios.grids import FORWARD, GridMapIState, gridmap_update
from perceng.scenarios.trilateration import CircleIState
from perceng.simulation import Resolver, simulate
from perceng.tracefmt import (
    decode_istate,
    decode_value,
    dumps_trace,
    encode_value,
    istate_digest,
    read_trace,
)

values = st.recursive(
    st.one_of(st.integers(-9, 9), st.text(max_size=3), st.booleans(), st.none()),
    lambda inner: st.one_of(st.lists(inner, max_size=3).map(tuple),
                            st.frozensets(st.integers(-5, 5) | st.text(max_size=2), max_size=4)),
    max_leaves=10,
)


@given(values)
@settings(max_examples=200)
def test_value_encoding_round_trips(v):
    assert decode_value(encode_value(v)) == v


@pytest.mark.parametrize("state", [
    NdetIState(frozenset({(1, 2), (0, 5)})),
    ProbIState({"a": 0.25, "b": 0.75}),
    ProbIState.implausible(),
    HistoryIState((1, 0), (3, 4, 4)),
    gridmap_update(GridMapIState.fresh(), FORWARD, 2),
    GridMapIState((((0, 0), "white"), ((1, 0), "black")), (0, 0, 1), True),
    CircleIState(((0.0, 0.0), (4.0, 0.0)), (2.0, "#")),
    7,
])
def test_istate_digest_round_trips(state):
    assert decode_istate(istate_digest(state)) == state


def test_masses_are_rounded_to_twelve_digits():
    digest = istate_digest(ProbIState({0: 1 / 3, 1: 2 / 3}))
    assert digest["prob"][0][1] == 0.333333333333


def test_booleans_are_not_istates():
    with pytest.raises(TypeError):
        istate_digest(True)


@pytest.mark.parametrize("name,params", [
    ("intbot", {"x1": 4}),
    ("linebot", {"mode": "prob"}),
    ("gridbot_illusion", {}),
    ("trilateration", {"n": 3}),
])
def test_traces_survive_serialization(name, params):
    sc = instantiate_scenario(name, params)
    trace = simulate(sc.system, sc.omega1, min(sc.stages, 12), Resolver(0))
    text = dumps_trace(trace)
    back = read_trace(io.StringIO(text))
    assert dumps_trace(back) == text
    assert back.omegas() == trace.omegas()


def test_out_of_sequence_stage_is_rejected():
    sc = instantiate_scenario("intbot")
    lines = dumps_trace(simulate(sc.system, sc.omega1, 3)).splitlines()
    with pytest.raises(ValueError):
        read_trace([lines[0], lines[2]])
