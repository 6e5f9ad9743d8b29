import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perceng.agents import AgentModel, Correspondence, ExtrinsicWorld, preimage
from perceng.errors import PolicyUndefined, SpaceNotEnumerable
from perceng.filters import NdetIState, ProbIState
from perceng.relations import RelationSet
from perceng.simulation import Resolver, System, simulate
from perceng.spaces import Space, canonical_key, canonical_sorted


def line_agent(**kw):
    X = Space.integers(-5, 5, name="X")
    base = dict(name="bot", x_space=X, u_space=Space((-1, 0, 1)), y_space=X,
                xtf=lambda x, u: x + u, sensor=lambda x: x, policy=lambda s: 0)
    base.update(kw)
    return AgentModel(**base)


# -- spaces ------------------------------------------------------------------

def test_integer_space_membership_and_metric():
    S = Space.integers(-2, 2)
    assert list(S) == [-2, -1, 0, 1, 2]
    assert 3 not in S and "a" not in S
    assert S.distance(-2, 2) == 4


def test_space_rejects_empty_and_duplicates():
    with pytest.raises(ValueError):
        Space([])
    with pytest.raises(ValueError):
        Space([1, 1])
    with pytest.raises(ValueError):
        Space([1], contains=lambda v: True)


def test_membership_only_space_is_not_enumerable():
    S = Space(contains=lambda v: isinstance(v, int) and v > 0, name="pos")
    assert 5 in S and -1 not in S
    with pytest.raises(SpaceNotEnumerable):
        list(S)
    with pytest.raises(SpaceNotEnumerable):
        len(S)


def test_grid_space_coordinates_and_resolution():
    S = Space.grid([[0.0, 0.5, 1.0], [0.0, 1.0]])
    assert len(S) == 6
    assert S.coords.shape == (6, 2)
    assert (0.5, 1.0) in S
    assert S.resolution == 1.0
    assert S.distance((0.0, 0.0), (1.0, 1.0)) == pytest.approx(math.sqrt(2))


nested = st.recursive(
    st.one_of(st.integers(-5, 5), st.text(max_size=2), st.none()),
    lambda inner: st.one_of(st.tuples(inner, inner), st.frozensets(inner, max_size=3)),
    max_leaves=8,
)


@given(st.lists(nested, max_size=8))
@settings(max_examples=200)
def test_canonical_order_is_total_and_permutation_invariant(values):
    once = canonical_sorted(values)
    again = canonical_sorted(list(reversed(values)))
    assert [canonical_key(v) for v in once] == [canonical_key(v) for v in again]


# -- agents ------------------------------------------------------------------

def test_exactly_one_mode_per_mapping():
    with pytest.raises(ValueError):
        line_agent(xtf_set=lambda x, u: {x})
    with pytest.raises(ValueError):
        line_agent(sensor=None)


def test_prob_agent_needs_prior():
    with pytest.raises(ValueError):
        line_agent(i_space_kind="prob")


@pytest.mark.parametrize("y,expected", [(0, {0}), (5, {5}), (9, set())])
def test_preimage_of_identity_sensor(y, expected):
    assert line_agent().preimage(y) == frozenset(expected)


def test_preimage_of_set_valued_sensor():
    X = Space.integers(0, 9)
    H = lambda x: {x // 3}  # noqa: E731
    assert preimage(H, 1, X, set_valued=True) == frozenset({3, 4, 5})


def test_policy_errors_raise_policy_undefined():
    agent = line_agent(policy={NdetIState(frozenset({1})): -1})
    assert agent.act(NdetIState(frozenset({1}))) == -1
    with pytest.raises(PolicyUndefined):
        agent.act(NdetIState(frozenset({2})))
    with pytest.raises(PolicyUndefined):
        line_agent(policy=lambda s: 7).act(None)


def test_validate_reports_missing_successors():
    X = Space((0, 1))
    agent = AgentModel("a", X, Space((0,)), X, xtf_set=lambda x, u: set() if x else {1},
                       sensor=lambda x: x)
    assert agent.validate() == ["no successor for (1, 0)"]


def test_correspondence_alpha_graph():
    c = Correspondence(alpha=lambda w: w[0])
    assert c.functional
    assert c.relates(2, (2, "a")) and not c.relates(1, (2, "a"))
    assert c.check_alpha(Space([(0, 0), (1, 1)])) == []


# -- relations ---------------------------------------------------------------

def test_model_relation_by_istate_family():
    X = Space.integers(0, 3)
    rel = RelationSet(X, Correspondence(alpha=lambda w: w), epsilon=0.25)
    assert rel.model(NdetIState(frozenset({1, 2})), 2)
    assert not rel.plausible(NdetIState(frozenset()))
    belief = ProbIState({0: 0.7, 1: 0.2, 2: 0.1})
    assert rel.model(belief, 0) and not rel.model(belief, 1)
    assert sorted(rel.members(belief)) == [0]
    assert rel.reality(belief, 0) and not rel.reality(belief, 2)


def test_zero_epsilon_means_support():
    rel = RelationSet(Space.integers(0, 3), epsilon=0.0)
    belief = ProbIState({0: 1e-300, 1: 1.0 - 1e-300})
    assert rel.model(belief, 0)
    assert not rel.model(belief, 3)


def test_general_correspondence_relation():
    c = Correspondence(relation=lambda x, w: abs(x - w) <= 1)
    rel = RelationSet(Space.integers(0, 5), c)
    assert rel.reality(NdetIState(frozenset({2})), 3)
    assert not rel.reality(NdetIState(frozenset({2})), 4)


# -- simulation --------------------------------------------------------------

def test_simulate_records_annotations_per_stage():
    agent = line_agent(policy=lambda s: 1)
    ident = Correspondence(alpha=lambda w: w)
    world = ExtrinsicWorld(agent.x_space, utf=lambda w, us: min(w + us[0], 5),
                           sensors=(lambda w: w,), correspondences=(ident,))
    system = System(world, (agent,), (RelationSet(agent.x_space, ident),))
    trace = simulate(system, 0, 4)
    assert trace.omegas() == [0, 1, 2, 3]
    assert trace.actions(0) == [1, 1, 1]
    assert all(r.agents[0].plausible and not r.agents[0].illusion for r in trace)


def test_resolver_is_reproducible():
    a, b = Resolver(3), Resolver(3)
    opts = frozenset({(1, 2), (0, 5), (3, 1)})
    assert [a.choose(opts) for _ in range(20)] == [b.choose(opts) for _ in range(20)]
    pmf = {"x": 0.2, "y": 0.8}
    assert [a.sample(pmf) for _ in range(20)] == [b.sample(pmf) for _ in range(20)]
    with pytest.raises(ValueError):
        a.choose(frozenset())
