import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmcp.configuration import (Configuration, FINITE, HALF_LINE, NEG_INF,
                                POS_INF, cardinality, from_json_dict,
                                left_edge, right_edge, shift_to_right_edge,
                                to_json_dict)


def make(sites, lo=-64, hi=64, boundary=FINITE):
    return Configuration.from_sites(sites, lo=lo, hi=hi, left_boundary=boundary)


def test_right_edge_basic():
    assert right_edge(make([0])) == 0
    assert right_edge(make([])) is None
    assert right_edge(make([-5, -2, 3])) == 3


def test_left_edge_basic():
    assert left_edge(make([-5, -2, 3])) == -5
    assert left_edge(make([])) is None


def test_left_edge_half_line_sentinel():
    cfg = make([-64, -63, 0], boundary=HALF_LINE)
    assert left_edge(cfg) == NEG_INF
    # guard not infected: finite left edge is reported
    cfg2 = make([-10, 0], boundary=HALF_LINE)
    assert left_edge(cfg2) == -10


def test_cardinality():
    assert cardinality(make([-5, -2, 3])) == 3
    assert cardinality(make([])) == 0
    assert cardinality(make([-64, 0], boundary=HALF_LINE)) == POS_INF


def test_shift_identity_when_edge_at_zero():
    cfg = make([-2, 0])
    shifted = shift_to_right_edge(cfg)
    assert shifted.sites() == [-2, 0]


def test_shift_translates():
    cfg = make([1, 4])
    assert shift_to_right_edge(cfg).sites() == [-3, 0]


def test_shift_empty_is_none():
    assert shift_to_right_edge(make([])) is None


def test_mutation_keeps_caches():
    cfg = make([0, 5])
    cfg.infect(7)
    assert right_edge(cfg) == 7
    cfg.recover(7)
    assert right_edge(cfg) == 5
    cfg.recover(0)
    assert left_edge(cfg) == 5
    cfg.recover(5)
    assert right_edge(cfg) is None and cardinality(cfg) == 0


sites_strategy = st.lists(st.integers(min_value=-60, max_value=60), max_size=25)


@given(sites_strategy)
@settings(max_examples=100, deadline=None)
def test_cached_extremes_match_rescan(sites):
    cfg = make(sites)
    lo, hi = cfg.recompute_extremes()
    assert lo == cfg._left and hi == cfg._right


@given(sites_strategy)
@settings(max_examples=100, deadline=None)
def test_shift_idempotent_and_gap_preserving(sites):
    cfg = make(sites)
    shifted = shift_to_right_edge(cfg)
    if not sites:
        assert shifted is None
        return
    assert right_edge(shifted) == 0
    twice = shift_to_right_edge(shifted)
    assert twice.sites() == shifted.sites()
    a = sorted(set(sites))
    b = shifted.sites()
    assert len(a) == len(b)
    assert [y - x for x, y in zip(a, a[1:])] == [y - x for x, y in zip(b, b[1:])]


@given(sites_strategy)
@settings(max_examples=60, deadline=None)
def test_random_mutations_keep_caches(sites):
    cfg = make([])
    seen = set()
    for s in sites:
        if s in seen:
            cfg.recover(s)
            seen.discard(s)
        else:
            cfg.infect(s)
            seen.add(s)
        lo, hi = cfg.recompute_extremes()
        assert lo == cfg._left and hi == cfg._right
        assert cfg._count == len(seen)


def test_json_roundtrip():
    cfg = make([-3, 0, 9], boundary=HALF_LINE)
    d = to_json_dict(cfg)
    assert d["left_boundary"] == "half_line"
    assert d["infected"] == [-3, 0, 9]
    back = from_json_dict(json.loads(json.dumps(d)))
    assert back.sites() == cfg.sites()
    assert back.lo == cfg.lo and back.hi == cfg.hi


def test_window_bounds_enforced():
    cfg = make([0], lo=-4, hi=4)
    with pytest.raises(ValueError):
        cfg.infect(5)
