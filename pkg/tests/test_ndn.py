import random
from collections import Counter, deque

import pytest
from hypothesis import given
from hypothesis import strategies as st

from leo_ndn_sim.grid import Direction, GridCoord, GridDims
from leo_ndn_sim.ndn import (
    SECOND,
    ContentStore,
    Data,
    Fib,
    Forwarder,
    GridStrategy,
    Interest,
    SatelliteForwarder,
    link_delegations,
    make_link_object,
    name_from_uri,
    sat_names,
)

PROD = name_from_uri("/prod/data/1")
PGW = ("sat", "8C", "JH", "58", "96", "XV")
SHELL = GridDims(72, 22)
UP = 9
GROUND = 4


def router():
    fw = Forwarder("r")
    fw.fib.insert(("prod",), UP)
    return fw


def satellite(coord, dims=SHELL, attached=True):
    sat = SatelliteForwarder(f"sat-{coord[0]}-{coord[1]}", coord, GridStrategy(("sat",), dims))
    if attached:
        sat.ground_faces[PGW] = GROUND
    return sat


def test_names_and_packets():
    assert name_from_uri("/a/b/") == ("a", "b")
    with pytest.raises(ValueError):
        name_from_uri("/")
    with pytest.raises(ValueError):
        Interest(PROD, lifetime=0)
    with pytest.raises(ValueError):
        Data(PROD, freshness=-1)


def test_aggregation_and_fan_out():
    fw = router()
    first = Interest(PROD, nonce=1)
    assert fw.on_interest(1, first, 0) == [(UP, first)]
    assert fw.on_interest(2, Interest(PROD, nonce=2), 10) == []
    out = fw.on_data(UP, Data(PROD, b"x", SECOND), 20)
    assert [f for f, _ in out] == [1, 2]
    assert PROD not in fw.pit


def test_cache_hit_and_staleness():
    fw = router()
    fw.on_interest(1, Interest(PROD, nonce=1), 0)
    data = Data(PROD, b"x", 100)
    fw.on_data(UP, data, 0)
    assert fw.on_interest(2, Interest(PROD, nonce=2), 50) == [(2, data)]
    assert not fw.pit
    again = Interest(PROD, nonce=3)
    assert fw.on_interest(2, again, 100) == [(UP, again)]


def test_unsolicited_data_dropped():
    fw = router()
    assert fw.on_data(UP, Data(PROD), 0) == []
    assert fw.counters["drop-unsolicited"] == 1
    assert PROD not in fw.cs


def test_duplicate_nonce_dropped():
    fw = router()
    fw.on_interest(1, Interest(PROD, nonce=7), 0)
    assert fw.on_interest(2, Interest(PROD, nonce=7), 1) == []
    assert fw.counters["drop-dup-nonce"] == 1


def test_no_route():
    fw = Forwarder("r")
    assert fw.on_interest(1, Interest(("other",), nonce=1), 0) == []
    assert fw.counters["drop-no-route"] == 1


def test_two_node_loop_is_suppressed():
    a, b = Forwarder("a"), Forwarder("b")
    # a's face 1 leads to b, b's face 2 leads back to a.
    a.fib.insert(("prod",), 1)
    b.fib.insert(("prod",), 2)
    (_, pkt), = a.on_interest(0, Interest(PROD, nonce=5), 0)
    (_, pkt), = b.on_interest(1, pkt, 1)
    assert a.on_interest(1, pkt, 2) == []
    assert a.counters["drop-dup-nonce"] == 1


def test_retransmission_from_same_face_is_forwarded():
    fw = router()
    fw.on_interest(1, Interest(PROD, nonce=1), 0)
    retx = Interest(PROD, nonce=2)
    assert fw.on_interest(1, retx, 5) == [(UP, retx)]


def test_pit_sweep():
    fw = router()
    fw.on_interest(1, Interest(PROD, nonce=1), 0)
    assert fw.pit_sweep(SECOND - 1) == []
    swept = fw.pit_sweep(SECOND)
    assert [e.name for e in swept] == [PROD]
    assert fw.pit_sweep(SECOND) == []


def test_data_at_expiry_instant_still_satisfies():
    fw = router()
    fw.on_interest(1, Interest(PROD, nonce=1), 0)
    assert [f for f, _ in fw.on_data(UP, Data(PROD), SECOND)] == [1]
    assert fw.pit_sweep(SECOND) == []


def test_fib_longest_prefix():
    fib = Fib()
    fib.insert(("a",), 1)
    fib.insert(("a", "b"), 2)
    assert fib.lookup(("a", "b", "c")).face == 2
    assert fib.lookup(("a", "x")).face == 1
    assert fib.lookup(("z",)) is None
    fib.remove(("a", "b"))
    assert fib.lookup(("a", "b", "c")).face == 1


def test_lru_eviction():
    cs = ContentStore(capacity=2)
    for k in range(3):
        cs.insert(Data((str(k),), freshness=10), 0)
    assert ("0",) not in cs and len(cs) == 2
    cs.lookup(("1",), 1)
    cs.insert(Data(("3",), freshness=10), 1)
    assert ("1",) in cs and ("2",) not in cs


@given(st.integers(0, 10**12), st.integers(1, 10**11), st.integers(0, 2 * 10**11))
def test_cs_never_serves_stale(t0, fresh, dt):
    cs = ContentStore()
    cs.insert(make_link_object(("sat", "pgw", "access"), [("sat", "1", "1")], fresh), t0)
    hit = cs.lookup(("sat", "pgw", "access"), t0 + dt)
    assert (hit is not None) == (dt < fresh)


def test_link_object():
    d = make_link_object(("x",), [("sat", "1", "2"), ("sat", "1", "3")], 5)
    assert link_delegations(d) == (("sat", "1", "2"), ("sat", "1", "3"))
    with pytest.raises(ValueError):
        make_link_object(("x",), [], 5)
    with pytest.raises(ValueError):
        make_link_object(("x",), [("a",)], 0)


def test_grid_strategy_splits_reference_instance():
    sat = satellite(GridCoord(10, 10), attached=False)
    dels = sat_names(("sat",), [GridCoord(12, 3), GridCoord(14, 15), GridCoord(10, 17)])
    out = sat.on_interest(GROUND, Interest(PROD, (*dels, PGW), 1), 0)
    faces = sorted(f for f, _ in out)
    assert faces == [Direction.FORE, Direction.STARBOARD]
    hints = {f: i.hint for f, i in out}
    assert hints[Direction.STARBOARD] == (("sat", "12", "3"), PGW)
    assert all(i.nonce == 1 for _, i in out)


def test_self_delegation_goes_to_ground():
    sat = satellite(GridCoord(10, 10))
    own = ("sat", "10", "10")
    out = sat.on_interest(Direction.AFT, Interest(PROD, (own, PGW), 1), 0)
    assert [f for f, _ in out] == [GROUND]


def test_self_delegation_not_attached_drops():
    sat = satellite(GridCoord(10, 10), attached=False)
    out = sat.on_interest(Direction.AFT, Interest(PROD, (("sat", "10", "10"), PGW), 1), 0)
    assert out == []
    assert sat.counters["drop-not-attached"] == 1


def test_coarse_gateway_name_matches_ground_face():
    sat = satellite(GridCoord(1, 1))
    out = sat.on_interest(Direction.AFT, Interest(PROD, (("sat", "1", "1"), ("sat", "8C", "JH")), 1), 0)
    assert [f for f, _ in out] == [GROUND]


def test_hint_without_satellites_uses_fib():
    sat = satellite(GridCoord(1, 1))
    sat.fib.insert(("prod",), 2)
    out = sat.on_interest(GROUND, Interest(PROD, (("prod",),), 1), 0)
    assert [f for f, _ in out] == [2]


def test_rerequest_appends_face_at_old_satellite():
    # The old access satellite forwarded the C-Gw Interest upstream; after
    # the C-Gw moves, a re-request hinted at this satellite arrives on an ISL.
    oas = satellite(GridCoord(10, 10), attached=False)
    oas.ground_faces[("sat", "cgw")] = GROUND
    target = sat_names(("sat",), [GridCoord(12, 10)])
    oas.on_interest(GROUND, Interest(PROD, (*target, PGW), 1), 0)
    assert oas.on_interest(Direction.PORT, Interest(PROD, (("sat", "10", "10"),), 2), 5) == []
    assert oas.counters["pit-append"] == 1
    out = oas.on_data(Direction.STARBOARD, Data(PROD, b"x", SECOND), 10)
    assert {f for f, _ in out} == {GROUND, Direction.PORT}


def _flood(dims, src, dels, nonce=1):
    """Run an Interest through a grid of satellites; returns per-node receptions and ground deliveries."""
    nodes = {c: satellite(c, dims) for c in dims.coords()}
    for c, n in nodes.items():
        if c not in dels:
            n.ground_faces.clear()
    hint = (*sat_names(("sat",), dels), PGW)
    queue = deque([(src, GROUND, Interest(PROD, hint, nonce))])
    seen = Counter()
    ground = Counter()
    while queue:
        c, face, interest = queue.popleft()
        seen[c, interest.hint] += 1
        for out_face, pkt in nodes[c].on_interest(face, interest, 0):
            if out_face == GROUND:
                ground[c] += 1
                continue
            d = Direction(out_face)
            nxt = GridCoord((c[0] + (d == 3) - (d == 2)) % dims[0], (c[1] + (d == 0) - (d == 1)) % dims[1])
            queue.append((nxt, d.opposite, pkt))
    return seen, ground


def test_random_floods_are_loop_free():
    rng = random.Random(11)
    for _ in range(60):
        dims = GridDims(rng.randint(3, 8), rng.randint(3, 8))
        cells = list(dims.coords())
        src = rng.choice(cells)
        dels = rng.sample(cells, rng.randint(1, 5))
        seen, ground = _flood(dims, src, dels)
        assert max(seen.values()) == 1
        assert ground == Counter({d: 1 for d in dels})
