import pytest

from gcrs.trace import (Trace, conflict_ticks, double_use, first_divergence, lessee_transmissions,
                        parse_trace, primary_intervals, reclaim_overlap, union_length)


def tx(trace, tick, kind, lessee, lessor, band, lease_id):
    trace.add(tick, kind, lessee, lessor, {"band": list(band), "lease_id": lease_id})


def occ(trace, tick, net, band, state):
    trace.add(tick, "occupancy", net, "", {"band": list(band), "state": state})


def test_union_length():
    assert union_length([]) == 0
    assert union_length([(0, 5), (3, 8), (10, 12)]) == 10
    assert union_length([(0, 5), (5, 7)]) == 7


def test_transmissions_close_at_end():
    t = Trace({})
    tx(t, 4, "tx-start", "A", "B", (0, 10), 1)
    [s] = lessee_transmissions(t, 20)
    assert (s.start, s.stop) == (4, 20)


def test_double_use_detected():
    t = Trace({})
    tx(t, 0, "tx-start", "A", "L", (0, 100), 1)
    tx(t, 5, "tx-start", "C", "L", (50, 150), 2)
    tx(t, 8, "tx-stop", "A", "L", (0, 100), 1)
    conflicts = double_use(t, 20)
    assert [(c.parties, c.start, c.stop) for c in conflicts] == [(("A", "C"), 5, 8)]
    assert conflict_ticks(conflicts) == 3


def test_no_double_use_on_disjoint_or_sequential():
    t = Trace({})
    tx(t, 0, "tx-start", "A", "L", (0, 100), 1)
    tx(t, 0, "tx-start", "C", "L", (100, 200), 2)
    tx(t, 0, "tx-start", "D", "M", (0, 100), 3)
    tx(t, 5, "tx-stop", "A", "L", (0, 100), 1)
    tx(t, 5, "tx-start", "E", "L", (0, 100), 4)
    assert double_use(t, 10) == []


def test_primary_and_reclaim():
    t = Trace({})
    occ(t, 0, "L", (0, 100), "idle")
    tx(t, 2, "tx-start", "A", "L", (0, 100), 1)
    occ(t, 6, "L", (0, 100), "occupied")
    tx(t, 9, "tx-stop", "A", "L", (0, 100), 1)
    assert primary_intervals(t, 12) == {("L", (0, 100)): [(6, 12)]}
    [c] = reclaim_overlap(t, 12)
    assert (c.start, c.stop) == (6, 9)
    assert double_use(t, 12) == []


def test_leased_out_state_is_not_primary():
    t = Trace({})
    occ(t, 0, "L", (0, 100), "occupied")
    occ(t, 3, "L", (0, 100), "idle")
    occ(t, 4, "L", (0, 100), "leased-out")
    assert primary_intervals(t, 10)[("L", (0, 100))] == [(0, 3)]


def test_serialization_round_trip():
    t = Trace({"format": "gcrs-trace/1", "seed": 1})
    occ(t, 0, "L", (0, 100), "idle")
    back = parse_trace(t.dumps())
    assert back.header == t.header and back.records == t.records
    first = t.lines()[1]
    assert first.startswith('{"tick":0,"seq":0,"kind":"occupancy","src":"L","dst":"","payload":')


def test_parse_rejects_headerless():
    with pytest.raises(ValueError):
        parse_trace('{"tick":0,"seq":0,"kind":"send"}\n')
    with pytest.raises(ValueError):
        parse_trace("")


def test_first_divergence():
    assert first_divergence(["a", "b"], ["a", "b"]) is None
    assert first_divergence(["a", "b"], ["a", "c"]) == (2, "b", "c")
    assert first_divergence(["a"], ["a", "x"]) == (2, None, "x")
