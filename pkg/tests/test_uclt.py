import pytest
from hypothesis import given, strategies as st

from gcrs.spectrum import FrequencyBand, bands_overlap
from gcrs.uclt import (AvailabilityWindow, MalformedRecord, NetworkRecord, PermissionMode,
                       PermissionSet, Uclt)

OPEN = PermissionSet()


def rec(nid, idle=(), occupied=(), perms=OPEN, start=0, until=1000):
    return NetworkRecord(nid, 1, tuple(FrequencyBand(*b) for b in occupied),
                         tuple(FrequencyBand(*b) for b in idle), perms, AvailabilityWindow(start, until))


def brute_lookup(records, requester, needed, min_duration, now):
    """Direct reading of the filter rules, sorted afterwards."""
    hits = []
    for r in records:
        if r.network_id == requester:
            continue
        if r.permissions.mode == PermissionMode.ALLOW_LIST and requester not in r.permissions.allowed:
            continue
        if not (r.availability.start <= now and r.availability.until - now >= min_duration):
            continue
        for b in r.idle_bands:
            if b.high_hz - b.low_hz >= needed:
                hits.append((r.network_id, b))
    return sorted(hits, key=lambda h: (h[0], h[1].low_hz))


def test_upsert_into_empty():
    assert len(Uclt().upsert_record(rec(1))) == 1


def test_upsert_replaces():
    t = Uclt().upsert_record(rec(1, idle=[(0, 10)]))
    t.upsert_record(rec(1, idle=[(20, 30)]))
    assert len(t) == 1
    assert t.get(1).idle_bands == (FrequencyBand(20, 30),)


def test_upsert_rejects_overlap():
    with pytest.raises(MalformedRecord):
        Uclt().upsert_record(rec(1, occupied=[(100, 200)], idle=[(150, 250)]))


def test_lookup_empty():
    assert Uclt().lookup_idle_bands(2, 50, 10, 0) == []


def test_lookup_single_open_record():
    t = Uclt().upsert_record(rec(1, idle=[(100, 200)]))
    assert t.lookup_idle_bands(2, 50, 10, 0) == [(1, FrequencyBand(100, 200))]


def test_lookup_allow_list_excludes():
    t = Uclt().upsert_record(rec(1, idle=[(100, 200)], perms=PermissionSet(PermissionMode.ALLOW_LIST, frozenset({3}))))
    assert t.lookup_idle_bands(2, 50, 10, 0) == []
    assert t.lookup_idle_bands(3, 50, 10, 0) == [(1, FrequencyBand(100, 200))]


def test_empty_allow_list_admits_nobody():
    assert not PermissionSet(PermissionMode.ALLOW_LIST).admits(1)


def test_lookup_skips_self():
    t = Uclt().upsert_record(rec(1, idle=[(100, 200)]))
    assert t.lookup_idle_bands(1, 50, 10, 0) == []


@pytest.mark.parametrize("needed,dur", [(0, 5), (5, 0), (-1, 5)])
def test_lookup_rejects_nonpositive(needed, dur):
    with pytest.raises(ValueError):
        Uclt().lookup_idle_bands(1, needed, dur, 0)


def test_purge_boundary():
    assert len(Uclt().upsert_record(rec(1, until=10)).purge_expired(10)) == 0
    assert len(Uclt().upsert_record(rec(1, until=10)).purge_expired(9)) == 1


def test_purge_mixed():
    t = Uclt()
    for nid, until in enumerate([5, 50, 8, 100, 20]):
        t.upsert_record(rec(nid, until=until))
    t.purge_expired(10)
    assert sorted(t.records) == [1, 3, 4]


@st.composite
def tables(draw):
    records = []
    for nid in draw(st.lists(st.integers(0, 6), unique=True, max_size=5)):
        cuts = sorted(draw(st.lists(st.integers(0, 60), unique=True, min_size=2, max_size=8)))
        bands = [(lo * 10, hi * 10) for lo, hi in zip(cuts, cuts[1:])]
        flags = draw(st.lists(st.booleans(), min_size=len(bands), max_size=len(bands)))
        idle = [b for b, f in zip(bands, flags) if f]
        occ = [b for b, f in zip(bands, flags) if not f]
        if draw(st.booleans()):
            perms = OPEN
        else:
            perms = PermissionSet(PermissionMode.ALLOW_LIST, frozenset(draw(st.sets(st.integers(0, 6)))))
        start = draw(st.integers(0, 50))
        until = start + draw(st.integers(1, 100))
        records.append(rec(nid, idle, occ, perms, start, until))
    return records


@given(tables(), st.integers(0, 6), st.integers(1, 200), st.integers(1, 60), st.integers(0, 120))
def test_lookup_matches_brute_force(records, requester, needed, min_dur, now):
    t = Uclt()
    for r in records:
        t.upsert_record(r)
    got = t.lookup_idle_bands(requester, needed, min_dur, now)
    assert got == brute_lookup(records, requester, needed, min_dur, now)
    assert got == t.lookup_idle_bands(requester, needed, min_dur, now)
    for lessor, band in got:
        assert not any(bands_overlap(band, o) for o in t.get(lessor).occupied_bands)
    t.purge_expired(now)
    assert all(r.availability.until > now for r in t.records.values())
