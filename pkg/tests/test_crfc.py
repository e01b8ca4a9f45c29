import itertools

import pytest
from hypothesis import given, strategies as st

from gcrs.crfc import Coordinator, InvariantViolation, Lease
from gcrs.spectrum import FrequencyBand, bands_overlap
from gcrs.uclt import AvailabilityWindow, NetworkRecord, PermissionSet
from gcrs.wire import AccessMode, ResponseStatus, RevokeReason, SpectrumQuery


def record(nid, idle=(), occupied=(), until=1000):
    return NetworkRecord(nid, nid, tuple(FrequencyBand(*b) for b in occupied),
                         tuple(FrequencyBand(*b) for b in idle), PermissionSet(), AvailabilityWindow(0, until))


def coordinator(*records, networks=(1, 2, 3, 4)):
    c = Coordinator(networks=set(networks))
    for r in records:
        c.uclt.upsert_record(r)
    return c


def query(requester, width=50, min_dur=10, dur=100, mode=AccessMode.DYNAMIC):
    return SpectrumQuery(requester, width, min_dur, dur, mode)


def put_lease(c, lease_id, lessor, lessee, band, expires=500):
    c.leases[lease_id] = Lease(lease_id, lessor, lessee, FrequencyBand(*band), 0, expires, AccessMode.DYNAMIC)
    c.next_lease_id = max(c.next_lease_id, lease_id + 1)


class TestHandleQuery:
    def test_empty_table(self):
        r = coordinator().handle_query(query(1), 0)
        assert r.response.status == ResponseStatus.NO_SPECTRUM
        assert r.lease is None

    def test_unknown_requester(self):
        r = coordinator(networks=(1,)).handle_query(query(9), 0)
        assert r.response.status == ResponseStatus.PROTOCOL_ERROR

    def test_single_candidate(self):
        c = coordinator(record(1, idle=[(100, 200)]))
        r = c.handle_query(query(2, dur=100, mode=AccessMode.OPPORTUNISTIC), 5)
        assert r.response.status == ResponseStatus.GRANTED
        assert r.lease.band == FrequencyBand(100, 200)
        assert (r.lease.lessor, r.lease.lessee) == (1, 2)
        assert r.lease.mode == AccessMode.OPPORTUNISTIC
        assert r.lease.expires_at == 105

    def test_expiry_clipped_by_availability(self):
        c = coordinator(record(1, idle=[(100, 200)], until=40))
        assert c.handle_query(query(2, dur=100), 5).lease.expires_at == 40

    def test_back_to_back(self):
        c = coordinator(record(1, idle=[(100, 200)]))
        first = c.handle_query(query(2), 0)
        second = c.handle_query(query(2), 0)
        assert first.response.status == ResponseStatus.GRANTED
        assert second.response.status == ResponseStatus.NO_SPECTRUM
        c.check_invariants()

    def test_deterministic(self):
        recs = [record(1, idle=[(0, 100), (300, 400)]), record(3, idle=[(0, 100)])]
        a, b = coordinator(*recs), coordinator(*recs)
        for _ in range(4):
            ra, rb = a.handle_query(query(2), 3), b.handle_query(query(2), 3)
            assert ra.response == rb.response
        assert a.leases == b.leases

    @given(st.lists(st.tuples(st.integers(1, 3), st.integers(0, 9)), max_size=6),
           st.lists(st.tuples(st.integers(1, 3), st.integers(0, 9)), max_size=4),
           st.integers(1, 4))
    def test_first_fit_matches_conflict_matrix(self, idle_slots, leased_slots, requester):
        slots = {}
        for nid, k in idle_slots:
            slots.setdefault(nid, set()).add(k)
        recs = [record(nid, idle=[(k * 100, k * 100 + 100) for k in sorted(ks)]) for nid, ks in slots.items()]
        c = coordinator(*recs)
        lid = 1
        for nid, k in leased_slots:
            band = (k * 100 + 20, k * 100 + 80)
            if any(x.lessor == nid and bands_overlap(x.band, FrequencyBand(*band)) for x in c.leases.values()):
                continue
            lessee = 4 if nid != 4 else 1
            put_lease(c, lid, nid, lessee, band)
            lid += 1
        candidates = c.uclt.lookup_idle_bands(requester, 50, 10, 0)
        matrix = [[x.lessor == lessor and bands_overlap(x.band, band) for x in c.leases.values()]
                  for lessor, band in candidates]
        free = [cand for cand, row in zip(candidates, matrix) if not any(row)]
        before = dict(c.leases)
        r = c.handle_query(query(requester), 0)
        if free:
            assert (r.lease.lessor, r.lease.band) == free[0]
        else:
            assert r.response.status == ResponseStatus.NO_SPECTRUM
            assert c.leases == before
        c.check_invariants()


class TestRevoke:
    def test_nothing_to_revoke(self):
        assert coordinator().revoke_on_primary_return(1, FrequencyBand(0, 10), 0) == []

    def test_partial_overlap_revokes(self):
        c = coordinator()
        put_lease(c, 1, 1, 2, (100, 200))
        out = c.revoke_on_primary_return(1, FrequencyBand(150, 160), 7)
        assert len(out) == 1
        assert out[0].lessee == 2 and out[0].reason == RevokeReason.PRIMARY_RETURN
        assert not c.leases

    def test_only_overlapping_lease(self):
        c = coordinator()
        put_lease(c, 1, 1, 2, (100, 200))
        put_lease(c, 2, 1, 3, (300, 400))
        out = c.revoke_on_primary_return(1, FrequencyBand(300, 400), 7)
        assert [r.lease_id for r in out] == [2]
        assert list(c.leases) == [1]

    def test_other_lessor_untouched(self):
        c = coordinator()
        put_lease(c, 1, 3, 2, (100, 200))
        assert c.revoke_on_primary_return(1, FrequencyBand(100, 200), 7) == []

    def test_opportunistic_also_revoked(self):
        c = coordinator(record(1, idle=[(100, 200)]))
        c.handle_query(query(2, mode=AccessMode.OPPORTUNISTIC), 0)
        assert len(c.revoke_on_primary_return(1, FrequencyBand(100, 200), 1)) == 1

    def test_holdoff_blocks_regrant_until_revoke_lands(self):
        c = coordinator(record(1, idle=[(100, 200)]))
        c.revoke_delay = lambda lessee: 4
        c.handle_query(query(2), 0)
        c.revoke_on_primary_return(1, FrequencyBand(100, 200), 10)
        assert c.handle_query(query(3), 13).response.status == ResponseStatus.NO_SPECTRUM
        assert c.handle_query(query(3), 14).response.status == ResponseStatus.GRANTED

    def test_update_listing_band_occupied_revokes(self):
        c = coordinator(record(1, idle=[(100, 200)]))
        c.handle_query(query(2), 0)
        out = c.apply_update(record(1, occupied=[(100, 200)]), 3)
        assert len(out) == 1 and not c.leases


class TestExpire:
    def test_boundary(self):
        c = coordinator()
        put_lease(c, 1, 1, 2, (0, 10), expires=100)
        assert c.expire_leases(99) == []
        out = c.expire_leases(100)
        assert len(out) == 1 and out[0].reason == RevokeReason.EXPIRED

    def test_idempotent(self):
        c = coordinator()
        put_lease(c, 1, 1, 2, (0, 10), expires=100)
        assert len(c.expire_leases(100)) == 1
        assert c.expire_leases(100) == []


def test_invariant_detects_overlap():
    c = coordinator()
    put_lease(c, 1, 1, 2, (0, 100))
    put_lease(c, 2, 1, 3, (50, 150))
    with pytest.raises(InvariantViolation):
        c.check_invariants()


@pytest.mark.parametrize("granted,expires,lessor,lessee", [(5, 5, 1, 2), (5, 4, 1, 2), (0, 9, 1, 1)])
def test_lease_rejects_bad_fields(granted, expires, lessor, lessee):
    with pytest.raises(ValueError):
        Lease(1, lessor, lessee, FrequencyBand(0, 1), granted, expires, AccessMode.DYNAMIC)


@given(st.lists(st.tuples(st.sampled_from(["q", "r", "e"]), st.integers(1, 4), st.integers(0, 4)), max_size=40))
def test_exclusivity_under_random_operations(ops):
    recs = [record(n, idle=[(k * 100, k * 100 + 100) for k in range(3)]) for n in (1, 2, 3)]
    c = coordinator(*recs)
    now = 0
    issued = 0
    for op, nid, k in ops:
        now += 1
        if op == "q":
            r = c.handle_query(query(nid, dur=5), now)
            issued += r.lease is not None
        elif op == "r":
            revokes = c.revoke_on_primary_return(nid, FrequencyBand(k * 100, k * 100 + 1), now)
            assert all(rv.lessor == nid for rv in revokes)
        else:
            c.expire_leases(now)
        c.check_invariants()
        pairs = itertools.combinations(c.active_leases(), 2)
        assert not any(a.lessor == b.lessor and bands_overlap(a.band, b.band) for a, b in pairs)
