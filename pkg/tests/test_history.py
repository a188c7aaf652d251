import math
import random

import pytest
from fastapi.testclient import TestClient

from wattflow.history import QueryError, SeriesStore
from wattflow.history.api import create_app
from wattflow.msglog import Broker
from wattflow.records import ActivePowerRecord, AggregatedActivePowerRecord, encode_record
from wattflow.registry import ConfigWatcher, Registry

from util import assert_close, pilot_tree


@pytest.fixture
def store(tmp_path):
    s = SeriesStore(tmp_path / "series")
    yield s
    s.close()


def rec(ident, ts, value):
    return ActivePowerRecord(ident, ts, value)


class TestAppend:
    def test_append_twice_is_one_row(self, store):
        store.append(rec("s", 5, 1.0))
        store.append(rec("s", 5, 1.0))
        assert len(store.range("s", 0, 10)) == 1

    def test_reinsert_overwrites(self, store):
        store.append(rec("s", 5, 1.0))
        store.append(rec("s", 5, 2.0))
        rows = store.range("s", 0, 10)
        assert [(r.timestamp, r.valueInW) for r in rows] == [(5, 2.0)]

    def test_out_of_order_appends_query_sorted(self, store):
        for ts in (30, 10, 20):
            store.append(rec("s", ts, float(ts)))
        assert [r.timestamp for r in store.range("s", 0, 100)] == [10, 20, 30]

    def test_hundred_thousand_appends_match_reference_map(self, store):
        rng = random.Random(17)
        reference: dict[tuple[str, int], float] = {}
        batch = []
        for _ in range(100_000):
            ident = f"s{rng.randrange(20)}"
            ts = rng.randrange(5000)
            value = rng.uniform(0, 100)
            reference[(ident, ts)] = value
            batch.append((ident, ts, rec(ident, ts, value)))
        store.append_encoded_many([(i, t, encode_record(r)) for i, t, r in batch])
        for ident in {i for i, _ in reference}:
            rows = store.range(ident, 0, 5000)
            got = {(ident, r.timestamp): r.valueInW for r in rows}
            expected = {k: v for k, v in reference.items() if k[0] == ident}
            assert got == expected

    def test_slashed_identifiers_get_their_own_series(self, store):
        store.append(rec("pdu-1/outlet-3", 1, 5.0))
        store.append(rec("pdu-1/outlet-4", 1, 7.0))
        assert store.latest("pdu-1/outlet-3").valueInW == 5.0
        assert store.latest("pdu-1/outlet-4").valueInW == 7.0

    def test_very_long_identifier(self, store):
        ident = "x" * 128
        store.append(rec(ident, 1, 5.0))
        assert store.latest(ident).valueInW == 5.0

    def test_aggregated_records_stored_too(self, store):
        agg = AggregatedActivePowerRecord("g", 9, 2, 20.0, 10.0, 5.0, 15.0)
        store.append(agg)
        assert store.latest("g") == agg

    def test_cross_instance_visibility(self, tmp_path, store):
        store.append(rec("s", 1, 5.0))
        other = SeriesStore(tmp_path / "series")
        assert other.latest("s").valueInW == 5.0
        store.append(rec("s", 2, 6.0))
        assert other.latest("s").valueInW == 6.0
        other.close()


class TestRange:
    def test_empty_store(self, store):
        assert store.range("nobody", 0, 10) == []

    def test_half_open_empty_interval(self, store):
        store.append(rec("s", 5, 1.0))
        assert store.range("s", 5, 5) == []

    def test_half_open_excludes_end(self, store):
        store.append(rec("s", 5, 1.0))
        store.append(rec("s", 6, 2.0))
        assert [r.timestamp for r in store.range("s", 5, 6)] == [5]

    def test_from_after_to_is_error(self, store):
        with pytest.raises(QueryError):
            store.range("s", 10, 5)

    def test_random_data_matches_filter_oracle(self, store):
        rng = random.Random(23)
        byts = {}
        for _ in range(2000):
            ts = rng.randrange(1000)
            v = rng.uniform(0, 10)
            byts[ts] = v
            store.append(rec("s", ts, v))
        for _ in range(50):
            a = rng.randrange(1000)
            b = a + rng.randrange(200)
            expected = sorted(ts for ts in byts if a <= ts < b)
            assert [r.timestamp for r in store.range("s", a, b)] == expected


class TestStats:
    def test_pair(self, store):
        store.append(rec("s", 1, 5.0))
        store.append(rec("s", 2, 15.0))
        s = store.stats("s", 0, 10)
        assert (s.count, s.averageInW, s.minInW, s.maxInW) == (2, 10.0, 5.0, 15.0)

    def test_empty_interval_undefined(self, store):
        s = store.stats("s", 0, 10)
        assert s.count == 0
        assert s.sumInW == 0.0
        assert s.averageInW is None and s.minInW is None and s.maxInW is None

    def test_random_matches_fold_oracle(self, store):
        rng = random.Random(29)
        rows = []
        for ts in rng.sample(range(10_000), 500):
            v = rng.uniform(-50, 150)
            rows.append((ts, v))
            store.append(rec("s", ts, v))
        for _ in range(30):
            a = rng.randrange(10_000)
            b = a + rng.randrange(3000)
            vals = [v for ts, v in rows if a <= ts < b]
            s = store.stats("s", a, b)
            assert s.count == len(vals)
            if vals:
                assert_close(s.sumInW, sum(vals))
                assert_close(s.averageInW, sum(vals) / len(vals))
                assert s.minInW == min(vals)
                assert s.maxInW == max(vals)


class TestTrend:
    def test_flat_trend_is_one(self, store):
        for ts in range(0, 10):
            store.append(rec("s", ts, 10.0))
        assert store.trend("s", 5, 10) == 1.0

    def test_doubling_trend(self, store):
        for ts in range(0, 5):
            store.append(rec("s", ts, 10.0))
        for ts in range(5, 10):
            store.append(rec("s", ts, 20.0))
        assert store.trend("s", 5, 10) == 2.0

    def test_empty_window_is_undefined(self, store):
        store.append(rec("s", 1, 10.0))
        assert store.trend("s", 5, 100) is None

    def test_invalid_window(self, store):
        with pytest.raises(QueryError):
            store.trend("s", 0, 100)

    def test_random_matches_two_fold_oracle(self, store):
        rng = random.Random(31)
        rows = []
        for ts in rng.sample(range(2000), 800):
            v = rng.uniform(1, 100)
            rows.append((ts, v))
            store.append(rec("s", ts, v))
        for _ in range(30):
            now = rng.randrange(100, 2000)
            w = rng.randrange(1, 300)
            recent = [v for ts, v in rows if now - w <= ts < now]
            prev = [v for ts, v in rows if now - 2 * w <= ts < now - w]
            got = store.trend("s", w, now)
            if not recent or not prev:
                assert got is None
            else:
                assert_close(got, (sum(recent) / len(recent)) / (sum(prev) / len(prev)))


class TestHistogram:
    def test_uniform_ten_values_ten_bins(self, store):
        for ts, v in enumerate(range(10)):
            store.append(rec("s", ts, float(v)))
        buckets = store.histogram("s", 0, 100, 10)
        assert len(buckets) == 10
        assert [c for _, _, c in buckets] == [1] * 10
        assert buckets[0][0] == 0.0
        assert buckets[-1][1] == 9.0

    def test_single_value_one_bucket(self, store):
        for ts in range(5):
            store.append(rec("s", ts, 42.0))
        assert store.histogram("s", 0, 10, 7) == [(42.0, 42.0, 5)]

    def test_empty_range_empty_list(self, store):
        assert store.histogram("s", 0, 10, 5) == []

    def test_bad_bins(self, store):
        with pytest.raises(QueryError):
            store.histogram("s", 0, 10, 0)

    def test_partition_property_and_oracle(self, store):
        rng = random.Random(37)
        values = []
        for ts in range(500):
            v = rng.uniform(-20, 80)
            values.append(v)
            store.append(rec("s", ts, v))
        for bins in (1, 2, 7, 16):
            buckets = store.histogram("s", 0, 500, bins)
            assert len(buckets) == bins
            assert sum(c for _, _, c in buckets) == len(values)
            lo, hi = min(values), max(values)
            assert buckets[0][0] == lo
            assert math.isclose(buckets[-1][1], hi)
            for (l1, u1, _), (l2, u2, _) in zip(buckets, buckets[1:]):
                assert math.isclose(u1, l2)  # adjacent, disjoint cover
            # independent bucketing oracle
            width = (hi - lo) / bins
            counts = [0] * bins
            for v in values:
                counts[min(int((v - lo) / width), bins - 1)] += 1
            assert [c for _, _, c in buckets] == counts

    def test_max_value_lands_in_last_bucket(self, store):
        for ts, v in enumerate([1.0, 2.0, 3.0]):
            store.append(rec("s", ts, v))
        buckets = store.histogram("s", 0, 10, 2)
        assert buckets[-1][2] >= 1
        assert buckets[-1][1] == 3.0


class TestLatest:
    def test_latest_none(self, store):
        assert store.latest("s") is None

    def test_latest_overall_and_at(self, store):
        for ts in (10, 30, 20):
            store.append(rec("s", ts, float(ts)))
        assert store.latest("s").timestamp == 30
        assert store.latest("s", at_ms=25).timestamp == 20
        assert store.latest("s", at_ms=9) is None


class TestHttpApi:
    @pytest.fixture
    def client(self, tmp_path, store):
        broker = Broker(tmp_path / "log")
        registry = Registry(tmp_path / "hierarchy.json", broker)
        registry.put_hierarchy(pilot_tree())
        watcher = ConfigWatcher(broker)
        app = create_app(store, watcher)
        yield TestClient(app), registry
        broker.close()

    def test_range_endpoint(self, client, store):
        c, _ = client
        store.append(rec("server-0", 5, 1.5))
        r = c.get("/api/power/server-0", params={"from": 0, "to": 10})
        assert r.status_code == 200
        assert r.json() == [
            {"type": "active-power", "identifier": "server-0", "timestamp": 5, "valueInW": 1.5}
        ]

    def test_slashed_identifier_routes(self, client, store):
        c, _ = client
        store.append(rec("pdu-1/outlet-3", 5, 2.0))
        r = c.get("/api/power/pdu-1/outlet-3/stats", params={"from": 0, "to": 10})
        assert r.status_code == 200
        assert r.json()["count"] == 1
        r = c.get("/api/power/pdu-1/outlet-3", params={"from": 0, "to": 10})
        assert len(r.json()) == 1

    def test_stats_trend_histogram_endpoints(self, client, store):
        c, _ = client
        for ts in range(10):
            store.append(rec("server-1", ts, 10.0 if ts < 5 else 20.0))
        assert c.get("/api/power/server-1/stats", params={"from": 0, "to": 10}).json()["count"] == 10
        trend = c.get("/api/power/server-1/trend", params={"windowMs": 5, "now": 10}).json()
        assert trend["ratio"] == 2.0
        hist = c.get(
            "/api/power/server-1/histogram", params={"from": 0, "to": 10, "bins": 2}
        ).json()
        assert [b["count"] for b in hist] == [5, 5]

    def test_latest_endpoint(self, client, store):
        c, _ = client
        assert c.get("/api/power/server-2/latest").json() is None
        store.append(rec("server-2", 7, 3.0))
        assert c.get("/api/power/server-2/latest").json()["timestamp"] == 7

    def test_invalid_range_is_422(self, client):
        c, _ = client
        r = c.get("/api/power/server-0", params={"from": 10, "to": 0})
        assert r.status_code == 422

    def test_distribution_shares(self, client, store):
        c, _ = client
        # direct children of root are the three pdu groups: their series are
        # aggregated records, contributing their sums
        store.append(AggregatedActivePowerRecord("pdu-1", 5, 2, 10.0, 5.0, 2.0, 8.0))
        store.append(AggregatedActivePowerRecord("pdu-2", 5, 3, 30.0, 10.0, 5.0, 15.0))
        r = c.get("/api/power/root/distribution", params={"at": 10})
        assert r.status_code == 200
        shares = {e["childId"]: e["share"] for e in r.json()}
        assert shares == {"pdu-1": 0.25, "pdu-2": 0.75}
        assert_close(sum(shares.values()), 1.0)

    def test_distribution_single_child(self, client, store):
        c, _ = client
        store.append(AggregatedActivePowerRecord("pdu-3", 5, 1, 9.0, 9.0, 9.0, 9.0))
        r = c.get("/api/power/root/distribution", params={"at": 4})
        assert r.json() == []  # nothing at or before t=4
        r = c.get("/api/power/root/distribution", params={"at": 10})
        assert [e["share"] for e in r.json()] == [1.0]

    def test_distribution_mixed_children_leaf_and_group(self, client, store):
        c, _ = client
        # pdu-1's children are machine sensors: raw records contribute valueInW
        store.append(rec("server-0", 5, 10.0))
        store.append(rec("server-1", 6, 30.0))
        r = c.get("/api/power/pdu-1/distribution", params={"at": 10})
        shares = {e["childId"]: e["share"] for e in r.json()}
        assert shares == {"server-0": 0.25, "server-1": 0.75}

    def test_distribution_errors(self, client):
        c, _ = client
        assert c.get("/api/power/ghost/distribution").status_code == 404
        assert c.get("/api/power/server-0/distribution").status_code == 422

    def test_distribution_follows_reconfiguration(self, client, store):
        c, registry = client
        store.append(rec("server-0", 5, 10.0))
        store.append(rec("server-1", 6, 30.0))
        doc = registry.get_hierarchy().to_doc()
        groups = {g["id"]: g for g in doc["root"]["children"]}
        moved = next(x for x in groups["pdu-1"]["children"] if x["id"] == "server-0")
        groups["pdu-1"]["children"].remove(moved)
        groups["pdu-2"]["children"].append(moved)
        registry.put_hierarchy(doc)
        r = c.get("/api/power/pdu-1/distribution", params={"at": 10})
        shares = {e["childId"]: e["share"] for e in r.json()}
        assert shares == {"server-1": 1.0}
