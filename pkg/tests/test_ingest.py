import numpy as np
import pytest
from datetime import date
from hypothesis import given, settings, strategies as st

from titant.ingest import (
    LabelRecord, ParseError, SyntheticConfig, TransactionRecord, WindowSpec,
    as_frame, date_to_epoch_day, generate_synthetic, generate_synthetic_frame,
    parse_labels, parse_records, serialize_labels, serialize_records,
    slice_windows, N_BASIC_FEATURES, SECONDS_PER_DAY,
)


def make_record(txn_id="t1", ts=1_000_000, src="a", dst="b", amount=10.0, feats=None):
    if feats is None:
        feats = np.arange(N_BASIC_FEATURES, dtype=np.float64)
    return TransactionRecord(txn_id, ts, src, dst, amount, np.asarray(feats, float))


class TestParse:
    def test_empty_stream(self):
        assert parse_records("") == []

    def test_three_lines_round_trip(self):
        records = [make_record(f"t{i}", 100 + i, f"u{i}", f"v{i}", 1.5 * i)
                   for i in range(3)]
        text = serialize_records(records)
        back = parse_records(text)
        assert [r.txn_id for r in back] == ["t0", "t1", "t2"]
        assert back == records

    def test_wrong_feature_arity_names_line(self):
        line = "t1,100,a,b,5.0," + ",".join(["1.0"] * 51)
        with pytest.raises(ParseError, match="line 1.*52"):
            parse_records(line)

    def test_bad_timestamp_names_field(self):
        line = "t1,notatime,a,b,5.0," + ",".join(["1.0"] * 52)
        with pytest.raises(ParseError, match="timestamp"):
            parse_records(line)

    def test_bad_feature_names_position(self):
        feats = ["1.0"] * 52
        feats[7] = "oops"
        line = "t1,100,a,b,5.0," + ",".join(feats)
        with pytest.raises(ParseError, match="f8"):
            parse_records(line)

    def test_duplicate_txn_id_rejected(self):
        ok = "t1,100,a,b,5.0," + ",".join(["1.0"] * 52)
        with pytest.raises(ParseError, match="duplicate"):
            parse_records(ok + "\n" + ok)

    def test_blank_lines_skipped(self):
        text = serialize_records([make_record()]) + "\n\n"
        assert len(parse_records(text)) == 1

    @given(st.lists(st.tuples(
        st.integers(0, 2 ** 40),                       # timestamp
        st.floats(0, 1e12, allow_nan=False),           # amount
        st.lists(st.floats(-1e15, 1e15, allow_nan=False),
                 min_size=N_BASIC_FEATURES, max_size=N_BASIC_FEATURES),
    ), max_size=8))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_is_identity(self, rows):
        records = [
            TransactionRecord(f"t{i}", ts, f"src{i}", f"dst{i}", amount,
                              np.array(feats))
            for i, (ts, amount, feats) in enumerate(rows)
        ]
        assert parse_records(serialize_records(records)) == records

    def test_label_round_trip(self):
        labels = [LabelRecord("t1", True, 500), LabelRecord("t2", False, 900)]
        assert parse_labels(serialize_labels(labels)) == labels

    def test_record_requires_52_features(self):
        with pytest.raises(ValueError, match="52"):
            make_record(feats=np.zeros(10))


class TestWindows:
    def test_default_window_calendar(self):
        # Defaults around a fixed test date: the network window ends 15 days
        # before it and the train window covers the 14 days in between.
        spec = WindowSpec(test_date=date(2017, 4, 10))
        (net_lo, net_hi), (tr_lo, tr_hi), (te_lo, te_hi) = spec.day_ranges()
        assert net_hi == date_to_epoch_day(date(2017, 3, 26))
        assert tr_lo == date_to_epoch_day(date(2017, 3, 27))
        assert tr_hi == date_to_epoch_day(date(2017, 4, 9))
        assert te_lo == te_hi == date_to_epoch_day(date(2017, 4, 10))
        assert net_hi - net_lo + 1 == 90
        assert tr_hi - tr_lo + 1 == 14

    def _records_for_days(self, first_day, n_days, per_day=2):
        records = []
        for d in range(n_days):
            for k in range(per_day):
                ts = (first_day + d) * SECONDS_PER_DAY + 60 * k
                records.append(make_record(f"t{d}_{k}", ts, f"u{k}", f"v{k}"))
        return records

    def test_partition_sizes_sum(self):
        first = date_to_epoch_day(date(2017, 1, 1))
        records = self._records_for_days(first, 105)
        spec = WindowSpec(test_date=date(2017, 4, 15))
        network, train, test = slice_windows(records, [], spec)
        assert len(network) == 90 * 2
        assert len(train) == 14 * 2
        assert len(test) == 1 * 2
        assert len(network) + len(train) + len(test) == len(records)
        ids = set(network.txn_ids) | set(train.txn_ids) | set(test.txn_ids)
        assert len(ids) == len(records)  # no record lands in two windows

    def test_out_of_range_record_discarded(self):
        first = date_to_epoch_day(date(2017, 1, 1))
        records = self._records_for_days(first, 105)
        early = make_record("early", (first - 30) * SECONDS_PER_DAY)
        network, train, test = slice_windows(records + [early], [], WindowSpec(date(2017, 4, 15)))
        for frame in (network, train, test):
            assert "early" not in set(frame.txn_ids)

    def test_label_join_defaults_to_not_fraud(self):
        first = date_to_epoch_day(date(2017, 1, 1))
        records = self._records_for_days(first, 105)
        labels = [LabelRecord(test_id := records[-1].txn_id, True,
                              records[-1].timestamp + 77)]
        _, train, test = slice_windows(records, labels, WindowSpec(date(2017, 4, 15)))
        assert test.y.sum() == 1
        assert train.y.sum() == 0

    def test_empty_train_window_raises(self):
        records = [make_record("t0", date_to_epoch_day(date(2017, 4, 15)) * SECONDS_PER_DAY)]
        with pytest.raises(ValueError, match="train"):
            slice_windows(records, [], WindowSpec(date(2017, 4, 15)))

    def test_empty_test_window_raises(self):
        ts = date_to_epoch_day(date(2017, 4, 1)) * SECONDS_PER_DAY
        with pytest.raises(ValueError, match="test"):
            slice_windows([make_record("t0", ts)], [], WindowSpec(date(2017, 4, 15)))


SMALL = SyntheticConfig(n_users=400, n_days=40, txns_per_day=120,
                        fraudster_fraction=0.12, fraud_base_rate=0.01,
                        n_communities=20, seed=99)


class TestSynthetic:
    def test_deterministic(self):
        r1, l1 = generate_synthetic(SMALL)
        r2, l2 = generate_synthetic(SMALL)
        assert r1 == r2
        assert l1 == l2
        assert serialize_records(r1) == serialize_records(r2)

    def test_no_fraudsters_no_labels(self):
        cfg = SyntheticConfig(n_users=200, n_days=10, txns_per_day=50,
                              fraudster_fraction=0.0, seed=3)
        _, labels = generate_synthetic_frame(cfg)
        assert labels == []

    def test_label_rate_near_target(self):
        frame, labels = generate_synthetic_frame(SMALL)
        rate = len(labels) / len(frame)
        assert 0.004 < rate < 0.016

    def test_report_time_after_transaction(self):
        frame, labels = generate_synthetic_frame(SMALL)
        ts_by_id = dict(zip(frame.txn_ids, frame.timestamps))
        assert all(l.report_time >= ts_by_id[l.txn_id] for l in labels)

    def test_repeat_fraction_matches_probability(self):
        # Monte-Carlo oracle: among accounts receiving any fraud transfer,
        # the share receiving two or more tracks repeat_fraud_prob.
        cfg = SyntheticConfig(n_users=30_000, n_days=120, txns_per_day=2500,
                              fraudster_fraction=0.2, repeat_fraud_prob=0.7,
                              fraud_base_rate=0.04, seed=11)
        frame, labels = generate_synthetic_frame(cfg)
        assert len(labels) >= 10_000
        fraud_ids = set(l.txn_id for l in labels)
        mask = np.array([t in fraud_ids for t in frame.txn_ids])
        counts = {}
        for collector in frame.transferees[mask]:
            counts[collector] = counts.get(collector, 0) + 1
        repeat = sum(1 for c in counts.values() if c >= 2) / len(counts)
        assert 0.65 <= repeat <= 0.75

    def test_frame_record_round_trip(self):
        frame, _ = generate_synthetic_frame(SMALL)
        records = frame.records()
        back = as_frame(records)
        assert np.array_equal(back.timestamps, frame.timestamps)
        assert np.array_equal(back.features, frame.features)
        assert list(back.txn_ids) == list(frame.txn_ids)
