import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cascadeids.core import Dataset
from cascadeids.ingest import (
    FEATURE_NAMES,
    ConnLogFormatError,
    EncoderVocab,
    EncodingError,
    RobustScaler,
    encode,
    impute,
    ip_to_number,
    parse_conn_log,
    read_conn_log,
    read_dataset_csv,
    robust_apply,
    robust_fit,
    write_dataset_csv,
)

HEADER = (
    "#separator \\x09\n"
    "#fields\tts\tuid\tid.orig_h\tid.orig_p\tid.resp_h\tid.resp_p\tproto\tservice\tduration\torig_bytes"
    "\tresp_bytes\tconn_state\tlocal_orig\tlocal_resp\tmissed_bytes\thistory\torig_pkts\torig_ip_bytes"
    "\tresp_pkts\tresp_ip_bytes\ttunnel_parents\tlabel\tdetailed-label\n"
)
GOOD = "0.0\tC1\t10.0.0.1\t1234\t192.168.1.1\t80\ttcp\t-\t1.5\t10\t20\tSF\t-\t-\t0\tShAD\t3\t130\t2\t100\t(empty)\tBenign\t-\n"
BAD = "1.0\tC2\t10.0.0.1\tnotaport\t192.168.1.1\t80\ttcp\thttp\t1.5\t10\t20\tSF\t-\t-\t0\tShAD\t3\t130\t2\t100\t(empty)\tMalicious\tC&C\n"
MAL = "3600.0\tC3\t10.0.0.2\t4444\t8.8.8.8\t23\ttcp\ttelnet\t-\t-\t-\tS0\t-\t-\t0\tS\t-\t-\t0\t0\t(empty)\tMalicious\tPartOfAHorizontalPortScan\n"


def parse(text):
    return parse_conn_log(io.StringIO(text))


def test_parse_missing_and_labels():
    res = parse(HEADER + GOOD + MAL)
    assert len(res) == 2 and res.skipped == 0
    first, second = res.records
    assert first.service is None
    assert first.label == 0
    assert second.label == 1
    assert second.duration is None and second.orig_pkts is None
    assert second.detailed_label == "PartOfAHorizontalPortScan"


def test_parse_skips_malformed_line():
    res = parse(HEADER + GOOD + BAD + MAL)
    assert len(res.records) == 2
    assert res.skipped == 1
    assert "line 4" in res.errors[0]


def test_parse_requires_fields_header():
    with pytest.raises(ConnLogFormatError, match="line 1"):
        parse(GOOD)


def test_parse_iot23_space_separated_tail():
    text = HEADER.replace("\ttunnel_parents\tlabel\tdetailed-label", "\ttunnel_parents   label   detailed-label")
    line = GOOD.replace("\t(empty)\tBenign\t-", "\t(empty)   Benign   -")
    res = parse(text + line)
    assert len(res) == 1 and res.records[0].label == 0


def test_label_mapping_substring():
    res = parse(HEADER + GOOD.replace("Benign", "benign-ish"))
    assert res.records[0].label == 0


def test_bundled_fixture_parses(conn_log_path):
    res = read_conn_log(conn_log_path)
    assert len(res) == 200 and res.skipped == 0


def test_impute():
    rec = parse(HEADER + MAL).records[0]
    out = impute(rec)
    assert out.orig_pkts == 0 and out.duration == 0.0 and out.orig_bytes == 0
    full = impute(parse(HEADER + GOOD).records[0])
    assert full.service == "unknown"
    assert impute(full) is full


def test_ip_values():
    assert ip_to_number("0.0.0.0") == 0
    assert ip_to_number("192.168.1.1") == 192 * 2**24 + 168 * 2**16 + 1 * 2**8 + 1 == 3232235777
    assert ip_to_number("::1") == 1.0


def test_encode_layout_and_time():
    records = parse(HEADER + GOOD + MAL).records
    vocab = EncoderVocab.fit(records)
    ds = encode(records, vocab)
    assert ds.feature_names == FEATURE_NAMES
    row = dict(zip(FEATURE_NAMES, ds.features[0]))
    assert row["response_host_binary"] == 3232235777
    assert (row["year"], row["month"], row["day"], row["hour"]) == (1970, 1, 1, 0)
    assert dict(zip(FEATURE_NAMES, ds.features[1]))["hour"] == 1
    assert np.all(np.isfinite(ds.features))


def test_vocab_codes_lexicographic_unknown_zero():
    records = parse(HEADER + GOOD + MAL).records
    vocab = EncoderVocab.fit(records)
    assert vocab.code("service", None) == 0
    assert vocab.code("service", "unknown") == 0
    assert vocab.code("service", "telnet") == 1
    assert vocab.code("conn_state", "S0") == 1 and vocab.code("conn_state", "SF") == 2
    assert vocab.code("protocol", "never-seen") == 0


def test_vocab_frozen():
    records = parse(HEADER + GOOD + MAL).records
    vocab = EncoderVocab.fit(records)
    before = encode(records, vocab).features
    for v in ("x", "y", "icmp"):
        vocab.code("protocol", v)
    assert np.array_equal(before, encode(records, vocab).features)


def test_encode_invalid_ip():
    records = parse(HEADER + GOOD.replace("10.0.0.1", "10.0.0.999")).records
    with pytest.raises(EncodingError, match="row 0.*10.0.0.999"):
        encode(records, EncoderVocab.fit(records))


def col(values):
    v = np.asarray(values, float).reshape(-1, 1)
    return Dataset(v, np.zeros(len(v), int), ("a",))


def test_robust_scaler_examples():
    sc = robust_fit(col([1, 2, 3, 4, 5]))
    # Q1=2, median 3, Q3=4 under linear interpolation
    assert sc.median[0] == 3 and sc.iqr[0] == 2
    assert robust_apply(sc, col([4])).features[0, 0] == 0.5
    assert robust_apply(sc, col([3])).features[0, 0] == 0.0
    flat = robust_fit(col([7, 7, 7]))
    assert np.all(robust_apply(flat, col([7, 7, 7])).features == 0)


def test_robust_apply_before_fit():
    with pytest.raises(RuntimeError):
        robust_apply(None, col([1]))


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=40))
def test_scaling_preserves_order(values):
    sc = RobustScaler.fit(col(values))
    out = sc.apply(col(values)).features[:, 0]
    order = np.argsort(values, kind="stable")
    assert np.all(np.diff(out[order]) >= 0)


def test_dataset_csv_roundtrip(tmp_path, conn_log_path):
    records = read_conn_log(conn_log_path).records
    ds = encode(records, EncoderVocab.fit(records))
    write_dataset_csv(ds, tmp_path / "d.csv")
    back = read_dataset_csv(tmp_path / "d.csv")
    assert back.feature_names == ds.feature_names
    assert np.array_equal(back.features, ds.features) and np.array_equal(back.labels, ds.labels)
    assert (tmp_path / "d.csv").read_text().splitlines()[0].endswith(",label")
