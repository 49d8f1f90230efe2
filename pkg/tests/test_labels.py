"""Scan-label grammar, pairing categories and the study enumeration."""
import pytest
from hypothesis import given, strategies as st

from wirecut import (PairCategory, ScanLabel, all_labels, pair_category,
                     parse_label, render_label)
from wirecut.errors import IdenticalScan, MalformedLabel

label_st = st.builds(
    ScanLabel,
    tool=st.integers(1, 5),
    edge=st.sampled_from("ABCD"),
    location=st.sampled_from("IMO"),
    repetition=st.integers(1, 2),
)


def test_parse_basic():
    lbl = parse_label("T1AW-LI-R1")
    assert lbl == ScanLabel(1, "A", "I", 1)
    assert lbl.render() == "T1AW-LI-R1"


@given(label_st)
def test_render_parse_roundtrip(lbl):
    assert parse_label(render_label(lbl)) == lbl


@pytest.mark.parametrize("bad", [
    "", "T1AW-LI", "T0AW-LI-R1", "T6AW-LI-R1", "T1EW-LI-R1",
    "T1AW-LX-R1", "T1AW-LI-R0", "T1AW-LI-R3", "T1A-LI-R1",
    "t1aw-li-r1", "T1AWLI-R1", "T1AW-LI-R1x",
])
def test_malformed_labels_raise(bad):
    with pytest.raises(MalformedLabel):
        parse_label(bad)


@given(st.text(max_size=20))
def test_parse_never_crashes(s):
    try:
        lbl = parse_label(s)
    except MalformedLabel:
        return
    assert lbl.render() == s.strip()


def test_all_labels_enumeration():
    labels = all_labels()
    assert len(labels) == 120
    assert len(set(labels)) == 120
    assert labels == sorted(labels)


def test_pair_categories():
    a = ScanLabel(1, "A", "I", 1)
    assert pair_category(a, ScanLabel(1, "A", "I", 2)) is PairCategory.SAME_SOURCE
    assert pair_category(a, ScanLabel(2, "A", "I", 1)) is PairCategory.DIFFERENT_TOOL
    assert (pair_category(a, ScanLabel(1, "B", "I", 1))
            is PairCategory.SAME_TOOL_DIFFERENT_SITE)
    assert (pair_category(a, ScanLabel(1, "A", "M", 1))
            is PairCategory.SAME_TOOL_DIFFERENT_SITE)


def test_self_pair_raises():
    a = ScanLabel(3, "C", "M", 2)
    with pytest.raises(IdenticalScan):
        pair_category(a, a)


@given(label_st, label_st)
def test_pair_category_symmetric(a, b):
    if a == b:
        return
    assert pair_category(a, b) is pair_category(b, a)


def test_pair_counts_match_study_design():
    labels = all_labels()
    cats = [pair_category(a, b)
            for i, a in enumerate(labels) for b in labels[i + 1:]]
    assert len(cats) == 120 * 119 // 2    # 7140 unordered pairs
    assert cats.count(PairCategory.SAME_SOURCE) == 60
