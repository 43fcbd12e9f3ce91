import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rulestrata.errors import EmptyDatabase, EmptyInput, SchemaViolation, UnknownItem
from rulestrata.model import (
    TransactionDatabase,
    build_dictionary,
    decode,
    encode_record,
    item_frequencies,
    support_count,
)


@st.composite
def databases(draw, max_vars=5, max_cats=4, max_rows=40):
    n_vars = draw(st.integers(1, max_vars))
    arity = [draw(st.integers(1, max_cats)) for _ in range(n_vars)]
    n = draw(st.integers(1, max_rows))
    rows = []
    for i in range(n):
        rows.append((f"r{i}", {f"v{j}": f"c{draw(st.integers(0, arity[j] - 1))}"
                               for j in range(n_vars)}))
    return TransactionDatabase.from_records(rows, [f"v{j}" for j in range(n_vars)])


def test_singleton_dictionary():
    d = build_dictionary([{"a": "x"}])
    assert [(it.id, it.variable, it.category) for it in d.items] == [(0, "a", "x")]


def test_ids_follow_lexicographic_order_not_arrival():
    d1 = build_dictionary([{"a": "y"}, {"a": "x"}])
    d2 = build_dictionary([{"a": "x"}, {"a": "y"}])
    assert d1 == d2
    assert d1.id_of("a", "x") == 0 and d1.id_of("a", "y") == 1


def test_study_dictionary_has_62_items(study_db):
    assert study_db.n == 8249
    assert len(study_db.dictionary) == 62


def test_build_dictionary_errors():
    with pytest.raises(EmptyInput):
        build_dictionary([])
    with pytest.raises(SchemaViolation, match="'b'"):
        build_dictionary([{"a": "x", "b": "y"}, {"a": "x"}], ["a", "b"])
    with pytest.raises(SchemaViolation):
        build_dictionary([{"a": ""}])


def test_encode_sorted_ids():
    d = build_dictionary([{"a": "x", "b": "y"}, {"a": "w", "b": "v"}, {"a": "z", "b": "u"}])
    t = encode_record({"b": "y", "a": "x"}, d)
    assert t.items == (d.id_of("a", "x"), d.id_of("b", "y"))
    assert list(t.items) == sorted(t.items)


def test_encode_two_items_gives_their_ids():
    d = build_dictionary([{"a": "w", "b": "u"}, {"a": "x", "b": "v"}, {"a": "w", "b": "y"}])
    # a=w 0, a=x 1, b=u 2, b=v 3, b=y 4
    assert encode_record({"a": "x", "b": "v"}, d).items == (1, 3)


def test_encode_unknown_pair():
    d = build_dictionary([{"a": "x"}])
    with pytest.raises(UnknownItem, match="a=z"):
        encode_record({"a": "z"}, d)


def test_support_count_examples(study_db):
    d = study_db.dictionary
    young = d.id_of("ped_age", "<15")
    s = support_count(study_db, [young])
    assert s.count == 1168
    assert round(s.support * 100, 2) == 14.16
    empty = support_count(study_db, [])
    assert empty.count == 8249 and empty.support == 1.0
    assert support_count(study_db, sorted([young, d.id_of("ped_age", ">64")])).count == 0


def test_empty_database_counting():
    db = TransactionDatabase.from_records([], ["a"])
    assert db.n == 0
    with pytest.raises(EmptyDatabase):
        support_count(db, [])
    assert item_frequencies(db) == []


def test_item_frequencies_tie_break_by_id():
    db = TransactionDatabase.from_records(
        [("1", {"a": "p"}), ("2", {"a": "q"}), ("3", {"a": "r"}), ("4", {"a": "r"})], ["a"])
    got = [(it.category, c) for it, c in item_frequencies(db)]
    assert got == [("r", 2), ("p", 1), ("q", 1)]


def test_item_frequencies_top_five(study_db):
    top = [(it.label, c) for it, c in item_frequencies(study_db)[:5]]
    assert top == [("day_of_week=weekday", 5778), ("severity=moderate", 5739),
                   ("ped_dark_cloth=no", 5380), ("road_type=two_no_separation", 5112),
                   ("ped_alcohol_drug=no", 4629)]


@settings(max_examples=60, deadline=None)
@given(databases(), st.randoms(use_true_random=False))
def test_anti_monotone(db, rnd):
    items = list(range(len(db.dictionary)))
    y = sorted(rnd.sample(items, rnd.randint(0, len(items))))
    x = sorted(rnd.sample(y, rnd.randint(0, len(y))))
    assert db.count(y) <= db.count(x)


@settings(max_examples=60, deadline=None)
@given(databases())
def test_variable_counts_sum_to_n(db):
    for ids in db.dictionary.by_variable.values():
        assert sum(db.count((i,)) for i in ids) == db.n
    assert db.count(()) == db.n


@settings(max_examples=60, deadline=None)
@given(databases())
def test_same_variable_pair_counts_zero(db):
    for ids in db.dictionary.by_variable.values():
        for i in ids:
            for j in ids:
                if i < j:
                    assert db.count((i, j)) == 0


@settings(max_examples=60, deadline=None)
@given(databases())
def test_encode_decode_bijection(db):
    for t in db.transactions:
        rec = decode(t, db.dictionary)
        assert encode_record(rec, db.dictionary, t.record_id) == t


@settings(max_examples=40, deadline=None)
@given(databases())
def test_bitmap_counts_match_scan(db):
    rng = random.Random(len(db.transactions))
    items = list(range(len(db.dictionary)))
    for _ in range(10):
        s = tuple(sorted(rng.sample(items, rng.randint(1, min(3, len(items))))))
        scan = sum(all(i in t.items for i in s) for t in db.transactions)
        assert db.count(s) == scan
