"""Dependency-frequency tabulation per decade and per journal."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scdkit import (
    DependencyRecord,
    DepTable,
    DepTableRow,
    read_dependency_records,
    tabulate_top_dependencies,
    write_dependency_records,
    write_dep_table_csv,
)
from scdkit.depfreq import decade_of, dep_table_to_csv_text


def rec(head, year=1955, journal="PR", doc="d1", adj="virtual"):
    return DependencyRecord(adj_lemma=adj, head_lemma=head, year=year, journal=journal, doc_id=doc)


# -------------------------------------------------------------------- records


def test_record_requires_lowercase_nonempty_lemmas():
    with pytest.raises(ValueError, match="non-empty"):
        rec("")
    with pytest.raises(ValueError, match="lowercase"):
        rec("Photon")
    with pytest.raises(ValueError, match="lowercase"):
        DependencyRecord(adj_lemma="Virtual", head_lemma="photon", year=1955, journal="PR", doc_id="d")


def test_decade_key():
    assert decade_of(1955) == 1950
    assert decade_of(1950) == 1950
    assert decade_of(1949) == 1940


# ------------------------------------------------------------------ tabulation


def test_top_dependencies_counts_and_shares():
    records = [rec("photon"), rec("photon"), rec("photon"), rec("state")]
    table = tabulate_top_dependencies(records, group_by="decade", k=2)
    assert [(r.group, r.rank, r.head_lemma, r.count, r.share) for r in table.rows] == [
        ("1950", 1, "photon", 3, 0.75),
        ("1950", 2, "state", 1, 0.25),
    ]


def test_empty_input_empty_table():
    table = tabulate_top_dependencies([], group_by="decade", k=4)
    assert len(table) == 0
    assert table.groups() == []


def test_k_truncates_but_shares_use_group_total():
    records = [rec("photon")] * 5 + [rec("state")] * 3 + [rec("level")] * 2
    table = tabulate_top_dependencies(records, group_by="decade", k=1)
    assert len(table) == 1
    row = table.rows[0]
    assert row.head_lemma == "photon"
    assert row.share == 0.5  # 5 of 10, not 5 of 5


def test_untruncated_shares_sum_to_one():
    records = [rec("photon")] * 5 + [rec("state")] * 3 + [rec("level", year=1961)] * 2
    table = tabulate_top_dependencies(records, group_by="decade")
    for group in table.groups():
        total = sum(r.share for r in table.rows if r.group == group)
        assert total == pytest.approx(1.0, abs=1e-12)


def test_ties_break_lexicographically():
    records = [rec("zeta"), rec("alpha"), rec("mid"), rec("mid")]
    table = tabulate_top_dependencies(records, group_by="decade", k=3)
    assert [r.head_lemma for r in table.rows] == ["mid", "alpha", "zeta"]


def test_counts_non_increasing_with_rank():
    records = [rec("a")] * 4 + [rec("b")] * 2 + [rec("c")] * 7
    table = tabulate_top_dependencies(records, group_by="decade")
    counts = [r.count for r in table.rows]
    assert counts == sorted(counts, reverse=True)


def test_decade_groups_ascending_journal_groups_lexicographic():
    records = [
        rec("photon", year=1961),
        rec("photon", year=1942),
        rec("photon", year=1955),
    ]
    table = tabulate_top_dependencies(records, group_by="decade")
    assert table.groups() == ["1940", "1950", "1960"]

    records = [rec("photon", journal=j) for j in ("PR-D", "PR-A", "PR-C")]
    by_journal = tabulate_top_dependencies(records, group_by="journal")
    assert by_journal.groups() == ["PR-A", "PR-C", "PR-D"]


def test_result_independent_of_input_order():
    records = [rec("photon")] * 3 + [rec("state")] * 2 + [rec("level", year=1961)] * 4
    shuffled = records[:]
    random.Random(7).shuffle(shuffled)
    assert tabulate_top_dependencies(records, "decade", k=2) == tabulate_top_dependencies(
        shuffled, "decade", k=2
    )


def test_tabulate_rejects_bad_arguments():
    with pytest.raises(ValueError, match="group_by"):
        tabulate_top_dependencies([], group_by="year")
    with pytest.raises(ValueError, match="k must be"):
        tabulate_top_dependencies([], group_by="decade", k=0)


@settings(max_examples=50, deadline=None)
@given(
    lemmas=st.lists(
        st.sampled_from(["photon", "state", "level", "particle", "process"]),
        min_size=1,
        max_size=40,
    ),
    years=st.lists(st.integers(min_value=1940, max_value=1979), min_size=1, max_size=40),
)
def test_tabulation_properties(lemmas, years):
    n = min(len(lemmas), len(years))
    records = [rec(lemmas[i], year=years[i]) for i in range(n)]
    table = tabulate_top_dependencies(records, group_by="decade")
    # per group: contiguous ranks, non-increasing counts, shares sum to 1
    for group in table.groups():
        rows = [r for r in table.rows if r.group == group]
        assert [r.rank for r in rows] == list(range(1, len(rows) + 1))
        counts = [r.count for r in rows]
        assert counts == sorted(counts, reverse=True)
        assert sum(r.share for r in rows) == pytest.approx(1.0, abs=1e-12)
        assert sum(r.count for r in rows) == sum(
            1 for x in records if decade_of(x.year) == int(group)
        )


# --------------------------------------------------------------------- tables


def test_table_validates_rank_contiguity():
    row1 = DepTableRow(group="1950", rank=1, head_lemma="a", count=2, share=0.5)
    row3 = DepTableRow(group="1950", rank=3, head_lemma="b", count=1, share=0.25)
    with pytest.raises(ValueError, match="contiguous"):
        DepTable(group_by="decade", rows=(row1, row3))


def test_table_rejects_unknown_grouping():
    with pytest.raises(ValueError, match="group_by"):
        DepTable(group_by="month", rows=())


def test_row_validation():
    with pytest.raises(ValueError, match="rank"):
        DepTableRow(group="g", rank=0, head_lemma="a", count=1, share=0.5)
    with pytest.raises(ValueError, match="count"):
        DepTableRow(group="g", rank=1, head_lemma="a", count=0, share=0.5)
    with pytest.raises(ValueError, match="share"):
        DepTableRow(group="g", rank=1, head_lemma="a", count=1, share=0.0)
    with pytest.raises(ValueError, match="share"):
        DepTableRow(group="g", rank=1, head_lemma="a", count=1, share=1.5)


# ----------------------------------------------------------------------- i/o


def test_jsonl_roundtrip(tmp_path):
    records = [rec("photon"), rec("state", year=1961, journal="PR-C", doc="d2")]
    path = write_dependency_records(records, tmp_path / "deps.jsonl")
    assert read_dependency_records(path) == records
    first_line = path.read_text().splitlines()[0]
    assert first_line == (
        '{"adj_lemma":"virtual","head_lemma":"photon","year":1955,"journal":"PR","doc_id":"d1"}'
    )


def test_read_skips_blank_lines(tmp_path):
    path = tmp_path / "deps.jsonl"
    body = '{"adj_lemma":"virtual","head_lemma":"photon","year":1955,"journal":"PR","doc_id":"d"}'
    path.write_text(body + "\n\n" + body.replace("photon", "state") + "\n")
    assert len(read_dependency_records(path)) == 2


def test_read_reports_line_numbers(tmp_path):
    path = tmp_path / "deps.jsonl"
    path.write_text('{"adj_lemma":"virtual"}\n')
    with pytest.raises(ValueError, match=":1: missing keys"):
        read_dependency_records(path)
    path.write_text("ok\n{broken\n")
    with pytest.raises(ValueError, match=":1: malformed JSON"):
        read_dependency_records(path)


def test_read_rejects_invalid_record_values(tmp_path):
    path = tmp_path / "deps.jsonl"
    path.write_text(
        '{"adj_lemma":"virtual","head_lemma":"Photon","year":1955,"journal":"PR","doc_id":"d"}\n'
    )
    with pytest.raises(ValueError, match=":1: invalid record"):
        read_dependency_records(path)


def test_csv_rendering(tmp_path):
    records = [rec("photon"), rec("photon"), rec("state")]
    table = tabulate_top_dependencies(records, group_by="decade", k=2)
    text = dep_table_to_csv_text(table)
    assert text.splitlines() == [
        "group,rank,head_lemma,count,share",
        "1950,1,photon,2,0.6666666666666666",
        "1950,2,state,1,0.3333333333333333",
    ]
    out = write_dep_table_csv(table, tmp_path / "table.csv")
    assert out.read_text() == text
