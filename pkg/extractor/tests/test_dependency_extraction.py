"""Rule-based adjective -> head-noun dependency extraction."""

import pytest

from scdextractor import (
    SentenceRecord,
    extract_dependencies,
    lemmatize_noun,
    write_dependency_records,
)


def sent(text, doc_id="d1", year=1990, journal="J"):
    return SentenceRecord(doc_id=doc_id, year=year, journal=journal, text=text)


class TestLemmatizeNoun:
    @pytest.mark.parametrize(
        ("word", "lemma"),
        [
            ("photons", "photon"),
            ("states", "state"),
            ("particles", "particle"),
            ("processes", "process"),
            ("boxes", "box"),
            ("branches", "branch"),
            ("theories", "theory"),
            ("photon", "photon"),
            ("mass", "mass"),
            ("status", "status"),
            ("basis", "basis"),
            ("gas", "gas"),
        ],
    )
    def test_plural_stripping(self, word, lemma):
        assert lemmatize_noun(word) == lemma


class TestExtractDependencies:
    def test_attributive_use_yields_one_record(self):
        out = extract_dependencies(
            [sent("the virtual photon decays", doc_id="d7", year=1955, journal="P")]
        )
        assert out.skipped == 0
        assert out.records == (
            {
                "adj_lemma": "virtual",
                "head_lemma": "photon",
                "year": 1955,
                "journal": "P",
                "doc_id": "d7",
            },
        )

    def test_predicative_use_is_skip_counted(self):
        out = extract_dependencies([sent("the photon is virtual .")])
        assert out.records == ()
        assert out.skipped == 1

    def test_copula_before_target_skips_even_with_following_word(self):
        out = extract_dependencies([sent("the state seems virtual in nature .")])
        assert out.records == ()
        assert out.skipped == 1

    def test_sentence_final_target_is_skipped(self):
        out = extract_dependencies([sent("they keep it virtual")])
        assert out.records == ()
        assert out.skipped == 1

    def test_function_word_head_is_skipped(self):
        out = extract_dependencies([sent("virtual and real photons")])
        assert out.records == ()
        assert out.skipped == 1

    def test_numeric_head_is_skipped(self):
        out = extract_dependencies([sent("virtual 42 states")])
        assert out.records == ()
        assert out.skipped == 1

    def test_head_noun_is_lemmatized(self):
        out = extract_dependencies([sent("virtual photons interact")])
        assert [r["head_lemma"] for r in out.records] == ["photon"]

    def test_case_and_punctuation_normalized(self):
        out = extract_dependencies([sent("(Virtual) photons, observed here.")])
        assert [r["head_lemma"] for r in out.records] == ["photon"]

    def test_multiple_occurrences_in_one_sentence(self):
        out = extract_dependencies([sent("a virtual photon hits a virtual state")])
        assert [r["head_lemma"] for r in out.records] == ["photon", "state"]

    def test_sentence_without_target_contributes_nothing(self):
        out = extract_dependencies([sent("the heavy particle decays .")])
        assert out.records == ()
        assert out.skipped == 0

    def test_custom_target(self):
        out = extract_dependencies([sent("an excited state decays")], target="excited")
        assert [r["adj_lemma"] for r in out.records] == ["excited"]
        assert [r["head_lemma"] for r in out.records] == ["state"]

    def test_invalid_target_rejected(self):
        with pytest.raises(ValueError, match="lowercase"):
            extract_dependencies([], target="Virtual")


class TestRecordWriting:
    def test_written_lines_are_compact_json(self, tmp_path):
        out = extract_dependencies(
            [sent("the virtual photon decays", doc_id="d7", year=1955, journal="P")]
        )
        path = write_dependency_records(out.records, tmp_path / "deps.jsonl")
        assert path.read_text(encoding="utf-8") == (
            '{"adj_lemma":"virtual","head_lemma":"photon",'
            '"year":1955,"journal":"P","doc_id":"d7"}\n'
        )

    def test_written_records_readable_by_analysis_package(self, tmp_path):
        from scdkit import read_dependency_records

        out = extract_dependencies(
            [
                sent("the virtual photon decays", year=1950),
                sent("virtual states mix", year=1960),
            ]
        )
        path = write_dependency_records(out.records, tmp_path / "deps.jsonl")
        parsed = read_dependency_records(path)
        assert [(r.adj_lemma, r.head_lemma, r.year) for r in parsed] == [
            ("virtual", "photon", 1950),
            ("virtual", "state", 1960),
        ]
