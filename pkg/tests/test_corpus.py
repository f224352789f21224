import pytest

from kpsearch.corpus import (
    Document,
    FieldConfig,
    expand_corpus,
    expand_document,
    load_corpus,
    load_predictions,
    load_qrels,
    load_topics,
    save_corpus,
    save_predictions,
    save_topics,
)
from kpsearch.errors import DataFormatError


class TestLoadCorpus:
    def test_file_order_and_count(self, grammar_corpus):
        assert len(grammar_corpus) == 3
        assert [d.id for d in grammar_corpus] == [
            "gakkai-e-0001014453", "fix-0002", "fix-0003",
        ]

    def test_missing_abstract_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(
            '{"id": "a", "title": "t", "abstract": "x"}\n'
            '{"id": "b", "title": "t"}\n'
        )
        with pytest.raises(DataFormatError, match=r":2:.*abstract"):
            load_corpus(path)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        path.write_text(
            '{"id": "a", "title": "t", "abstract": "x"}\n'
            '{"id": "a", "title": "t", "abstract": "y"}\n'
        )
        with pytest.raises(DataFormatError, match="duplicate document id"):
            load_corpus(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "title": "t", "abstract": "x"}\nnot json\n')
        with pytest.raises(DataFormatError, match=":2:"):
            load_corpus(path)

    def test_empty_keyword_phrase_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "title": "t", "abstract": "x", "keywords": [" "]}\n')
        with pytest.raises(DataFormatError, match="empty phrase"):
            load_corpus(path)

    def test_round_trip_bit_exact(self, tmp_path, fixtures_dir):
        for name in ("corpus_small.jsonl", "corpus_grammar.jsonl"):
            original = (fixtures_dir / name).read_bytes()
            docs = load_corpus(fixtures_dir / name)
            out = tmp_path / name
            save_corpus(docs, out)
            assert out.read_bytes() == original


class TestLoadTopics:
    def test_jsonl(self, small_topics):
        assert [q.id for q in small_topics] == ["q1", "q2", "q3"]
        assert small_topics[0].text == "x y"
        assert small_topics[2].research_fields == {"Science", "Biology and agriculture"}

    def test_trec_format_matches_jsonl(self, fixtures_dir, small_topics):
        trec = load_topics(fixtures_dir / "topics.trec")
        assert [(q.id, q.text, q.research_fields) for q in trec] == [
            (q.id, q.text, q.research_fields) for q in small_topics
        ]

    def test_semicolon_separated_fields(self, tmp_path):
        path = tmp_path / "t.trec"
        path.write_text(
            "<top>\n<num> Number: 7\n<desc> Description:\nquery text\n"
            "<fields> Chemistry;Science\n</top>\n"
        )
        (query,) = load_topics(path)
        assert query.research_fields == {"Chemistry", "Science"}

    def test_topic_without_description_errors(self, tmp_path):
        path = tmp_path / "t.trec"
        path.write_text("<top>\n<num> Number: 7\n<title> only a title\n</top>\n")
        with pytest.raises(DataFormatError, match="no description"):
            load_topics(path)

    def test_round_trip(self, tmp_path, fixtures_dir, small_topics):
        out = tmp_path / "topics.jsonl"
        save_topics(small_topics, out)
        assert out.read_bytes() == (fixtures_dir / "topics.jsonl").read_bytes()


class TestLoadQrels:
    def test_threshold_binarization(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 d7 2\nq1 0 d8 1\n")
        judgments = load_qrels(path, binary_threshold=2)
        assert judgments.is_relevant("q1", "d7")
        assert not judgments.is_relevant("q1", "d8")  # partially relevant drops

    def test_default_threshold_is_highest_grade(self, small_qrels):
        # fixture grades go up to 2, so grade-1 rows are non-relevant
        assert small_qrels.relevant_docs("q1") == {"d1", "d4"}
        assert small_qrels.relevant_docs("q2") == {"d2", "d4"}
        assert small_qrels.relevant_docs("q3") == {"d5"}

    def test_default_threshold_binary_file(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 d1 1\nq1 0 d2 0\n")
        judgments = load_qrels(path)
        assert judgments.relevant_docs("q1") == {"d1"}

    def test_empty_qrels(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("")
        judgments = load_qrels(path)
        assert judgments.query_ids == ()
        assert judgments.relevant_count("anything") == 0

    def test_malformed_line_names_line(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 d1 1\nq1 d1 1\n")
        with pytest.raises(DataFormatError, match=":2:"):
            load_qrels(path)

    def test_unjudged_pairs_nonrelevant(self, small_qrels):
        assert not small_qrels.is_relevant("q1", "nonexistent")
        assert not small_qrels.is_relevant("q99", "d1")


class TestLoadPredictions:
    def test_order_preserved(self, small_predictions):
        assert small_predictions.phrases("d3") == ("y w", "v v", "u")

    def test_worked_example_first_phrase(self, s2s_copy_predictions):
        phrases = s2s_copy_predictions.phrases("gakkai-e-0001014453")
        assert len(phrases) == 5
        assert phrases[0] == "grammatical inference"

    def test_duplicate_doc_id(self, tmp_path):
        path = tmp_path / "p.jsonl"
        path.write_text(
            '{"id": "a", "keyphrases": ["x"]}\n{"id": "a", "keyphrases": ["y"]}\n'
        )
        with pytest.raises(DataFormatError, match="duplicate document id"):
            load_predictions(path)

    def test_duplicate_phrase_after_case_folding(self, tmp_path):
        path = tmp_path / "p.jsonl"
        path.write_text('{"id": "a", "keyphrases": ["A", "a"]}\n')
        with pytest.raises(DataFormatError, match="case-folding"):
            load_predictions(path)

    def test_scores_must_parallel(self, tmp_path):
        path = tmp_path / "p.jsonl"
        path.write_text('{"id": "a", "keyphrases": ["x", "y"], "scores": [0.5]}\n')
        with pytest.raises(DataFormatError, match="parallel"):
            load_predictions(path)

    def test_round_trip_bit_exact(self, tmp_path, fixtures_dir):
        for name in ("predictions_small.jsonl", "predictions_s2s_copy.jsonl"):
            original = (fixtures_dir / name).read_bytes()
            preds = load_predictions(fixtures_dir / name)
            out = tmp_path / name
            save_predictions(preds, out)
            assert out.read_bytes() == original


class TestExpandDocument:
    def test_identity_for_n_zero(self, small_corpus, small_predictions):
        doc = small_corpus[0]
        assert expand_document(doc, small_predictions, 0) == doc

    def test_top_n_attached(self, small_corpus, small_predictions):
        doc = next(d for d in small_corpus if d.id == "d3")
        expanded = expand_document(doc, small_predictions, 2)
        assert expanded.expansion_keyphrases == ("y w", "v v")
        # all other fields unchanged, input untouched
        assert expanded.title == doc.title and expanded.abstract == doc.abstract
        assert doc.expansion_keyphrases == ()

    def test_truncation_floor(self, small_corpus, small_predictions):
        doc = next(d for d in small_corpus if d.id == "d3")
        expanded = expand_document(doc, small_predictions, 9)
        assert expanded.expansion_keyphrases == ("y w", "v v", "u")

    def test_missing_doc_degrades_gracefully(self, small_predictions):
        doc = Document("unknown", "t", "a")
        assert expand_document(doc, small_predictions, 5).expansion_keyphrases == ()

    def test_idempotent(self, small_corpus, small_predictions):
        doc = small_corpus[0]
        once = expand_document(doc, small_predictions, 2)
        twice = expand_document(once, small_predictions, 2)
        assert once == twice

    def test_expand_corpus_counts_missing(self, small_corpus, keyword_predictions):
        expanded, missing = expand_corpus(small_corpus, keyword_predictions, 2)
        assert missing == 1  # d3 has no author keywords, hence no prediction row
        assert [d.id for d in expanded] == [d.id for d in small_corpus]


class TestFieldConfig:
    def test_negative_expansion_rejected(self):
        with pytest.raises(ValueError):
            FieldConfig(expansion_count=-1)

    def test_presets(self):
        assert not FieldConfig.ta().include_author_keywords
        assert FieldConfig.tak().include_author_keywords
        assert FieldConfig.ta().label == "ta"
        assert FieldConfig.tak(3).expansion_count == 3
