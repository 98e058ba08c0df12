import pytest

import reqqa

SRS = (
    "The spacecraft wet mass shall not exceed 3004 kg at launch.\n\n"
    "The navigation camera shall provide images at a rate of 10 frames per second.\n\n"
    "The ground segment shall archive all telemetry for 15 years."
)

CORPUS = {
    "domain": "aerospace",
    "documents": [
        {
            "id": "wet_mass",
            "title": "Wet mass",
            "text": "Wet mass is the mass of a vehicle including its propellant. "
            "The mass ratio is the difference between the wet mass and the dry mass.",
        },
        {"id": "telemetry", "title": "Telemetry", "text": "Telemetry is the collection of remote measurements."},
    ],
}


def test_split_returns_passages():
    passages = reqqa.split(SRS, doc_id="srs")
    assert [p["id"] for p in passages] == ["srs#0000", "srs#0001", "srs#0002"]
    assert all(p["token_count"] <= 512 for p in passages)


def test_ask_returns_both_sources():
    result = reqqa.ask("How many frames per second shall the navigation camera provide?", SRS, CORPUS, {"k": 2})
    assert result["srs_hits"][0]["passage"]["id"] == "srs#0001"
    assert len(result["srs_hits"]) <= 2
    span = result["srs_hits"][0]["answer"]
    text = result["srs_hits"][0]["passage"]["text"]
    assert text[span["start"]:span["end"]] == span["text"]
    assert result["retrieved_doc_ids"]
    assert all(h["passage"]["source"] == "corpus" for h in result["corpus_hits"])


def test_ask_without_corpus_flags_it():
    result = reqqa.ask("What shall the ground segment archive?", SRS)
    assert result["corpus_missing"] is True
    assert result["corpus_hits"] == []


def test_retrieve_ranks_matching_item_first():
    hits = reqqa.retrieve({"a": "solar array deployment", "b": "thermal control loop"}, "thermal loop", "bm25", 2)
    assert hits[0][0] == "b"


def test_metrics():
    assert reqqa.token_f1("software code", "implemented software code") == pytest.approx(0.8)
    assert reqqa.answer_correct("software code", "implemented software code", "partial")
    assert not reqqa.answer_correct("software code", "implemented software code", "exact")
    assert reqqa.ndcg_at_k([("x", ["a", "b", "x"])], 3) == pytest.approx(0.5)
    assert reqqa.recall_at_k([("x", ["a", "b", "c", "x"])], 3) == 0.0


def test_generate_and_evaluate_round_trip():
    pairs = reqqa.generate_qa(SRS, fraction=1.0)
    assert pairs
    for p in pairs:
        assert p["answer"] in p["passage_text"]
    report = reqqa.evaluate(pairs, {"retrievers": ["bm25"], "timing": False})
    assert report["schema_version"] == 1
    assert report["evaluated"] == len(pairs)


def test_errors_surface_as_exceptions():
    with pytest.raises(reqqa.Error):
        reqqa.ask("anything?", "   ")
