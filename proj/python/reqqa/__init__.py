"""Question answering over requirements specifications."""

import json

from . import _core
from ._core import Error, answer_correct, ndcg_at_k, recall_at_k, simplified_bleu, token_f1

__all__ = [
    "Error",
    "answer_correct",
    "ask",
    "evaluate",
    "generate_qa",
    "ndcg_at_k",
    "recall_at_k",
    "retrieve",
    "simplified_bleu",
    "split",
    "token_f1",
]

__version__ = "0.1.0"


def split(text, doc_id="srs", token_budget=512):
    """Passages of a plain-text document, as dicts."""
    return json.loads(_core.split(text, doc_id, token_budget))


def ask(question, srs_text, corpus=None, config=None):
    """Runs the pipeline. `corpus` is a manifest dict {domain, documents}."""
    corpus_json = json.dumps(corpus) if corpus is not None else ""
    return json.loads(_core.ask(question, srs_text, corpus_json, json.dumps(config or {})))


def retrieve(items, query, kind="bm25", k=3):
    """Top-k (id, score) pairs. `items` maps ids to texts or is a list of pairs."""
    pairs = list(items.items()) if isinstance(items, dict) else list(items)
    return _core.retrieve(pairs, query, kind, k)


def generate_qa(text, doc_id="srs", seed=0, fraction=0.05, max_pairs=3):
    lines = _core.generate_qa(text, doc_id, seed, fraction, max_pairs).splitlines()
    return [json.loads(line) for line in lines if line.strip()]


def evaluate(rows, config=None):
    """Evaluates dataset rows (dicts in the dataset JSONL layout)."""
    jsonl = "".join(json.dumps(r) + "\n" for r in rows)
    return json.loads(_core.evaluate(jsonl, json.dumps(config or {})))
