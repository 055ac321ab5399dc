"""Shared fixtures: a tiny deterministic BERT with a purpose-built vocabulary."""

from __future__ import annotations

import pytest

# Populated by test_extractor_acceptance.py; printed after the run.
ACCEPTANCE_LINES: list[str] = []

# WordPiece vocabulary crafted so "virtual" is one piece and "photon"
# splits into exactly two ("pho" + "##ton").
VOCAB = [
    "[PAD]",
    "[UNK]",
    "[CLS]",
    "[SEP]",
    "[MASK]",
    "the",
    "a",
    "virtual",
    "pho",
    "##ton",
    "decays",
    "is",
    "state",
    "states",
    "particle",
    "level",
    "heavy",
    "excited",
    "and",
    "of",
    "in",
    "b",
    ".",
    ",",
    "(",
    ")",
]


@pytest.fixture(scope="session")
def tiny_encoder(tmp_path_factory):
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    vocab_file = tmp_path_factory.mktemp("vocab") / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_file), do_lower_case=True)
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=16,
        num_hidden_layers=4,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=32,
    )
    model = BertModel(config)
    model.eval()
    return tokenizer, model


@pytest.fixture(scope="session")
def encoder_dir(tiny_encoder, tmp_path_factory):
    tokenizer, model = tiny_encoder
    path = tmp_path_factory.mktemp("encoder") / "tiny-bert"
    model.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return path


@pytest.fixture
def acceptance_lines():
    return ACCEPTANCE_LINES


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria (extractor)")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
