"""Contextualized embedding extraction from a masked-language transformer.

For every occurrence of the target token, the stored vector is the sum of
the encoder's last four hidden layers at that token's position; tokens that
the tokenizer splits into several subwords store the mean of their subword
vectors. Sentences longer than ``max_length`` (in subword tokens, including
the special tokens) are truncated, and target occurrences falling outside
the truncated window are skipped and counted.

Only the target token is stored by default. With ``store_all_meaningful``
every "meaningful" word is stored too — stop words, numbers, and tokens
with no alphanumeric content are filtered out and counted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .records import SentenceRecord
from .storeio import OccurrenceMeta, write_embedding_store

LAYERS_SUMMED = 4

# Closed-class words excluded by the "meaningful words" storage filter.
STOP_WORDS = frozenset(
    """a an the and or but if then than because while of in on at by for with
    without from to into onto over under between through during before after
    above below up down out off again further is are was were be been being
    am do does did doing have has had having will would shall should can
    could may might must not no nor only own same so too very this that
    these those it its itself he him his she her hers they them their we us
    our you your i me my as such per via""".split()
)

_NUMBER_RE = re.compile(r"[+-]?[\d.,]+")


class EncoderLoadError(RuntimeError):
    """The configured encoder (model or tokenizer) could not be loaded."""


@dataclass(frozen=True)
class ExtractionConfig:
    """What to encode, which token to keep, and how long sequences may be."""

    encoder: str
    target_token: str = "virtual"
    max_length: int = 512
    expected_dim: int | None = None
    store_all_meaningful: bool = False

    def __post_init__(self) -> None:
        if not self.target_token or self.target_token != self.target_token.lower():
            raise ValueError("target_token must be a non-empty lowercase string")
        if self.max_length < 3:
            raise ValueError(f"max_length must be >= 3, got {self.max_length}")
        if self.expected_dim is not None and self.expected_dim < 1:
            raise ValueError(f"expected_dim must be positive, got {self.expected_dim}")


@dataclass(frozen=True)
class ExtractionReport:
    """Bookkeeping for one extraction run."""

    n_sentences: int
    n_stored: int
    truncated_occurrences: int
    filtered_tokens: int


@dataclass
class ExtractionResult:
    matrix: np.ndarray
    meta: list[OccurrenceMeta]
    report: ExtractionReport


def normalize_word(word: str) -> str:
    """Lowercased word with non-alphanumeric characters stripped from both ends."""
    start, end = 0, len(word)
    while start < end and not word[start].isalnum():
        start += 1
    while end > start and not word[end - 1].isalnum():
        end -= 1
    return word[start:end].lower()


def _is_punct_piece(piece: str) -> bool:
    stripped = piece.lstrip("#")
    return bool(stripped) and all(not c.isalnum() for c in stripped)


def is_meaningful(core: str) -> bool:
    """Storage filter: drops stop words, numbers, and punctuation-only tokens."""
    if not core:
        return False
    if core in STOP_WORDS:
        return False
    if _NUMBER_RE.fullmatch(core):
        return False
    return True


def load_encoder(config: ExtractionConfig):
    """Load (tokenizer, model) from the configured identifier and validate them."""
    try:
        from transformers import AutoModel, AutoTokenizer

        tokenizer = AutoTokenizer.from_pretrained(config.encoder)
        model = AutoModel.from_pretrained(config.encoder)
    except Exception as exc:
        raise EncoderLoadError(f"cannot load encoder {config.encoder!r}: {exc}") from exc
    validate_encoder(config, tokenizer, model)
    return tokenizer, model


def validate_encoder(config: ExtractionConfig, tokenizer, model) -> None:
    hidden = int(model.config.hidden_size)
    if config.expected_dim is not None and hidden != config.expected_dim:
        raise ValueError(
            f"encoder hidden size {hidden} != expected dim {config.expected_dim}"
        )
    if int(model.config.num_hidden_layers) < LAYERS_SUMMED:
        raise ValueError(
            f"encoder has {model.config.num_hidden_layers} layers; "
            f"need >= {LAYERS_SUMMED} for the summed-layer policy"
        )
    limit = int(getattr(model.config, "max_position_embeddings", config.max_length))
    if config.max_length > limit:
        raise ValueError(
            f"max_length {config.max_length} exceeds the encoder limit {limit}"
        )


@dataclass
class _Word:
    core: str
    piece_span: tuple[int, int]  # [start, stop) in the piece sequence
    core_positions: tuple[int, ...] = field(default_factory=tuple)


def _tokenize_words(tokenizer, text: str) -> tuple[list[str], list[_Word]]:
    """Per-word subword pieces plus each word's core (non-punctuation) positions."""
    pieces: list[str] = []
    words: list[_Word] = []
    for raw in text.split():
        word_pieces = tokenizer.tokenize(raw)
        if not word_pieces:
            continue
        start = len(pieces)
        pieces.extend(word_pieces)
        core_positions = tuple(
            start + j for j, p in enumerate(word_pieces) if not _is_punct_piece(p)
        )
        words.append(
            _Word(
                core=normalize_word(raw),
                piece_span=(start, len(pieces)),
                core_positions=core_positions,
            )
        )
    return pieces, words


def extract_embeddings(
    sentences: Sequence[SentenceRecord],
    config: ExtractionConfig,
    tokenizer=None,
    model=None,
) -> ExtractionResult:
    """Encode sentences and collect one vector per stored token occurrence.

    ``tokenizer``/``model`` may be passed directly (already-loaded objects);
    otherwise they are loaded from ``config.encoder``.
    """
    import torch

    if tokenizer is None or model is None:
        tokenizer, model = load_encoder(config)
    else:
        validate_encoder(config, tokenizer, model)
    model.eval()

    cls_id = tokenizer.cls_token_id
    sep_id = tokenizer.sep_token_id
    dim = int(model.config.hidden_size)
    window = config.max_length - 2  # room for [CLS] and [SEP]

    vectors: list[np.ndarray] = []
    meta: list[OccurrenceMeta] = []
    truncated = 0
    filtered = 0

    with torch.inference_mode():
        for sentence in sentences:
            pieces, words = _tokenize_words(tokenizer, sentence.text)
            stored_words: list[_Word] = []
            for word in words:
                is_target = word.core == config.target_token
                if not is_target:
                    if not config.store_all_meaningful:
                        continue
                    if not is_meaningful(word.core):
                        filtered += 1
                        continue
                if not word.core_positions:
                    filtered += 1
                    continue
                if word.core_positions[-1] >= window:
                    truncated += 1
                    continue
                stored_words.append(word)
            if not stored_words:
                continue

            kept = pieces[:window]
            ids = (
                [cls_id] + tokenizer.convert_tokens_to_ids(kept) + [sep_id]
            )
            outputs = model(
                input_ids=torch.tensor([ids], dtype=torch.long),
                output_hidden_states=True,
            )
            summed = sum(outputs.hidden_states[-LAYERS_SUMMED:])[0]  # (seq, dim)

            for word in stored_words:
                positions = [p + 1 for p in word.core_positions]  # shift past [CLS]
                vector = summed[positions].mean(dim=0)
                vectors.append(vector.numpy().astype(np.float32))
                meta.append(
                    OccurrenceMeta(
                        occurrence_id=len(meta),
                        doc_id=sentence.doc_id,
                        year=sentence.year,
                        journal=sentence.journal,
                        token=word.core,
                    )
                )

    matrix = (
        np.vstack(vectors) if vectors else np.empty((0, dim), dtype=np.float32)
    )
    report = ExtractionReport(
        n_sentences=len(sentences),
        n_stored=len(meta),
        truncated_occurrences=truncated,
        filtered_tokens=filtered,
    )
    return ExtractionResult(matrix=matrix, meta=meta, report=report)


def extract_to_files(
    sentences: Sequence[SentenceRecord],
    config: ExtractionConfig,
    path_stem,
    tokenizer=None,
    model=None,
):
    """Extract and write the store file pair; returns (paths, report)."""
    result = extract_embeddings(sentences, config, tokenizer=tokenizer, model=model)
    paths = write_embedding_store(result.matrix, result.meta, path_stem)
    return paths, result.report
