"""Produce embedding stores and dependency records from raw sentences.

The pipeline: segment documents into sentences, encode each sentence with a
masked-language transformer, store one vector per target-token occurrence
(sum of the last four hidden layers; subword-mean for split tokens), and
extract (adjective, head noun) dependency records. Outputs use the file
formats the analysis package reads: ``.vec``/``.meta.jsonl`` store pairs
and dependency-record JSON-Lines.
"""

from .deps import (
    DependencyExtraction,
    extract_dependencies,
    lemmatize_noun,
    write_dependency_records,
)
from .encoder import (
    LAYERS_SUMMED,
    EncoderLoadError,
    ExtractionConfig,
    ExtractionReport,
    ExtractionResult,
    extract_embeddings,
    extract_to_files,
    is_meaningful,
    load_encoder,
    normalize_word,
    validate_encoder,
)
from .records import (
    SentenceRecord,
    read_sentences,
    segment_document,
    write_sentences,
)
from .storeio import FORMAT_VERSION, MAGIC, OccurrenceMeta, write_embedding_store

__version__ = "0.1.0"

__all__ = [
    "DependencyExtraction",
    "EncoderLoadError",
    "ExtractionConfig",
    "ExtractionReport",
    "ExtractionResult",
    "FORMAT_VERSION",
    "LAYERS_SUMMED",
    "MAGIC",
    "OccurrenceMeta",
    "SentenceRecord",
    "__version__",
    "extract_dependencies",
    "extract_embeddings",
    "extract_to_files",
    "is_meaningful",
    "lemmatize_noun",
    "load_encoder",
    "normalize_word",
    "read_sentences",
    "segment_document",
    "validate_encoder",
    "write_dependency_records",
    "write_embedding_store",
    "write_sentences",
]
