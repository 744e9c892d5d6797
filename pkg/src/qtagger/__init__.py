"""Two-stage sequence tagger.

A probability-emitting base tagger handles the bulk of a corpus; tokens it
is unsure about are routed to a Q-learning relabeler trained with
experience replay, which walks each token's label toward a better one.
"""

from .archive import ArchiveError, ModelArchive
from .base_tagger import (FilterResult, PredictionSet, WindowSoftmaxTagger,
                          confidence_filter, train_base)
from .config import ConfigError, RunConfig
from .corpus import (Corpus, ParseError, Sentence, TagInventory, Token,
                     parse_conll, parse_slot_corpus, tag_statistics, to_conll,
                     to_slot_lines)
from .embeddings import EmbeddingTable, ngram_average
from .relabeler import (EpisodeBudget, Experience, RelabelModel, ReplayMemory,
                        TokenState, combine_outputs, make_state, relabel, reward,
                        select_action, td_loss, train)
from .scoring import (Chunk, EvalReport, chunk_f1, error_distribution,
                      evaluate, extract_chunks)
from .synthetic import imbalanced_corpus

__version__ = "0.1.0"

__all__ = [
    "ArchiveError", "Chunk", "ConfigError", "Corpus", "EmbeddingTable",
    "EpisodeBudget", "EvalReport", "Experience", "FilterResult", "ModelArchive",
    "ParseError", "PredictionSet", "RelabelModel", "ReplayMemory", "RunConfig",
    "Sentence", "TagInventory", "Token", "TokenState", "WindowSoftmaxTagger",
    "chunk_f1", "combine_outputs", "confidence_filter", "error_distribution",
    "evaluate", "extract_chunks", "imbalanced_corpus", "make_state",
    "ngram_average", "parse_conll", "parse_slot_corpus", "relabel", "reward",
    "select_action", "tag_statistics", "td_loss", "to_conll", "to_slot_lines",
    "train", "train_base",
]
