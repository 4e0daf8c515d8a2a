"""
Contrastive embedding: similarity, loss, hard mining, retrieval index and export.
"""

from .export import read_embeddings, write_embeddings
from .index import EmbeddingIndex, index_build, index_retrieve
from .mining import cosine_similarities, hardest_indices, mine_hard, repeat_factor
from .similarity import nce_loss, scaled_cosine

__all__ = [
    "EmbeddingIndex",
    "cosine_similarities",
    "hardest_indices",
    "index_build",
    "index_retrieve",
    "mine_hard",
    "nce_loss",
    "read_embeddings",
    "repeat_factor",
    "scaled_cosine",
    "write_embeddings",
]
