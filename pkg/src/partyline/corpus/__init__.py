"""Corpus ingestion: tweet records, embeddings, hashtag index, filters."""

from .embeddings import EmbeddingStore, load_embeddings, store_embeddings
from .filters import CorpusFilter, Group, apply_filter
from .index import HashtagIndex, build_index, eval_hashtags, training_hashtags
from .records import (
    Candidacy,
    TweetRecord,
    extract_hashtags,
    format_timestamp,
    iter_tweets,
    normalize_hashtag,
    parse_timestamp,
    parse_tweets,
    tweet_to_json,
)

__all__ = [
    "Candidacy",
    "CorpusFilter",
    "EmbeddingStore",
    "Group",
    "HashtagIndex",
    "TweetRecord",
    "apply_filter",
    "build_index",
    "eval_hashtags",
    "extract_hashtags",
    "format_timestamp",
    "iter_tweets",
    "load_embeddings",
    "normalize_hashtag",
    "parse_timestamp",
    "parse_tweets",
    "store_embeddings",
    "training_hashtags",
    "tweet_to_json",
]
