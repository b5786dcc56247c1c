"""Inter-party ideological distances from politicians' social media posts.

Pipeline: ingest tweets and sentence embeddings, index hashtags, aggregate
per-topic cosine distances into party distance matrices, and validate them
against manifesto-derived ground truth with a permutation Mantel test.
"""

__version__ = "0.1.0"

from .corpus import (
    Candidacy,
    CorpusFilter,
    EmbeddingStore,
    Group,
    HashtagIndex,
    TweetRecord,
    apply_filter,
    build_index,
    eval_hashtags,
    extract_hashtags,
    load_embeddings,
    parse_tweets,
    store_embeddings,
    training_hashtags,
)
from .distances import (
    DistanceMatrix,
    TopicSlice,
    aggregate_topics,
    average_baseline,
    cosine,
    max_intra_sim,
    topic_distance_bruteforce,
    topic_distance_fast,
    twin,
    twin_distance,
    twin_matrix,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateCorpusError,
    FormatError,
    PartylineError,
    TruncationError,
)
from .experiments import (
    ExperimentReport,
    RunRecord,
    evaluate_tweets,
    export_centroids,
    generate_synthetic,
    run_full,
    run_groups,
    run_subsample,
    run_temporal,
    year_pool,
)
from .groundtruth import (
    CMPVector,
    UnknownCategoryWarning,
    build_cmp_vectors,
    cmp_distance_matrix,
)
from .mantel import MantelResult, Tail, mantel_test, pearson_r, upper_triangle
from .pairgen import PairConfig, PairLabel, TrainingPair, sample_pairs, write_pairs
