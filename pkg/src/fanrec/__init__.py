"""Fan-cluster K-pop artist recommendation from tweet corpora."""
from .annotate import (
    FACETS,
    SENTIMENTS,
    AnnotationLabel,
    Annotator,
    AnnotatorConfig,
    annotate_batch,
    build_prompt,
    parse_annotation,
    stub_annotate,
)
from .cluster import ClusterModel, assign, kmeans_fit, select_k, silhouette
from .corpus import (
    ArtistCatalog,
    ArtistRecord,
    Tweet,
    filter_corpus,
    match_artists,
    parse_artist_catalog,
    parse_tweets,
    serialize_catalog,
)
from .evaluation import (
    SynthSpec,
    adjusted_rand_index,
    generate_synthetic_corpus,
    hit_rate_at_k,
    popularity_recommendations,
    precision_at_k,
)
from .fanmodel import FanProfile, build_fan_profiles, profile_vector
from .preprocess import CleanText, TokenizedDoc, case_fold, clean_text, preprocess_tweet, tokenize
from .recommend import (
    ClusterAffinity,
    Recommendation,
    cluster_affinity,
    recommend_all,
    recommend_top_n,
    score_user,
)
from .rng import SplitMix64
from .vectorize import SparseVector, Vocabulary, build_vocabulary, cosine_similarity, tfidf_vector

__version__ = "0.1.0"
