"""Per-author fan profiles and their blended text/facet vectors."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .annotate import FACETS
from .vectorize import SparseVector, Vocabulary, tfidf_from_counts

DEFAULT_MIN_TWEETS = 3
DEFAULT_FACET_WEIGHT = 0.3


@dataclass
class FanProfile:
    author_id: str
    n_tweets: int
    token_counts: dict[str, int] = field(default_factory=dict)
    mention_counts: dict[str, int] = field(default_factory=dict)
    facet_counts: dict[str, int] = field(default_factory=lambda: {f: 0 for f in FACETS})
    vector: SparseVector | None = None

    @property
    def mentioned(self) -> set[str]:
        return {a for a, c in self.mention_counts.items() if c > 0}

    @property
    def has_vector(self) -> bool:
        return self.vector is not None and len(self.vector) > 0

    def to_dict(self) -> dict:
        d = {
            "author_id": self.author_id,
            "n_tweets": self.n_tweets,
            "token_counts": dict(self.token_counts),
            "mention_counts": dict(self.mention_counts),
            "facet_counts": dict(self.facet_counts),
        }
        if self.vector is not None:
            d["vector"] = self.vector.to_dict()["entries"]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "FanProfile":
        vec = d.get("vector")
        return cls(
            author_id=d["author_id"],
            n_tweets=int(d["n_tweets"]),
            token_counts={k: int(v) for k, v in d["token_counts"].items()},
            mention_counts={k: int(v) for k, v in d["mention_counts"].items()},
            facet_counts={f: int(d["facet_counts"].get(f, 0)) for f in FACETS},
            vector=None if vec is None else SparseVector.from_pairs((i, w) for i, w in vec),
        )


def build_fan_profiles(docs: Iterable, min_tweets: int = DEFAULT_MIN_TWEETS,
                       annotations: Mapping | None = None) -> list[FanProfile]:
    """Sum each author's tokens, artist mentions and (optional) annotation facets.

    Authors with fewer than ``min_tweets`` documents are dropped; the result is
    sorted by author_id.
    """
    tokens: dict[str, Counter] = {}
    mentions: dict[str, Counter] = {}
    facets: dict[str, Counter] = {}
    counts: Counter[str] = Counter()
    for doc in docs:
        a = doc.author_id
        counts[a] += 1
        tokens.setdefault(a, Counter()).update(doc.tokens)
        mentions.setdefault(a, Counter()).update(doc.artists)
        fc = facets.setdefault(a, Counter())
        if annotations is not None:
            label = annotations.get(doc.tweet_id)
            if label is not None:
                fc[label.facet] += 1
    profiles = []
    for a in sorted(counts):
        if counts[a] < min_tweets:
            continue
        profiles.append(
            FanProfile(
                author_id=a,
                n_tweets=counts[a],
                token_counts=dict(sorted(tokens[a].items())),
                mention_counts=dict(sorted(mentions[a].items())),
                facet_counts={f: facets[a].get(f, 0) for f in FACETS},
            )
        )
    return profiles


def facet_vector(facet_counts: Mapping[str, int], offset: int) -> SparseVector:
    pairs = [(offset + j, float(facet_counts.get(f, 0))) for j, f in enumerate(FACETS)]
    return SparseVector.from_pairs(pairs).normalized()


def profile_vector(profile: FanProfile, vocab: Vocabulary, facet_weight: float = 0.0,
                   weighting: str = "tfidf") -> SparseVector:
    """Text TF-IDF block scaled by (1 - w) joined to the unit facet block scaled by w.

    Facet dimensions follow the vocabulary, in ``FACETS`` order. The joint
    vector is renormalized; w = 0 returns the text vector unchanged.
    """
    if not 0.0 <= facet_weight <= 1.0:
        raise ValueError("facet_weight must lie in [0, 1]")
    text = tfidf_from_counts(profile.token_counts, vocab, weighting)
    if facet_weight == 0.0:
        return text
    facets = facet_vector(profile.facet_counts, len(vocab))
    if facet_weight == 1.0:
        return facets
    if not facets:
        return text
    if not text:
        return facets
    a, b = 1.0 - facet_weight, facet_weight
    weights = tuple(w * a for w in text.weights) + tuple(w * b for w in facets.weights)
    norm = math.sqrt(sum(w * w for w in weights))
    return SparseVector(text.indices + facets.indices, tuple(w / norm for w in weights))


def vectorize_profiles(profiles: Iterable[FanProfile], vocab: Vocabulary, facet_weight: float = 0.0,
                       weighting: str = "tfidf") -> list[FanProfile]:
    return [replace(p, vector=profile_vector(p, vocab, facet_weight, weighting)) for p in profiles]


def clusterable(profiles: Iterable[FanProfile]) -> tuple[list[FanProfile], list[FanProfile]]:
    """Split into (profiles with a non-empty vector, flagged empty ones)."""
    keep, empty = [], []
    for p in profiles:
        (keep if p.has_vector else empty).append(p)
    return keep, empty


def profile_dim(vocab: Vocabulary) -> int:
    return len(vocab) + len(FACETS)
