"""Planted-partition synthetic corpora and offline metrics.

Generation draws from one SplitMix64 stream seeded with ``spec.seed`` in this
order:

1. shuffle of the global fan indices (the shuffled position becomes the
   numeric part of the author id, so ids carry no cluster information);
2. for each cluster, for each fan: ``randbelow(A)`` picks the held-out artist;
   then for each tweet: per token ``random() < noise`` chooses shared vs
   cluster vocabulary and ``randbelow`` picks the term; ``random() <
   mention_prob`` decides a mention, followed by ``randbelow(A - 1)`` for the
   artist among the fan's non-held-out ones, ``randbelow(len + 1)`` for its
   position and ``random() < 0.5`` for hashtag form; ``random() < 0.1`` adds a
   leading @-handle (then ``randbelow(10000)``) and ``random() < 0.1`` a trailing
   URL (then ``randbelow(1 << 30)``); finally ``randbelow(14 * 86400)`` seconds
   after 2023-10-10T00:00:00Z for the timestamp.

Each fan prefers every artist of their cluster, so a held-out artist is still
preferred by all cluster peers.
"""
from __future__ import annotations

import math
from fractions import Fraction
from collections import Counter
from dataclasses import asdict, dataclass
from datetime import date, datetime, timedelta, timezone
from typing import Mapping, Sequence

from .corpus import ArtistCatalog, ArtistRecord, Tweet, canonical_alias
from .errors import PartitionMismatch, SpecError
from .recommend import Recommendation, recommend_top_n
from .rng import SplitMix64

EPOCH = datetime(2023, 10, 10, tzinfo=timezone.utc)
WINDOW_SECONDS = 14 * 86400


@dataclass(frozen=True)
class SynthSpec:
    n_clusters: int = 4
    fans_per_cluster: int = 200
    tweets_per_fan: int = 10
    vocab_per_cluster: int = 40
    shared_vocab: int = 200
    noise: float = 0.2
    artists_per_cluster: int = 5
    mention_prob: float = 0.6
    seed: int = 0
    tokens_per_tweet: int = 8

    def validate(self) -> None:
        if self.n_clusters < 2:
            raise SpecError("n_clusters must be >= 2")
        for name in ("fans_per_cluster", "tweets_per_fan", "vocab_per_cluster", "shared_vocab", "tokens_per_tweet"):
            if getattr(self, name) < 1:
                raise SpecError(f"{name} must be positive")
        if self.artists_per_cluster < 2:
            raise SpecError("artists_per_cluster must be >= 2 so one artist can be held out")
        if not 0.0 <= self.noise < 1.0:
            raise SpecError("noise must lie in [0, 1)")
        if not 0.0 < self.mention_prob <= 1.0:
            raise SpecError("mention_prob must lie in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SynthCorpus:
    tweets: list[Tweet]
    catalog: ArtistCatalog
    truth: dict[str, int]
    heldout: dict[str, str]
    preferred: dict[str, tuple[str, ...]]


def cluster_term(c: int, i: int) -> str:
    return f"k{c}w{i:03d}"


def shared_term(i: int) -> str:
    return f"sh{i:03d}"


def artist_name(c: int, j: int) -> str:
    return f"C{c:02d}-A{j:02d}"


def generate_synthetic_corpus(spec: SynthSpec) -> SynthCorpus:
    spec.validate()
    rng = SplitMix64(spec.seed)
    C, F, A = spec.n_clusters, spec.fans_per_cluster, spec.artists_per_cluster
    genders = ("Female", "Male", "Mixed")
    records = []
    for c in range(C):
        for j in range(A):
            name = artist_name(c, j)
            records.append(ArtistRecord(
                name=name, gender=genders[(c + j) % 3], debut=date(2015 + c % 8, 1 + j % 12, 1),
                agency="Synth", size=1 + (j % 7), active=True, aliases=(canonical_alias(name), name),
            ))
    catalog = ArtistCatalog(records)

    order = list(range(C * F))
    rng.shuffle(order)
    width = max(5, len(str(C * F)))
    truth: dict[str, int] = {}
    heldout: dict[str, str] = {}
    preferred: dict[str, tuple[str, ...]] = {}
    raw = []
    for c in range(C):
        artists = [artist_name(c, j) for j in range(A)]
        for f in range(F):
            author = f"u{order[c * F + f]:0{width}d}"
            truth[author] = c
            preferred[author] = tuple(artists)
            held = artists[rng.randbelow(A)]
            heldout[author] = held
            others = [a for a in artists if a != held]
            for _ in range(spec.tweets_per_fan):
                words = []
                for _ in range(spec.tokens_per_tweet):
                    if rng.random() < spec.noise:
                        words.append(shared_term(rng.randbelow(spec.shared_vocab)))
                    else:
                        words.append(cluster_term(c, rng.randbelow(spec.vocab_per_cluster)))
                if rng.random() < spec.mention_prob:
                    artist = others[rng.randbelow(A - 1)]
                    pos = rng.randbelow(len(words) + 1)
                    form = "#" + artist.replace("-", "") if rng.random() < 0.5 else artist
                    words.insert(pos, form)
                if rng.random() < 0.1:
                    words.insert(0, f"@fan{rng.randbelow(10000)}")
                if rng.random() < 0.1:
                    words.append(f"https://t.co/{rng.randbelow(1 << 30):x}")
                ts = EPOCH + timedelta(seconds=rng.randbelow(WINDOW_SECONDS))
                raw.append((ts, author, " ".join(words)))
    tweets = []
    for n, (ts, author, text) in enumerate(raw):
        tweets.append(Tweet(id=f"t{n:08d}", author_id=author, created_at=ts, text=text, lang="en"))
    tweets.sort(key=lambda t: (t.created_at, t.id))
    return SynthCorpus(tweets=tweets, catalog=catalog, truth=truth, heldout=heldout, preferred=preferred)


def adjusted_rand_index(truth: Mapping, pred: Mapping) -> float:
    """ARI from the pair-counting contingency table.

    Both arguments map element -> cluster label. When both partitions are
    trivial in the same way (the expected index equals its maximum) the
    result is 1.0.
    """
    if set(truth) != set(pred):
        raise PartitionMismatch("partitions cover different element sets")
    n = len(truth)
    if n < 2:
        return 1.0
    table = Counter((truth[e], pred[e]) for e in truth)
    rows = Counter(truth[e] for e in truth)
    cols = Counter(pred[e] for e in pred)
    index = sum(math.comb(v, 2) for v in table.values())
    sum_a = sum(math.comb(v, 2) for v in rows.values())
    sum_b = sum(math.comb(v, 2) for v in cols.values())
    total = math.comb(n, 2)
    expected = Fraction(sum_a * sum_b, total)
    max_index = Fraction(sum_a + sum_b, 2)
    if max_index == expected:
        return 1.0
    return float((index - expected) / (max_index - expected))


def precision_at_k(recs: Recommendation, heldout: str, k: int) -> float:
    """1.0 when the held-out artist is among the first k items, else 0.0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 1.0 if heldout in recs.artists[:k] else 0.0


def hit_rate_at_k(recs: Mapping[str, Recommendation] | Sequence[Recommendation], heldout: Mapping[str, str],
                  k: int) -> float:
    """Mean per-fan hit over fans that have both a recommendation and a held-out artist."""
    if not isinstance(recs, Mapping):
        recs = {r.author_id: r for r in recs}
    fans = [a for a in sorted(recs) if a in heldout]
    if not fans:
        return 0.0
    return sum(precision_at_k(recs[a], heldout[a], k) for a in fans) / len(fans)


def popularity_scores(profiles: Sequence, catalog) -> dict[str, float]:
    """Global popularity: tweets mentioning each artist, summed over fans."""
    counts = {a: 0 for a in catalog.names}
    for p in profiles:
        for a, c in p.mention_counts.items():
            if a in counts:
                counts[a] += c
    return {a: float(c) for a, c in counts.items()}


def popularity_recommendations(profiles: Sequence, catalog, n: int = 5, exclude_mentioned: bool = True,
                               generated_at=None) -> list[Recommendation]:
    scores = popularity_scores(profiles, catalog)
    params = {"baseline": "popularity", "n": n, "exclude_mentioned": exclude_mentioned}
    return [recommend_top_n(p, scores, n, exclude_mentioned, generated_at, params)
            for p in sorted(profiles, key=lambda p: p.author_id)]
