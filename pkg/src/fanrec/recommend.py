"""Cluster-affinity plus within-cluster collaborative filtering recommender.

For a fan ``u`` in cluster ``c`` and artist ``a``::

    affinity(c, a) = (m_a + beta) / (|c| + 2 * beta)
    cf(u, a)       = sum_v sim(u, v) * [v mentions a] / sum_v sim(u, v)
    score(u, a)    = alpha * affinity(c, a) + (1 - alpha) * cf(u, a)

where ``m_a`` counts cluster members who mention ``a`` at least once and ``v``
ranges over the other members of ``c``. ``cf`` is 0 when the denominator is 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .corpus import format_timestamp, parse_timestamp
from .errors import EmptyCluster
from .vectorize import SparseVector, cosine_similarity

DEFAULT_ALPHA = 0.6
DEFAULT_BETA = 1.0
DEFAULT_N = 5


@dataclass(frozen=True)
class ClusterAffinity:
    cluster: int
    affinity: Mapping[str, float]


@dataclass
class Recommendation:
    author_id: str
    items: list[tuple[str, float]]
    generated_at: datetime | None = None
    params: dict = field(default_factory=dict)

    @property
    def artists(self) -> list[str]:
        return [a for a, _ in self.items]

    def to_dict(self) -> dict:
        return {
            "author_id": self.author_id,
            "items": [[a, s] for a, s in self.items],
            "generated_at": None if self.generated_at is None else format_timestamp(self.generated_at),
            "params": dict(self.params),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Recommendation":
        ts = d.get("generated_at")
        return cls(
            author_id=d["author_id"],
            items=[(a, float(s)) for a, s in d["items"]],
            generated_at=None if ts is None else parse_timestamp(ts),
            params=dict(d.get("params", {})),
        )


def _artist_ids(catalog) -> list[str]:
    return catalog.names if hasattr(catalog, "names") else sorted(catalog)


def cluster_affinity(members: Sequence, catalog, beta: float = DEFAULT_BETA, cluster: int = 0) -> ClusterAffinity:
    if not members:
        raise EmptyCluster(f"cluster {cluster} has no members")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    size = len(members)
    aff = {}
    for a in _artist_ids(catalog):
        m = sum(1 for p in members if p.mention_counts.get(a, 0) > 0)
        aff[a] = (m + beta) / (size + 2 * beta)
    return ClusterAffinity(cluster=cluster, affinity=aff)


def score_user(fan, model, affinities, neighbors: Iterable, alpha: float = DEFAULT_ALPHA,
               similarities: Mapping[str, float] | None = None,
               similarity: Callable[[SparseVector, SparseVector], float] = cosine_similarity) -> dict[str, float]:
    """Hybrid score for every artist in the fan's cluster affinity table.

    ``affinities`` is a ClusterAffinity or a cluster index -> ClusterAffinity
    map. Neighbour similarities come from ``similarities`` (author_id -> sim)
    when given, else from ``similarity`` on the profile vectors.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    cluster = model.assignments[fan.author_id]
    aff = affinities if isinstance(affinities, ClusterAffinity) else affinities[cluster]
    num = {a: 0.0 for a in aff.affinity}
    den = 0.0
    for v in neighbors:
        if v.author_id == fan.author_id:
            continue
        if similarities is not None:
            s = similarities[v.author_id]
        else:
            s = similarity(fan.vector, v.vector)
        den += s
        for a, c in v.mention_counts.items():
            if c > 0 and a in num:
                num[a] += s
    scores = {}
    for a, p in aff.affinity.items():
        cf = num[a] / den if den > 0.0 else 0.0
        scores[a] = alpha * p + (1.0 - alpha) * cf
    return scores


def recommend_top_n(fan, scores: Mapping[str, float], n: int = DEFAULT_N, exclude_mentioned: bool = True,
                    generated_at: datetime | None = None, params: Mapping | None = None) -> Recommendation:
    if n < 1:
        raise ValueError("n must be >= 1")
    mentioned = fan.mentioned if exclude_mentioned else set()
    ranked = sorted(((a, s) for a, s in scores.items() if a not in mentioned), key=lambda t: (-t[1], t[0]))
    return Recommendation(
        author_id=fan.author_id,
        items=ranked[:n],
        generated_at=generated_at,
        params=dict(params or {}),
    )


def cluster_similarities(members: Sequence) -> np.ndarray:
    """Pairwise cosine similarities among ``members`` via one sparse product."""
    from .cluster import to_matrix

    dim = 1 + max((v.indices[-1] for v in (p.vector for p in members) if v), default=0)
    X = to_matrix([p.vector for p in members], dim)
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    G = np.asarray((X @ X.T).todense())
    outer = np.outer(norms, norms)
    with np.errstate(invalid="ignore", divide="ignore"):
        S = np.where(outer > 0, G / np.where(outer > 0, outer, 1.0), 0.0)
    return np.clip(S, 0.0, 1.0)


def recommend_all(profiles: Sequence, model, catalog, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA,
                  n: int = DEFAULT_N, exclude_mentioned: bool = True,
                  generated_at: datetime | None = None) -> list[Recommendation]:
    """Recommendations for every clustered profile, sorted by author_id."""
    by_id = {p.author_id: p for p in profiles}
    params = {"alpha": alpha, "beta": beta, "n": n, "exclude_mentioned": exclude_mentioned}
    out = []
    for c, ids in enumerate(model.members()):
        members = [by_id[a] for a in ids if a in by_id]
        if not members:
            continue
        aff = cluster_affinity(members, catalog, beta, cluster=c)
        S = cluster_similarities(members)
        for i, fan in enumerate(members):
            sims = {v.author_id: float(S[i, j]) for j, v in enumerate(members)}
            scores = score_user(fan, model, aff, members, alpha, similarities=sims)
            out.append(recommend_top_n(fan, scores, n, exclude_mentioned, generated_at, params))
    out.sort(key=lambda r: r.author_id)
    return out
