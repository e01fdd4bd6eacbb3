"""Vocabulary building and TF-IDF vectors.

Weights for a document with in-vocabulary length ``L``: ``tf = count / L``,
``idf = ln((1 + n_docs) / (1 + df)) + 1``; the vector is then L2-normalized.
With ``weighting="tf"`` the idf factor is dropped.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import EmptyCorpus, EmptyVocabulary
from .jsonio import dumps, format_float

WEIGHTINGS = ("tfidf", "tf")


@dataclass(frozen=True)
class SparseVector:
    """Sorted (index, weight) pairs; zero weights are never stored."""

    indices: tuple[int, ...] = ()
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.indices) != len(self.weights):
            raise ValueError("indices and weights differ in length")
        for a, b in zip(self.indices, self.indices[1:]):
            if a >= b:
                raise ValueError("indices must be strictly increasing")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "SparseVector":
        items = sorted((int(i), float(w)) for i, w in pairs if w != 0.0)
        return cls(tuple(i for i, _ in items), tuple(w for _, w in items))

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices, self.weights))

    @property
    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights))

    def __len__(self) -> int:
        return len(self.indices)

    def __bool__(self) -> bool:
        return bool(self.indices)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.indices, self.weights))

    def scaled(self, factor: float) -> "SparseVector":
        if factor == 0.0:
            return SparseVector()
        return SparseVector(self.indices, tuple(w * factor for w in self.weights))

    def normalized(self) -> "SparseVector":
        n = self.norm
        if n == 0.0:
            return SparseVector()
        return SparseVector(self.indices, tuple(w / n for w in self.weights))

    def to_dict(self) -> dict:
        return {"entries": [[i, w] for i, w in self.entries]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SparseVector":
        return cls.from_pairs((i, w) for i, w in d["entries"])


def vector_line(id_: str, vec: SparseVector) -> str:
    """One JSON Lines record ``{"entries": [[idx, weight], ...], "id": ...}``."""
    entries = ",".join(f"[{i},{format_float(w)}]" for i, w in vec.entries)
    return '{"entries":[' + entries + '],"id":' + dumps(id_) + "}"


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    df: Mapping[str, int]
    n_docs: int

    def __post_init__(self):
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term) -> bool:
        return term in self._index

    def index(self, term: str) -> int | None:
        return self._index.get(term)

    def idf(self, term: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.df[term])) + 1.0

    def to_dict(self) -> dict:
        return {"terms": list(self.terms), "df": {t: self.df[t] for t in self.terms}, "n_docs": self.n_docs}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Vocabulary":
        terms = tuple(d["terms"])
        return cls(terms=terms, df={t: int(d["df"][t]) for t in terms}, n_docs=int(d["n_docs"]))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Vocabulary)
            and self.terms == other.terms
            and dict(self.df) == dict(other.df)
            and self.n_docs == other.n_docs
        )


def _tokens_of(doc) -> Sequence[str]:
    return doc.tokens if hasattr(doc, "tokens") else doc


def build_vocabulary(docs: Iterable, min_df: int = 2, max_df_ratio: float = 0.5) -> Vocabulary:
    """Count document frequencies and keep terms with ``min_df <= df <= floor(max_df_ratio * n)``.

    ``docs`` may hold TokenizedDoc objects or plain token lists.
    """
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    if not 0.0 < max_df_ratio <= 1.0:
        raise ValueError("max_df_ratio must be in (0, 1]")
    df: Counter[str] = Counter()
    n_docs = 0
    for doc in docs:
        n_docs += 1
        df.update(set(_tokens_of(doc)))
    if n_docs == 0:
        raise EmptyCorpus("cannot build a vocabulary from zero documents")
    # round() guards products like 0.57 * 100 = 56.999999999999993
    max_df = math.floor(round(max_df_ratio * n_docs, 9))
    terms = tuple(sorted(t for t, c in df.items() if min_df <= c <= max_df))
    if not terms:
        raise EmptyVocabulary(
            f"no term survives min_df={min_df}, max_df={max_df} over {n_docs} documents"
        )
    return Vocabulary(terms=terms, df={t: df[t] for t in terms}, n_docs=n_docs)


def tfidf_from_counts(counts: Mapping[str, int], vocab: Vocabulary, weighting: str = "tfidf") -> SparseVector:
    if weighting not in WEIGHTINGS:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}")
    pairs = []
    length = 0
    for term, c in counts.items():
        idx = vocab.index(term)
        if idx is not None and c > 0:
            pairs.append((idx, term, c))
            length += c
    if not pairs:
        return SparseVector()
    pairs.sort()
    raw = []
    for idx, term, c in pairs:
        w = c / length
        if weighting == "tfidf":
            w *= vocab.idf(term)
        raw.append(w)
    norm = math.sqrt(sum(w * w for w in raw))
    return SparseVector(tuple(p[0] for p in pairs), tuple(w / norm for w in raw))


def tfidf_vector(doc, vocab: Vocabulary, weighting: str = "tfidf") -> SparseVector:
    return tfidf_from_counts(Counter(_tokens_of(doc)), vocab, weighting)


def dot(a: SparseVector, b: SparseVector) -> float:
    if len(a) > len(b):
        a, b = b, a
    bd = b.as_dict()
    return sum(w * bd.get(i, 0.0) for i, w in zip(a.indices, a.weights))


def cosine_similarity(a: SparseVector, b: SparseVector) -> float:
    if not a or not b:
        return 0.0
    denom = a.norm * b.norm
    if denom == 0.0:  # subnormal weights
        return 0.0
    value = dot(a, b) / denom
    return min(1.0, max(0.0, value))
