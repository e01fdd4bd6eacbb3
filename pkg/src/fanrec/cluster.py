"""Seeded k-means (k-means++ then Lloyd), silhouette, and k selection.

Points are sparse rows, centroids are dense. Inputs are always reordered by
id before seeding, so the fitted model does not depend on input order.
Point-level work runs over fixed-size row chunks whose partial results are
combined in chunk order, which keeps the output bit-identical whatever the
number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .errors import EmptyInput, InvalidK, NeedTwoClusters
from .jsonio import dumps
from .rng import SplitMix64
from .vectorize import SparseVector

CHUNK = 256
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-6
DEFAULT_K_RANGE = (4, 16)


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: dict[str, int]
    inertia: float
    seed: int
    iterations_run: int
    history: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def members(self) -> list[list[str]]:
        out: list[list[str]] = [[] for _ in range(self.k)]
        for a in sorted(self.assignments):
            out[self.assignments[a]].append(a)
        return out

    def sizes(self) -> list[int]:
        return [len(m) for m in self.members()]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "inertia": float(self.inertia),
            "iterations_run": self.iterations_run,
            "centroids": [[float(x) for x in row] for row in self.centroids],
            "assignments": [[a, self.assignments[a]] for a in sorted(self.assignments)],
            "history": [float(h) for h in self.history],
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping) -> "ClusterModel":
        return cls(
            k=int(d["k"]),
            centroids=np.array(d["centroids"], dtype=np.float64).reshape(int(d["k"]), -1),
            assignments={a: int(i) for a, i in d["assignments"]},
            inertia=float(d["inertia"]),
            seed=int(d["seed"]),
            iterations_run=int(d.get("iterations_run", 0)),
            history=[float(h) for h in d.get("history", [])],
        )


def _as_pairs(vectors) -> list[tuple[str, SparseVector]]:
    if isinstance(vectors, Mapping):
        pairs = list(vectors.items())
    else:
        pairs = list(vectors)
    pairs.sort(key=lambda p: p[0])
    for a, b in zip(pairs, pairs[1:]):
        if a[0] == b[0]:
            raise ValueError(f"duplicate id {a[0]!r}")
    return pairs


def to_matrix(vectors: Sequence[SparseVector], dim: int | None = None) -> sp.csr_matrix:
    """Stack sparse vectors as CSR rows (``dim`` defaults to max index + 1)."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for v in vectors:
        indices.extend(v.indices)
        data.extend(v.weights)
        indptr.append(len(indices))
    if dim is None:
        dim = (max(indices) + 1) if indices else 1
    elif indices and max(indices) >= dim:
        raise ValueError("vector index exceeds dim")
    return sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(vectors), dim),
    )


class _Points:
    def __init__(self, X: sp.csr_matrix, n_jobs: int):
        self.X = X
        self.n = X.shape[0]
        self.sqnorm = np.asarray(X.multiply(X).sum(axis=1)).ravel()
        self.chunks = [(s, min(s + CHUNK, self.n)) for s in range(0, self.n, CHUNK)]
        self.n_jobs = max(1, int(n_jobs))

    def _map(self, fn):
        if self.n_jobs == 1 or len(self.chunks) == 1:
            return [fn(c) for c in self.chunks]
        with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
            return list(pool.map(fn, self.chunks))

    def sqdist_to(self, c: np.ndarray) -> np.ndarray:
        cc = float(c @ c)

        def part(chunk):
            s, e = chunk
            d = self.sqnorm[s:e] - 2.0 * (self.X[s:e] @ c) + cc
            return np.maximum(d, 0.0)

        return np.concatenate(self._map(part))

    def assign(self, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cc = np.einsum("ij,ij->i", C, C)

        def part(chunk):
            s, e = chunk
            d = self.sqnorm[s:e, None] - 2.0 * np.asarray(self.X[s:e] @ C.T) + cc[None, :]
            d = np.maximum(d, 0.0)
            lab = np.argmin(d, axis=1)
            return lab, d[np.arange(e - s), lab]

        parts = self._map(part)
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def sums(self, labels: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        def part(chunk):
            s, e = chunk
            lab = labels[s:e]
            ind = sp.csr_matrix((np.ones(e - s), (lab, np.arange(e - s))), shape=(k, e - s))
            return np.asarray((ind @ self.X[s:e]).todense()), np.bincount(lab, minlength=k)

        total = np.zeros((k, self.X.shape[1]))
        counts = np.zeros(k, dtype=np.int64)
        for s_part, c_part in self._map(part):
            total += s_part
            counts += c_part
        return total, counts

    def row(self, i: int) -> np.ndarray:
        return np.asarray(self.X[i].todense()).ravel()


def _draw(closest: np.ndarray, rng: SplitMix64) -> int:
    cum = np.cumsum(closest)
    idx = int(np.searchsorted(cum, rng.random() * float(cum[-1]), side="right"))
    if idx >= len(closest) or closest[idx] == 0.0:
        idx = int(np.flatnonzero(closest > 0.0)[-1])
    return idx


def _kmeanspp(points: _Points, k: int, rng: SplitMix64, local_trials: int | None = None) -> list[int]:
    """Greedy k-means++: each new centre is the best of ``local_trials`` D^2 draws.

    The winner is the candidate giving the smallest total squared distance
    (first drawn wins ties). ``local_trials=1`` is the classic single draw.
    """
    n = points.n
    trials = 2 + int(math.log(k)) if local_trials is None else int(local_trials)
    if trials < 1:
        raise ValueError("local_trials must be >= 1")
    chosen = [rng.randbelow(n)]
    closest = points.sqdist_to(points.row(chosen[0]))
    closest[chosen[0]] = 0.0
    for _ in range(1, k):
        if float(closest.sum()) <= 0.0:
            taken = set(chosen)
            idx = next(i for i in range(n) if i not in taken)
            best = np.minimum(closest, points.sqdist_to(points.row(idx)))
        else:
            best, idx, best_pot = None, -1, math.inf
            for _t in range(trials):
                cand = _draw(closest, rng)
                merged = np.minimum(closest, points.sqdist_to(points.row(cand)))
                pot = float(merged.sum())
                if pot < best_pot:
                    best, idx, best_pot = merged, cand, pot
        chosen.append(idx)
        closest = best
        for c in chosen:
            closest[c] = 0.0
    return chosen


def kmeans_fit(vectors, k: int, seed: int = 0, max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL,
               dim: int | None = None, n_jobs: int = 1, local_trials: int | None = None) -> ClusterModel:
    """Fit k-means to ``(id, SparseVector)`` pairs (or an id -> vector mapping).

    ``history`` holds the objective after the initial assignment and after
    each Lloyd iteration; it never increases. A cluster left empty by an
    update is moved onto the point farthest from its current centroid.
    ``local_trials`` sets the candidates per seeding step (default 2 + ln k).
    """
    pairs = _as_pairs(vectors)
    n = len(pairs)
    if n == 0:
        raise EmptyInput("kmeans_fit needs at least one vector")
    if not 1 <= k <= n:
        raise InvalidK(f"k={k} outside [1, {n}]")
    ids = [p[0] for p in pairs]
    points = _Points(to_matrix([p[1] for p in pairs], dim), n_jobs)
    rng = SplitMix64(seed)
    seeds = _kmeanspp(points, k, rng, local_trials)
    C = np.vstack([points.row(i) for i in seeds])
    labels, d = points.assign(C)
    history = [float(d.sum())]
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        totals, counts = points.sums(labels, k)
        new_C = C.copy()
        nonempty = counts > 0
        new_C[nonempty] = totals[nonempty] / counts[nonempty, None]
        if not nonempty.all():
            far = d.copy()
            for j in np.flatnonzero(~nonempty):
                i = int(np.argmax(far))
                new_C[j] = points.row(i)
                far[i] = -1.0
        shift = float(np.sqrt(((new_C - C) ** 2).sum(axis=1)).max())
        C = new_C
        labels, d = points.assign(C)
        history.append(float(d.sum()))
        if shift < tol:
            break
    return ClusterModel(
        k=k,
        centroids=C,
        assignments={a: int(l) for a, l in zip(ids, labels)},
        inertia=history[-1],
        seed=seed,
        iterations_run=iterations,
        history=history,
    )


def assign(model: ClusterModel, vector: SparseVector) -> int:
    """Nearest centroid by squared Euclidean distance; ties go to the lowest index."""
    x = np.zeros(model.dim)
    for i, w in vector.entries:
        if i >= model.dim:
            raise ValueError("vector index exceeds model dimension")
        x[i] = w
    d = ((model.centroids - x) ** 2).sum(axis=1)
    return int(np.argmin(d))


def _dense(vectors) -> tuple[list[str], np.ndarray]:
    pairs = _as_pairs(vectors)
    return [p[0] for p in pairs], to_matrix([p[1] for p in pairs]).toarray()


def silhouette(vectors, assignments: Mapping[str, int], dim: int | None = None) -> float:
    """Mean silhouette with Euclidean distance; singleton-cluster points score 0.

    ``vectors`` are ``(id, SparseVector)`` pairs, an id -> vector mapping, or a
    dense ``(n, d)`` array whose rows line up with ``assignments`` in sorted-id order.
    """
    if isinstance(vectors, np.ndarray):
        ids = sorted(assignments)
        X = vectors
    else:
        pairs = _as_pairs(vectors)
        ids = [p[0] for p in pairs]
        X = to_matrix([p[1] for p in pairs], dim).toarray()
    labels = np.array([assignments[a] for a in ids])
    uniq, labels = np.unique(labels, return_inverse=True)
    k = len(uniq)
    if k < 2:
        raise NeedTwoClusters("silhouette needs at least two non-empty clusters")
    n = len(ids)
    sizes = np.bincount(labels, minlength=k)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    s = np.zeros(n)
    for start in range(0, n, 1024):
        stop = min(start + 1024, n)
        D = cdist(X[start:stop], X)  # exact differences: identical points give 0
        sums = D @ onehot
        lab = labels[start:stop]
        own = sizes[lab]
        a = sums[np.arange(stop - start), lab] / np.maximum(own - 1, 1)
        other = sums / sizes[None, :]
        other[np.arange(stop - start), lab] = np.inf
        b = other.min(axis=1)
        m = np.maximum(a, b)
        with np.errstate(invalid="ignore", divide="ignore"):
            val = np.where(m > 0, (b - a) / np.where(m > 0, m, 1.0), 0.0)
        val[own == 1] = 0.0
        s[start:stop] = val
    return float(s.mean())


def select_k(vectors, k_min: int, k_max: int, seed: int = 0, max_iter: int = DEFAULT_MAX_ITER,
             tol: float = DEFAULT_TOL, dim: int | None = None, n_jobs: int = 1,
             return_scores: bool = False):
    """Return the k in ``[k_min, k_max]`` with the best silhouette (ties: smallest k)."""
    pairs = _as_pairs(vectors)
    n = len(pairs)
    if not 2 <= k_min <= k_max <= n:
        raise InvalidK(f"need 2 <= k_min <= k_max <= n, got {k_min}, {k_max}, n={n}")
    X = to_matrix([p[1] for p in pairs], dim).toarray()
    best_k, best = k_min, -math.inf
    scores: dict[int, float] = {}
    models: dict[int, ClusterModel] = {}
    for k in range(k_min, k_max + 1):
        model = kmeans_fit(pairs, k, seed=seed, max_iter=max_iter, tol=tol, dim=dim, n_jobs=n_jobs)
        try:
            score = silhouette(X, model.assignments)
        except NeedTwoClusters:
            score = -1.0
        scores[k] = score
        models[k] = model
        if score > best:
            best_k, best = k, score
    if return_scores:
        return best_k, scores, models
    return best_k
