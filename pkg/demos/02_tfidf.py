"""Sparse TF-IDF vectors from token lists, checked against a dense computation."""
import math

import numpy as np

from fanrec import build_vocabulary, cosine_similarity, tfidf_vector

docs = [
    ["stream", "album", "album", "tonight"],
    ["concert", "tour", "tonight"],
    ["album", "tour", "fancam"],
    ["stream", "fancam"],
]

# min_df=1 keeps every term; the default (2) would drop singletons.
vocab = build_vocabulary(docs, min_df=1, max_df_ratio=1.0)
print("terms:", vocab.terms)
print("idf:  ", [round(vocab.idf(t), 4) for t in vocab.terms])

vectors = [tfidf_vector(d, vocab) for d in docs]
for d, v in zip(docs, vectors):
    print(f"{' '.join(d):28} -> {[(vocab.terms[i], round(w, 3)) for i, w in v.entries]}")

# The same numbers straight from the formula.
n = len(docs)
dense = np.array([[d.count(t) / len(d) * (math.log((1 + n) / (1 + vocab.df[t])) + 1) for j, t in
                   enumerate(vocab.terms)] for d in docs])
dense /= np.linalg.norm(dense, axis=1, keepdims=True)
sparse = np.zeros_like(dense)
for r, v in enumerate(vectors):
    sparse[r, list(v.indices)] = v.weights
print("max abs difference vs dense:", float(np.abs(dense - sparse).max()))

print("cosine(doc0, doc3) =", round(cosine_similarity(vectors[0], vectors[3]), 4))
