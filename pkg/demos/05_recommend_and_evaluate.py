"""Hybrid recommendations against a popularity baseline on held-out artists."""
from fanrec import (
    SynthSpec,
    build_fan_profiles,
    build_vocabulary,
    filter_corpus,
    generate_synthetic_corpus,
    hit_rate_at_k,
    kmeans_fit,
    popularity_recommendations,
    preprocess_tweet,
    recommend_all,
)
from fanrec.fanmodel import clusterable, profile_dim, vectorize_profiles

corpus = generate_synthetic_corpus(SynthSpec(n_clusters=4, fans_per_cluster=80, seed=2))
docs = [preprocess_tweet(t, corpus.catalog) for t, _ in filter_corpus(corpus.tweets, corpus.catalog)]
vocab = build_vocabulary(docs)
profiles, _ = clusterable(vectorize_profiles(build_fan_profiles(docs), vocab))
model = kmeans_fit([(p.author_id, p.vector) for p in profiles], 4, seed=0, dim=profile_dim(vocab))

# Each fan has one preferred artist they never tweeted about; can we find it?
recs = recommend_all(profiles, model, corpus.catalog, alpha=0.6, beta=1.0, n=5)
base = popularity_recommendations(profiles, corpus.catalog, n=5)

sample = recs[0]
print(f"fan {sample.author_id} (held out: {corpus.heldout.get(sample.author_id)})")
for artist, score in sample.items:
    print(f"  {artist}  {score:.4f}")

print(f"\nhit-rate@5 hybrid     {hit_rate_at_k(recs, corpus.heldout, 5):.3f}")
print(f"hit-rate@5 popularity {hit_rate_at_k(base, corpus.heldout, 5):.3f}")

for alpha in (0.0, 0.3, 0.6, 1.0):
    r = recommend_all(profiles, model, corpus.catalog, alpha=alpha, beta=1.0, n=5)
    print(f"  alpha={alpha:.1f}: {hit_rate_at_k(r, corpus.heldout, 5):.3f}")
