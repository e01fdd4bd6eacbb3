"""Pipeline stages with persisted artifacts under the work directory.

Layout (relative to ``paths.work_dir``)::

    synth/catalog.csv  synth/tweets.jsonl  synth/truth.json
    ingest/catalog.json  ingest/tweets.jsonl
    preprocess/docs.jsonl
    annotate/labels.jsonl
    vectorize/vocab.json  vectorize/doc_vectors.jsonl
    profiles/profiles.jsonl
    cluster/model.json
    recommend/recommendations.jsonl
    eval/metrics.json  eval/baseline.jsonl
    report/report.txt

Every JSON artifact carries ``config_hash``; JSON Lines artifacts start with a
``{"_header": {...}}`` line holding it. The synth corpus files use the plain
input formats and carry no header.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable

import numpy as np

from . import jsonio
from .annotate import AnnotationLabel, Annotator
from .cluster import ClusterModel, kmeans_fit, select_k, silhouette
from .config import PipelineConfig
from .corpus import (
    Tweet,
    format_timestamp,
    filter_corpus,
    parse_artist_catalog,
    parse_timestamp,
    parse_tweets,
    serialize_catalog,
    tweet_from_obj,
)
from .errors import ConfigError, DataError, MissingPrerequisite, NeedTwoClusters, StaleArtifact
from .evaluation import adjusted_rand_index, generate_synthetic_corpus, hit_rate_at_k, popularity_recommendations
from .fanmodel import DEFAULT_FACET_WEIGHT, FanProfile, build_fan_profiles, clusterable, profile_dim, vectorize_profiles
from .preprocess import TokenizedDoc, preprocess_tweet
from .recommend import Recommendation, recommend_all
from .rng import derive_seed
from .vectorize import Vocabulary, build_vocabulary, tfidf_vector, vector_line

log = logging.getLogger(__name__)

ARTIFACTS = {
    "synth_catalog": ("synth/catalog.csv", "synth"),
    "synth_tweets": ("synth/tweets.jsonl", "synth"),
    "truth": ("synth/truth.json", "synth"),
    "catalog": ("ingest/catalog.json", "ingest"),
    "tweets": ("ingest/tweets.jsonl", "ingest"),
    "docs": ("preprocess/docs.jsonl", "preprocess"),
    "labels": ("annotate/labels.jsonl", "annotate"),
    "vocab": ("vectorize/vocab.json", "vectorize"),
    "doc_vectors": ("vectorize/doc_vectors.jsonl", "vectorize"),
    "profiles": ("profiles/profiles.jsonl", "profiles"),
    "model": ("cluster/model.json", "cluster"),
    "recommendations": ("recommend/recommendations.jsonl", "recommend"),
    "metrics": ("eval/metrics.json", "eval"),
    "baseline": ("eval/baseline.jsonl", "eval"),
    "report": ("report/report.txt", "report"),
}

STAGES = ("synth", "ingest", "preprocess", "annotate", "vectorize", "profiles", "cluster", "recommend", "eval",
          "report")


class Workspace:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.root = Path(cfg.paths.work_dir)
        self.hash = cfg.content_hash()

    def path(self, name: str) -> Path:
        return self.root / ARTIFACTS[name][0]

    def require(self, name: str) -> Path:
        p = self.path(name)
        if not p.exists():
            raise MissingPrerequisite(p, ARTIFACTS[name][1])
        return p

    def header(self, name: str, **extra) -> dict:
        return {"artifact": name, "config_hash": self.hash, **extra}

    def artifact_hash(self, name: str) -> str | None:
        p = self.path(name)
        if p.suffix == ".jsonl":
            h = jsonio.read_jsonl_header(p)
            return None if h is None else h.get("config_hash")
        if p.suffix == ".json":
            return jsonio.read_json(p).get("config_hash")
        return None

    def check_fresh(self, name: str) -> None:
        h = self.artifact_hash(name)
        if h is not None and h != self.hash:
            log.warning("%s was produced with config %s, current config is %s", self.path(name), h, self.hash)

    # loaders -----------------------------------------------------------
    def load_catalog(self):
        p = self.require("catalog")
        self.check_fresh("catalog")
        return parse_artist_catalog(jsonio.read_json(p)["csv"])

    def load_tweets(self) -> list[tuple[Tweet, list[str]]]:
        p = self.require("tweets")
        self.check_fresh("tweets")
        out = []
        for n, rec in enumerate(jsonio.iter_jsonl(p), start=1):
            out.append((tweet_from_obj(rec, n), rec["artists"]))
        return out

    def load_docs(self) -> list[TokenizedDoc]:
        p = self.require("docs")
        self.check_fresh("docs")
        return [TokenizedDoc.from_dict(r) for r in jsonio.iter_jsonl(p)]

    def load_labels(self) -> dict[str, AnnotationLabel]:
        p = self.require("labels")
        self.check_fresh("labels")
        return {r["tweet_id"]: AnnotationLabel.from_dict(r) for r in jsonio.iter_jsonl(p)}

    def load_vocab(self) -> Vocabulary:
        p = self.require("vocab")
        self.check_fresh("vocab")
        return Vocabulary.from_dict(jsonio.read_json(p))

    def load_profiles(self) -> list[FanProfile]:
        p = self.require("profiles")
        self.check_fresh("profiles")
        return [FanProfile.from_dict(r) for r in jsonio.iter_jsonl(p)]

    def load_model(self) -> ClusterModel:
        p = self.require("model")
        self.check_fresh("model")
        return ClusterModel.from_dict(jsonio.read_json(p))

    def load_recommendations(self) -> list[Recommendation]:
        p = self.require("recommendations")
        self.check_fresh("recommendations")
        return [Recommendation.from_dict(r) for r in jsonio.iter_jsonl(p)]

    def load_truth(self) -> dict:
        return jsonio.read_json(self.require("truth"))

    def input_paths(self) -> tuple[Path, Path]:
        paths = self.cfg.paths
        catalog = Path(paths.catalog) if paths.catalog else self.path("synth_catalog")
        tweets = Path(paths.tweets) if paths.tweets else self.path("synth_tweets")
        for p, name in ((catalog, "synth_catalog"), (tweets, "synth_tweets")):
            if not p.exists():
                raise MissingPrerequisite(p, None if (paths.catalog and paths.tweets) else "synth")
        return catalog, tweets


def stage_synth(ws: Workspace) -> None:
    spec = ws.cfg.synth.spec(derive_seed(ws.cfg.seed, "synth"))
    corpus = generate_synthetic_corpus(spec)
    p = ws.path("synth_catalog")
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(serialize_catalog(corpus.catalog), encoding="utf-8")
    jsonio.write_jsonl(ws.path("synth_tweets"), (t.to_dict() for t in corpus.tweets))
    jsonio.write_json(ws.path("truth"), {
        "config_hash": ws.hash,
        "spec": spec.to_dict(),
        "clusters": corpus.truth,
        "heldout": corpus.heldout,
    })
    log.info("synthesized %d tweets by %d fans", len(corpus.tweets), len(corpus.truth))


def stage_ingest(ws: Workspace) -> None:
    catalog_path, tweets_path = ws.input_paths()
    catalog = parse_artist_catalog(catalog_path.read_text(encoding="utf-8"))
    with tweets_path.open("rb") as fh:
        tweets = list(parse_tweets(fh))
    if ws.cfg.preprocess.filter_corpus:
        kept = filter_corpus(tweets, catalog)
    else:
        kept = [(t, catalog.match(t.text)) for t in tweets]
    latest = max((t.created_at for t, _ in kept), default=None)
    jsonio.write_json(ws.path("catalog"), {
        "config_hash": ws.hash,
        "csv": serialize_catalog(catalog),
        "n_active": sum(r.active for r in catalog.records),
        "n_artists": len(catalog),
    })
    jsonio.write_jsonl(
        ws.path("tweets"),
        ({**t.to_dict(), "artists": sorted(a)} for t, a in kept),
        header=ws.header("tweets", n_input=len(tweets),
                         latest_created_at=None if latest is None else format_timestamp(latest)),
    )


def stage_preprocess(ws: Workspace) -> None:
    catalog = ws.load_catalog()
    docs = [preprocess_tweet(t, catalog) for t, _ in ws.load_tweets()]
    jsonio.write_jsonl(ws.path("docs"), (d.to_dict() for d in docs), header=ws.header("docs"))


def stage_annotate(ws: Workspace) -> None:
    mode = ws.cfg.annotate.mode
    labels: dict[str, AnnotationLabel] = {}
    if mode != "off":
        catalog = ws.load_catalog()
        tweets = ws.load_tweets()
        annotator = Annotator(ws.cfg.annotate.annotator, mode=mode)
        try:
            labels = annotator.annotate_batch(((t.id, t.text) for t, _ in tweets), catalog)
        finally:
            annotator.close()
        if annotator.failures:
            log.warning("%d annotation requests degraded to neutral/other", len(annotator.failures))
    jsonio.write_jsonl(
        ws.path("labels"),
        ({"tweet_id": tid, **lab.to_dict()} for tid, lab in labels.items()),
        header=ws.header("labels", mode=mode),
    )


def stage_vectorize(ws: Workspace) -> None:
    vc = ws.cfg.vectorize
    docs = ws.load_docs()
    vocab = build_vocabulary(docs, vc.min_df, vc.max_df_ratio)
    jsonio.write_json(ws.path("vocab"), {"config_hash": ws.hash, "weighting": vc.weighting, **vocab.to_dict()})
    p = ws.path("doc_vectors")
    with p.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(jsonio.dumps({jsonio.HEADER_KEY: ws.header("doc_vectors")}) + "\n")
        for d in docs:
            fh.write(vector_line(d.tweet_id, tfidf_vector(d, vocab, vc.weighting)) + "\n")


def _facet_weight(cfg: PipelineConfig, have_labels: bool) -> float:
    if not have_labels:
        return 0.0
    fw = cfg.profiles.facet_weight
    return DEFAULT_FACET_WEIGHT if fw is None else fw


def stage_profiles(ws: Workspace) -> None:
    docs = ws.load_docs()
    vocab = ws.load_vocab()
    labels = ws.load_labels() if ws.cfg.annotate.mode != "off" else {}
    fw = _facet_weight(ws.cfg, bool(labels))
    profiles = build_fan_profiles(docs, ws.cfg.profiles.min_tweets, labels or None)
    profiles = vectorize_profiles(profiles, vocab, fw, ws.cfg.vectorize.weighting)
    _, empty = clusterable(profiles)
    if empty:
        log.info("%d profiles have empty vectors and will not be clustered", len(empty))
    jsonio.write_jsonl(ws.path("profiles"), (p.to_dict() for p in profiles),
                       header=ws.header("profiles", facet_weight=fw, dim=profile_dim(vocab),
                                        n_empty=len(empty)))


def stage_cluster(ws: Workspace) -> None:
    cc = ws.cfg.cluster
    vocab = ws.load_vocab()
    keep, _ = clusterable(ws.load_profiles())
    pairs = [(p.author_id, p.vector) for p in keep]
    if not pairs:
        raise DataError("no profile has a non-empty vector; nothing to cluster")
    seed = derive_seed(ws.cfg.seed, "cluster")
    dim = profile_dim(vocab)
    scores = {}
    if cc.k is not None:
        model = kmeans_fit(pairs, cc.k, seed, cc.max_iter, cc.tol, dim=dim, n_jobs=cc.n_jobs)
    else:
        k_max = min(cc.k_max, len(pairs))
        if k_max < cc.k_min:
            raise DataError(f"only {len(pairs)} clusterable fans; cannot scan k from {cc.k_min}")
        k, scores, models = select_k(pairs, cc.k_min, k_max, seed, cc.max_iter, cc.tol, dim=dim,
                                     n_jobs=cc.n_jobs, return_scores=True)
        model = models[k]
    jsonio.write_json(ws.path("model"), {
        "config_hash": ws.hash,
        **model.to_dict(),
        "selection": [[k, s] for k, s in sorted(scores.items())],
    })


def _corpus_end(ws: Workspace):
    h = jsonio.read_jsonl_header(ws.require("tweets")) or {}
    ts = h.get("latest_created_at")
    return None if ts is None else parse_timestamp(ts)


def stage_recommend(ws: Workspace) -> None:
    rc = ws.cfg.recommend
    model = ws.load_model()
    catalog = ws.load_catalog()
    profiles = [p for p in ws.load_profiles() if p.author_id in model.assignments]
    recs = recommend_all(profiles, model, catalog, rc.alpha, rc.beta, rc.n, rc.exclude_mentioned,
                         generated_at=_corpus_end(ws))
    jsonio.write_jsonl(ws.path("recommendations"), (r.to_dict() for r in recs),
                       header=ws.header("recommendations"))


def stage_eval(ws: Workspace) -> None:
    truth = ws.load_truth()
    model = ws.load_model()
    catalog = ws.load_catalog()
    recs = ws.load_recommendations()
    profiles = [p for p in ws.load_profiles() if p.author_id in model.assignments]
    k = ws.cfg.eval.k
    fans = sorted(a for a in model.assignments if a in truth["clusters"])
    ari = adjusted_rand_index({a: truth["clusters"][a] for a in fans}, {a: model.assignments[a] for a in fans})
    try:
        sil = silhouette([(p.author_id, p.vector) for p in profiles], model.assignments, dim=model.dim)
    except NeedTwoClusters:
        sil = None
    rc = ws.cfg.recommend
    baseline = popularity_recommendations(profiles, catalog, rc.n, rc.exclude_mentioned,
                                          generated_at=_corpus_end(ws))
    jsonio.write_jsonl(ws.path("baseline"), (r.to_dict() for r in baseline), header=ws.header("baseline"))
    heldout = truth["heldout"]
    metrics = {
        "config_hash": ws.hash,
        "ari": ari,
        "silhouette": sil,
        "hit_rate_at_k": hit_rate_at_k(recs, heldout, k),
        "baseline_hit_rate_at_k": hit_rate_at_k(baseline, heldout, k),
        "n_fans_evaluated": sum(1 for r in recs if r.author_id in heldout),
        "params": {"k": k, "alpha": rc.alpha, "beta": rc.beta, "n": rc.n,
                   "exclude_mentioned": rc.exclude_mentioned, "clusters": model.k},
    }
    metrics["precision_at_k"] = metrics["hit_rate_at_k"]
    jsonio.write_json(ws.path("metrics"), metrics)


def stage_report(ws: Workspace) -> None:
    names = ["catalog", "tweets", "docs", "labels", "vocab", "doc_vectors", "profiles", "model",
             "recommendations", "metrics", "baseline", "truth"]
    required = {"catalog", "tweets", "docs", "vocab", "profiles", "model", "recommendations"}
    hashes = {}
    for name in names:
        if name in required:
            ws.require(name)
        if ws.path(name).exists():
            hashes[name] = ws.artifact_hash(name)
    distinct = {h for h in hashes.values() if h is not None}
    if len(distinct) > 1 or (distinct and ws.hash not in distinct):
        detail = ", ".join(f"{n}={h}" for n, h in sorted(hashes.items()))
        raise StaleArtifact(f"artifacts come from different configs (current {ws.hash}): {detail}")

    vocab = ws.load_vocab()
    model = ws.load_model()
    recs = ws.load_recommendations()
    lines = [f"fanrec report  config {ws.hash}", ""]
    tweets_hdr = jsonio.read_jsonl_header(ws.path("tweets")) or {}
    lines.append(f"tweets ingested: {tweets_hdr.get('n_input', '?')}, kept after artist filter: "
                 f"{sum(1 for _ in jsonio.iter_jsonl(ws.path('tweets')))}")
    lines.append(f"vocabulary: {len(vocab)} terms over {vocab.n_docs} documents")
    lines.append(f"clusters: k={model.k}, inertia={model.inertia:.6f}, iterations={model.iterations_run}")
    lines.append("")
    lines.append("cluster  size  top terms")
    sizes = model.sizes()
    nv = len(vocab)
    for c in range(model.k):
        cent = model.centroids[c, :nv]
        order = np.lexsort((np.arange(nv), -cent))[:8]
        terms = [vocab.terms[i] for i in order if cent[i] > 0]
        lines.append(f"{c:>7}  {sizes[c]:>4}  {' '.join(terms)}")
    lines.append("")
    lines.append(f"recommendations: {len(recs)} fans")
    if ws.path("metrics").exists():
        m = jsonio.read_json(ws.path("metrics"))
        k = m["params"]["k"]
        lines.append("")
        lines.append("metric                     value")
        for label, key in (("ARI", "ari"), ("silhouette", "silhouette"), (f"hit-rate@{k} hybrid", "hit_rate_at_k"),
                           (f"hit-rate@{k} popularity", "baseline_hit_rate_at_k")):
            v = m.get(key)
            lines.append(f"{label:<26} {'n/a' if v is None else format(v, '.4f')}")
    p = ws.path("report")
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")


STAGE_FUNCS: dict[str, Callable[[Workspace], None]] = {
    "synth": stage_synth,
    "ingest": stage_ingest,
    "preprocess": stage_preprocess,
    "annotate": stage_annotate,
    "vectorize": stage_vectorize,
    "profiles": stage_profiles,
    "cluster": stage_cluster,
    "recommend": stage_recommend,
    "eval": stage_eval,
    "report": stage_report,
}


def run_stage(stage: str, cfg: PipelineConfig) -> None:
    """Run one stage, or ``all`` for the full sequence."""
    cfg.validate()
    ws = Workspace(cfg)
    if stage == "all":
        if not (cfg.paths.catalog and cfg.paths.tweets):
            stage_synth(ws)
        for s in ("ingest", "preprocess", "annotate", "vectorize", "profiles", "cluster", "recommend"):
            STAGE_FUNCS[s](ws)
        if ws.path("truth").exists():
            stage_eval(ws)
        stage_report(ws)
        return
    if stage not in STAGE_FUNCS:
        raise ConfigError(f"unknown stage {stage!r}; choose from {', '.join(STAGES)} or all")
    STAGE_FUNCS[stage](ws)
