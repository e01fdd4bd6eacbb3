"""Acceptance gate: one test per criterion, each emitting a PASS/FAIL line.

The lines are also collected and replayed in the pytest terminal summary
(see conftest.py), so they show up in a plain ``pytest -v`` run.
"""
import itertools
import json
import math
import random
import threading
import time
from datetime import date
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from fanrec import (
    AnnotationLabel,
    Annotator,
    AnnotatorConfig,
    ClusterModel,
    SparseVector,
    build_vocabulary,
    cluster_affinity,
    cosine_similarity,
    kmeans_fit,
    parse_annotation,
    parse_artist_catalog,
    preprocess_tweet,
    score_user,
    stub_annotate,
    tfidf_vector,
)
from fanrec.annotate import PermanentError, TransientError, build_prompt, cache_key
from fanrec.config import PipelineConfig, apply_override
from fanrec.corpus import parse_tweets
from fanrec.errors import EnumError, NoJsonFound, SchemaError
from fanrec.fanmodel import FanProfile
from fanrec.jsonio import dumps
from fanrec.pipeline import run_stage

from conftest import TABLE1_CSV, record_acceptance

def verdict(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} ({detail})"
    print(line)
    record_acceptance(line)
    assert ok, line


def tree(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


# 1 ---------------------------------------------------------------------------

def dense_reference(docs, terms, n):
    df = {t: sum(1 for d in docs if t in d) for t in terms}
    out = []
    for d in docs:
        L = len(d)
        raw = []
        for t in terms:
            c = d.count(t)
            raw.append(0.0 if c == 0 else (c / L) * (math.log((1 + n) / (1 + df[t])) + 1.0))
        norm = math.sqrt(sum(x * x for x in raw))
        out.append([x / norm if norm else 0.0 for x in raw])
    return out


def test_criterion_1_tfidf_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for seed in range(100):
        rng = random.Random(seed)
        n_docs = rng.randint(1, 20)
        pool = [f"t{i:02d}" for i in range(rng.randint(1, 50))]
        docs = [[rng.choice(pool) for _ in range(rng.randint(0, 30))] for _ in range(n_docs)]
        vocab = build_vocabulary(docs, min_df=1, max_df_ratio=1.0)
        ref = dense_reference(docs, vocab.terms, n_docs)
        for d, row in zip(docs, ref):
            got = np.zeros(len(vocab.terms))
            v = tfidf_vector(d, vocab)
            got[list(v.indices)] = v.weights
            if sorted(vocab.terms) != list(vocab.terms):
                ok = False
            worst = max(worst, float(np.max(np.abs(got - np.array(row)), initial=0.0)))
    elapsed = time.perf_counter() - t0
    ok = ok and worst <= 1e-9 and elapsed < 5.0
    verdict(1, "TF-IDF matches dense brute force", ok, f"max |diff| {worst:.2e} <= 1e-9, {elapsed:.2f}s < 5s")


# 2 ---------------------------------------------------------------------------

def test_criterion_2_golden_corpus(data_dir, golden_catalog):
    with open(data_dir / "golden_tweets.jsonl", "rb") as fh:
        tweets = list(parse_tweets(fh))
    got = "".join(dumps(preprocess_tweet(t, golden_catalog).to_dict()) + "\n" for t in tweets)
    want = (data_dir / "golden_docs.jsonl").read_text(encoding="utf-8")
    n_hashtag_only = sum(1 for line in want.splitlines() if json.loads(line)["tokens"] == [])
    ok = len(tweets) == 25 and got == want
    verdict(2, "golden preprocessing corpus is byte-exact", ok,
            f"{len(tweets)} tweets, {n_hashtag_only} with no surviving tokens")


# 3 ---------------------------------------------------------------------------

def test_criterion_3_catalog_fidelity():
    cat = parse_artist_catalog(TABLE1_CSV)
    r = {a.name: a for a in cat.records}
    checks = [
        (r["(G)I-DLE"].debut, date(2018, 5, 2)), (r["(G)I-DLE"].agency, "Cube"),
        (r["(G)I-DLE"].size, 5), (r["(G)I-DLE"].active, True),
        (r["KARA"].debut, date(2007, 3, 29)), (r["KARA"].active, False),
        (r["iKON"].debut, date(2015, 9, 15)), (r["iKON"].active, True),
        (len(cat.records), 6),
    ]
    bad = [(g, w) for g, w in checks if g != w]
    verdict(3, "sample catalog rows parse exactly", not bad, f"{len(checks) - len(bad)}/{len(checks)} fields")


# 4 and 6 share the planted corpora ------------------------------------------

def planted_config(seed: int, work: Path, **extra) -> PipelineConfig:
    cfg = PipelineConfig()
    cfg.seed = seed
    cfg.paths.work_dir = str(work)
    for kv in ("cluster.k_min=2", "cluster.k_max=8", "cluster.n_jobs=1", "annotate.mode=\"off\""):
        cfg = apply_override(cfg, kv)
    for k, v in extra.items():
        cfg = apply_override(cfg, f"{k}={json.dumps(v)}")
    cfg.validate()
    return cfg


@lru_cache(maxsize=1)
def planted_runs(root: str):
    runs = {}
    t0 = time.perf_counter()
    for seed in range(10):
        cfg = planted_config(seed, Path(root) / f"s{seed}")
        for stage in ("synth", "ingest", "preprocess", "vectorize", "profiles", "cluster"):
            run_stage(stage, cfg)
        runs[seed] = cfg
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def planted(tmp_path_factory):
    return planted_runs(str(tmp_path_factory.mktemp("planted")))


def test_criterion_4_clustering_recovery(planted):
    from fanrec.evaluation import adjusted_rand_index

    runs, elapsed = planted
    rows = []
    for seed, cfg in runs.items():
        w = Path(cfg.paths.work_dir)
        model = ClusterModel.from_dict(json.loads((w / "cluster/model.json").read_text()))
        truth = json.loads((w / "synth/truth.json").read_text())["clusters"]
        asg = model.assignments
        fans = sorted(a for a in asg if a in truth)
        ari = adjusted_rand_index({a: truth[a] for a in fans}, {a: asg[a] for a in fans})
        rows.append((seed, model.k, ari))
    ok = all(k == 4 and ari >= 0.9 for _, k, ari in rows) and elapsed < 60.0
    ks = sorted({k for _, k, _ in rows})
    verdict(4, "planted partition recovered for seeds 0..9", ok,
            f"k in {ks}, min ARI {min(a for *_, a in rows):.4f} >= 0.9, {elapsed:.1f}s < 60s")


def test_criterion_6_recommendation_lift(planted):
    runs, _ = planted
    hybrid, base = [], []
    for seed in range(5):
        cfg = runs[seed]
        run_stage("recommend", cfg)
        run_stage("eval", cfg)
        m = json.loads((Path(cfg.paths.work_dir) / "eval/metrics.json").read_text())
        assert m["params"]["alpha"] == 0.6 and m["params"]["beta"] == 1.0 and m["params"]["k"] == 5
        hybrid.append(m["hit_rate_at_k"])
        base.append(m["baseline_hit_rate_at_k"])
    h, b = sum(hybrid) / 5, sum(base) / 5
    ok = h >= 1.5 * b
    verdict(6, "hybrid hit-rate@5 beats popularity by 1.5x", ok, f"hybrid {h:.3f} vs baseline {b:.3f}")


# 5 ---------------------------------------------------------------------------

def random_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 60))
    d = int(rng.integers(1, 10))
    k = int(rng.integers(1, min(n, 6) + 1))
    X = rng.random((n, d)) * (rng.random((n, d)) < 0.6)
    # duplicate rows now and then to exercise ties and empty clusters
    if seed % 7 == 0:
        X[n // 2:] = X[: n - n // 2]
    vecs = [(f"p{i:03d}", SparseVector.from_pairs((j, float(x)) for j, x in enumerate(row) if x))
            for i, row in enumerate(X)]
    return vecs, k, d


def test_criterion_5_kmeans_invariants():
    bad = []
    for seed in range(1000):
        vecs, k, d = random_instance(seed)
        h = kmeans_fit(vecs, k, seed=seed, dim=d).history
        if any(b > a for a, b in zip(h, h[1:])):
            bad.append(seed)
    rng = np.random.default_rng(3)
    X = rng.random((1100, 12)) * (rng.random((1100, 12)) < 0.3)
    vecs = [(f"p{i:04d}", SparseVector.from_pairs((j, float(x)) for j, x in enumerate(r) if x))
            for i, r in enumerate(X)]
    blobs = {kmeans_fit(vecs, 5, seed=9, dim=12, n_jobs=j).to_json().encode() for j in (1, 2, 4)}
    ok = not bad and len(blobs) == 1
    verdict(5, "inertia never rises and models ignore thread count", ok,
            f"{1000 - len(bad)}/1000 monotone, {len(blobs)} distinct model(s) over 1/2/4 threads")


# 7 ---------------------------------------------------------------------------

def naive_scores(u, groups, fans, artists, alpha, beta):
    """Direct transcription of the scoring rule, one artist at a time."""
    cl = next(g for g in groups if u.author_id in g)
    members = [f for f in fans if f.author_id in cl]
    out = {}
    for a in artists:
        m = 0
        for f in members:
            if f.mention_counts.get(a, 0) > 0:
                m += 1
        affinity = (m + beta) / (len(members) + 2 * beta)
        num = 0.0
        den = 0.0
        for v in members:
            if v.author_id == u.author_id:
                continue
            s = cosine_similarity(u.vector, v.vector)
            den += s
            if v.mention_counts.get(a, 0) > 0:
                num += s
        cf = num / den if den > 0.0 else 0.0
        out[a] = alpha * affinity + (1.0 - alpha) * cf
    return out


def check_case(fans, groups, artists, alpha, beta):
    asg = {a: c for c, g in enumerate(groups) for a in g}
    model = ClusterModel(len(groups), np.zeros((len(groups), 1)), asg, 0.0, 0, 0)
    mismatches = 0
    for u in fans:
        members = [f for f in fans if asg[f.author_id] == asg[u.author_id]]
        aff = cluster_affinity(members, artists, beta, asg[u.author_id])
        got = score_user(u, model, aff, members, alpha)
        if got != naive_scores(u, groups, fans, artists, alpha, beta):
            mismatches += 1
    return mismatches


def set_partitions(items):
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for p in set_partitions(rest):
        yield [[head]] + p
        for i in range(len(p)):
            yield p[:i] + [[head] + p[i]] + p[i + 1:]


SMALL_VECTORS = [SparseVector((0,), (1.0,)), SparseVector((1,), (2.0,)), SparseVector((0, 1), (1.0, 1.0)),
                 SparseVector((), ())]


def test_criterion_7_bruteforce_recommender():
    cases = mismatches = 0
    # exhaustive: up to 3 fans, up to 2 artists, every mention pattern, partition and vector choice
    for n_f in range(1, 4):
        ids = [f"f{i}" for i in range(n_f)]
        for n_a in range(1, 3):
            artists = [f"A{j}" for j in range(n_a)]
            for bits in itertools.product((0, 1), repeat=n_f * n_a):
                for vecs in itertools.product(range(len(SMALL_VECTORS)), repeat=n_f):
                    fans = [FanProfile(ids[i], 1, {}, {artists[j]: 1 for j in range(n_a) if bits[i * n_a + j]},
                                       vector=SMALL_VECTORS[vecs[i]]) for i in range(n_f)]
                    for groups in set_partitions(ids):
                        cases += 1
                        mismatches += check_case(fans, groups, artists, 0.6, 1.0)
    exhaustive = cases
    rng = random.Random(7)
    for _ in range(50):
        n_f, n_a = rng.randint(1, 10), rng.randint(1, 6)
        ids = [f"f{i}" for i in range(n_f)]
        artists = [f"A{j}" for j in range(n_a)]
        fans = [FanProfile(i, 1, {}, {a: rng.randint(1, 3) for a in artists if rng.random() < 0.4},
                           vector=SparseVector.from_pairs((d, rng.random()) for d in range(4) if rng.random() < 0.7))
                for i in ids]
        k = rng.randint(1, n_f)
        groups = [[] for _ in range(k)]
        for j, i in enumerate(ids):
            groups[j if j < k else rng.randrange(k)].append(i)
        alpha, beta = rng.choice([0.0, 0.6, 1.0, rng.random()]), rng.choice([0.0, 1.0, rng.random() * 3])
        cases += 1
        mismatches += check_case(fans, groups, artists, alpha, beta)
    verdict(7, "score_user equals naive reference exactly", mismatches == 0,
            f"{exhaustive} exhaustive + 50 random corpora, {mismatches} mismatching fans")


# 8 ---------------------------------------------------------------------------

OK = '{"sentiment":"positive","facet":"live-events","artists":["iKON"]}'


class ScriptedTransport:
    def __init__(self, script=None):
        self.script = script or {}
        self.calls = []
        self.lock = threading.Lock()

    def __call__(self, prompt):
        with self.lock:
            self.calls.append(prompt)
            for needle, outs in self.script.items():
                if needle in prompt and outs:
                    out = outs.pop(0)
                    if isinstance(out, Exception):
                        raise out
                    return out
        return OK


def test_criterion_8_annotator_contracts(tmp_path, table1):
    results = {}
    cfg = AnnotatorConfig(backoff_base=0.0, max_retries=2, cache_path=str(tmp_path / "cache.jsonl"))

    fake = ScriptedTransport()
    Annotator(cfg, transport=fake).annotate_batch([("1", "best concert"), ("2", "best concert")], table1)
    Annotator(cfg, transport=fake).annotate_batch([("3", "best concert")], table1)
    results["cache"] = len(fake.calls) == 1

    raised = []
    for raw, exc in [("no braces here", NoJsonFound), ('{"sentiment":"positive"}', SchemaError),
                     ('{"sentiment":"glad","facet":"other","artists":[]}', EnumError),
                     ('{"sentiment":"positive","facet":"gossip","artists":[]}', EnumError)]:
        try:
            parse_annotation(raw)
            raised.append(False)
        except exc:
            raised.append(True)
    results["schema"] = all(raised)

    script = {"dead": [TransientError("503")] * 9, "flaky": [TransientError("429")], "junk": ["{oops"],
              "denied": [PermanentError("HTTP 401")]}
    fake = ScriptedTransport(script)
    ann = Annotator(AnnotatorConfig(backoff_base=0.0, max_retries=2), transport=fake, sleep=lambda s: None)
    texts = ["dead", "flaky", "junk", "denied", "fine"]
    out = ann.annotate_batch([(str(i), t) for i, t in enumerate(texts)], table1)
    key = {t: cache_key(cfg.model_name, build_prompt(t, table1.names)) for t in texts}
    degraded = AnnotationLabel("neutral", "other", ())
    results["degrade"] = (len(out) == 5 and out["0"] == out["2"] == out["3"] == degraded
                          and out["1"] == out["4"] == parse_annotation(OK))
    results["retries"] = ([ann.attempts[key[t]] for t in texts] == [3, 2, 1, 1, 1]
                          and len(fake.calls) == 8 and len(ann.failures) == 3)

    texts = ["love the tour", "worst album", "ikon fancam", "", "#news 🎤 statement"]
    first = [dumps(stub_annotate(t, None, table1).to_dict()) for t in texts]
    again = [dumps(stub_annotate(t, None, table1).to_dict()) for t in texts]
    results["stub"] = first == again

    verdict(8, "annotator cache, schema, degradation and stub contracts", all(results.values()),
            ", ".join(f"{k} {'ok' if v else 'BROKEN'}" for k, v in results.items()))


# 9 ---------------------------------------------------------------------------

def test_criterion_9_end_to_end_determinism(tmp_path):
    trees, times = [], []
    for name in ("a", "b"):
        cfg = planted_config(11, tmp_path / name, **{"synth.fans_per_cluster": 250, "annotate.mode": "stub",
                                                       "cluster.k_min": 4, "cluster.k_max": 16})
        t0 = time.perf_counter()
        run_stage("all", cfg)
        times.append(time.perf_counter() - t0)
        trees.append(tree(tmp_path / name))
    n_tweets = len(trees[0]["synth/tweets.jsonl"].splitlines())
    ok = n_tweets == 10_000 and trees[0] == trees[1] and max(times) < 60.0
    verdict(9, "10k-tweet pipeline is fast and byte-identical", ok,
            f"{n_tweets} tweets, {len(trees[0])} artifacts, runs {times[0]:.1f}s / {times[1]:.1f}s < 60s")
