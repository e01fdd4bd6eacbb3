import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from sklearn.metrics import adjusted_rand_score

from fanrec import SynthSpec, adjusted_rand_index, generate_synthetic_corpus, precision_at_k
from fanrec.corpus import serialize_catalog
from fanrec.errors import PartitionMismatch, SpecError
from fanrec.evaluation import cluster_term, hit_rate_at_k, popularity_recommendations
from fanrec.fanmodel import FanProfile
from fanrec.jsonio import dumps
from fanrec.preprocess import case_fold, clean_text, tokenize
from fanrec.recommend import Recommendation


def brute_ari(truth, pred):
    """Pair enumeration; no contingency shortcuts."""
    elems = sorted(truth)
    pairs = list(itertools.combinations(elems, 2))
    same_t = [truth[a] == truth[b] for a, b in pairs]
    same_p = [pred[a] == pred[b] for a, b in pairs]
    n = len(pairs)
    index = sum(t and p for t, p in zip(same_t, same_p))
    a, b = sum(same_t), sum(same_p)
    expected = Fraction(a * b, n)
    mx = Fraction(a + b, 2)
    if mx == expected:
        return 1.0
    return float((index - expected) / (mx - expected))


class TestARI:
    def test_identical(self):
        p = {1: "a", 2: "a", 3: "b"}
        assert adjusted_rand_index(p, p) == 1.0

    def test_crossed(self):
        truth = {1: 0, 2: 0, 3: 1, 4: 1}
        pred = {1: 0, 3: 0, 2: 1, 4: 1}
        assert brute_ari(truth, pred) == -0.5
        assert adjusted_rand_index(truth, pred) == -0.5

    def test_single_cluster_prediction(self):
        truth = {1: 0, 2: 0, 3: 1, 4: 1}
        pred = {e: 0 for e in truth}
        assert brute_ari(truth, pred) == 0.0
        assert adjusted_rand_index(truth, pred) == 0.0

    def test_mismatch(self):
        with pytest.raises(PartitionMismatch):
            adjusted_rand_index({1: 0}, {2: 0})

    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=2, max_size=25))
    def test_against_oracles(self, labels):
        truth = {i: t for i, (t, _) in enumerate(labels)}
        pred = {i: p for i, (_, p) in enumerate(labels)}
        got = adjusted_rand_index(truth, pred)
        assert got == pytest.approx(brute_ari(truth, pred), abs=1e-12)
        assert got == pytest.approx(adjusted_rand_score([t for t, _ in labels], [p for _, p in labels]), abs=1e-12)
        assert got == pytest.approx(adjusted_rand_index(pred, truth), abs=1e-12)
        assert adjusted_rand_index(truth, truth) == 1.0


class TestPrecision:
    def rec(self, *items):
        return Recommendation("u", [(a, 1.0) for a in items])

    def test_hit(self):
        assert precision_at_k(self.rec("A", "B", "C"), "B", 3) == 1.0

    def test_absent(self):
        assert precision_at_k(self.rec("A", "B"), "Q", 5) == 0.0

    def test_top1(self):
        assert precision_at_k(self.rec("A", "B"), "A", 1) == 1.0
        assert precision_at_k(self.rec("A", "B"), "B", 1) == 0.0

    def test_hit_rate_mean(self):
        recs = [Recommendation("u1", [("A", 1.0)]), Recommendation("u2", [("B", 1.0)])]
        assert hit_rate_at_k(recs, {"u1": "A", "u2": "A"}, 1) == 0.5


def test_popularity_baseline():
    profiles = [FanProfile("a", 1, {}, {"X": 3}), FanProfile("b", 1, {}, {"Y": 1, "X": 1}), FanProfile("c", 1, {}, {})]

    class Cat:
        names = ["W", "X", "Y"]

    recs = {r.author_id: r.artists for r in popularity_recommendations(profiles, Cat, n=2)}
    assert recs == {"a": ["Y", "W"], "b": ["W"], "c": ["X", "Y"]}


SMALL = SynthSpec(n_clusters=3, fans_per_cluster=10, tweets_per_fan=6, seed=7)


def corpus_bytes(c):
    return (serialize_catalog(c.catalog) + "\n".join(dumps(t.to_dict()) for t in c.tweets)
            + dumps(c.truth) + dumps(c.heldout)).encode()


class TestGenerator:
    def test_deterministic(self):
        spec = SynthSpec(n_clusters=4, fans_per_cluster=200, tweets_per_fan=10, noise=0.2, seed=7)
        assert corpus_bytes(generate_synthetic_corpus(spec)) == corpus_bytes(generate_synthetic_corpus(spec))

    def test_seed_changes_output(self):
        other = SynthSpec(n_clusters=3, fans_per_cluster=10, tweets_per_fan=6, seed=8)
        assert corpus_bytes(generate_synthetic_corpus(SMALL)) != corpus_bytes(generate_synthetic_corpus(other))

    def test_noise_zero_keeps_vocabularies_apart(self):
        spec = SynthSpec(n_clusters=3, fans_per_cluster=10, tweets_per_fan=6, noise=0.0, seed=1)
        c = generate_synthetic_corpus(spec)
        cluster_vocab = [{cluster_term(k, i) for i in range(spec.vocab_per_cluster)} for k in range(3)]
        for t in c.tweets:
            toks = set(tokenize(case_fold(clean_text(t.text).text)))
            for k in range(3):
                if k != c.truth[t.author_id]:
                    assert not toks & cluster_vocab[k]
            assert not any(tok.startswith("sh") for tok in toks)

    @pytest.mark.parametrize("spec", [SMALL, SynthSpec(seed=3)])
    def test_heldout_never_mentioned_and_preferred_by_peers(self, spec):
        c = generate_synthetic_corpus(spec)
        by_author = {}
        for t in c.tweets:
            by_author.setdefault(t.author_id, set()).update(c.catalog.match(t.text))
        for fan, held in c.heldout.items():
            assert held not in by_author.get(fan, set())
            assert held in c.preferred[fan]
            assert held.startswith(f"C{c.truth[fan]:02d}-")
            peers = [f for f in c.truth if c.truth[f] == c.truth[fan] and f != fan]
            assert sum(held in c.preferred[p] for p in peers) >= len(peers) / 2

    def test_peers_actually_mention_heldout(self):
        # default-size corpus: most peers of a fan tweet about that fan's held-out artist
        c = generate_synthetic_corpus(SynthSpec(seed=5))
        by_author = {}
        for t in c.tweets:
            by_author.setdefault(t.author_id, set()).update(c.catalog.match(t.text))
        shares = []
        for fan, held in c.heldout.items():
            peers = [f for f in c.truth if c.truth[f] == c.truth[fan] and f != fan]
            shares.append(sum(held in by_author.get(p, set()) for p in peers) / len(peers))
        assert min(shares) >= 0.5

    def test_sizes(self):
        c = generate_synthetic_corpus(SMALL)
        assert len(c.tweets) == 3 * 10 * 6 and len(c.truth) == 30 and len(c.catalog) == 15
        assert len({t.id for t in c.tweets}) == len(c.tweets)

    @pytest.mark.parametrize("kw", [{"artists_per_cluster": 1}, {"n_clusters": 1}, {"noise": 1.0},
                                    {"mention_prob": 0.0}, {"fans_per_cluster": 0}])
    def test_spec_errors(self, kw):
        with pytest.raises(SpecError):
            generate_synthetic_corpus(SynthSpec(**kw))
