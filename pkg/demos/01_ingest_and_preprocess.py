"""Ingesting a catalog and a handful of tweets, then cleaning them.

Run with ``python3 demos/01_ingest_and_preprocess.py``.
"""
import io
import json

from fanrec import filter_corpus, parse_artist_catalog, parse_tweets, preprocess_tweet

# %% A catalog is a CSV with one row per act; aliases are optional.
catalog = parse_artist_catalog(
    "Name,Gender,Debut,Agency,Size,Active,Aliases\n"
    "iKON,Male,15/09/15,YG,6,Yes,\n"
    "KARA,Female,29/03/07,DSP,5,No,\n"
    "BTS,Male,13/06/13,Big Hit,7,Yes,Bangtan;방탄소년단\n"
)
for rec in catalog.records:
    print(f"{rec.name:6} debut={rec.debut} active={rec.active} aliases={rec.aliases}")

# %% Tweets arrive as JSON lines.
raw = b"\n".join(json.dumps(t).encode() for t in [
    {"id": "1", "author_id": "u1", "created_at": "2020-01-01T10:00:00Z",
     "text": "@friend #BTS concert was UNREAL https://t.co/x", "lang": "en"},
    {"id": "2", "author_id": "u2", "created_at": "2020-01-02T10:00:00Z",
     "text": "방탄소년단 최고 🎤", "lang": "ko"},
    {"id": "3", "author_id": "u3", "created_at": "2020-01-03T10:00:00Z",
     "text": "nothing about music here", "lang": "en"},
])
tweets = list(parse_tweets(io.BytesIO(raw)))

# %% Only tweets naming a catalog act are kept.
kept = list(filter_corpus(tweets, catalog))
print(f"\nkept {len(kept)} of {len(tweets)} tweets")

# %% Artist matching happens on the raw text, so hashtags still count.
for tweet, _artists in kept:
    doc = preprocess_tweet(tweet, catalog)
    print(doc.tweet_id, doc.tokens, "hashtags:", doc.hashtags, "artists:", sorted(doc.artists))
