"""Tweet text cleaning, case folding and tokenization.

Cleaning removes three kinds of markup in one left-to-right scan:

* URLs: ``http://`` or ``https://`` through the next whitespace; the single
  whitespace character that terminates the URL is removed with it.
* mentions: ``@`` followed by a word (letters, digits, underscore).
* hashtags: ``#`` followed by a word; the body is kept, case-folded, in
  :attr:`CleanText.hashtags`.

Tokens are maximal runs of letters and digits (``str.isalnum``); underscores,
punctuation, emoji and whitespace all separate tokens.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

_MARKUP = re.compile(r"(?P<url>https?://\S*\s?)|@\w+|#(?P<tag>\w+)")
_TOKEN = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class CleanText:
    text: str
    hashtags: tuple[str, ...] = ()


@dataclass(frozen=True)
class TokenizedDoc:
    tweet_id: str
    author_id: str
    tokens: tuple[str, ...]
    hashtags: tuple[str, ...] = ()
    artists: frozenset[str] = field(default_factory=frozenset)

    def to_dict(self) -> dict:
        return {
            "tweet_id": self.tweet_id,
            "author_id": self.author_id,
            "tokens": list(self.tokens),
            "hashtags": list(self.hashtags),
            "artists": sorted(self.artists),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TokenizedDoc":
        return cls(
            tweet_id=d["tweet_id"],
            author_id=d["author_id"],
            tokens=tuple(d["tokens"]),
            hashtags=tuple(d["hashtags"]),
            artists=frozenset(d["artists"]),
        )


def _fold_char(ch: str) -> str:
    # Single-codepoint approximation of Unicode simple case folding: take the
    # full folding when it is one codepoint, else the lowercase mapping when
    # that is one codepoint, else leave the character alone.
    folded = ch.casefold()
    if len(folded) == 1:
        return folded
    lowered = ch.lower()
    if len(lowered) == 1:
        return lowered
    return ch


_FOLD_CACHE: dict[str, str] = {}


def case_fold(text: str) -> str:
    """Codepoint-wise simple case folding. Preserves length; idempotent."""
    if text.isascii():
        return text.lower()
    out = []
    cache = _FOLD_CACHE
    for ch in text:
        f = cache.get(ch)
        if f is None:
            f = cache[ch] = _fold_char(ch)
        out.append(f)
    return "".join(out)


def clean_text(raw: str) -> CleanText:
    hashtags: list[str] = []

    def _sub(m: re.Match) -> str:
        tag = m.group("tag")
        if tag is not None:
            hashtags.append(case_fold(tag))
        return ""

    text = _MARKUP.sub(_sub, raw)
    # Deleting markup can splice a new URL together ("http@x://..."); repeat
    # until nothing matches. Length strictly shrinks, so this terminates.
    while _MARKUP.search(text):
        text = _MARKUP.sub(_sub, text)
    return CleanText(text=text, hashtags=tuple(hashtags))


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text)


def preprocess_tweet(tweet, catalog) -> TokenizedDoc:
    """Match artists on the raw text, then clean, fold and tokenize it."""
    artists = catalog.match(tweet.text)
    cleaned = clean_text(tweet.text)
    tokens = tokenize(case_fold(cleaned.text))
    return TokenizedDoc(
        tweet_id=tweet.id,
        author_id=tweet.author_id,
        tokens=tuple(tokens),
        hashtags=cleaned.hashtags,
        artists=frozenset(artists),
    )
