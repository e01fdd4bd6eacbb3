"""Artist catalog and tweet corpus ingestion, plus artist-mention detection."""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import IO, Iterable, Iterator, Sequence

from .errors import (
    AliasCollision,
    BadAlias,
    BadDate,
    BadEnum,
    BadHeader,
    BadSize,
    DuplicateArtist,
    DuplicateTweetId,
    MalformedLine,
)
from .preprocess import case_fold, clean_text, tokenize

log = logging.getLogger(__name__)

GENDERS = ("Female", "Male", "Mixed")
HEADER = ["Name", "Gender", "Debut", "Agency", "Size", "Active"]
ALIAS_COLUMN = "Aliases"
_BOOL = {"yes": True, "no": False}


def canonical_alias(name: str) -> str:
    """Case-fold and drop every non-alphanumeric character: "(G)I-DLE" -> "gidle"."""
    return "".join(ch for ch in case_fold(name) if ch.isalnum())


def alias_tokens(alias: str) -> tuple[str, ...]:
    return tuple(tokenize(case_fold(alias)))


def is_ambiguous(tokens: Sequence[str]) -> bool:
    """Short or all-digit aliases only count when they appear as a hashtag."""
    joined = "".join(tokens)
    return len(joined) < 3 or joined.isdigit()


@dataclass(frozen=True)
class ArtistRecord:
    name: str
    gender: str
    debut: date
    agency: str
    size: int
    active: bool
    aliases: tuple[str, ...] = ()

    @property
    def id(self) -> str:
        return self.name


@dataclass(frozen=True)
class Tweet:
    id: str
    author_id: str
    created_at: datetime
    text: str
    lang: str | None = None

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "author_id": self.author_id,
            "created_at": format_timestamp(self.created_at),
            "text": self.text,
        }
        if self.lang is not None:
            d["lang"] = self.lang
        return d


class ArtistCatalog:
    """Immutable set of artists with an alias index keyed by token sequence.

    Artists are identified by their display name.
    """

    def __init__(self, records: Iterable[ArtistRecord] = ()):
        self.records: tuple[ArtistRecord, ...] = tuple(records)
        self.alias_index: dict[tuple[str, ...], str] = {}
        self._by_name: dict[str, ArtistRecord] = {}
        seen_folded: dict[str, str] = {}
        for rec in self.records:
            key = case_fold(rec.name)
            if key in seen_folded:
                raise DuplicateArtist(f"duplicate artist name {rec.name!r} (clashes with {seen_folded[key]!r})")
            seen_folded[key] = rec.name
            self._by_name[rec.name] = rec
            if not rec.aliases:
                raise BadAlias(f"artist {rec.name!r} has no aliases")
            for alias in rec.aliases:
                toks = alias_tokens(alias)
                if not toks:
                    raise BadAlias(f"alias {alias!r} of {rec.name!r} is empty after canonicalization")
                owner = self.alias_index.get(toks)
                if owner is not None and owner != rec.name:
                    raise AliasCollision(f"alias {alias!r} maps to both {owner!r} and {rec.name!r}")
                self.alias_index[toks] = rec.name
        # first token -> [(alias tokens, artist, ambiguous)]
        self._by_first: dict[str, list[tuple[tuple[str, ...], str, bool]]] = {}
        for toks, name in sorted(self.alias_index.items()):
            self._by_first.setdefault(toks[0], []).append((toks, name, is_ambiguous(toks)))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __contains__(self, name) -> bool:
        return name in self._by_name

    def __getitem__(self, name: str) -> ArtistRecord:
        return self._by_name[name]

    def __eq__(self, other) -> bool:
        return isinstance(other, ArtistCatalog) and self.records == other.records

    def __repr__(self) -> str:
        return f"ArtistCatalog({len(self.records)} artists)"

    @property
    def names(self) -> list[str]:
        return sorted(self._by_name)

    def match(self, text: str) -> set[str]:
        return match_artists(text, self)

    def _scan(self, tokens: Sequence[str], include_ambiguous: bool, found: set[str]) -> None:
        n = len(tokens)
        by_first = self._by_first
        for i, tok in enumerate(tokens):
            cands = by_first.get(tok)
            if not cands:
                continue
            for toks, name, ambiguous in cands:
                if ambiguous and not include_ambiguous:
                    continue
                L = len(toks)
                if i + L <= n and tuple(tokens[i:i + L]) == toks:
                    found.add(name)


def _parse_date(raw: str, line_no: int) -> date:
    parts = raw.strip().split("/")
    if len(parts) != 3 or not all(p.isdigit() for p in parts):
        raise BadDate(f"line {line_no}: bad debut date {raw!r} (want D/M/YY)")
    d, m, y = (int(p) for p in parts)
    if len(parts[2]) == 2:
        y += 1900 if y >= 90 else 2000
    elif len(parts[2]) != 4:
        raise BadDate(f"line {line_no}: bad year in {raw!r}")
    try:
        return date(y, m, d)
    except ValueError as exc:
        raise BadDate(f"line {line_no}: {raw!r}: {exc}") from None


def _format_date(d: date) -> str:
    if 1990 <= d.year <= 2089:
        return f"{d.day}/{d.month:02d}/{d.year % 100:02d}"
    return f"{d.day}/{d.month:02d}/{d.year:04d}"


def parse_artist_catalog(csv_text: str) -> ArtistCatalog:
    """Parse a ``Name,Gender,Debut,Agency,Size,Active[,Aliases]`` CSV."""
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise BadHeader("catalog is empty; expected a header row") from None
    header = [h.strip() for h in header]
    if header and header[0].startswith("﻿"):
        header[0] = header[0][1:]
    has_aliases = header == HEADER + [ALIAS_COLUMN]
    if header != HEADER and not has_aliases:
        raise BadHeader(f"unexpected catalog header {header!r}")
    records = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) not in (6, 7) or (len(row) == 7 and not has_aliases):
            raise BadHeader(f"line {line_no}: expected {len(header)} columns, got {len(row)}")
        name, gender, debut, agency, size, active = (c.strip() for c in row[:6])
        gmap = {g.lower(): g for g in GENDERS}
        if gender.lower() not in gmap:
            raise BadEnum(f"line {line_no}: gender {gender!r} not in {GENDERS}")
        if active.lower() not in _BOOL:
            raise BadEnum(f"line {line_no}: active flag {active!r} must be Yes/No")
        try:
            n_members = int(size)
        except ValueError:
            raise BadSize(f"line {line_no}: size {size!r} is not an integer") from None
        if n_members < 1:
            raise BadSize(f"line {line_no}: size must be >= 1, got {n_members}")
        canon = canonical_alias(name)
        if not canon:
            raise BadAlias(f"line {line_no}: name {name!r} has no alphanumeric characters")
        aliases = [canon]
        if len(row) == 7:
            for extra in row[6].split(";"):
                extra = extra.strip()
                if extra and extra not in aliases:
                    aliases.append(extra)
        records.append(
            ArtistRecord(
                name=name,
                gender=gmap[gender.lower()],
                debut=_parse_date(debut, line_no),
                agency=agency,
                size=n_members,
                active=_BOOL[active.lower()],
                aliases=tuple(aliases),
            )
        )
    return ArtistCatalog(records)


def serialize_catalog(catalog: ArtistCatalog) -> str:
    """Inverse of :func:`parse_artist_catalog` (adds the alias column only if needed)."""
    with_aliases = any(len(r.aliases) > 1 for r in catalog.records)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER + ([ALIAS_COLUMN] if with_aliases else []))
    for r in catalog.records:
        row = [r.name, r.gender, _format_date(r.debut), r.agency, str(r.size), "Yes" if r.active else "No"]
        if with_aliases:
            row.append(";".join(r.aliases[1:]))
        w.writerow(row)
    return buf.getvalue()


def parse_timestamp(raw: str) -> datetime:
    s = raw.strip()
    if s.endswith("Z") or s.endswith("z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    dt = dt.astimezone(timezone.utc)
    spec = "%Y-%m-%dT%H:%M:%S.%fZ" if dt.microsecond else "%Y-%m-%dT%H:%M:%SZ"
    return dt.strftime(spec)


def tweet_from_obj(obj, line_no: int) -> Tweet:
    if not isinstance(obj, dict):
        raise MalformedLine(line_no, "not a JSON object")
    for key in ("id", "author_id", "created_at", "text"):
        if key not in obj:
            raise MalformedLine(line_no, f"missing field {key!r}")
        if not isinstance(obj[key], str):
            raise MalformedLine(line_no, f"field {key!r} must be a string")
    lang = obj.get("lang")
    if lang is not None and not isinstance(lang, str):
        raise MalformedLine(line_no, "field 'lang' must be a string or null")
    try:
        created = parse_timestamp(obj["created_at"])
    except ValueError:
        raise MalformedLine(line_no, f"bad timestamp {obj['created_at']!r}") from None
    return Tweet(id=obj["id"], author_id=obj["author_id"], created_at=created, text=obj["text"], lang=lang)


def parse_tweets(jsonl_stream: IO[bytes]) -> Iterator[Tweet]:
    """Stream tweets from a JSON Lines byte stream, in file order.

    Blank lines are skipped. Raises MalformedLine (with the 1-based line
    number) or DuplicateTweetId.
    """
    seen: set[str] = set()
    for line_no, raw in enumerate(jsonl_stream, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                raise MalformedLine(line_no, "invalid UTF-8") from None
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from None
        tweet = tweet_from_obj(obj, line_no)
        if tweet.id in seen:
            raise DuplicateTweetId(f"line {line_no}: duplicate tweet id {tweet.id!r}")
        seen.add(tweet.id)
        yield tweet


def match_artists(text: str, catalog: ArtistCatalog) -> set[str]:
    """Artists whose alias token sequence occurs in the case-folded raw text.

    Ambiguous aliases (under 3 characters or all digits) are only searched for
    inside hashtag bodies.
    """
    if not text:
        return set()
    found: set[str] = set()
    catalog._scan(tokenize(case_fold(text)), False, found)
    for body in clean_text(text).hashtags:
        catalog._scan(tokenize(body), True, found)
    return found


def filter_corpus(tweets: Iterable[Tweet], catalog: ArtistCatalog) -> list[tuple[Tweet, set[str]]]:
    kept = []
    n = 0
    for tweet in tweets:
        n += 1
        artists = match_artists(tweet.text, catalog)
        if artists:
            kept.append((tweet, artists))
    log.info("kept %d of %d tweets mentioning a catalog artist", len(kept), n)
    return kept
