"""LLM tweet annotation behind a generic chat-completion endpoint.

Labels are (sentiment, facet, artists). An :class:`Annotator` sends one prompt
per distinct tweet text, caches answers in an append-only JSON Lines file keyed
by ``sha256(model_name, prompt)``, retries transport and 5xx failures with
exponential backoff, and downgrades anything still failing to
``neutral/other``. ``stub_annotate`` is a keyword-lexicon stand-in used in
offline mode and in tests.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ConfigError, EnumError, NoJsonFound, SchemaError
from .jsonio import dumps
from .preprocess import case_fold, tokenize

log = logging.getLogger(__name__)

SENTIMENTS = ("positive", "negative", "neutral")
# Order fixes the facet dimensions of profile vectors.
FACETS = ("music-listening", "live-events", "fan-content", "news-discussion", "other")

PROMPT_VERSION = 1
SYSTEM_LINE = "You label K-pop tweets. Reply with only a JSON object with keys sentiment, facet, artists."
PROMPT_TEMPLATE = (
    "{system}\n"
    "sentiment: one of {sentiments}\n"
    "facet: one of {facets}\n"
    "artists: list of the artists the tweet is about, chosen from: {names}\n"
    "Tweet: \"{text}\"\n"
    "JSON:"
)


@dataclass(frozen=True)
class AnnotationLabel:
    sentiment: str
    facet: str
    artists: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"sentiment": self.sentiment, "facet": self.facet, "artists": list(self.artists)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "AnnotationLabel":
        return _label_from_obj(d)


DEGRADED = AnnotationLabel("neutral", "other", ())


@dataclass
class AnnotatorConfig:
    endpoint_url: str = ""
    model_name: str = "gpt-4"
    api_key_env_var: str = "FANREC_API_KEY"
    max_in_flight: int = 4
    max_retries: int = 3
    cache_path: str | None = None
    backoff_base: float = 0.5
    timeout: float = 60.0

    def __post_init__(self):
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be >= 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def load_lexicon(path: str | Path | None = None) -> dict:
    if path is None:
        text = resources.files("fanrec").joinpath("data/stub_lexicon.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return json.loads(text)


DEFAULT_LEXICON = load_lexicon()


def build_prompt(tweet_text: str, catalog_names: Sequence[str]) -> str:
    # json.dumps escapes quotes, backslashes and newlines; strip its outer quotes.
    quoted = json.dumps(tweet_text, ensure_ascii=False)[1:-1]
    return PROMPT_TEMPLATE.format(
        system=SYSTEM_LINE,
        sentiments=", ".join(SENTIMENTS),
        facets=", ".join(FACETS),
        names=", ".join(catalog_names),
        text=quoted,
    )


def _label_from_obj(obj) -> AnnotationLabel:
    for key in ("sentiment", "facet", "artists"):
        if key not in obj:
            raise SchemaError(f"annotation is missing key {key!r}")
    sentiment, facet, artists = obj["sentiment"], obj["facet"], obj["artists"]
    if not isinstance(artists, list) or not all(isinstance(a, str) for a in artists):
        raise SchemaError("'artists' must be a list of strings")
    if sentiment not in SENTIMENTS:
        raise EnumError(f"sentiment {sentiment!r} not in {SENTIMENTS}")
    if facet not in FACETS:
        raise EnumError(f"facet {facet!r} not in {FACETS}")
    return AnnotationLabel(sentiment, facet, tuple(artists))


def parse_annotation(raw_response: str) -> AnnotationLabel:
    """Validate the first JSON object found anywhere in ``raw_response``."""
    decoder = json.JSONDecoder()
    pos = raw_response.find("{")
    while pos != -1:
        try:
            obj, _ = decoder.raw_decode(raw_response, pos)
        except json.JSONDecodeError:
            pos = raw_response.find("{", pos + 1)
            continue
        if isinstance(obj, dict):
            return _label_from_obj(obj)
        pos = raw_response.find("{", pos + 1)
    raise NoJsonFound("no JSON object in model response")


def stub_annotate(text: str, lexicon: Mapping | None = None, catalog=None) -> AnnotationLabel:
    lexicon = DEFAULT_LEXICON if lexicon is None else lexicon
    tokens = set(tokenize(case_fold(text)))
    sent = lexicon["sentiment"]
    if tokens & set(sent["negative"]):
        sentiment = "negative"
    elif tokens & set(sent["positive"]):
        sentiment = "positive"
    else:
        sentiment = "neutral"
    facet = "other"
    for name in FACETS:
        if tokens & set(lexicon["facets"].get(name, ())):
            facet = name
            break
    artists = tuple(sorted(catalog.match(text))) if catalog is not None else ()
    return AnnotationLabel(sentiment, facet, artists)


class TransientError(Exception):
    """Retryable transport-level or 5xx failure."""


class PermanentError(Exception):
    """Non-retryable request failure (4xx, unusable response body)."""


def cache_key(model_name: str, prompt: str) -> str:
    return hashlib.sha256(json.dumps([model_name, prompt], ensure_ascii=False).encode("utf-8")).hexdigest()


def _extract_text(payload) -> str:
    if isinstance(payload, dict):
        if isinstance(payload.get("text"), str):
            return payload["text"]
        choices = payload.get("choices")
        if isinstance(choices, list) and choices:
            first = choices[0]
            msg = first.get("message") if isinstance(first, dict) else None
            if isinstance(msg, dict) and isinstance(msg.get("content"), str):
                return msg["content"]
            if isinstance(first, dict) and isinstance(first.get("text"), str):
                return first["text"]
    raise PermanentError("response has no text field")


class HttpChatTransport:
    """POSTs ``{model, messages: [{role, content}]}`` and returns the reply text."""

    def __init__(self, cfg: AnnotatorConfig, api_key: str):
        import httpx

        self._httpx = httpx
        self.cfg = cfg
        self._client = httpx.Client(
            timeout=cfg.timeout,
            headers={"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"},
        )

    def __call__(self, prompt: str) -> str:
        body = {"model": self.cfg.model_name, "messages": [{"role": "user", "content": prompt}]}
        try:
            resp = self._client.post(self.cfg.endpoint_url, json=body)
        except self._httpx.TransportError as exc:
            raise TransientError(type(exc).__name__) from None
        if resp.status_code >= 500 or resp.status_code == 429:
            raise TransientError(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise PermanentError(f"HTTP {resp.status_code}")
        try:
            payload = resp.json()
        except ValueError:
            raise PermanentError("response is not JSON") from None
        return _extract_text(payload)

    def close(self):
        self._client.close()


class ResponseCache:
    """Append-only JSON Lines cache of ``{"key": ..., "label": {...}}`` records."""

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._data: dict[str, AnnotationLabel] = {}
        if self.path is not None and self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        self._data[rec["key"]] = AnnotationLabel.from_dict(rec["label"])

    def get(self, key: str) -> AnnotationLabel | None:
        with self._lock:
            return self._data.get(key)

    def put(self, key: str, label: AnnotationLabel) -> None:
        with self._lock:
            if key in self._data:
                return
            self._data[key] = label
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(dumps({"key": key, "label": label.to_dict()}) + "\n")

    def __len__(self) -> int:
        return len(self._data)


class Annotator:
    """Bounded-concurrency, cached, retrying client around a chat transport.

    ``mode`` is ``"online"`` (HTTP, needs endpoint and API key) or ``"stub"``.
    A custom ``transport`` callable ``prompt -> text`` replaces the HTTP one.
    """

    def __init__(self, cfg: AnnotatorConfig, mode: str = "online", transport: Callable[[str], str] | None = None,
                 lexicon: Mapping | None = None, sleep: Callable[[float], None] = time.sleep):
        if mode not in ("online", "stub"):
            raise ConfigError(f"unknown annotation mode {mode!r}")
        self.cfg = cfg
        self.mode = mode
        self.lexicon = lexicon
        self.sleep = sleep
        self.requests_sent = 0
        self.attempts: dict[str, int] = {}
        self.failures: list[str] = []
        self._count_lock = threading.Lock()
        self._own_transport = None
        if mode == "online":
            if transport is None:
                if not cfg.endpoint_url:
                    raise ConfigError("online annotation needs an endpoint_url")
                key = os.environ.get(cfg.api_key_env_var)
                if not key:
                    raise ConfigError(f"environment variable {cfg.api_key_env_var} is not set")
                transport = self._own_transport = HttpChatTransport(cfg, key)
            self.cache = ResponseCache(cfg.cache_path)
        else:
            self.cache = ResponseCache(None)
        self.transport = transport

    def close(self):
        if self._own_transport is not None:
            self._own_transport.close()

    def _request(self, key: str, prompt: str) -> AnnotationLabel:
        attempts = 0
        for attempt in range(self.cfg.max_retries + 1):
            attempts += 1
            with self._count_lock:
                self.requests_sent += 1
            try:
                text = self.transport(prompt)
                label = parse_annotation(text)
            except TransientError as exc:
                log.info("annotation request %s failed (attempt %d): %s", key[:12], attempts, exc)
                if attempt < self.cfg.max_retries:
                    self.sleep(self.cfg.backoff_base * (2 ** attempt))
                continue
            except (PermanentError, NoJsonFound, SchemaError) as exc:
                log.warning("annotation request %s unusable: %s; labelling neutral/other", key[:12], exc)
                self._record(key, attempts, failed=True)
                return DEGRADED
            self._record(key, attempts, failed=False)
            self.cache.put(key, label)
            return label
        log.warning("annotation request %s failed after %d attempts; labelling neutral/other", key[:12], attempts)
        self._record(key, attempts, failed=True)
        return DEGRADED

    def _record(self, key, attempts, failed):
        with self._count_lock:
            self.attempts[key] = attempts
            if failed:
                self.failures.append(key)

    def annotate_batch(self, tweets: Iterable[tuple[str, str]], catalog) -> dict[str, AnnotationLabel]:
        tweets = list(tweets)
        if self.mode == "stub":
            return {tid: stub_annotate(text, self.lexicon, catalog) for tid, text in tweets}
        names = catalog.names if catalog is not None else []
        by_key: dict[str, list[str]] = {}
        prompts: dict[str, str] = {}
        for tid, text in tweets:
            prompt = build_prompt(text, names)
            key = cache_key(self.cfg.model_name, prompt)
            by_key.setdefault(key, []).append(tid)
            prompts[key] = prompt
        resolved: dict[str, AnnotationLabel] = {}
        pending = []
        for key in by_key:
            hit = self.cache.get(key)
            if hit is not None:
                resolved[key] = hit
            else:
                pending.append(key)
        if pending:
            with ThreadPoolExecutor(max_workers=self.cfg.max_in_flight) as pool:
                for key, label in zip(pending, pool.map(lambda k: self._request(k, prompts[k]), pending)):
                    resolved[key] = label
        out: dict[str, AnnotationLabel] = {}
        for key, tids in by_key.items():
            for tid in tids:
                out[tid] = resolved[key]
        return {tid: out[tid] for tid, _ in tweets}


def annotate_batch(tweets, cfg: AnnotatorConfig, catalog, mode: str = "online", transport=None,
                   lexicon=None) -> dict[str, AnnotationLabel]:
    annotator = Annotator(cfg, mode=mode, transport=transport, lexicon=lexicon)
    try:
        return annotator.annotate_batch(tweets, catalog)
    finally:
        annotator.close()
