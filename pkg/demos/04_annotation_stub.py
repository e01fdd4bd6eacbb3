"""Tweet annotation without a network: the lexicon stub and a fake transport.

The online annotator needs an endpoint and an API key in ``FANREC_API_KEY``;
here a local function stands in for the HTTP service so the retry, cache and
degradation behaviour can be seen offline.
"""
import tempfile
from pathlib import Path

from fanrec import Annotator, AnnotatorConfig, build_prompt, parse_annotation, parse_artist_catalog, stub_annotate
from fanrec.annotate import TransientError

catalog = parse_artist_catalog("Name,Gender,Debut,Agency,Size,Active\niKON,Male,15/09/15,YG,6,Yes\n")

# %% The deterministic stub.
for text in ["love the iKON concert", "worst album ever", "new fancam dropped", "just vibing"]:
    print(f"{text!r:28} -> {stub_annotate(text, None, catalog)}")

# %% What goes over the wire.
print()
print(build_prompt('he said "hi" at the fansign', catalog.names))

# %% A flaky fake service: the first call for any "tour" tweet fails once.
failed = set()


def flaky(prompt):
    if "tour" in prompt and prompt not in failed:
        failed.add(prompt)
        raise TransientError("503 from fake service")
    if "garbage" in prompt:
        return "sorry, I cannot answer that"
    return '{"sentiment": "positive", "facet": "live-events", "artists": ["iKON"]}'


cache = Path(tempfile.mkdtemp()) / "cache.jsonl"
cfg = AnnotatorConfig(cache_path=str(cache), backoff_base=0.01, max_retries=2)
ann = Annotator(cfg, transport=flaky)
labels = ann.annotate_batch([("1", "tour tickets!"), ("2", "garbage in"), ("3", "tour tickets!")], catalog)
print()
for tid, label in labels.items():
    print(tid, label)
print("requests sent:", ann.requests_sent, "| failures:", len(ann.failures))

# %% A second annotator sharing the cache never calls the service for the good prompt.
again = Annotator(cfg, transport=flaky)
again.annotate_batch([("4", "tour tickets!")], catalog)
print("requests on replay:", again.requests_sent)
print("parsed directly:", parse_annotation('noise {"sentiment":"neutral","facet":"other","artists":[]} tail'))
