"""
Curating labels
===============

Keep posts whose tags hit a strong polar lexicon word, then resolve three
annotator scores by majority vote.
"""

import tempfile
from pathlib import Path

from visent import data
from visent.synthetic import write_curation_fixture

with tempfile.TemporaryDirectory() as tmp:
    manifest, lexicon_path = write_curation_fixture(Path(tmp))
    posts = data.load_manifest(manifest)
    lexicon = data.parse_lexicon(lexicon_path)

print("strong polar words:", sorted(data.strong_polar_words(lexicon)))
kept = data.filter_posts(posts, lexicon)
print(f"{len(posts)} posts, {len(kept)} with a strong polar tag")

print("votes (2, 2, -1) ->", data.majority_vote((2, 2, -1)))
print("votes (2, 0, -1) ->", data.majority_vote((2, 0, -1)))

resolution = data.resolve_dataset(kept)
print("agreement rate", resolution.agreement_rate, "=", round(float(resolution.agreement_rate), 3))
print("histogram", dict(data.label_histogram(resolution.samples)))
print("dropped for lack of a majority:", len(resolution.invalid))
