"""Post manifests, subjectivity-lexicon filtering and majority-vote labels."""
from __future__ import annotations

import logging
import os
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction

log = logging.getLogger(__name__)

SCORES = (-2, -1, 0, 1, 2)
BINARY_LABELS = ("positive", "negative")
_LABEL_ALIASES = {"pos": "positive", "positive": "positive", "neg": "negative", "negative": "negative"}
_STRENGTH = {"strongsubj": "strong", "weaksubj": "weak"}
_POLARITY = {"positive": ("positive",), "negative": ("negative",), "neutral": ("neutral",),
             "both": ("positive", "negative"), "weakpos": ("positive",), "weakneg": ("negative",)}
# Extra columns of the common lexicon distribution that carry no information we use.
_KNOWN_KEYS = {"type", "word1", "priorpolarity", "len", "pos1", "stemmed1", "mpqapolarity"}

ANNOTATED_HEADER = ("id", "image", "tags", "a1", "a2", "a3")
LABELED_HEADER = ("id", "image", "label")


class ManifestError(ValueError):
    """Malformed manifest or lexicon file."""


@dataclass(frozen=True)
class LexiconEntry:
    word: str
    strength: str
    polarity: str


@dataclass(frozen=True)
class PostRecord:
    id: str
    image: str
    tags: tuple = ()
    annotations: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(t.lower() for t in self.tags))
        object.__setattr__(self, "annotations", tuple(int(a) for a in self.annotations))
        for a in self.annotations:
            if a not in SCORES:
                raise ValueError(f"post {self.id!r}: score {a} outside [-2, 2]")


@dataclass(frozen=True)
class Sample:
    id: str
    image: str
    label: object


def parse_label(text: str):
    """``-2``..``2`` become ints; ``pos``/``neg`` spellings become ``positive``/``negative``."""
    text = text.strip()
    if text.lower() in _LABEL_ALIASES:
        return _LABEL_ALIASES[text.lower()]
    try:
        value = int(text)
    except ValueError:
        raise ValueError(f"unrecognised label {text!r}") from None
    if value not in SCORES:
        raise ValueError(f"label {value} outside [-2, 2]")
    return value


def parse_lexicon(path) -> list:
    """Read ``key=value`` lexicon lines; a word seen again replaces earlier entries."""
    by_word: "OrderedDict[str, list]" = OrderedDict()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            record = {}
            for token in line.split():
                key, sep, value = token.partition("=")
                if not sep:
                    raise ManifestError(f"{path}:{lineno}: expected key=value, got {token!r}")
                record[key] = value
            unknown = set(record) - _KNOWN_KEYS
            if unknown:
                log.warning("%s:%d: ignoring unknown keys %s", path, lineno, sorted(unknown))
            missing = {"type", "word1", "priorpolarity"} - set(record)
            if missing:
                raise ManifestError(f"{path}:{lineno}: missing key(s) {sorted(missing)}")
            strength = _STRENGTH.get(record["type"])
            polarities = _POLARITY.get(record["priorpolarity"])
            if strength is None or polarities is None:
                raise ManifestError(f"{path}:{lineno}: bad type/priorpolarity "
                                    f"{record['type']!r}/{record['priorpolarity']!r}")
            word = record["word1"].lower()
            if not word:
                raise ManifestError(f"{path}:{lineno}: empty word")
            if word in by_word:
                log.warning("%s:%d: duplicate word %r, later entry wins", path, lineno, word)
                del by_word[word]
            by_word[word] = [LexiconEntry(word, strength, p) for p in polarities]
    return [entry for entries in by_word.values() for entry in entries]


def strong_polar_words(lexicon) -> frozenset:
    return frozenset(e.word for e in lexicon if e.strength == "strong" and e.polarity in BINARY_LABELS)


def filter_posts(posts, lexicon) -> list:
    """Keep posts with at least one tag that is a strongly subjective polar word."""
    words = strong_polar_words(lexicon)
    return [p for p in posts if any(t in words for t in p.tags)]


def majority_vote(scores):
    """Score shared by at least two of three annotators, else ``None``."""
    scores = tuple(scores)
    if len(scores) != 3:
        raise ValueError(f"majority vote needs exactly 3 scores, got {len(scores)}")
    value, count = Counter(scores).most_common(1)[0]
    return value if count >= 2 else None


@dataclass
class Resolution:
    samples: list
    agreement_rate: Fraction
    invalid: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.samples, self.agreement_rate))

    @property
    def histogram(self) -> "OrderedDict":
        return label_histogram(self.samples)


def resolve_dataset(posts) -> Resolution:
    """Majority-vote every post; unresolved posts are dropped and listed in ``invalid``."""
    samples, invalid = [], []
    for post in posts:
        if len(post.annotations) != 3:
            raise ValueError(f"post {post.id!r} has {len(post.annotations)} annotations, expected 3")
        label = majority_vote(post.annotations)
        if label is None:
            invalid.append(post.id)
        else:
            samples.append(Sample(post.id, post.image, label))
    total = len(samples) + len(invalid)
    rate = Fraction(len(samples), total) if total else Fraction(1)
    return Resolution(samples, rate, invalid)


def label_histogram(samples) -> "OrderedDict":
    counts = Counter(s.label for s in samples)
    if all(isinstance(k, int) for k in counts):
        keys = list(SCORES)
    else:
        keys = [k for k in BINARY_LABELS if k in counts] + sorted(k for k in counts if k not in BINARY_LABELS)
    return OrderedDict((k, counts.get(k, 0)) for k in keys)


def load_manifest(path) -> list:
    """Parse a tab-separated manifest.

    An annotated manifest (``id image tags a1 a2 a3``) yields ``PostRecord``
    objects; a pre-labelled one (``id image label``) yields ``Sample`` objects.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        return []
    header = tuple(lines[0].split("\t"))
    if header not in (ANNOTATED_HEADER, LABELED_HEADER):
        raise ManifestError(f"{path}:1: unrecognised header {header}")
    annotated = header == ANNOTATED_HEADER
    out, seen = [], set()
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != len(header):
            raise ManifestError(f"{path}:{lineno}: expected {len(header)} columns, got {len(cols)}")
        pid = cols[0]
        if not pid:
            raise ManifestError(f"{path}:{lineno}: empty id")
        if pid in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate id {pid!r}")
        seen.add(pid)
        try:
            if annotated:
                tags = [t.strip() for t in cols[2].split(",") if t.strip()]
                scores = [int(c) for c in cols[3:6]]
                out.append(PostRecord(pid, cols[1], tuple(tags), tuple(scores)))
            else:
                out.append(Sample(pid, cols[1], parse_label(cols[2])))
        except ValueError as exc:
            raise ManifestError(f"{path}:{lineno}: {exc}") from None
    return out


def _atomic_write(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_samples(path, samples) -> None:
    rows = ["\t".join(LABELED_HEADER)]
    rows += [f"{s.id}\t{s.image}\t{s.label}" for s in samples]
    _atomic_write(path, "\n".join(rows) + "\n")


def write_posts(path, posts) -> None:
    rows = ["\t".join(ANNOTATED_HEADER)]
    for p in posts:
        rows.append("\t".join([p.id, p.image, ",".join(p.tags)] + [str(a) for a in p.annotations]))
    _atomic_write(path, "\n".join(rows) + "\n")
