"""Dialogue pairs, human annotations, and deterministic dataset splits.

File formats handled here:

* pairs JSONL: one object per line with keys ``id``, ``context`` (list of
  turn strings), ``response``, and optional ``source``.
* pairs TSV: header optional, columns ``id``, ``context`` (turns joined
  by ``|||``), ``response``.
* annotations TSV: columns ``pair_id``, ``annotator_id``, ``aspect``,
  ``raw_score`` with raw scores on a 1..6 integer scale.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

SOURCES = ("ground_truth", "generated", "augmented", "negative")
ASPECTS = ("fluency", "coherence", "engagement", "overall")
TURN_SEPARATOR = "<eou>"

_TSV_TURN_JOIN = "|||"
_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


class FormatError(ValueError):
    """Malformed input file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class DialoguePair:
    """One (context, response) example with a provenance tag."""

    id: str
    context: tuple[str, ...]
    response: str
    source: str = "ground_truth"

    def __post_init__(self):
        if not self.id:
            raise ValueError("pair id must be non-empty")
        if not isinstance(self.context, tuple):
            object.__setattr__(self, "context", tuple(self.context))
        if len(self.context) == 0:
            raise ValueError(f"pair {self.id!r}: context has no turns")
        for turn in self.context:
            if not turn.strip():
                raise ValueError(f"pair {self.id!r}: empty context turn")
        if not self.response.strip():
            raise ValueError(f"pair {self.id!r}: empty response")
        if self.source not in SOURCES:
            raise ValueError(
                f"pair {self.id!r}: unknown source {self.source!r}"
            )


@dataclass(frozen=True)
class Rating:
    annotator_id: str
    aspect: str
    raw_score: int


@dataclass(frozen=True)
class AnnotationSet:
    """All human ratings collected for one pair."""

    pair_id: str
    ratings: tuple[Rating, ...]

    def scores(self, aspect: str) -> dict[str, int]:
        """Map annotator id -> raw score for one aspect."""
        return {
            r.annotator_id: r.raw_score
            for r in self.ratings
            if r.aspect == aspect
        }


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[DialoguePair, ...]
    test: tuple[DialoguePair, ...]
    valid: tuple[DialoguePair, ...]
    seed: int


def tokenize(text: str) -> list[str]:
    """Lowercase, split punctuation from words, split on whitespace.

    The turn separator token is kept intact so flattened contexts
    round-trip through tokenization.
    """
    tokens: list[str] = []
    for chunk in text.lower().split():
        if chunk == TURN_SEPARATOR:
            tokens.append(chunk)
        else:
            tokens.extend(_TOKEN_RE.findall(chunk))
    return tokens


def flatten_context(context: tuple[str, ...] | list[str]) -> str:
    """Join context turns into one string with separator tokens between."""
    return f" {TURN_SEPARATOR} ".join(context)


def normalize_score(raw: int) -> float:
    """Map a raw 1..6 rating onto [0, 1] linearly."""
    if isinstance(raw, bool) or not isinstance(raw, (int, np.integer)):
        raise ValueError(f"raw score must be an integer, got {raw!r}")
    if not 1 <= raw <= 6:
        raise ValueError(f"raw score {raw} outside 1..6")
    return (raw - 1) / 5


def _pair_from_obj(obj: dict, line: int) -> DialoguePair:
    for key in ("id", "context", "response"):
        if key not in obj:
            raise FormatError(f"missing key {key!r}", line)
    context = obj["context"]
    if not isinstance(context, list) or not all(
        isinstance(t, str) for t in context
    ):
        raise FormatError("context must be a list of strings", line)
    if not isinstance(obj["response"], str):
        raise FormatError("response must be a string", line)
    source = obj.get("source", "ground_truth")
    try:
        return DialoguePair(
            id=str(obj["id"]),
            context=tuple(context),
            response=obj["response"],
            source=source,
        )
    except ValueError as exc:
        raise FormatError(str(exc), line) from exc


def load_pairs(path: str, format: str = "jsonl") -> list[DialoguePair]:
    """Load dialogue pairs from a JSONL or TSV file.

    Raises FormatError (with line number) on malformed rows or duplicate
    ids.
    """
    if format not in ("jsonl", "tsv"):
        raise ValueError(f"unknown pairs format {format!r}")
    pairs: list[DialoguePair] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if format == "jsonl":
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise FormatError(f"bad JSON: {exc.msg}", lineno) from exc
                if not isinstance(obj, dict):
                    raise FormatError("row is not an object", lineno)
                pair = _pair_from_obj(obj, lineno)
            else:
                cols = line.split("\t")
                if lineno == 1 and [c.strip().lower() for c in cols] == [
                    "id",
                    "context",
                    "response",
                ]:
                    continue
                if len(cols) != 3:
                    raise FormatError(
                        f"expected 3 columns, got {len(cols)}", lineno
                    )
                turns = [t for t in cols[1].split(_TSV_TURN_JOIN)]
                try:
                    pair = DialoguePair(
                        id=cols[0], context=tuple(turns), response=cols[2]
                    )
                except ValueError as exc:
                    raise FormatError(str(exc), lineno) from exc
            if pair.id in seen:
                raise FormatError(
                    f"duplicate pair id {pair.id!r}"
                    f" (first seen on line {seen[pair.id]})",
                    lineno,
                )
            seen[pair.id] = lineno
            pairs.append(pair)
    return pairs


def write_pairs_jsonl(pairs, path: str) -> None:
    """Write pairs as JSONL with a stable key order."""
    with open(path, "w", encoding="utf-8") as handle:
        for pair in pairs:
            handle.write(
                json.dumps(
                    {
                        "id": pair.id,
                        "context": list(pair.context),
                        "response": pair.response,
                        "source": pair.source,
                    },
                    ensure_ascii=False,
                    sort_keys=False,
                )
                + "\n"
            )


def load_annotations(path: str) -> list[AnnotationSet]:
    """Load an annotations TSV, grouping rows by pair id.

    Duplicate (pair, annotator, aspect) rows and out-of-range scores are
    FormatErrors.
    """
    grouped: dict[str, list[Rating]] = {}
    seen_keys: dict[tuple[str, str, str], int] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if lineno == 1 and [c.strip().lower() for c in cols] == [
                "pair_id",
                "annotator_id",
                "aspect",
                "raw_score",
            ]:
                continue
            if len(cols) != 4:
                raise FormatError(
                    f"expected 4 columns, got {len(cols)}", lineno
                )
            pair_id, annotator_id, aspect, score_text = (
                c.strip() for c in cols
            )
            if not pair_id or not annotator_id:
                raise FormatError("empty pair or annotator id", lineno)
            if aspect not in ASPECTS:
                raise FormatError(f"unknown aspect {aspect!r}", lineno)
            try:
                score = int(score_text)
            except ValueError as exc:
                raise FormatError(
                    f"raw score {score_text!r} is not an integer", lineno
                ) from exc
            if not 1 <= score <= 6:
                raise FormatError(f"raw score {score} outside 1..6", lineno)
            key = (pair_id, annotator_id, aspect)
            if key in seen_keys:
                raise FormatError(
                    f"duplicate rating for {key}"
                    f" (first seen on line {seen_keys[key]})",
                    lineno,
                )
            seen_keys[key] = lineno
            grouped.setdefault(pair_id, []).append(
                Rating(annotator_id, aspect, score)
            )
    return [
        AnnotationSet(pair_id, tuple(ratings))
        for pair_id, ratings in grouped.items()
    ]


def mean_normalized_ratings(
    annotation_sets, aspect: str = "overall"
) -> dict[str, float]:
    """Per pair, the mean of normalized ratings for one aspect.

    Pairs with no rating for the aspect are omitted.
    """
    out: dict[str, float] = {}
    for ann in annotation_sets:
        scores = ann.scores(aspect)
        if scores:
            out[ann.pair_id] = float(
                np.mean([normalize_score(s) for s in scores.values()])
            )
    return out


def split_dataset(
    pairs, sizes: tuple[int, int, int], seed: int
) -> DatasetSplit:
    """Shuffle with the given seed and cut train/test/valid slices."""
    n_train, n_test, n_valid = sizes
    if min(sizes) < 0:
        raise ValueError("split sizes must be non-negative")
    total = n_train + n_test + n_valid
    if total > len(pairs):
        raise ValueError(
            f"split sizes sum to {total} but only {len(pairs)} pairs given"
        )
    order = np.random.default_rng(seed).permutation(len(pairs))
    shuffled = [pairs[i] for i in order]
    return DatasetSplit(
        train=tuple(shuffled[:n_train]),
        test=tuple(shuffled[n_train : n_train + n_test]),
        valid=tuple(shuffled[n_train + n_test : total]),
        seed=seed,
    )
