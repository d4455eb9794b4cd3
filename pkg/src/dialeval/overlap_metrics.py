"""Word-overlap reference metrics: n-gram precision, LCS F-measure, and
an aligned unigram F-mean with a fragmentation penalty.

All functions take pre-tokenized candidate and reference token lists and
return a float in [0, 1].
"""

from __future__ import annotations

import math
from collections import Counter

import numpy as np

from . import kernels

_EPSILON = 1e-9


def _ngram_counts(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _check_nonempty(candidate, reference):
    if len(candidate) == 0 or len(reference) == 0:
        raise ValueError("candidate and reference must be non-empty")


def bleu(candidate, reference, max_n: int = 4, smoothing: str = "epsilon") -> float:
    """Geometric mean of clipped n-gram precisions times a brevity penalty.

    ``smoothing="epsilon"`` replaces zero precisions at orders >= 2 with
    a tiny constant; ``smoothing="none"`` leaves them at zero, which
    zeroes the whole score.
    """
    _check_nonempty(candidate, reference)
    if not 1 <= max_n <= 4:
        raise ValueError(f"max_n must be in 1..4, got {max_n}")
    if smoothing not in ("epsilon", "none"):
        raise ValueError(f"unknown smoothing {smoothing!r}")
    precisions = []
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(candidate, n)
        total = sum(cand_counts.values())
        if total == 0:
            p = 0.0
        else:
            ref_counts = _ngram_counts(reference, n)
            matched = sum(
                min(count, ref_counts[gram])
                for gram, count in cand_counts.items()
            )
            p = matched / total
        if p == 0.0 and n >= 2 and smoothing == "epsilon":
            p = _EPSILON
        precisions.append(p)
    if any(p == 0.0 for p in precisions):
        return 0.0
    log_mean = sum(math.log(p) for p in precisions) / max_n
    brevity = math.exp(min(0.0, 1.0 - len(reference) / len(candidate)))
    return brevity * math.exp(log_mean)


def _encode_shared(candidate, reference) -> tuple[np.ndarray, np.ndarray]:
    vocab: dict[str, int] = {}
    for token in candidate:
        vocab.setdefault(token, len(vocab))
    for token in reference:
        vocab.setdefault(token, len(vocab))
    a = np.fromiter((vocab[t] for t in candidate), dtype=np.int64, count=len(candidate))
    b = np.fromiter((vocab[t] for t in reference), dtype=np.int64, count=len(reference))
    return a, b


def rouge_l(candidate, reference) -> float:
    """F-measure over the longest common subsequence."""
    _check_nonempty(candidate, reference)
    a, b = _encode_shared(candidate, reference)
    lcs = kernels.lcs_length(a, b)
    if lcs == 0:
        return 0.0
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return 2 * precision * recall / (precision + recall)


def _align(candidate, reference, synonyms) -> list[tuple[int, int]]:
    """Greedy two-stage unigram alignment: exact matches first, then
    synonym matches over what remains.  Each side used at most once;
    ties resolved to the earliest unmatched reference position.
    """
    cand_match = [-1] * len(candidate)
    ref_used = [False] * len(reference)
    for i, token in enumerate(candidate):
        for j, ref_token in enumerate(reference):
            if not ref_used[j] and ref_token == token:
                cand_match[i] = j
                ref_used[j] = True
                break
    if synonyms is not None:
        for i, token in enumerate(candidate):
            if cand_match[i] >= 0:
                continue
            token_syns = synonyms.get(token, ())
            for j, ref_token in enumerate(reference):
                if ref_used[j]:
                    continue
                if ref_token in token_syns or token in synonyms.get(ref_token, ()):
                    cand_match[i] = j
                    ref_used[j] = True
                    break
    return [(i, j) for i, j in enumerate(cand_match) if j >= 0]


def _count_chunks(alignment) -> int:
    """Number of maximal runs contiguous on both sides, in candidate order."""
    chunks = 0
    prev = None
    for i, j in alignment:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def meteor(candidate, reference, synonyms=None) -> float:
    """Recall-weighted unigram F-mean discounted by fragmentation.

    ``synonyms`` is an optional mapping token -> collection of synonyms
    used as a second alignment stage after exact matching.
    """
    _check_nonempty(candidate, reference)
    alignment = _align(candidate, reference, synonyms)
    matches = len(alignment)
    if matches == 0:
        return 0.0
    precision = matches / len(candidate)
    recall = matches / len(reference)
    fmean = 10 * precision * recall / (recall + 9 * precision)
    chunks = _count_chunks(alignment)
    penalty = 0.5 * (chunks / matches) ** 3
    return fmean * (1.0 - penalty)
