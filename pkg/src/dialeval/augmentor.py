"""Positive response augmentation.

Variants of a true response come from two routes: cheap token-level
edits (synonym replacement, random insertion, random swap, random
deletion) driven by a synonym lexicon, or an external candidate file
produced by some upstream generator.  Both yield ``AugmentedSet``
containers with exactly ``k`` variants per pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .corpus import FormatError, tokenize
from .rng import derive_rng

OPERATIONS = (
    "synonym_replacement",
    "random_insertion",
    "random_swap",
    "random_deletion",
)


@dataclass(frozen=True)
class EdaConfig:
    k: int = 5
    alpha: float = 0.1
    operations: tuple[str, ...] = OPERATIONS
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        ops = tuple(op for op in OPERATIONS if op in self.operations)
        unknown = set(self.operations) - set(OPERATIONS)
        if unknown:
            raise ValueError(f"unknown operations: {sorted(unknown)}")
        if not ops:
            raise ValueError("at least one operation must be enabled")
        object.__setattr__(self, "operations", ops)


@dataclass(frozen=True)
class Variant:
    tokens: tuple[str, ...]
    operation: str
    changed: bool

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class AugmentedSet:
    pair_id: str
    original: str
    variants: tuple[str, ...]
    provenance: str

    def __post_init__(self):
        if self.provenance not in ("eda", "external"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if not self.variants:
            raise ValueError(f"pair {self.pair_id!r}: no variants")
        for v in self.variants:
            if not v.strip():
                raise ValueError(f"pair {self.pair_id!r}: empty variant")


class SynonymLexicon:
    """Token -> synonyms mapping loaded from TSV.

    Format: ``token<TAB>syn1,syn2,...`` per line.  Lookups are
    case-sensitive against already-lowercased tokens.
    """

    def __init__(self, entries: dict[str, tuple[str, ...]]):
        for token, syns in entries.items():
            if not syns:
                raise ValueError(f"token {token!r} has no synonyms")
            if tuple(syns) == (token,):
                raise ValueError(f"token {token!r} is its own sole synonym")
        self.entries = {t: tuple(s) for t, s in entries.items()}

    @classmethod
    def load(cls, path: str) -> "SynonymLexicon":
        entries: dict[str, tuple[str, ...]] = {}
        with open(path, encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                cols = line.split("\t")
                if len(cols) != 2:
                    raise FormatError(
                        f"expected 2 columns, got {len(cols)}", lineno
                    )
                token = cols[0].strip()
                syns = tuple(
                    s.strip() for s in cols[1].split(",") if s.strip()
                )
                if not token:
                    raise FormatError("empty token", lineno)
                if not syns:
                    raise FormatError(f"token {token!r} has no synonyms", lineno)
                if syns == (token,):
                    raise FormatError(
                        f"token {token!r} is its own sole synonym", lineno
                    )
                if token in entries:
                    raise FormatError(f"duplicate token {token!r}", lineno)
                entries[token] = syns
        return cls(entries)

    def synonyms(self, token: str) -> tuple[str, ...]:
        return self.entries.get(token, ())

    def get(self, token: str, default=()):
        return self.entries.get(token, default)

    def __len__(self) -> int:
        return len(self.entries)


def _edit_budget(alpha: float, length: int) -> int:
    return max(1, round(alpha * length))


def synonym_replacement(tokens, n, lexicon, rng) -> list[str]:
    """Replace up to n tokens that have synonyms with a random synonym."""
    out = list(tokens)
    eligible = [i for i, t in enumerate(out) if lexicon.synonyms(t)]
    if not eligible:
        return out
    count = min(n, len(eligible))
    chosen = rng.choice(len(eligible), size=count, replace=False)
    for c in sorted(int(i) for i in chosen):
        idx = eligible[c]
        syns = lexicon.synonyms(out[idx])
        out[idx] = syns[int(rng.integers(len(syns)))]
    return out


def random_insertion(tokens, n, lexicon, rng) -> list[str]:
    """Insert n tokens at random positions.

    Each inserted token is a synonym of a random token that has one, or
    a copy of a random token when none do.
    """
    out = list(tokens)
    for _ in range(n):
        with_syns = [t for t in out if lexicon.synonyms(t)]
        if with_syns:
            base = with_syns[int(rng.integers(len(with_syns)))]
            syns = lexicon.synonyms(base)
            token = syns[int(rng.integers(len(syns)))]
        else:
            token = out[int(rng.integers(len(out)))]
        out.insert(int(rng.integers(len(out) + 1)), token)
    return out


def random_swap(tokens, n, rng) -> list[str]:
    """Swap n random pairs of positions; a no-op below 2 tokens."""
    out = list(tokens)
    if len(out) < 2:
        return out
    for _ in range(n):
        i = int(rng.integers(len(out)))
        j = int(rng.integers(len(out)))
        while j == i:
            j = int(rng.integers(len(out)))
        out[i], out[j] = out[j], out[i]
    return out


def random_deletion(tokens, n, rng) -> list[str]:
    """Delete up to n random tokens, always keeping at least one."""
    out = list(tokens)
    count = min(n, len(out) - 1)
    if count <= 0:
        return out
    drop = set(int(i) for i in rng.choice(len(out), size=count, replace=False))
    return [t for i, t in enumerate(out) if i not in drop]


def _one_variant(tokens, config: EdaConfig, lexicon, rng) -> Variant:
    op = config.operations[int(rng.integers(len(config.operations)))]
    n = _edit_budget(config.alpha, len(tokens))
    if op == "synonym_replacement":
        new = synonym_replacement(tokens, n, lexicon, rng)
    elif op == "random_insertion":
        new = random_insertion(tokens, n, lexicon, rng)
    elif op == "random_swap":
        new = random_swap(tokens, n, rng)
    else:
        new = random_deletion(tokens, n, rng)
    return Variant(tokens=tuple(new), operation=op, changed=new != list(tokens))


def eda_variants(tokens, config: EdaConfig, lexicon: SynonymLexicon, rng) -> list[Variant]:
    """k variants of one token list from an explicit stream."""
    if len(tokens) == 0:
        raise ValueError("cannot augment an empty token list")
    if config.operations == ("synonym_replacement",) and len(lexicon) == 0:
        raise ValueError(
            "synonym_replacement is the only enabled operation but the"
            " lexicon is empty"
        )
    return [_one_variant(tokens, config, lexicon, rng) for _ in range(config.k)]


def eda_augment(tokens, config: EdaConfig, lexicon: SynonymLexicon) -> list[Variant]:
    """k edit variants of one token list, seeded from the config."""
    return eda_variants(tokens, config, lexicon, derive_rng(config.seed, "eda"))


def augment_pairs(pairs, config: EdaConfig, lexicon: SynonymLexicon) -> list[AugmentedSet]:
    """Edit-based augmentation over a dataset with per-pair streams."""
    out = []
    for pair in pairs:
        rng = derive_rng(config.seed, "aug", pair.id)
        variants = eda_variants(tokenize(pair.response), config, lexicon, rng)
        out.append(
            AugmentedSet(
                pair_id=pair.id,
                original=pair.response,
                variants=tuple(v.text for v in variants),
                provenance="eda",
            )
        )
    return out


def load_external_candidates(path: str, k: int) -> dict[str, AugmentedSet]:
    """Load generator-produced variants from JSONL, keyed by pair id.

    Each line is ``{"pair_id": ..., "variants": [...]}`` with an
    optional ``original``.  More than ``k`` variants are truncated to
    the first ``k`` (generator ranking respected); fewer is an error.
    """
    out: dict[str, AugmentedSet] = {}
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad JSON: {exc.msg}", lineno) from exc
            if "pair_id" not in obj or "variants" not in obj:
                raise FormatError("entry needs 'pair_id' and 'variants'", lineno)
            pair_id = str(obj["pair_id"])
            variants = obj["variants"]
            if not isinstance(variants, list) or not all(
                isinstance(v, str) for v in variants
            ):
                raise FormatError("'variants' must be a list of strings", lineno)
            if pair_id in seen:
                raise FormatError(
                    f"duplicate pair_id {pair_id!r}"
                    f" (first seen on line {seen[pair_id]})",
                    lineno,
                )
            seen[pair_id] = lineno
            if len(variants) < k:
                raise FormatError(
                    f"pair {pair_id!r} has {len(variants)} variants,"
                    f" need at least {k}",
                    lineno,
                )
            try:
                out[pair_id] = AugmentedSet(
                    pair_id=pair_id,
                    original=str(obj.get("original", "")),
                    variants=tuple(variants[:k]),
                    provenance="external",
                )
            except ValueError as exc:
                raise FormatError(str(exc), lineno) from exc
    return out
