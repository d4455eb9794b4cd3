"""Static word vectors, pooling, cosine, and precomputed sentence stores.

Two ways to get vectors for a sentence:

* an ``EmbeddingTable`` of static word vectors, mean-pooled over tokens
  (out-of-vocabulary tokens resolved by the table's policy), or
* a ``PrecomputedEmbeddingStore`` loaded from JSONL, keyed by
  ``<pair_id>/<role>`` with role one of ``context`` / ``response``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .corpus import FormatError, tokenize

OOV_POLICIES = ("zero_vector", "mean_vector")
ROLES = ("context", "response")


class ZeroNormWarning(RuntimeWarning):
    """Cosine was asked for a zero-norm vector and returned 0."""


@dataclass(frozen=True)
class SentenceVector:
    vector: np.ndarray
    token_count: int


class EmbeddingTable:
    """Immutable token -> vector lookup with an out-of-vocabulary policy."""

    def __init__(self, entries: dict[str, np.ndarray], oov_policy: str = "zero_vector"):
        if oov_policy not in OOV_POLICIES:
            raise ValueError(f"unknown oov policy {oov_policy!r}")
        if not entries:
            raise ValueError("embedding table has no entries")
        self.oov_policy = oov_policy
        self._entries: dict[str, np.ndarray] = {}
        dim = None
        for token, vec in entries.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise ValueError(f"vector for {token!r} is not 1-D")
            if dim is None:
                dim = arr.shape[0]
            elif arr.shape[0] != dim:
                raise ValueError(
                    f"vector for {token!r} has dim {arr.shape[0]},"
                    f" expected {dim}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"vector for {token!r} has non-finite values")
            self._entries[token] = arr
        self.dim = int(dim)
        self._mean = np.mean(list(self._entries.values()), axis=0)

    def __contains__(self, token: str) -> bool:
        return token in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def vector(self, token: str) -> np.ndarray:
        """Vector for a token, with the OOV policy applied when absent."""
        vec = self._entries.get(token)
        if vec is not None:
            return vec
        if self.oov_policy == "mean_vector":
            return self._mean
        return np.zeros(self.dim, dtype=np.float64)


def load_word_vectors(path: str, oov_policy: str = "zero_vector") -> EmbeddingTable:
    """Load whitespace-separated ``token v1 v2 ...`` lines into a table.

    An optional first line ``<count> <dim>`` (two integer fields) is
    treated as a header and skipped.
    """
    entries: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split()
            if lineno == 1 and len(fields) == 2:
                try:
                    int(fields[0]), int(fields[1])
                    continue
                except ValueError:
                    pass
            if len(fields) < 2:
                raise FormatError("expected a token and at least one value", lineno)
            token = fields[0]
            if token in entries:
                raise FormatError(f"duplicate token {token!r}", lineno)
            try:
                vec = np.array([float(f) for f in fields[1:]], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(f"bad float in vector for {token!r}", lineno) from exc
            entries[token] = vec
    try:
        return EmbeddingTable(entries, oov_policy=oov_policy)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def average_pool(tokens, table: EmbeddingTable) -> SentenceVector:
    """Mean of per-token vectors; empty token list is an error."""
    if len(tokens) == 0:
        raise ValueError("cannot pool an empty token list")
    acc = np.zeros(table.dim, dtype=np.float64)
    for token in tokens:
        acc += table.vector(token)
    return SentenceVector(vector=acc / len(tokens), token_count=len(tokens))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; zero-norm inputs yield 0.0 with a warning."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        warnings.warn(
            "cosine of a zero-norm vector is defined as 0.0",
            ZeroNormWarning,
            stacklevel=2,
        )
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class PrecomputedEmbeddingStore:
    """Sentence vectors (and optional token matrices) loaded from JSONL.

    The first line is a header object with ``dim``, ``pooling`` and
    ``layer``; every following line carries either ``{"key", "vector"}``
    or ``{"key", "tokens", "matrix"}``.  Non-fatal integrity issues are
    collected in ``self.warnings``.
    """

    def __init__(
        self,
        dim: int,
        pooling: str,
        layer,
        vectors: dict[str, np.ndarray],
        matrices: dict[str, tuple[list[str], np.ndarray]],
        warnings_list: list[str] | None = None,
    ):
        self.dim = dim
        self.pooling = pooling
        self.layer = layer
        self._vectors = vectors
        self._matrices = matrices
        self.warnings: list[str] = list(warnings_list or [])

    @classmethod
    def load(cls, path: str) -> "PrecomputedEmbeddingStore":
        vectors: dict[str, np.ndarray] = {}
        matrices: dict[str, tuple[list[str], np.ndarray]] = {}
        notes: list[str] = []
        header = None
        with open(path, encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise FormatError(f"bad JSON: {exc.msg}", lineno) from exc
                if header is None:
                    for key in ("dim", "pooling", "layer"):
                        if key not in obj:
                            raise FormatError(
                                f"header missing {key!r}", lineno
                            )
                    if not isinstance(obj["dim"], int) or obj["dim"] < 1:
                        raise FormatError("header dim must be a positive int", lineno)
                    header = obj
                    continue
                if "key" not in obj:
                    raise FormatError("entry missing 'key'", lineno)
                key = obj["key"]
                if "/" not in key or key.rsplit("/", 1)[1] not in ROLES:
                    raise FormatError(
                        f"key {key!r} is not <pair_id>/<role>", lineno
                    )
                if "vector" in obj:
                    vec = np.asarray(obj["vector"], dtype=np.float64)
                    if vec.ndim != 1 or vec.shape[0] != header["dim"]:
                        raise FormatError(
                            f"vector for {key!r} has shape {vec.shape},"
                            f" expected ({header['dim']},)",
                            lineno,
                        )
                    if key in vectors:
                        notes.append(f"duplicate vector key {key!r} (line {lineno})")
                    vectors[key] = vec
                elif "matrix" in obj:
                    if "tokens" not in obj:
                        raise FormatError(f"matrix entry {key!r} missing tokens", lineno)
                    mat = np.asarray(obj["matrix"], dtype=np.float64)
                    tokens = obj["tokens"]
                    if mat.ndim != 2 or mat.shape[1] != header["dim"]:
                        raise FormatError(
                            f"matrix for {key!r} has shape {mat.shape},"
                            f" expected (*, {header['dim']})",
                            lineno,
                        )
                    if len(tokens) != mat.shape[0]:
                        raise FormatError(
                            f"matrix for {key!r} has {mat.shape[0]} rows"
                            f" but {len(tokens)} tokens",
                            lineno,
                        )
                    if key in matrices:
                        notes.append(f"duplicate matrix key {key!r} (line {lineno})")
                    matrices[key] = (list(tokens), mat)
                else:
                    raise FormatError(
                        f"entry {key!r} has neither 'vector' nor 'matrix'", lineno
                    )
        if header is None:
            raise FormatError("store file has no header line")
        store = cls(
            dim=header["dim"],
            pooling=header["pooling"],
            layer=header["layer"],
            vectors=vectors,
            matrices=matrices,
            warnings_list=notes,
        )
        for key, (_, mat) in matrices.items():
            if key in vectors and mat.shape[0] > 0:
                gap = float(np.max(np.abs(mat.mean(axis=0) - vectors[key])))
                if gap > 1e-5:
                    store.warnings.append(
                        f"vector for {key!r} differs from matrix row-mean"
                        f" by {gap:.3g}"
                    )
        return store

    def keys(self):
        return sorted(set(self._vectors) | set(self._matrices))

    def has_vector(self, key: str) -> bool:
        return key in self._vectors or key in self._matrices

    def has_matrix(self, key: str) -> bool:
        return key in self._matrices

    def sentence_vector(self, key: str) -> np.ndarray:
        if key in self._vectors:
            return self._vectors[key]
        if key in self._matrices:
            tokens, mat = self._matrices[key]
            if mat.shape[0] == 0:
                raise KeyError(f"matrix for {key!r} has no rows")
            return mat.mean(axis=0)
        raise KeyError(f"no vector stored for {key!r}")

    def token_matrix(self, key: str) -> tuple[list[str], np.ndarray]:
        if key not in self._matrices:
            raise KeyError(f"no token matrix stored for {key!r}")
        return self._matrices[key]


class TableVectorSource:
    """Sentence vectors computed on demand from an EmbeddingTable.

    Pooled vectors are memoized by text, since samplers revisit the
    same responses many times.
    """

    def __init__(self, table: EmbeddingTable):
        self.table = table
        self.dim = table.dim
        self._cache: dict[str, np.ndarray] = {}

    def vector_for(self, pair_id: str, role: str, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        tokens = tokenize(text)
        if not tokens:
            raise ValueError(f"{pair_id}/{role}: no tokens to pool")
        vec = average_pool(tokens, self.table).vector
        self._cache[text] = vec
        return vec


class StoreVectorSource:
    """Sentence vectors looked up in a PrecomputedEmbeddingStore."""

    def __init__(self, store: PrecomputedEmbeddingStore):
        self.store = store
        self.dim = store.dim

    def vector_for(self, pair_id: str, role: str, text: str) -> np.ndarray:
        key = f"{pair_id}/{role}"
        if not self.store.has_vector(key):
            raise KeyError(f"store has no entry for {key!r}")
        return self.store.sentence_vector(key)


def as_vector_source(obj):
    """Wrap a table or store as a vector source; pass sources through."""
    if isinstance(obj, EmbeddingTable):
        return TableVectorSource(obj)
    if isinstance(obj, PrecomputedEmbeddingStore):
        return StoreVectorSource(obj)
    if hasattr(obj, "vector_for"):
        return obj
    raise TypeError(f"cannot use {type(obj).__name__} as a vector source")
