"""A small deterministic self-attention encoder over hashed token vectors.

This is the default encoder: no downloaded weights, no torch, fully
reproducible across processes and machines.  Token base vectors are
derived by hashing the token string, positions are sinusoidal, and a
couple of fixed-weight attention layers mix context so the same token
gets different vectors in different sentences.  It is a stand-in with
the same interface contract as a pretrained model, not a quality
encoder.
"""

import hashlib
import re

import numpy as np

TURN_SEPARATOR = "<eou>"
_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

BOUNDARY_START = "<s>"
BOUNDARY_END = "</s>"


def tokenize(text: str) -> list[str]:
    """Lowercase, split punctuation from words, keep the turn separator.

    Matches the tokenization the consuming toolkit applies to pairs
    files, so exported token matrices line up with its token lists.
    """
    tokens: list[str] = []
    for chunk in text.lower().split():
        if chunk == TURN_SEPARATOR:
            tokens.append(chunk)
        else:
            tokens.extend(_TOKEN_RE.findall(chunk))
    return tokens


def _layer_norm(x: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + 1e-6)


class HashAttentionEncoder:
    """Deterministic contextual encoder.

    Sequences longer than ``max_tokens`` content tokens are truncated at
    the tail.  Boundary markers wrap the sequence during attention but
    are dropped from the returned matrix, so pooling never sees them.
    """

    name = "hash-attention-v1"

    def __init__(self, dim: int = 48, layers: int = 2, max_tokens: int = 128,
                 seed: int = 0):
        if dim < 2 or dim % 2:
            raise ValueError("dim must be an even integer >= 2")
        if max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        self.dim = dim
        self.max_tokens = max_tokens
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(dim)
        self._weights = [
            tuple(rng.standard_normal((dim, dim)) * scale for _ in range(4))
            for _ in range(layers)
        ]
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            token_rng = np.random.default_rng(int.from_bytes(digest, "big"))
            vec = token_rng.standard_normal(self.dim) / np.sqrt(self.dim)
            self._token_cache[token] = vec
        return vec

    def _positions(self, n: int) -> np.ndarray:
        pos = np.arange(n)[:, None]
        idx = np.arange(self.dim // 2)[None, :]
        angle = pos / (10000.0 ** (2 * idx / self.dim))
        enc = np.empty((n, self.dim))
        enc[:, 0::2] = np.sin(angle)
        enc[:, 1::2] = np.cos(angle)
        return 0.1 * enc

    def encode(self, text: str) -> tuple[list[str], np.ndarray]:
        """Return (tokens, matrix) with one row per kept content token."""
        tokens = tokenize(text)[: self.max_tokens]
        wrapped = [BOUNDARY_START, *tokens, BOUNDARY_END]
        x = np.stack([self._token_vector(t) for t in wrapped])
        x = x + self._positions(len(wrapped))
        for wq, wk, wv, wo in self._weights:
            q, k, v = x @ wq, x @ wk, x @ wv
            logits = (q @ k.T) / np.sqrt(self.dim)
            logits -= logits.max(axis=-1, keepdims=True)
            att = np.exp(logits)
            att /= att.sum(axis=-1, keepdims=True)
            x = _layer_norm(x + att @ v)
            x = _layer_norm(x + x @ wo)
        return tokens, x[1:-1]

    def sentence_vector(self, matrix: np.ndarray) -> np.ndarray:
        if matrix.shape[0] == 0:
            return np.zeros(self.dim)
        return matrix.mean(axis=0)


class PretrainedEncoder:
    """Wraps a transformers model behind the same encode() contract.

    Token vectors come from the last hidden layer; special tokens the
    tokenizer adds are excluded from the returned matrix.
    """

    def __init__(self, model_name: str, max_tokens: int = 128):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_name)
        self._model = AutoModel.from_pretrained(model_name)
        self._model.eval()
        self.name = model_name
        self.dim = int(self._model.config.hidden_size)
        self.max_tokens = max_tokens

    def encode(self, text: str) -> tuple[list[str], np.ndarray]:
        sub_tokens = self._tokenizer.tokenize(text)[: self.max_tokens]
        ids = self._tokenizer.encode(
            self._tokenizer.convert_tokens_to_string(sub_tokens)
            if sub_tokens else "",
            truncation=True,
            max_length=self.max_tokens + 2,
        )
        with self._torch.no_grad():
            hidden = self._model(
                self._torch.tensor([ids])
            ).last_hidden_state[0].double().numpy()
        special = set(self._tokenizer.all_special_ids)
        keep = [i for i, tok_id in enumerate(ids) if tok_id not in special]
        kept_tokens = self._tokenizer.convert_ids_to_tokens(
            [ids[i] for i in keep]
        )
        return list(kept_tokens), hidden[keep]

    def sentence_vector(self, matrix: np.ndarray) -> np.ndarray:
        if matrix.shape[0] == 0:
            return np.zeros(self.dim)
        return matrix.mean(axis=0)
