"""Deterministic hashed text features standing in for a frozen encoder."""

from __future__ import annotations

import hashlib
import unicodedata
from collections import Counter
from dataclasses import dataclass

import numpy as np

HASH_SCHEME = "blake2b64-signed-v1"
DEFAULT_DIMENSION = 1 << 15


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return (
        0x4E00 <= cp <= 0x9FFF
        or 0x3400 <= cp <= 0x4DBF
        or 0xF900 <= cp <= 0xFAFF
        or 0x3040 <= cp <= 0x30FF
    )


def _words(text: str) -> list[str]:
    """Lowercased word tokens; each CJK codepoint is its own token."""
    out: list[str] = []
    buf: list[str] = []
    for ch in text:
        if _is_cjk(ch):
            if buf:
                out.append("".join(buf))
                buf = []
            out.append(ch)
        elif ch.isalnum():
            buf.append(ch.lower())
        else:
            if buf:
                out.append("".join(buf))
                buf = []
    if buf:
        out.append("".join(buf))
    return out


def _hash64(gram: str) -> int:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def gram_hashes(text: str) -> Counter:
    """64-bit hashes of word unigrams plus character bi/trigrams."""
    text = unicodedata.normalize("NFC", text)
    words = _words(text)
    grams: Counter = Counter()
    for w in words:
        grams[_hash64("w:" + w)] += 1
    # Character bi/trigrams only over CJK runs, where word segmentation
    # degenerates to single characters.
    cjk_run = "".join(ch for ch in text if _is_cjk(ch))
    for n in (2, 3):
        for i in range(len(cjk_run) - n + 1):
            grams[_hash64(f"c{n}:" + cjk_run[i:i + n])] += 1
    return grams


@dataclass(frozen=True)
class Featurizer:
    """Signed feature hashing into a fixed-width vector, L2-normalized.

    Identical text always yields an identical vector; no fitted state.
    """

    dimension: int = DEFAULT_DIMENSION
    scheme: str = HASH_SCHEME
    ngram_orders: tuple[int, ...] = (1, 2, 3)

    def fold(self, grams: Counter) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for h, count in grams.items():
            idx = h % self.dimension
            sign = 1.0 if (h >> 32) & 1 else -1.0
            vec[idx] += sign * count
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec

    def vector(self, text: str) -> np.ndarray:
        return self.fold(gram_hashes(text))

    def pair_vector(self, text: str, node_label: str) -> np.ndarray:
        # Node identity enters by concatenating the node's path labels to
        # the text before hashing, so a shared head still sees the node.
        grams = gram_hashes(text)
        grams.update(gram_hashes(node_label))
        return self.fold(grams)

    def config(self) -> dict:
        return {
            "dimension": self.dimension,
            "scheme": self.scheme,
            "ngram_orders": list(self.ngram_orders),
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "Featurizer":
        return cls(
            dimension=int(cfg["dimension"]),
            scheme=cfg.get("scheme", HASH_SCHEME),
            ngram_orders=tuple(cfg.get("ngram_orders", (1, 2, 3))),
        )
