"""Word-level tokenizer over factual serializations."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

PAD, UNK, BOS, EOS, SEP = 0, 1, 2, 3, 4
SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[BOS]", "[EOS]", "[SEP]")
DEFAULT_MIN_FREQ = 3


@dataclass(frozen=True)
class Vocab:
    id_to_token: tuple[str, ...]
    min_freq: int = DEFAULT_MIN_FREQ
    lowercase: bool = False

    def __post_init__(self):
        if self.id_to_token[: len(SPECIAL_TOKENS)] != SPECIAL_TOKENS:
            raise ValueError("vocab must start with the special tokens")
        if len(set(self.id_to_token)) != len(self.id_to_token):
            raise ValueError("vocab tokens must be unique")
        object.__setattr__(self, "token_to_id", {t: i for i, t in enumerate(self.id_to_token)})

    def __len__(self):
        return len(self.id_to_token)

    @property
    def tokens(self) -> list[str]:
        """Regular (non-special) tokens in id order."""
        return list(self.id_to_token[len(SPECIAL_TOKENS):])

    def to_json(self) -> str:
        return json.dumps({"min_freq": self.min_freq, "tokens": self.tokens}, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str, lowercase: bool = False) -> "Vocab":
        obj = json.loads(text)
        return cls(SPECIAL_TOKENS + tuple(obj["tokens"]), min_freq=int(obj["min_freq"]), lowercase=lowercase)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path, lowercase: bool = False) -> "Vocab":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read(), lowercase=lowercase)


def _words(text: str, lowercase: bool) -> list[str]:
    words = text.split()
    if lowercase:
        words = [w if w in SPECIAL_TOKENS else w.lower() for w in words]
    return words


def build_vocab(corpus, min_freq: int = DEFAULT_MIN_FREQ, lowercase: bool = False) -> Vocab:
    """Admit words seen at least ``min_freq`` times; ids follow (-count, word)."""
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counts = Counter()
    for text in corpus:
        counts.update(w for w in _words(text, lowercase) if w not in SPECIAL_TOKENS)
    admitted = sorted((w for w, c in counts.items() if c >= min_freq), key=lambda w: (-counts[w], w))
    return Vocab(SPECIAL_TOKENS + tuple(admitted), min_freq=min_freq, lowercase=lowercase)


def encode(vocab: Vocab, text: str) -> list[int]:
    lookup = vocab.token_to_id
    return [lookup.get(w, UNK) for w in _words(text, vocab.lowercase)]


def decode(vocab: Vocab, ids) -> str:
    words = []
    for i in ids:
        if not 0 <= i < len(vocab):
            raise IndexError(f"token id {i} out of range for vocab of size {len(vocab)}")
        if i != PAD:
            words.append(vocab.id_to_token[i])
    return " ".join(words)
