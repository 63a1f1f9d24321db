"""Tokenization and n-gram counting shared by the metrics and the pipeline.

Tokens are maximal runs of letters and digits (Unicode-aware, so Greek
symbols in captions survive); everything else is a separator.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

# [^\W_] = word characters minus underscore = Unicode letters + digits
_ALNUM_RUN = re.compile(r"[^\W_]+")
_ALPHA_RUN = re.compile(r"[^\W\d_]+")


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    keep_digits: bool = True

    @property
    def pattern(self) -> re.Pattern:
        return _ALNUM_RUN if self.keep_digits else _ALPHA_RUN


DEFAULT_TOKENIZER = TokenizerConfig()


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    source_text: str = ""

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, idx):
        return self.tokens[idx]

    def detokenize(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class NgramMultiset:
    order: int
    counts: Counter = field(default_factory=Counter)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __len__(self) -> int:
        return len(self.counts)


TextLike = Union[str, TokenSequence, Sequence[str]]


def tokenize(text: str, config: TokenizerConfig = DEFAULT_TOKENIZER) -> TokenSequence:
    """Split ``text`` into lowercased alphanumeric tokens.

    >>> tokenize("PP-OCRv3 30}").tokens
    ('pp', 'ocrv3', '30')
    """
    source = text
    if config.lowercase:
        text = text.lower()
    return TokenSequence(tuple(config.pattern.findall(text)), source)


def token_spans(text: str, config: TokenizerConfig = DEFAULT_TOKENIZER) -> list[tuple[int, int]]:
    """Character offsets (start, end) of each token ``tokenize`` would emit."""
    return [m.span() for m in config.pattern.finditer(text)]


def as_tokens(value: TextLike, config: TokenizerConfig = DEFAULT_TOKENIZER) -> TokenSequence:
    """Coerce a string, TokenSequence or pre-split token list to a TokenSequence."""
    if isinstance(value, TokenSequence):
        return value
    if isinstance(value, str):
        return tokenize(value, config)
    return TokenSequence(tuple(value), " ".join(value))


def ngrams(seq: TextLike | Iterable[str], n: int) -> NgramMultiset:
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    tokens = tuple(as_tokens(seq) if isinstance(seq, (str, TokenSequence)) else seq)
    counts = Counter(tokens[i : i + n] for i in range(len(tokens) - n + 1))
    return NgramMultiset(n, counts)
