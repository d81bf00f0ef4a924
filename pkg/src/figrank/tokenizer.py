"""Word-level tokenization and the trainable vocabulary.

Tokens are lowercased alphanumeric runs; everything else is a separator.
The vocabulary reserves CLS/SEP/UNK/PAD at fixed ids 0-3 and keeps only
tokens seen at least ``min_freq`` times in the training triplets --
everything rarer maps to UNK at scoring time.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

_TOKEN = re.compile(r"[a-z0-9]+")

CLS_ID = 0
SEP_ID = 1
UNK_ID = 2
PAD_ID = 3
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
UNK_TOKEN = "[UNK]"
PAD_TOKEN = "[PAD]"
SPECIAL_TOKENS = (CLS_TOKEN, SEP_TOKEN, UNK_TOKEN, PAD_TOKEN)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters."""
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    token_to_id: dict[str, int]
    id_to_token: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def encode_tokens(self, tokens: Sequence[str]) -> list[int]:
        return [self.token_to_id.get(tok, UNK_ID) for tok in tokens]

    def encode_text(self, text: str) -> list[int]:
        return self.encode_tokens(tokenize(text))

    @classmethod
    def build(cls, texts: Iterable[str], min_freq: int = 2) -> "Vocabulary":
        """Count tokens over ``texts`` and keep those with frequency
        >= ``min_freq``, in deterministic (frequency desc, token asc) order
        after the reserved specials."""
        counts: Counter[str] = Counter()
        for text in texts:
            counts.update(tokenize(text))
        kept = sorted(
            (tok for tok, freq in counts.items() if freq >= min_freq),
            key=lambda tok: (-counts[tok], tok),
        )
        id_to_token = SPECIAL_TOKENS + tuple(kept)
        token_to_id = {tok: idx for idx, tok in enumerate(id_to_token)}
        return cls(token_to_id=token_to_id, id_to_token=id_to_token)

    @classmethod
    def from_tokens(cls, id_to_token: Sequence[str]) -> "Vocabulary":
        if tuple(id_to_token[:4]) != SPECIAL_TOKENS:
            raise ValueError("vocabulary must reserve CLS/SEP/UNK/PAD at ids 0-3")
        ids = tuple(id_to_token)
        return cls(token_to_id={tok: idx for idx, tok in enumerate(ids)}, id_to_token=ids)


def encode_pair(
    vocab: Vocabulary, text: str, caption: str, max_len: int
) -> tuple[list[int], list[int], list[str]]:
    """Build the joint ``[CLS] text [SEP] caption [SEP]`` input.

    Returns (token ids, segment ids, token strings); segment 0 covers CLS,
    the text tokens and the first SEP, segment 1 the caption tokens and the
    final SEP.  Over-length inputs are truncated to ``max_len`` by trimming
    tokens from the end of the longer segment until the pair fits.

    Raises ValueError when either side contributes no tokens.
    """
    text_tokens = tokenize(text)
    caption_tokens = tokenize(caption)
    if not text_tokens:
        raise ValueError("text yields no tokens")
    if not caption_tokens:
        raise ValueError("caption yields no tokens")

    if max_len < 5:
        raise ValueError(f"max_len {max_len} too small for a pair input")
    budget = max_len - 3  # room for CLS and two SEPs
    while len(text_tokens) + len(caption_tokens) > budget:
        if len(text_tokens) >= len(caption_tokens) and len(text_tokens) > 1:
            text_tokens = text_tokens[:-1]
        else:
            caption_tokens = caption_tokens[:-1]

    tokens = [CLS_TOKEN, *text_tokens, SEP_TOKEN, *caption_tokens, SEP_TOKEN]
    ids = [CLS_ID, *vocab.encode_tokens(text_tokens), SEP_ID,
           *vocab.encode_tokens(caption_tokens), SEP_ID]
    segments = [0] * (len(text_tokens) + 2) + [1] * (len(caption_tokens) + 1)
    return ids, segments, tokens
