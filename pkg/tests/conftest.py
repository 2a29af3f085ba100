from __future__ import annotations

import pytest

from tokstream import Vocabulary

# A Devanagari passage ("अग्निमीळे") cut so that most three-byte
# characters straddle token boundaries: the canonical stress case for
# incremental detokenization. Token ids run 0..11 in stream order.
DEVANAGARI_TOKEN_HEX = [
    "e0a4",
    "85",
    "e0a4",
    "97",
    "e0a58de0a4",
    "a8",
    "e0a4bfe0a4",
    "ae",
    "e0a580",
    "e0a4",
    "b3",
    "e0a587",
]
DEVANAGARI_TEXT = "अग्निमीळे"

# The offsets the decoder must report after each of the 12 tokens.
DEVANAGARI_OFFSETS = [
    (0, 0),
    (0, 2),
    (0, 2),
    (2, 4),
    (2, 4),
    (4, 6),
    (4, 6),
    (6, 8),
    (8, 9),
    (8, 9),
    (9, 11),
    (11, 12),
]


@pytest.fixture
def devanagari_vocab() -> Vocabulary:
    return Vocabulary({i: bytes.fromhex(h) for i, h in enumerate(DEVANAGARI_TOKEN_HEX)})


@pytest.fixture
def devanagari_script() -> list[int]:
    return list(range(len(DEVANAGARI_TOKEN_HEX)))
