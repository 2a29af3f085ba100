"""Tokens, vocabularies, and the two directions of a tokenizer.

Detokenizing (joining token bytes back together) distributes over
concatenation, so it can be done piecewise without changing the
result. Tokenizing (cutting bytes into vocabulary tokens) does not:
cutting two halves separately forces a token boundary at the seam
that cutting the whole may avoid. ``non_homomorphism_witness`` finds
a concrete demonstration of that asymmetry inside a vocabulary.

The tokenizer here is a deterministic greedy longest-match cutter.
Real tokenizers differ in how they choose among possible cuttings,
but every conclusion this library draws (well-formedness of outputs,
streaming behavior, constraint masks) depends only on which cuttings
are possible, not on how one is chosen.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .utf8 import is_well_formed


class UnknownTokenError(KeyError):
    """A token id not registered in the vocabulary."""

    def __init__(self, token_id: int, position: int):
        self.token_id = token_id
        self.position = position
        super().__init__(f"unknown token id {token_id} at position {position}")


class TokenizeError(ValueError):
    """No vocabulary token covers the input at *offset* (FAIL strategy)."""

    def __init__(self, offset: int):
        self.offset = offset
        super().__init__(f"input not coverable by vocabulary at offset {offset}")


@dataclass(frozen=True)
class Token:
    id: int
    data: bytes

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError("token id must be non-negative")


class Vocabulary:
    """A finite id -> byte-string map, immutable once constructed.

    ``special_ids`` mark tokens excluded from byte semantics (e.g. an
    end-of-sequence marker); they are the only tokens allowed to carry
    empty bytes, and detokenization skips them.
    """

    def __init__(
        self,
        entries: dict[int, bytes],
        special_ids: set[int] | frozenset[int] = frozenset(),
    ) -> None:
        self.special_ids = frozenset(special_ids)
        self._tokens: dict[int, Token] = {}
        by_bytes: dict[bytes, int] = {}
        max_len = 0
        for token_id in sorted(entries):
            data = entries[token_id]
            if not data and token_id not in self.special_ids:
                raise ValueError(f"token {token_id} has empty bytes but is not special")
            self._tokens[token_id] = Token(token_id, data)
            if token_id not in self.special_ids and data:
                # ties between identical byte strings break to the smallest id
                by_bytes.setdefault(data, token_id)
                max_len = max(max_len, len(data))
        missing = self.special_ids - entries.keys()
        if missing:
            raise ValueError(f"special ids not registered: {sorted(missing)}")
        self._by_bytes = by_bytes
        self._max_token_len = max_len

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token_id: int) -> bool:
        return token_id in self._tokens

    def ids(self) -> list[int]:
        return list(self._tokens)

    def token(self, token_id: int) -> Token:
        return self._tokens[token_id]

    def bytes_of(self, token_id: int, position: int = 0) -> bytes:
        tok = self._tokens.get(token_id)
        if tok is None:
            raise UnknownTokenError(token_id, position)
        return tok.data

    def id_of(self, data: bytes) -> int | None:
        return self._by_bytes.get(data)

    @property
    def max_token_len(self) -> int:
        return self._max_token_len

    def non_special_tokens(self) -> list[Token]:
        return [t for t in self._tokens.values() if t.id not in self.special_ids]


class OovKind(enum.Enum):
    FAIL = "fail"
    DROP = "drop"
    BYTE_FALLBACK = "byte_fallback"


@dataclass(frozen=True)
class OovStrategy:
    """What to do with input bytes no vocabulary token covers.

    FAIL raises, DROP maps the uncoverable run to nothing, and
    BYTE_FALLBACK spells each uncoverable byte with a dedicated
    single-byte token from ``byte_token_ids`` (one entry per octet).
    """

    kind: OovKind
    byte_token_ids: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind is OovKind.BYTE_FALLBACK:
            if self.byte_token_ids is None or len(self.byte_token_ids) != 256:
                raise ValueError("byte fallback needs a 256-entry token id table")
        elif self.byte_token_ids is not None:
            raise ValueError("byte_token_ids only applies to byte fallback")

    @classmethod
    def fail(cls) -> "OovStrategy":
        return cls(OovKind.FAIL)

    @classmethod
    def drop(cls) -> "OovStrategy":
        return cls(OovKind.DROP)

    @classmethod
    def byte_fallback(cls, vocab: Vocabulary) -> "OovStrategy":
        """Build the fallback table from the vocabulary's single-byte tokens."""
        table = []
        for value in range(256):
            token_id = vocab.id_of(bytes([value]))
            if token_id is None:
                raise ValueError(f"vocabulary has no single-byte token for {value:#04x}")
            table.append(token_id)
        return cls(OovKind.BYTE_FALLBACK, tuple(table))


def detokenize(vocab: Vocabulary, token_ids: list[int] | tuple[int, ...]) -> bytes:
    """Concatenate the bytes of each token in order, skipping special ids.

    Distributes over concatenation of id sequences by construction.
    """
    parts = []
    for position, token_id in enumerate(token_ids):
        if token_id in vocab.special_ids:
            continue
        parts.append(vocab.bytes_of(token_id, position))
    return b"".join(parts)


def tokenize_greedy(
    vocab: Vocabulary, data: bytes, strategy: OovStrategy = OovStrategy.fail()
) -> list[int]:
    """Cut *data* into token ids, longest match from the left.

    Equal-length matches tie-break to the smallest id, so identical
    inputs always produce identical cuttings.
    """
    out: list[int] = []
    pos = 0
    n = len(data)
    while pos < n:
        match = None
        for length in range(min(vocab.max_token_len, n - pos), 0, -1):
            match = vocab.id_of(data[pos : pos + length])
            if match is not None:
                break
        if match is not None:
            out.append(match)
            pos += length
            continue
        if strategy.kind is OovKind.FAIL:
            raise TokenizeError(pos)
        if strategy.kind is OovKind.BYTE_FALLBACK:
            out.append(strategy.byte_token_ids[data[pos]])
        pos += 1  # DROP: skip the byte
    return out


def non_homomorphism_witness(vocab: Vocabulary) -> tuple[bytes, bytes] | None:
    """Find (left, right) with greedy(left + right) != greedy(left) + greedy(right).

    Searches the splits of each multi-byte token at every interior
    position, keeping only splits where both halves tokenize on their
    own. Cutting the whole token uses the token itself, which separate
    cuttings of the halves cannot, so any such split is a witness;
    the inequality is still checked rather than assumed. Returns None
    when no vocabulary-derived candidate works.
    """
    fail = OovStrategy.fail()
    for token in vocab.non_special_tokens():
        data = token.data
        if len(data) < 2:
            continue
        for cut in range(1, len(data)):
            left, right = data[:cut], data[cut:]
            try:
                separate = tokenize_greedy(vocab, left, fail) + tokenize_greedy(
                    vocab, right, fail
                )
            except TokenizeError:
                continue
            joint = tokenize_greedy(vocab, data, fail)
            if joint != separate:
                return left, right
    return None


def all_tokens_well_formed(vocab: Vocabulary) -> bool:
    """True iff every non-special token's bytes are well-formed UTF-8."""
    return all(is_well_formed(t.data) for t in vocab.non_special_tokens())
