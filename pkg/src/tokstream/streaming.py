"""Incremental detokenization that never corrupts multi-byte characters.

Token boundaries in byte-level vocabularies need not line up with
UTF-8 code unit boundaries, so decoding each token as it arrives and
concatenating the text mangles any character split across tokens.
The fix used throughout LLM serving engines is to hold two offsets
into the growing token sequence:

  * ``prefix_offset`` (i): start of the comparison window;
  * ``read_offset`` (j): end of the last emitted window.

Both mark positions where a token edge coincided with a code unit
edge. On each new token, the bytes of ``tokens[i:]`` are decoded with
replacement; text is emitted only when that decode grew and does not
end in the replacement character, i.e. only once the stream is back
on a character boundary. Emitted text is final and never revised.

Two modes are provided:

  * REFERENCE reproduces that scheme exactly, including two quirks it
    is known for: a stream whose tail can never become well-formed
    (say, a lone FF byte) stalls forever, and a legitimately generated
    U+FFFD is mistaken for an incomplete character and stalls too.
  * ROBUST drives the emit decision with the incremental validator
    instead of the trailing-character check: only a genuinely
    extendable unit prefix postpones emission, so permanently
    ill-formed bytes flush as replacement characters immediately and
    a real U+FFFD passes through. ``flush`` accounts for whatever is
    still pending when the stream ends.

On streams whose bytes stay well-formed the two modes emit the exact
same events.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .tokens import Vocabulary, detokenize
from .utf8 import REPLACEMENT_CHAR, Strategy, Utf8Validator, decode


class Mode(enum.Enum):
    REFERENCE = "reference"
    ROBUST = "robust"


@dataclass(frozen=True)
class StreamState:
    """Decoder bookkeeping for one token stream."""

    tokens: tuple[int, ...] = ()
    prefix_offset: int = 0
    read_offset: int = 0
    text: str = ""


@dataclass(frozen=True)
class EmitEvent:
    """Result of feeding one token (or flushing the stream's tail)."""

    new_text: str
    prefix_after: int
    read_after: int
    token_id: int | None


@dataclass
class MockLm:
    """A scripted stand-in for a language model: emits its token ids in
    order, then signals exhaustion with None."""

    script: list[int]
    cursor: int = 0

    def next_token(self, context: tuple[int, ...]) -> int | None:
        if self.cursor >= len(self.script):
            return None
        token_id = self.script[self.cursor]
        self.cursor += 1
        return token_id


def _window_text(vocab: Vocabulary, tokens: tuple[int, ...], lo: int, hi: int) -> str:
    return decode(detokenize(vocab, tokens[lo:hi]), Strategy.REPLACE).text


def _has_extendable_tail(data: bytes) -> bool:
    """True iff *data* ends with a non-empty prefix of a code unit that
    further bytes could still complete."""
    validator = Utf8Validator()
    for byte in data:
        validator.feed(byte)
    return not validator.at_boundary


def advance_token(
    state: StreamState, vocab: Vocabulary, token_id: int
) -> tuple[StreamState, EmitEvent]:
    """Feed one token in REFERENCE mode."""
    return _advance(state, vocab, token_id, robust=False)


def advance_token_robust(
    state: StreamState, vocab: Vocabulary, token_id: int
) -> tuple[StreamState, EmitEvent]:
    """Feed one token in ROBUST mode."""
    return _advance(state, vocab, token_id, robust=True)


def _advance(
    state: StreamState, vocab: Vocabulary, token_id: int, robust: bool
) -> tuple[StreamState, EmitEvent]:
    tokens = state.tokens + (token_id,)
    i, j = state.prefix_offset, state.read_offset
    previous = _window_text(vocab, tokens, i, j)
    candidate_bytes = detokenize(vocab, tokens[i:])
    candidate = decode(candidate_bytes, Strategy.REPLACE).text

    if robust:
        blocked = _has_extendable_tail(candidate_bytes)
    else:
        blocked = candidate.endswith(REPLACEMENT_CHAR)

    if len(candidate) > len(previous) and not blocked:
        new_text = candidate[len(previous) :]
        new_state = StreamState(tokens, j, len(tokens), state.text + new_text)
    else:
        new_text = ""
        new_state = replace(state, tokens=tokens)
    event = EmitEvent(new_text, new_state.prefix_offset, new_state.read_offset, token_id)
    return new_state, event


def flush(state: StreamState, vocab: Vocabulary) -> tuple[StreamState, EmitEvent]:
    """End-of-stream accounting for ROBUST mode: emit whatever the
    offsets have not covered, rendering an unfinished trailing unit
    prefix as a replacement character. REFERENCE mode deliberately has
    no counterpart; its unemitted tail is simply lost."""
    i, j = state.prefix_offset, state.read_offset
    previous = _window_text(vocab, state.tokens, i, j)
    candidate = _window_text(vocab, state.tokens, i, len(state.tokens))
    new_text = candidate[len(previous) :]
    end = len(state.tokens)
    new_state = StreamState(state.tokens, end, end, state.text + new_text)
    return new_state, EmitEvent(new_text, end, end, None)


def generate(
    lm: MockLm, vocab: Vocabulary, mode: Mode = Mode.REFERENCE
) -> tuple[StreamState, list[EmitEvent]]:
    """Drive the decoder over everything *lm* produces.

    Returns the final state plus the per-token events; the
    concatenation of all ``new_text`` equals ``state.text``. In ROBUST
    mode a trailing flush event (token_id None) is appended when the
    stream ends with unemitted bytes.
    """
    step = advance_token if mode is Mode.REFERENCE else advance_token_robust
    state = StreamState()
    events: list[EmitEvent] = []
    while (token_id := lm.next_token(state.tokens)) is not None:
        state, event = step(state, vocab, token_id)
        events.append(event)
    if mode is Mode.ROBUST:
        state, event = flush(state, vocab)
        if event.new_text:
            events.append(event)
    return state, events
