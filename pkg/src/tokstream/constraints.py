"""Byte-level token masking for constrained generation.

Constraining generation at the character level breaks as soon as a
vocabulary splits a multi-byte character across tokens: the partial
bytes decode to nothing matchable, so every candidate token looks
inadmissible. Working over bytes repairs this. A grammar of literal
alternatives compiles to a byte automaton (a trie determinized over
shared prefixes), and a token is admissible from a state exactly when
its bytes walk edges of the automaton, even if the token itself is
ill-formed UTF-8 mid-character.

Special tokens carry no bytes; they are admissible only at accepting
states, where they act as the end-of-output signal.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .tokens import Vocabulary
from .utf8 import is_well_formed


class GrammarError(ValueError):
    """An alternative that is empty or not well-formed UTF-8."""


class UnsatisfiableError(RuntimeError):
    """No admissible token exists and the automaton is not accepting."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"constraint unsatisfiable at step {step}")


@dataclass(frozen=True)
class Grammar:
    """A non-empty alternation of literal strings."""

    alternatives: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.alternatives:
            raise GrammarError("grammar needs at least one alternative")
        for alt in self.alternatives:
            if not alt:
                raise GrammarError("empty alternative")
            if not is_well_formed(alt.encode("utf-8")):
                raise GrammarError(f"alternative {alt!r} is not well-formed UTF-8")

    def byte_alternatives(self) -> list[bytes]:
        return [alt.encode("utf-8") for alt in self.alternatives]


def load_grammar(path: str | Path) -> Grammar:
    """One alternative per line; the file must be well-formed UTF-8."""
    raw = Path(path).read_bytes()
    if not is_well_formed(raw):
        raise GrammarError(f"{path} is not well-formed UTF-8")
    lines = [line for line in raw.decode("utf-8").splitlines() if line]
    return Grammar(tuple(lines))


@dataclass(frozen=True)
class ByteDfa:
    """Byte automaton accepting exactly a grammar's alternatives.

    ``transitions[state]`` maps a byte value to the next state. All
    states of a compiled trie can reach an accepting state, so ``live``
    covers every state; it is kept explicit because admissibility is
    defined against it.
    """

    transitions: tuple[dict[int, int], ...]
    accepting: frozenset[int]
    live: frozenset[int]
    start: int = 0

    def step(self, state: int, byte: int) -> int | None:
        return self.transitions[state].get(byte)


def compile_grammar(grammar: Grammar) -> ByteDfa:
    """Build the shared-prefix trie over the alternatives' bytes."""
    transitions: list[dict[int, int]] = [{}]
    accepting: set[int] = set()
    for alt in grammar.byte_alternatives():
        state = 0
        for byte in alt:
            nxt = transitions[state].get(byte)
            if nxt is None:
                transitions.append({})
                nxt = len(transitions) - 1
                transitions[state][byte] = nxt
            state = nxt
        accepting.add(state)
    live = _live_states(transitions, accepting)
    # a trie reaches accepting from everywhere; prune defensively anyway
    assert live == set(range(len(transitions)))
    return ByteDfa(tuple(transitions), frozenset(accepting), frozenset(live))


def _live_states(transitions: list[dict[int, int]], accepting: set[int]) -> set[int]:
    reverse: dict[int, set[int]] = {s: set() for s in range(len(transitions))}
    for src, edges in enumerate(transitions):
        for dst in edges.values():
            reverse[dst].add(src)
    live = set(accepting)
    frontier = list(accepting)
    while frontier:
        state = frontier.pop()
        for src in reverse[state]:
            if src not in live:
                live.add(src)
                frontier.append(src)
    return live


def _walk(dfa: ByteDfa, state: int, data: bytes) -> int | None:
    for byte in data:
        state = dfa.step(state, byte)
        if state is None or state not in dfa.live:
            return None
    return state


def token_mask(dfa: ByteDfa, state: int, vocab: Vocabulary) -> set[int]:
    """Ids of every token admissible from *state*.

    A token is admissible when running its bytes stays on live states;
    special tokens only when *state* is accepting.
    """
    if state not in dfa.live:
        raise ValueError(f"state {state} is dead or unknown")
    mask: set[int] = set()
    if state in dfa.accepting:
        mask |= vocab.special_ids
    for token in vocab.non_special_tokens():
        if _walk(dfa, state, token.data) is not None:
            mask.add(token.id)
    return mask


def advance(dfa: ByteDfa, state: int, vocab: Vocabulary, token_id: int) -> int:
    """State after consuming an admissible token's bytes."""
    if token_id in vocab.special_ids:
        if state not in dfa.accepting:
            raise ValueError("special token outside an accepting state")
        return state
    end = _walk(dfa, state, vocab.bytes_of(token_id))
    if end is None:
        raise ValueError(f"token {token_id} is not admissible from state {state}")
    return end


@dataclass
class ScriptedProposer:
    """Ranked token preferences per step, standing in for model logits.

    When the script runs out, ``fallback`` (all ids ascending by
    default) keeps the run deterministic.
    """

    rankings: list[list[int]]
    fallback: list[int] | None = None

    def ranking_for(self, step: int, vocab: Vocabulary) -> list[int]:
        if step < len(self.rankings):
            return self.rankings[step]
        if self.fallback is None:
            self.fallback = sorted(vocab.ids())
        return self.fallback


@dataclass(frozen=True)
class ConstrainedStep:
    state_before: int
    mask_size: int
    chosen: int | None  # None marks the accepting stop with no token spent


def run_constrained(
    proposer: ScriptedProposer, dfa: ByteDfa, vocab: Vocabulary
) -> tuple[bytes, list[ConstrainedStep]]:
    """Generate one grammar-conforming byte string.

    Each step takes the proposer's highest-ranked token inside the
    mask. A chosen special token, or an accepting state with nothing
    admissible, ends the run; an empty mask anywhere else means the
    vocabulary cannot spell any alternative's remaining bytes.
    """
    state = dfa.start
    out = bytearray()
    log: list[ConstrainedStep] = []
    step = 0
    while True:
        mask = token_mask(dfa, state, vocab)
        if not mask:
            if state in dfa.accepting:
                log.append(ConstrainedStep(state, 0, None))
                return bytes(out), log
            raise UnsatisfiableError(step)
        chosen = next(
            (tid for tid in proposer.ranking_for(step, vocab) if tid in mask), None
        )
        if chosen is None:
            raise UnsatisfiableError(step)
        log.append(ConstrainedStep(state, len(mask), chosen))
        if chosen in vocab.special_ids:
            return bytes(out), log
        out.extend(vocab.bytes_of(chosen))
        state = advance(dfa, state, vocab, chosen)
        step += 1
