"""End-to-end acceptance checks, one test per numbered criterion.
Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS
line per criterion.

Oracles are kept independent of the code under test: the range-table
matcher used in criterion 1 is rebuilt here from its own copy of the
nine rows, validity cross-checks go through the platform codec, and
expected values are frozen literals derived up front.
"""

from __future__ import annotations

import random
from pathlib import Path

import numpy as np
import pytest

from conftest import (
    DEVANAGARI_OFFSETS,
    DEVANAGARI_TEXT,
    DEVANAGARI_TOKEN_HEX,
)
from tokstream.cli import main
from tokstream.streaming import MockLm, Mode, generate
from tokstream.tokens import (
    TokenizeError,
    Vocabulary,
    detokenize,
    non_homomorphism_witness,
    tokenize_greedy,
)
from tokstream.utf8 import REPLACEMENT_CHAR, Strategy, decode, is_well_formed
from tokstream.vocab import (
    build_byte_codepoint_map,
    decode_surface_form,
    find_ill_formed_witness,
)

FIXTURES = Path(__file__).parent / "fixtures"


def hx(s: str) -> bytes:
    return bytes.fromhex(s)


def platform_well_formed(data: bytes) -> bool:
    try:
        data.decode("utf-8")
        return True
    except UnicodeDecodeError:
        return False


# The oracle's own copy of the well-formed byte sequence table.
ORACLE_ROWS = (
    ((0x00, 0x7F),),
    ((0xC2, 0xDF), (0x80, 0xBF)),
    ((0xE0, 0xE0), (0xA0, 0xBF), (0x80, 0xBF)),
    ((0xE1, 0xEC), (0x80, 0xBF), (0x80, 0xBF)),
    ((0xED, 0xED), (0x80, 0x9F), (0x80, 0xBF)),
    ((0xEE, 0xEF), (0x80, 0xBF), (0x80, 0xBF)),
    ((0xF0, 0xF0), (0x90, 0xBF), (0x80, 0xBF), (0x80, 0xBF)),
    ((0xF1, 0xF3), (0x80, 0xBF), (0x80, 0xBF), (0x80, 0xBF)),
    ((0xF4, 0xF4), (0x80, 0x8F), (0x80, 0xBF), (0x80, 0xBF)),
)

# Row composition arithmetic for strings of exactly three bytes:
# 128^3 all-ASCII + 2 * (30*64 two-byte units beside an ASCII byte)
# + 61440 three-byte units = 2,650,112.
EXPECTED_VALID_LENGTH3 = 2_650_112


def brute_force_matches(data: bytes) -> bool:
    """Direct recursive reading of the oracle rows: try every row at
    the current position and recurse on the remainder."""
    if not data:
        return True
    for row in ORACLE_ROWS:
        n = len(row)
        if len(data) < n:
            continue
        if all(lo <= data[k] <= hi for k, (lo, hi) in enumerate(row)):
            if brute_force_matches(data[n:]):
                return True
    return False


def _unit_masks():
    """Boolean tables marking 1-, 2- and 3-byte units per the oracle rows."""
    unit1 = np.zeros(256, dtype=bool)
    unit2 = np.zeros((256, 256), dtype=bool)
    unit3 = np.zeros((256, 256, 256), dtype=bool)
    for row in ORACLE_ROWS:
        slices = tuple(slice(lo, hi + 1) for lo, hi in row)
        if len(row) == 1:
            unit1[slices[0]] = True
        elif len(row) == 2:
            unit2[slices[0], slices[1]] = True
        elif len(row) == 3:
            unit3[slices[0], slices[1], slices[2]] = True
    return unit1, unit2, unit3


def test_criterion_1_table_oracle_equivalence():
    # lengths 0..2, exhaustive, against both oracles
    assert is_well_formed(b"") and brute_force_matches(b"")
    for a in range(256):
        one = bytes([a])
        assert is_well_formed(one) == brute_force_matches(one) == platform_well_formed(one)
    for a in range(256):
        for b in range(256):
            two = bytes([a, b])
            verdict = is_well_formed(two)
            assert verdict == brute_force_matches(two)
            assert verdict == platform_well_formed(two)

    # length 3, exhaustive over all 16.8M strings; the range-table
    # oracle is evaluated in bulk over the whole cube
    unit1, unit2, unit3 = _unit_masks()
    cube = (
        (unit1[:, None, None] & unit1[None, :, None] & unit1[None, None, :])
        | (unit2[:, :, None] & unit1[None, None, :])
        | (unit1[:, None, None] & unit2[None, :, :])
        | unit3
    )
    oracle = cube.reshape(-1).astype(np.uint8).tobytes()
    assert cube.sum() == EXPECTED_VALID_LENGTH3
    disagreements = 0
    for n in range(2**24):
        data = n.to_bytes(3, "big")
        verdict = is_well_formed(data)
        if verdict != (oracle[n] == 1) or verdict != platform_well_formed(data):
            disagreements += 1
    assert disagreements == 0

    # one million random length-4 strings against both oracles
    rng = random.Random(0x5EED)
    for _ in range(1_000_000):
        data = rng.getrandbits(32).to_bytes(4, "big")
        verdict = is_well_formed(data)
        assert verdict == platform_well_formed(data)
        assert verdict == brute_force_matches(data)
    print("\nPASS criterion 1: validator matches range-table and platform "
          "oracles on all strings of length <= 3 and 10^6 random length-4")


def test_criterion_2_golden_trace(capsys):
    code = main(
        [
            "decode",
            "--vocab",
            str(FIXTURES / "devanagari.tsv"),
            "--format=tsv",
            "--trace",
            str(FIXTURES / "devanagari_ids.txt"),
        ]
    )
    assert code == 0
    captured = capsys.readouterr()
    rows = [line.split("\t") for line in captured.err.splitlines()]
    assert [(int(r[2]), int(r[3])) for r in rows] == DEVANAGARI_OFFSETS
    vocab = Vocabulary({i: hx(h) for i, h in enumerate(DEVANAGARI_TOKEN_HEX)})
    whole = decode(detokenize(vocab, list(range(12))), Strategy.REPLACE).text
    assert captured.out == whole == DEVANAGARI_TEXT
    print("\nPASS criterion 2: 12-token replay reproduces the exact "
          "offset trajectory and the whole-stream decode")


def test_criterion_3_split_stream_differs():
    vocab = Vocabulary({i: hx(h) for i, h in enumerate(DEVANAGARI_TOKEN_HEX)})
    whole, _ = generate(MockLm(list(range(12))), vocab, Mode.REFERENCE)
    left, _ = generate(MockLm(list(range(5))), vocab, Mode.REFERENCE)
    right, _ = generate(MockLm(list(range(5, 12))), vocab, Mode.REFERENCE)
    glued = left.text + right.text
    assert glued.count(REPLACEMENT_CHAR) == 1
    assert glued != whole.text
    assert whole.text.count(REPLACEMENT_CHAR) == 0
    print("\nPASS criterion 3: splitting the stream leaves exactly one "
          "replacement character; the single pass leaves none")


def _random_vocab(rng: random.Random) -> Vocabulary:
    alphabet = [0x41, 0x42, 0x61, 0x80, 0x85, 0xA4, 0xC2, 0xE0, 0xE2, 0xFF]
    seen: dict[bytes, int] = {}
    for _ in range(rng.randint(1, 14)):
        data = bytes(rng.choice(alphabet) for _ in range(rng.randint(1, 5)))
        seen.setdefault(data, len(seen))
    if rng.random() < 0.5:
        # merge two tokens into a longer one, BPE style; its halves
        # stay coverable, making the vocabulary witness-eligible
        parts = list(seen)
        for _ in range(rng.randint(1, 2)):
            merged = rng.choice(parts) + rng.choice(parts)
            seen.setdefault(merged, len(seen))
    return Vocabulary({token_id: data for data, token_id in seen.items()})


def _coverable_split_exists(vocab: Vocabulary) -> bool:
    for token in vocab.non_special_tokens():
        for cut in range(1, len(token.data)):
            try:
                tokenize_greedy(vocab, token.data[:cut])
                tokenize_greedy(vocab, token.data[cut:])
            except TokenizeError:
                continue
            return True
    return False


def test_criterion_4_homomorphism_and_witness():
    rng = random.Random(41)
    vocabs = [_random_vocab(rng) for _ in range(1000)]
    trials = 0
    for vocab in vocabs:
        ids = vocab.ids()
        for _ in range(10):
            t1 = [rng.choice(ids) for _ in range(rng.randint(0, 6))]
            t2 = [rng.choice(ids) for _ in range(rng.randint(0, 6))]
            assert detokenize(vocab, t1 + t2) == detokenize(vocab, t1) + detokenize(
                vocab, t2
            )
            trials += 1
    assert trials == 10_000

    witnessed = 0
    for vocab in vocabs:
        witness = non_homomorphism_witness(vocab)
        if _coverable_split_exists(vocab):
            assert witness is not None
            left, right = witness
            joint = tokenize_greedy(vocab, left + right)
            separate = tokenize_greedy(vocab, left) + tokenize_greedy(vocab, right)
            assert joint != separate
            witnessed += 1
    assert witnessed > 100  # the generator must actually exercise the property
    print(f"\nPASS criterion 4: 10,000 homomorphism trials clean; witness "
          f"found and valid on all {witnessed} eligible vocabularies")


_TEXT_POOL = "hello мир अआइ world ∀x 😬😂 plain words data"


def _well_formed_vocab(rng: random.Random) -> Vocabulary:
    entries = {}
    for token_id in range(rng.randint(1, 12)):
        start = rng.randrange(len(_TEXT_POOL) - 1)
        chunk = _TEXT_POOL[start : start + rng.randint(1, 4)]
        entries[token_id] = chunk.encode("utf-8")
    return Vocabulary(entries)


def test_criterion_5_ill_formed_witness_both_directions():
    rng = random.Random(52)
    closure_checks = 0
    for index in range(1000):
        vocab = _well_formed_vocab(rng) if index % 2 == 0 else _random_vocab(rng)
        witness = find_ill_formed_witness(vocab)
        any_ill = any(
            not platform_well_formed(t.data) for t in vocab.non_special_tokens()
        )
        assert (witness is not None) == any_ill
        if witness is not None:
            joined = detokenize(vocab, list(witness))
            assert not is_well_formed(joined)
            assert not platform_well_formed(joined)
        else:
            ids = vocab.ids()
            for _ in range(20):
                seq = [rng.choice(ids) for _ in range(rng.randint(0, 10))]
                assert platform_well_formed(detokenize(vocab, seq))
                closure_checks += 1
    assert closure_checks >= 10_000
    print(f"\nPASS criterion 5: witness iff some token ill-formed over 1,000 "
          f"vocabularies; closure held on {closure_checks} sequences")


def test_criterion_6_byte_codepoint_map():
    bcmap = build_byte_codepoint_map()
    identity = (
        list(range(0x21, 0x7F)) + list(range(0xA1, 0xAD)) + list(range(0xAE, 0x100))
    )
    for octet in identity:
        assert bcmap.forward[octet] == octet
    remapped = [o for o in range(256) if o not in identity]
    assert len(remapped) == 68
    assert [bcmap.forward[o] for o in remapped] == list(range(0x100, 0x144))
    assert bcmap.forward[0x20] == 0x120
    for octet in range(256):
        assert bcmap.inverse[bcmap.forward[octet]] == octet
    print("\nPASS criterion 6: byte-codepoint map matches the identity "
          "ranges, the 68-entry U+0100..U+0143 block, and round-trips")


def test_criterion_7_crash_dichotomy():
    from test_constraints import CharacterLevelBaseline, split_emoji_vocab

    from tokstream.constraints import (
        Grammar,
        ScriptedProposer,
        UnsatisfiableError,
        compile_grammar,
        run_constrained,
    )

    grammar = Grammar(("😬", "😂", "😏"))
    dfa = compile_grammar(grammar)
    vocab = split_emoji_vocab()
    alternatives = {e.encode("utf-8") for e in grammar.alternatives}
    ids = vocab.ids()
    rng = random.Random(73)
    runs = [[rng.sample(ids, len(ids)) for _ in range(6)] for _ in range(100)]

    byte_level_ok = 0
    for rankings in runs:
        output, _ = run_constrained(ScriptedProposer(list(rankings)), dfa, vocab)
        if output in alternatives:
            byte_level_ok += 1
    assert byte_level_ok == 100

    baseline = CharacterLevelBaseline(grammar)
    crashes = 0
    for rankings in runs:
        try:
            baseline.run(ScriptedProposer(list(rankings)), vocab)
        except UnsatisfiableError:
            crashes += 1
    assert crashes == 100
    print("\nPASS criterion 7: byte-level masking completed 100/100 runs "
          "with grammar-conforming output; character baseline crashed 100/100")


def test_criterion_8_robust_liveness_reference_stall():
    pieces = [
        hx("e0a4"), hx("85"), hx("ff"), hx("80"), b"A", b"text", hx("f09f"),
        hx("9882"), hx("c0"), hx("e288"), REPLACEMENT_CHAR.encode("utf-8"),
    ]
    vocab = Vocabulary(dict(enumerate(pieces)))
    rng = random.Random(88)
    never_valid_scripts = 0
    for _ in range(1000):
        script = [rng.randrange(len(pieces)) for _ in range(rng.randint(0, 16))]
        state, events = generate(MockLm(script), vocab, Mode.ROBUST)
        all_bytes = detokenize(vocab, script)
        # replacement decoding attributes every input byte to either a
        # code unit or a replaced subpart, so byte accounting holds
        # exactly when the emitted text equals it
        assert state.text == all_bytes.decode("utf-8", "replace")
        assert "".join(e.new_text for e in events) == state.text
        if any(b in (0xFF, 0xC0) for b in all_bytes):
            never_valid_scripts += 1
    assert never_valid_scripts > 400

    ff_vocab = Vocabulary({0: hx("ff"), 1: b"A"})
    stalled, stalled_events = generate(MockLm([0]), ff_vocab, Mode.REFERENCE)
    assert stalled.text == ""
    assert all(e.new_text == "" for e in stalled_events)
    print("\nPASS criterion 8: robust mode accounted for every byte on "
          "1,000 random scripts; reference mode stalls on a lone FF token")


# Frozen from the byte-codepoint map applied to the token byte strings
# below; the final text anchors the whole chain.
CYRILLIC_SURFACES = ["Ðĵ", "ÑĢÐ°Ð´", "ĠÐ³", "ÑĢÐ°Ð´", "Ð¸Ð»Ð°"]
CYRILLIC_TOKEN_HEX = ["d093", "d180d0b0d0b4", "20d0b3", "d180d0b0d0b4", "d0b8d0bbd0b0"]
CYRILLIC_TEXT = "Град градила"


def test_criterion_9_surface_round_trip():
    bcmap = build_byte_codepoint_map()
    recovered = [decode_surface_form(bcmap, s) for s in CYRILLIC_SURFACES]
    assert recovered == [hx(h) for h in CYRILLIC_TOKEN_HEX]
    joined = b"".join(recovered)
    assert decode(joined, Strategy.REPLACE).text == CYRILLIC_TEXT
    assert joined == CYRILLIC_TEXT.encode("utf-8")
    print("\nPASS criterion 9: token surfaces recover the raw bytes, "
          "which decode to the original Cyrillic text")
