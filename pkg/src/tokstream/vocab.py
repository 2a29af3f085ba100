"""Vocabulary ingestion and auditing.

Tokenizer vocabularies ship as UTF-8 text files even when their
tokens are arbitrary byte strings; the GPT-2 lineage solves this with
an injective byte -> code point table so every byte value has a
printable surface character. ``build_byte_codepoint_map`` reproduces
that table and the loaders use its inverse to recover raw token
bytes. Byte-fallback style files instead keep all surfaces as plain
text plus literal ``<0xNN>`` entries for the per-byte tokens.

Auditing classifies each token's bytes (well-formed / ill-formed but
embeddable in well-formed text / never embeddable) and the vocabulary
as a whole (byte-level / byte-fallback / well-formed-only), and looks
for a witness token sequence whose detokenization is ill-formed. One
ill-formed token alone is always such a witness; conversely, when
every token is well-formed, closure of well-formedness under
concatenation means no witness can exist.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from pathlib import Path

from .tokens import Vocabulary
from .utf8 import WELL_FORMED_RANGES, is_well_formed


class VocabLoadError(ValueError):
    """A vocabulary file that cannot be parsed into an id -> bytes map."""


class SurfaceMapError(VocabLoadError):
    """A surface string contains a character outside the byte map's image."""

    def __init__(self, char: str, position: int):
        self.char = char
        self.position = position
        super().__init__(
            f"surface character {char!r} (U+{ord(char):04X}) at position "
            f"{position} is not in the byte-to-codepoint map"
        )


@dataclass(frozen=True)
class ByteCodepointMap:
    """Injective map between the 256 byte values and printable code points."""

    forward: tuple[int, ...]  # octet -> code point
    inverse: dict[int, int]  # code point -> octet


def build_byte_codepoint_map() -> ByteCodepointMap:
    """The GPT-2 byte -> code point table.

    Printable Latin-1 bytes (21..7E, A1..AC, AE..FF) map to themselves;
    the 68 remaining bytes map, in ascending byte order, to the
    consecutive code points U+0100..U+0143.
    """
    identity = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("¡"), ord("¬") + 1))
        + list(range(ord("®"), ord("ÿ") + 1))
    )
    forward = [0] * 256
    taken = set(identity)
    for b in identity:
        forward[b] = b
    next_cp = 0x100
    for b in range(256):
        if b not in taken:
            forward[b] = next_cp
            next_cp += 1
    return ByteCodepointMap(tuple(forward), {cp: b for b, cp in enumerate(forward)})


def encode_surface_form(bcmap: ByteCodepointMap, data: bytes) -> str:
    """Render arbitrary bytes as their printable surface string."""
    return "".join(chr(bcmap.forward[b]) for b in data)


def decode_surface_form(bcmap: ByteCodepointMap, surface: str) -> bytes:
    """Recover the raw bytes behind a surface string.

    The result may well be ill-formed UTF-8; that is the point of the
    encoding. Characters outside the map's image mean the file is not
    surface-encoded at all (byte-fallback or plain-text vocabulary).
    """
    out = bytearray()
    for position, char in enumerate(surface):
        octet = bcmap.inverse.get(ord(char))
        if octet is None:
            raise SurfaceMapError(char, position)
        out.append(octet)
    return bytes(out)


class VocabFormat(enum.Enum):
    GPT2_SURFACE_JSON = "gpt2"
    TOKENIZER_JSON = "tokenizer"
    RAW_BYTES_TSV = "tsv"


_BYTE_FALLBACK_SURFACE = re.compile(r"^<0x([0-9A-Fa-f]{2})>$")


def load_vocabulary(path: str | Path, fmt: VocabFormat) -> Vocabulary:
    """Read a vocabulary file into an in-memory id -> bytes map.

    gpt2:      JSON object of surface string -> id, surfaces encoded
               with the byte-to-codepoint map.
    tokenizer: JSON with model.vocab of surface -> id; surfaces are
               plain text except literal <0xNN> byte entries; entries
               under added_tokens with "special": true become special
               ids.
    tsv:       one "id<TAB>HEXBYTES" line per token, optional third
               field "special" (empty hex allowed only then).
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise VocabLoadError(f"cannot read {path}: {exc}") from exc
    if fmt is VocabFormat.GPT2_SURFACE_JSON:
        return _load_gpt2(raw)
    if fmt is VocabFormat.TOKENIZER_JSON:
        return _load_tokenizer_json(raw)
    return _load_tsv(raw)


def sniff_format(path: str | Path) -> VocabFormat:
    """Guess the file format from its shape."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if not stripped.startswith("{"):
        return VocabFormat.RAW_BYTES_TSV
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return VocabFormat.RAW_BYTES_TSV
    if isinstance(doc, dict) and "model" in doc:
        return VocabFormat.TOKENIZER_JSON
    return VocabFormat.GPT2_SURFACE_JSON


def _load_gpt2(raw: str) -> Vocabulary:
    doc = _parse_json_object(raw)
    bcmap = build_byte_codepoint_map()
    entries: dict[int, bytes] = {}
    for surface, token_id in doc.items():
        _require_int_id(token_id, surface)
        if token_id in entries:
            raise VocabLoadError(f"duplicate token id {token_id}")
        try:
            entries[token_id] = decode_surface_form(bcmap, surface)
        except SurfaceMapError as exc:
            raise VocabLoadError(f"token {token_id}: {exc}") from exc
    return _build_vocab(entries)


def _load_tokenizer_json(raw: str) -> Vocabulary:
    doc = _parse_json_object(raw)
    model = doc.get("model")
    if not isinstance(model, dict) or not isinstance(model.get("vocab"), dict):
        raise VocabLoadError("tokenizer file lacks a model.vocab object")
    entries: dict[int, bytes] = {}
    for surface, token_id in model["vocab"].items():
        _require_int_id(token_id, surface)
        if token_id in entries:
            raise VocabLoadError(f"duplicate token id {token_id}")
        fallback = _BYTE_FALLBACK_SURFACE.match(surface)
        if fallback:
            entries[token_id] = bytes([int(fallback.group(1), 16)])
        else:
            entries[token_id] = surface.encode("utf-8")
    special_ids = set()
    for added in doc.get("added_tokens", []):
        token_id = added.get("id")
        content = added.get("content", "")
        _require_int_id(token_id, content or "<added>")
        if added.get("special"):
            entries.setdefault(token_id, b"")
            special_ids.add(token_id)
        else:
            entries.setdefault(token_id, content.encode("utf-8"))
    return _build_vocab(entries, special_ids)


def _load_tsv(raw: str) -> Vocabulary:
    entries: dict[int, bytes] = {}
    special_ids: set[int] = set()
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise VocabLoadError(f"line {lineno}: expected id<TAB>hex[<TAB>special]")
        try:
            token_id = int(fields[0])
            data = bytes.fromhex(fields[1])
        except ValueError as exc:
            raise VocabLoadError(f"line {lineno}: {exc}") from exc
        if token_id in entries:
            raise VocabLoadError(f"line {lineno}: duplicate token id {token_id}")
        entries[token_id] = data
        if len(fields) == 3:
            if fields[2] != "special":
                raise VocabLoadError(f"line {lineno}: unknown flag {fields[2]!r}")
            special_ids.add(token_id)
    return _build_vocab(entries, special_ids)


def _build_vocab(entries: dict[int, bytes], special_ids: set[int] | None = None) -> Vocabulary:
    try:
        return Vocabulary(entries, special_ids or set())
    except ValueError as exc:
        raise VocabLoadError(str(exc)) from exc


def _parse_json_object(raw: str) -> dict:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise VocabLoadError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise VocabLoadError("expected a JSON object at the top level")
    return doc


def _require_int_id(token_id, surface) -> None:
    if not isinstance(token_id, int) or token_id < 0:
        raise VocabLoadError(f"token {surface!r} has invalid id {token_id!r}")


# --- token and vocabulary classification -------------------------------

class TokenClass(enum.Enum):
    WELL_FORMED = "well_formed"
    ILL_FORMED_EXTENDABLE = "ill_formed_extendable"
    ILL_FORMED_NEVER = "ill_formed_never"


class VocabStyle(enum.Enum):
    BYTE_LEVEL = "byte_level"
    BYTE_FALLBACK = "byte_fallback"
    WELL_FORMED_ONLY = "well_formed_only"


# Every way a parse can stand mid-unit when a token's bytes begin:
# (next_byte_lo, next_byte_hi, continuations_still_required). Derived
# from the range table: the second byte of a unit may carry a
# restricted range; later bytes are always 80..BF.
def _mid_unit_states() -> tuple[tuple[int, int, int], ...]:
    states = set()
    for _, _, lo, hi, length in WELL_FORMED_RANGES:
        if length == 1:
            continue
        states.add((lo, hi, length - 1))
        for done in range(2, length):
            states.add((0x80, 0xBF, length - done))
    return tuple(sorted(states))


_MID_UNIT_STATES = _mid_unit_states()
_LEAD_ROWS = {
    b: (length, lo, hi)
    for first_lo, first_hi, lo, hi, length in WELL_FORMED_RANGES
    for b in range(first_lo, first_hi + 1)
    if length > 1
}
_ASCII = {b for b in range(0x00, 0x80)}


def _survives_from(data: bytes, state: tuple[int, int, int] | None) -> bool:
    """Can *data* be consumed from the given entry state (None = unit
    boundary) without any byte becoming impossible to parse? A pending
    unit at either end is fine; some context completes it."""
    if state is None:
        lo, hi, remaining = 0, 0, 0
    else:
        lo, hi, remaining = state
    for byte in data:
        if remaining:
            if not lo <= byte <= hi:
                return False
            remaining -= 1
            lo, hi = 0x80, 0xBF
            continue
        if byte in _ASCII:
            continue
        row = _LEAD_ROWS.get(byte)
        if row is None:
            return False
        length, lo, hi = row
        remaining = length - 1
    return True


def classify_token(data: bytes) -> TokenClass:
    """Well-formed, or ill-formed but embeddable in well-formed text,
    or impossible in any well-formed context."""
    if is_well_formed(data):
        return TokenClass.WELL_FORMED
    if _survives_from(data, None) or any(
        _survives_from(data, state) for state in _MID_UNIT_STATES
    ):
        return TokenClass.ILL_FORMED_EXTENDABLE
    return TokenClass.ILL_FORMED_NEVER


# 13 byte values never appear in UTF-8, so 243 per-byte tokens already
# cover everything a well-formed input can contain.
_FALLBACK_BLOCK_MIN = 243


@dataclass(frozen=True)
class VocabReport:
    total: int
    class_counts: dict[TokenClass, int]
    style: VocabStyle
    witness: tuple[int, ...] | None
    ill_formed_sample: tuple[tuple[int, bytes, TokenClass], ...]


def find_ill_formed_witness(vocab: Vocabulary) -> tuple[int, ...] | None:
    """A shortest token sequence whose detokenization is ill-formed.

    One ill-formed token suffices; None iff every token is well-formed
    (concatenations of well-formed tokens stay well-formed).
    """
    for token in vocab.non_special_tokens():
        if not is_well_formed(token.data):
            return (token.id,)
    return None


def classify_vocabulary(vocab: Vocabulary, sample_limit: int = 10) -> VocabReport:
    """Audit every token and name the vocabulary's overall style.

    byte_level:       some token is ill-formed outside a per-byte
                      fallback block;
    byte_fallback:    all multi-byte tokens well-formed, plus a block
                      of single-byte tokens covering >= 243 distinct
                      byte values;
    well_formed_only: every token well-formed and no such block.
    """
    class_counts = {cls: 0 for cls in TokenClass}
    sample: list[tuple[int, bytes, TokenClass]] = []
    single_byte_values: set[int] = set()
    multi_byte_ill_formed = False
    any_ill_formed = False
    total = 0
    for token in vocab.non_special_tokens():
        total += 1
        cls = classify_token(token.data)
        class_counts[cls] += 1
        if len(token.data) == 1:
            single_byte_values.add(token.data[0])
        if cls is not TokenClass.WELL_FORMED:
            any_ill_formed = True
            if len(token.data) > 1:
                multi_byte_ill_formed = True
            if len(sample) < sample_limit:
                sample.append((token.id, token.data, cls))

    if multi_byte_ill_formed:
        style = VocabStyle.BYTE_LEVEL
    elif len(single_byte_values) >= _FALLBACK_BLOCK_MIN:
        style = VocabStyle.BYTE_FALLBACK
    elif any_ill_formed:
        # stray ill-formed single-byte tokens without a full block
        style = VocabStyle.BYTE_LEVEL
    else:
        style = VocabStyle.WELL_FORMED_ONLY

    return VocabReport(
        total=total,
        class_counts=class_counts,
        style=style,
        witness=find_ill_formed_witness(vocab),
        ill_formed_sample=tuple(sample),
    )
